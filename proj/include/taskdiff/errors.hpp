#pragma once

#include <stdexcept>
#include <string>

namespace taskdiff {

// Program encoding faults (validate_program).
enum class ProgramFault { MissingEnd, InteriorEnd, EmptyInput };

class ProgramError : public std::runtime_error {
public:
    ProgramError(ProgramFault fault, const std::string& what)
        : std::runtime_error(what), fault_(fault) {}
    ProgramFault fault() const { return fault_; }

private:
    ProgramFault fault_;
};

struct GeneratorStalls : std::runtime_error {
    explicit GeneratorStalls(const std::string& what) : std::runtime_error(what) {}
};

struct SearchSpaceTooLarge : std::runtime_error {
    explicit SearchSpaceTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// A Monte-Carlo acceptability decision straddles the threshold at the search
// frontier; the caller should raise the sample budget.
struct UndecidedAtFrontier : std::runtime_error {
    explicit UndecidedAtFrontier(const std::string& what) : std::runtime_error(what) {}
};

struct UnboundedAggregation : std::runtime_error {
    explicit UnboundedAggregation(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyStratum : std::runtime_error {
    explicit EmptyStratum(const std::string& what) : std::runtime_error(what) {}
};

struct UndecidedPresent : std::runtime_error {
    explicit UndecidedPresent(const std::string& what) : std::runtime_error(what) {}
};

struct DistributionMismatch : std::runtime_error {
    explicit DistributionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyPairs : std::runtime_error {
    explicit EmptyPairs(const std::string& what) : std::runtime_error(what) {}
};

struct RaggedStrata : std::runtime_error {
    explicit RaggedStrata(const std::string& what) : std::runtime_error(what) {}
};

struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct CorruptBank : std::runtime_error {
    explicit CorruptBank(const std::string& what) : std::runtime_error(what) {}
};

struct VersionMismatch : std::runtime_error {
    explicit VersionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace taskdiff
