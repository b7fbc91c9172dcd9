#pragma once

#include <array>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taskdiff/task.hpp"

namespace taskdiff {

struct ToleranceConfig {
    double epsilon = 0.1;  // acceptability threshold is mean >= 1 - epsilon
};

enum class Accept { No = 0, Yes = 1, Undecided = 2 };

// Decides acceptability from an estimate: Yes iff the mean is certainly
// >= 1 - epsilon (exact value, or the whole CI above), No symmetric,
// Undecided when the CI straddles the threshold. The boundary is inclusive.
Accept acceptability(const ResponseEstimate& r, double epsilon);

// Acceptability of (pi, mu); on an undecided Monte-Carlo estimate the sample
// budget is escalated (deterministically) before giving up.
Accept acceptable(const Program& pi, const TaskSpec& mu, const ToleranceConfig& tol,
                  const MachineConfig& cfg, const EvalOptions& opts = {});

enum class DiffStatus { Exact, LowerBound, Infinite };
enum class DiffKind { MinLength, Multi, Ls, RandBaseline, Ratio, MaxResponse };

std::string diff_kind_name(DiffKind k);
DiffKind diff_kind_from_name(const std::string& s);
std::string diff_status_name(DiffStatus s);
DiffStatus diff_status_from_name(const std::string& s);

struct DifficultyRecord {
    DiffKind kind = DiffKind::MinLength;
    double value = 0.0;      // bits (RandBaseline reports a response instead)
    double value_lo = 0.0;   // truncation interval (Multi); else equal to value
    double value_hi = 0.0;
    std::optional<Program> witness;
    DiffStatus status = DiffStatus::Exact;
    int l_max = 0;
    double epsilon = 0.0;
    int tau = 0;

    double key() const {  // stratification key; infinity for hopeless tasks
        return status == DiffStatus::Infinite ? std::numeric_limits<double>::infinity() : value;
    }
};

struct SearchOptions {
    int l_max = 16;        // policy search bound in bits
    bool parallel = true;  // OpenMP stratum scan vs serial reference
    EvalOptions eval;
};

// Per-length-stratum reduction of a full policy scan. Counts and argmins are
// integer or (value, index) reductions, so parallel schedules reproduce the
// serial result bit for bit.
struct StratumScan {
    std::uint64_t n_programs = 0;
    std::uint64_t acceptable_count = 0;
    std::int64_t first_acceptable = -1;   // lex index, -1 when none
    std::int64_t first_undecided = -1;
    double min_ls = std::numeric_limits<double>::infinity();
    std::int64_t min_ls_index = -1;
    double min_ratio = std::numeric_limits<double>::infinity();
    std::int64_t min_ratio_index = -1;
    std::int64_t first_max_response = -1;  // first policy attaining R_max
};

// Scans every policy of exactly h_bits against mu. The serial variant is the
// reference implementation; the OpenMP variant must produce an identical
// StratumScan.
StratumScan scan_stratum_serial(const TaskSpec& mu, int h_bits, const ToleranceConfig& tol,
                                const MachineConfig& cfg, const EvalOptions& eval);
StratumScan scan_stratum_omp(const TaskSpec& mu, int h_bits, const ToleranceConfig& tol,
                             const MachineConfig& cfg, const EvalOptions& eval);
StratumScan scan_stratum(const TaskSpec& mu, int h_bits, const ToleranceConfig& tol,
                         const MachineConfig& cfg, const SearchOptions& opts);

// Memoizes stratum scans for one task so the difficulty notions computed over
// it share a single sweep of the policy space. Lazy: lengths are scanned only
// when first requested, which preserves every early-stop.
class ScanCache {
public:
    ScanCache(const TaskSpec& mu, const ToleranceConfig& tol, const MachineConfig& cfg,
              const SearchOptions& opts)
        : mu_(&mu), tol_(tol), cfg_(&cfg), opts_(opts) {}

    const StratumScan& at(int h_bits) {
        auto it = memo_.find(h_bits);
        if (it == memo_.end())
            it = memo_.emplace(h_bits, scan_stratum(*mu_, h_bits, tol_, *cfg_, opts_)).first;
        return it->second;
    }
    const SearchOptions& options() const { return opts_; }

private:
    const TaskSpec* mu_;
    ToleranceConfig tol_;
    const MachineConfig* cfg_;
    SearchOptions opts_;
    std::map<int, StratumScan> memo_;
};

// Shortest epsilon-acceptable policy, lengths ascending, lexicographic within
// a length. Infinite status comes only from the max-achievable-response
// oracle, never from search exhaustion.
DifficultyRecord difficulty_min_length(const TaskSpec& mu, const ToleranceConfig& tol,
                                       const MachineConfig& cfg, const SearchOptions& opts);
DifficultyRecord difficulty_min_length(const TaskSpec& mu, const ToleranceConfig& tol,
                                       const MachineConfig& cfg, ScanCache& scans);

// -0.5 * log2 sum over acceptable policies of 2^(-2 L(pi)), truncated at
// l_max; the truncation interval [value_lo, value_hi] carries the tail bound
// 2^(-l_max + 1) inside the logarithm.
DifficultyRecord difficulty_multi(const TaskSpec& mu, const ToleranceConfig& tol,
                                  const MachineConfig& cfg, const SearchOptions& opts);
DifficultyRecord difficulty_multi(const TaskSpec& mu, const ToleranceConfig& tol,
                                  const MachineConfig& cfg, ScanCache& scans);

// min over acceptable policies of L(pi) + log2 E[steps], with non-emitting
// interaction steps charged the full per-step budget.
DifficultyRecord difficulty_ls(const TaskSpec& mu, const ToleranceConfig& tol,
                               const MachineConfig& cfg, const SearchOptions& opts);
DifficultyRecord difficulty_ls(const TaskSpec& mu, const ToleranceConfig& tol,
                               const MachineConfig& cfg, ScanCache& scans);

// The three baseline difficulty notions: random-agent response, best
// length/response ratio, shortest policy attaining the maximum response.
std::array<DifficultyRecord, 3> difficulty_baselines(const TaskSpec& mu,
                                                     const MachineConfig& cfg,
                                                     const SearchOptions& opts);
std::array<DifficultyRecord, 3> difficulty_baselines(const TaskSpec& mu,
                                                     const MachineConfig& cfg,
                                                     ScanCache& scans);

struct BoundednessViolation {
    std::string policy_hex;
    std::string task_id;
    Accept accept = Accept::Yes;
};

struct TaskWithDifficulty {
    const TaskSpec* task = nullptr;
    const DifficultyRecord* min_length = nullptr;
};

// Verifies that every policy fails every task whose (exact or infinite)
// min-length difficulty exceeds the policy's length. Returns the list of
// counterexamples; empty for correct records.
std::vector<BoundednessViolation> check_strong_boundedness(
    const std::vector<Program>& policies, const std::vector<TaskWithDifficulty>& bank,
    const ToleranceConfig& tol, const MachineConfig& cfg, const SearchOptions& opts);

}  // namespace taskdiff
