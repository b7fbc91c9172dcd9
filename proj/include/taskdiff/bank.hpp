#pragma once

#include <map>
#include <string>
#include <vector>

#include "taskdiff/difficulty.hpp"

namespace taskdiff {

inline constexpr int kBankSchemaVersion = 1;

struct BankConfig {
    MachineConfig machine;
    int tau = 4;
    double epsilon = 0.1;
    int l_max_policy = 16;
    int l_max_generator = 12;
    bool family_track = true;
    bool family_degenerate = true;
    int h_min = 4;                  // target strata range (min-length bits)
    int h_max = 16;
    long stratum_cap = 64;          // tasks kept per stratum, seeded sampling over cap
    std::uint64_t seed = 1;
    long mc_samples = 10000;
    std::uint64_t enumeration_budget = 10'000'000;

    SearchOptions search_options(bool parallel) const {
        SearchOptions s;
        s.l_max = l_max_policy;
        s.parallel = parallel;
        s.eval.mc_samples = mc_samples;
        return s;
    }
};

// Plain-text key=value config round trip (CLI `--print-config` emits this).
BankConfig parse_bank_config(const std::string& text);
std::string serialize_bank_config(const BankConfig& cfg);

struct BankedTask {
    TaskSpec task;
    ComplexityEstimate complexity;
    std::map<DiffKind, DifficultyRecord> records;

    const DifficultyRecord* record(DiffKind k) const {
        auto it = records.find(k);
        return it == records.end() ? nullptr : &it->second;
    }
};

struct TaskBank {
    int version = kBankSchemaVersion;
    BankConfig config;
    std::vector<BankedTask> tasks;
    std::string digest;  // over the canonical serialization, excluding itself
};

// Digest over canonicalized JSON; stable under reserialization.
std::string bank_digest(const TaskBank& bank);

// Enumerate generators, build tasks, dedup identical streams keeping the
// lowest-K-hat witness, compute all difficulty records, stratify and cap.
// Deterministic given cfg (including seed).
TaskBank build_bank(const BankConfig& cfg, bool parallel = true);

// JSONL: header line {version, config, digest}, then one task per line.
void save_bank(const TaskBank& bank, const std::string& path);
TaskBank load_bank(const std::string& path);

struct PairEntry {
    int task_index = 0;
    int policy_h = 0;               // bits
    std::uint64_t policy_index = 0;  // lex index within the stratum
};

struct PairsTable {
    std::vector<PairEntry> pairs;  // all (mu, pi') with A = 1, L(pi') <= l_max
    int l_max = 0;
};

PairsTable materialize_pairs(const TaskBank& bank, bool parallel = true);

struct VerifyCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool all_passed = true;
    std::string warning;
};

// Runs witness replay/minimality, strong boundedness, the multi-difficulty
// bounds, and distribution normalization end to end.
VerifyReport verify_bank(const TaskBank& bank, bool parallel = true);

}  // namespace taskdiff
