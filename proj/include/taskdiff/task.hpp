#pragma once

#include <optional>
#include <string>
#include <vector>

#include "taskdiff/machine.hpp"

namespace taskdiff {

enum class TaskFamily { Track, Heaven, Hell };

std::string family_name(TaskFamily f);
TaskFamily family_from_name(const std::string& s);

// A finite interactive episodic task. Track tasks are stream prediction: at
// step t (1-based) the agent observes stream[t-1] and is scored on whether
// its action equals stream[t]; the first symbol is the prompt. Heaven/hell
// return response 1/0 regardless of actions.
struct TaskSpec {
    TaskFamily family = TaskFamily::Track;
    std::optional<Program> generator;  // track only
    int horizon_tau = 1;
    std::uint64_t env_seed = 0;        // unused by deterministic generators
    std::vector<Word> stream;          // cached: horizon_tau + 1 symbols (track)
    std::string id;                    // stable digest of the above

    friend bool operator==(const TaskSpec& a, const TaskSpec& b) { return a.id == b.id; }
};

struct ResponseEstimate {
    double mean = 0.0;
    bool exact = false;
    double ci_low = 0.0;
    double ci_high = 0.0;
    long samples = 0;
};

// Response plus the step count used by the LS difficulty. Steps follow the
// budget-exhaustion convention: an interaction step that emits an action
// contributes its actual instruction count, any non-emitting step contributes
// the full per-step budget s_max.
struct EpisodeStats {
    ResponseEstimate response;
    double mean_steps = 0.0;
    double mean_final_hit = 0.0;  // probability the last prediction is correct
};

struct ComplexityEstimate {
    int k_hat = 0;                     // bits; 0 with censored = true
    std::optional<Program> witness_generator;
    bool censored = false;
};

struct EvalOptions {
    // Exact expectation when no single interaction step reads more than this
    // many seed-tape words (3 words = 12 bits at c = 4); Monte Carlo beyond.
    // Between steps only the two registers carry over, so the expectation is
    // propagated exactly through the (a, b) distribution step by step.
    int max_exact_tape_words = 3;
    long max_exact_nodes = 1 << 17;  // step-execution budget before Monte Carlo
    long mc_samples = 10000;
    double ci_delta = 0.01;       // two-sided Hoeffding confidence 1 - delta
    std::uint64_t seed_salt = 0;  // folded into the per-(pi, mu) MC seed
};

TaskSpec make_track_task(const Program& generator, int tau, const MachineConfig& cfg);
TaskSpec make_degenerate(TaskFamily kind, int tau);

// Exact expectation over the agent seed tape when enumerable, else Monte
// Carlo with a deterministic seed derived from (pi, mu, seed_salt).
EpisodeStats expected_episode(const Program& pi, const TaskSpec& mu,
                              const MachineConfig& cfg, const EvalOptions& opts = {});

ResponseEstimate expected_response(const Program& pi, const TaskSpec& mu,
                                   const MachineConfig& cfg, const EvalOptions& opts = {});

// Exact maximum of the expected response over all action sequences. Closed
// form per family: heaven 1, hell 0, deterministic track 1 (the sequence
// equal to the stream scores every step).
double max_achievable_response(const TaskSpec& mu, const MachineConfig& cfg);

// Brute-force counterpart over all (2^c)^tau action sequences; the
// independent oracle behind infinite-status soundness checks.
// Throws SearchSpaceTooLarge when the space exceeds max_sequences.
double max_achievable_response_enumerated(const TaskSpec& mu, const MachineConfig& cfg,
                                          std::uint64_t max_sequences = 20'000'000);

// Shortest enumerated generator (length, then lexicographic) reproducing the
// task stream over tau + 1 symbols; an upper bound on the true complexity.
// Degenerate tasks get the pinned canonical value 2c. Censored when no
// witness exists at or below l_max_bits.
ComplexityEstimate estimate_task_complexity(const TaskSpec& mu, int l_max_bits,
                                            const MachineConfig& cfg);

// Deterministic per-(pi, mu) Monte Carlo seed.
std::uint64_t derive_seed(const Program& pi, const TaskSpec& mu, std::uint64_t salt);

}  // namespace taskdiff
