// Independent brute-force reference implementations, kept deliberately naive:
// a second interpreter written from the opcode table plus nested-loop searches.
// Nothing here calls the library's search or evaluation code paths.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "taskdiff/task.hpp"

namespace oracle {

using taskdiff::MachineConfig;
using taskdiff::Program;
using taskdiff::TaskFamily;
using taskdiff::TaskSpec;
using taskdiff::Word;

inline std::uint64_t count_programs(int h_bits, const MachineConfig& cfg) {
    const int c = cfg.word_size_c;
    if (h_bits < c || h_bits % c != 0) return 0;
    std::uint64_t n = 1;
    for (int i = 0; i < h_bits / c - 1; ++i) n *= static_cast<std::uint64_t>((1 << c) - 1);
    return n;
}

inline double coding_pmf(int h_bits, const MachineConfig& cfg) {
    const int c = cfg.word_size_c;
    if (h_bits < c || h_bits % c != 0) return 0.0;
    double n = 1.0;  // in doubles: the integer count overflows past 64 words
    for (int i = 0; i < h_bits / c - 1; ++i) n *= (1 << c) - 1;
    return n * std::pow(2.0, -h_bits);
}

// All programs of exactly h bits, body words counted up like an odometer.
inline std::vector<std::vector<Word>> all_programs(int h_bits, const MachineConfig& cfg) {
    std::vector<std::vector<Word>> out;
    const int c = cfg.word_size_c;
    if (h_bits < c || h_bits % c != 0) return out;
    const int k = h_bits / c - 1;
    const Word end = static_cast<Word>((1 << c) - 1);
    std::vector<Word> body(static_cast<std::size_t>(k), 0);
    while (true) {
        std::vector<Word> p = body;
        p.push_back(end);
        out.push_back(p);
        int d = k - 1;
        while (d >= 0 && body[static_cast<std::size_t>(d)] == end - 1) {
            body[static_cast<std::size_t>(d)] = 0;
            --d;
        }
        if (d < 0) break;
        ++body[static_cast<std::size_t>(d)];
    }
    return out;
}

// One interaction step of the second interpreter. Returns the emitted action,
// or nullopt when the step ends without a WRITE. `tape_pos` advances through
// the explicit seed tape; a read past its end aborts the episode (caller
// retries with a longer tape).
struct StepResult {
    std::optional<Word> action;
    int steps = 0;
    bool stopped = false;
    bool tape_overrun = false;
};

inline StepResult step(const std::vector<Word>& prog, Word obs, Word& a, Word& b,
                       const std::vector<Word>& tape, std::size_t& tape_pos,
                       const MachineConfig& cfg) {
    StepResult r;
    const int body = static_cast<int>(prog.size()) - 1;
    const Word mask = static_cast<Word>((1 << cfg.word_size_c) - 1);
    int pc = 0;
    while (r.steps < cfg.per_step_budget) {
        if (pc < 0 || pc >= body) return r;
        const int op = prog[static_cast<std::size_t>(pc)] % 15;
        ++r.steps;
        int next = pc + 1;
        const Word imm = next < body ? prog[static_cast<std::size_t>(next)] : Word{0};
        const int half = 1 << (cfg.word_size_c - 1);
        const int off = imm >= half ? imm - 2 * half : imm;
        switch (op) {
            case 0: break;                                        // NOP
            case 1: a = obs; break;                               // READ
            case 2: r.action = a; return r;                       // WRITE
            case 3: a = static_cast<Word>((a + 1) & mask); break; // INC
            case 4: a = static_cast<Word>((a - 1) & mask); break; // DEC
            case 5: { Word t = a; a = b; b = t; break; }          // SWAP
            case 6: a = static_cast<Word>((a + b) & mask); break; // ADD
            case 7: a = static_cast<Word>((a - b) & mask); break; // SUB
            case 8: a = static_cast<Word>(imm & mask); ++next; break;   // LOAD
            case 9: ++next; next += off; break;                         // JMP
            case 10: ++next; if (a == 0) next += off; break;            // JZ
            case 11:                                                    // RAND
                if (tape_pos >= tape.size()) { r.tape_overrun = true; return r; }
                a = static_cast<Word>(tape[tape_pos++] & mask);
                break;
            case 12: r.stopped = true; return r;                        // HALT
            default: break;                                             // reserved
        }
        pc = next;
    }
    return r;
}

// Full episode against an explicit seed tape. On overrun, reports the hits
// banked so far and how many steps remain unresolved.
struct EpisodeResult {
    bool overrun = false;
    int hits = 0;
    int steps_left = 0;  // interaction steps not yet resolved (overrun only)
    double response = 0.0;
    double steps = 0.0;
};

inline EpisodeResult episode(const std::vector<Word>& prog, const TaskSpec& mu,
                             const std::vector<Word>& tape, const MachineConfig& cfg) {
    Word a = 0, b = 0;
    std::size_t pos = 0;
    bool stopped = false;
    EpisodeResult out;
    for (int t = 1; t <= mu.horizon_tau; ++t) {
        if (stopped) {
            out.steps += cfg.per_step_budget;
            continue;
        }
        const Word obs = mu.family == TaskFamily::Track
                             ? mu.stream[static_cast<std::size_t>(t - 1)]
                             : Word{0};
        const StepResult r = step(prog, obs, a, b, tape, pos, cfg);
        if (r.tape_overrun) {
            out.overrun = true;
            out.steps_left = mu.horizon_tau - t + 1;
            return out;
        }
        if (r.stopped) stopped = true;
        out.steps += r.action ? r.steps : cfg.per_step_budget;
        if (mu.family == TaskFamily::Track && r.action &&
            *r.action == mu.stream[static_cast<std::size_t>(t)])
            ++out.hits;
    }
    switch (mu.family) {
        case TaskFamily::Track:
            out.response = static_cast<double>(out.hits) / mu.horizon_tau;
            break;
        case TaskFamily::Heaven: out.response = 1.0; break;
        case TaskFamily::Hell: out.response = 0.0; break;
    }
    return out;
}

// Bounds on the expected response, enumerating seed tapes outright one word
// at a time. A branch still unresolved at max_words contributes its banked
// hits to the lower bound and banked-plus-remaining to the upper bound, so
// the interval stays valid without enumerating deeper.
struct ResponseBounds {
    double lo = 0.0;
    double hi = 0.0;
    bool exact() const { return lo == hi; }
};

// A subtree whose optimistic response (hits + steps_left) / tau already fell
// below prune_hi_below is closed with interval bounds instead of being
// enumerated deeper; with the default no subtree is ever closed early.
inline ResponseBounds expected_response_bounds(const std::vector<Word>& prog,
                                               const TaskSpec& mu, const MachineConfig& cfg,
                                               int max_words = 6,
                                               double prune_hi_below = 2.0) {
    // Degenerate families pin the response outright, whatever the policy does.
    if (mu.family == TaskFamily::Heaven) return {1.0, 1.0};
    if (mu.family == TaskFamily::Hell) return {0.0, 0.0};
    const int alpha = 1 << cfg.word_size_c;
    const double tau = mu.horizon_tau;
    std::vector<Word> tape;
    ResponseBounds out;
    while (true) {
        const EpisodeResult r = episode(prog, mu, tape, cfg);
        bool leaf = true;
        if (!r.overrun) {
            out.lo += r.response * std::pow(alpha, -static_cast<double>(tape.size()));
            out.hi += r.response * std::pow(alpha, -static_cast<double>(tape.size()));
        } else if (static_cast<int>(tape.size()) >= max_words ||
                   (r.hits + r.steps_left) / tau < prune_hi_below) {
            const double w = std::pow(alpha, -static_cast<double>(tape.size()));
            out.lo += w * (r.hits / tau);
            out.hi += w * ((r.hits + r.steps_left) / tau);
        } else {
            tape.push_back(0);
            leaf = false;
        }
        if (leaf) {
            while (!tape.empty() && tape.back() == alpha - 1) tape.pop_back();
            if (tape.empty()) return out;
            ++tape.back();
        }
    }
}

// Acceptability by plain enumeration: 1 accept, 0 reject, -1 the bounds did
// not separate from the threshold.
inline int acceptable(const std::vector<Word>& prog, const TaskSpec& mu, double epsilon,
                      const MachineConfig& cfg) {
    const ResponseBounds r = expected_response_bounds(prog, mu, cfg, 6, 1.0 - epsilon);
    const double thr = 1.0 - epsilon - 1e-12;
    if (r.lo >= thr) return 1;
    if (r.hi < thr) return 0;
    return -1;
}

// Shortest acceptable policy by plain nested loops: lengths ascending, then
// lexicographic program order. Sets undecided when some policy before the
// answer could not be classified.
struct MinLengthResult {
    int h_bits = 0;
    std::vector<Word> witness;
};

inline std::optional<MinLengthResult> min_length(const TaskSpec& mu, double epsilon,
                                                 int l_max, const MachineConfig& cfg,
                                                 bool* undecided = nullptr) {
    if (undecided) *undecided = false;
    for (int h = cfg.word_size_c; h <= l_max; h += cfg.word_size_c) {
        for (const std::vector<Word>& p : all_programs(h, cfg)) {
            const int a = acceptable(p, mu, epsilon, cfg);
            if (a < 0) {
                if (undecided) *undecided = true;
                return std::nullopt;
            }
            if (a == 1) return MinLengthResult{h, p};
        }
    }
    return std::nullopt;
}

}  // namespace oracle
