#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "taskdiff/errors.hpp"

namespace taskdiff {

// One machine word: c bits, so values 0 .. 2^c - 1. The all-ones word is the
// reserved END delimiter; every other value decodes to an instruction.
using Word = std::uint16_t;

// Instruction set. At c = 4 the word value is the opcode directly; for wider
// words the opcode is the value modulo 15 so the table stays total.
//
//   value  mnemonic  semantics
//   0      NOP       no effect
//   1      READ      A <- current observation
//   2      WRITE     emit A as the action; ends the interaction step
//   3      INC       A <- A + 1 (mod 2^c)
//   4      DEC       A <- A - 1 (mod 2^c)
//   5      SWAP      exchange A and B
//   6      ADD       A <- A + B (mod 2^c)
//   7      SUB       A <- A - B (mod 2^c)
//   8      LOAD v    A <- v (immediate in the next word)
//   9      JMP d     jump by signed offset d (immediate in the next word)
//   10     JZ d      as JMP, taken only when A = 0
//   11     RAND      A <- next word from the agent seed tape
//   12     HALT      stop the program for the rest of the episode
//   13,14  reserved  behave as NOP
//   2^c-1  END       program delimiter, not executable
enum class Op : int {
    Nop = 0,
    Read,
    Write,
    Inc,
    Dec,
    Swap,
    Add,
    Sub,
    Load,
    Jmp,
    Jz,
    Rand,
    Halt,
    Res0,
    Res1,
};

inline constexpr int kOpcodeCount = 15;

struct MachineConfig {
    int word_size_c = 4;        // bits per word and per register
    int per_step_budget = 256;  // s_max: VM instructions per interaction step

    Word end_word() const { return static_cast<Word>((1u << word_size_c) - 1); }
    Word word_mask() const { return end_word(); }
    // Usable (non-END) words per position; the base of the program count.
    std::uint64_t radix() const { return (1ull << word_size_c) - 1; }
    int alphabet_size() const { return 1 << word_size_c; }

    Op decode(Word w) const { return static_cast<Op>(w % kOpcodeCount); }

    int signed_offset(Word w) const {
        int half = 1 << (word_size_c - 1);
        int v = static_cast<int>(w);
        return v >= half ? v - (1 << word_size_c) : v;
    }
};

// A prefix-valid program: body words followed by exactly one END.
struct Program {
    std::vector<Word> words;  // includes the trailing END
    int length_bits = 0;      // c * words.size()

    int body_size() const { return static_cast<int>(words.size()) - 1; }
    std::string hex() const;  // lowercase hex, one char per word (c = 4 only)

    friend bool operator==(const Program& a, const Program& b) { return a.words == b.words; }
    friend auto operator<=>(const Program& a, const Program& b) { return a.words <=> b.words; }
};

Program parse_hex(const std::string& hex, const MachineConfig& cfg);

// Accepts a raw word sequence iff it is a prefix-valid encoding: non-empty,
// terminated by END, with END appearing nowhere else.
Program validate_program(std::span<const Word> words, const MachineConfig& cfg);

// N_M(h) = (2^c - 1)^(h/c - 1) when c | h and h >= c, else 0.
// Throws std::overflow_error when the count does not fit in 64 bits.
std::uint64_t count_programs(int h_bits, const MachineConfig& cfg);

// The program of length h_bits at the given position in lexicographic word
// order (position 0 is the all-NOP body). Random access enables partitioned
// parallel scans over a length stratum.
Program program_at(std::uint64_t index, int h_bits, const MachineConfig& cfg);

// Calls fn for every valid program of exactly h_bits, lexicographically.
void enumerate_programs(int h_bits, const MachineConfig& cfg,
                        const std::function<void(const Program&)>& fn);

// Exact coding pmf p(h) = N_M(h) * 2^-h, evaluated in double precision.
// Every factor is a product of exactly representable integers scaled by a
// power of two, so the relative error is bounded by (h/c) ulps (< 1e-14 for
// h <= 128 at c = 4).
double coding_pmf(int h_bits, const MachineConfig& cfg);

// Geometric approximation (1 / (c * nu)) * b^-h with b = 1 + 2^-c. The
// normaliser nu is chosen so the approximation sums to one over all valid
// lengths: nu = (1/c) * b^-c / (1 - b^-c).
double coding_base(const MachineConfig& cfg);
double coding_pmf_approx(int h_bits, const MachineConfig& cfg);

// --- Execution ---------------------------------------------------------

enum class Trap { BudgetExhausted, Halted, TapeExhausted };

struct ExecutionResult {
    bool halted = false;                // an action was emitted this step
    std::optional<Word> action;
    int steps_used = 0;
    std::optional<Trap> trap;
};

// Registers persist across interaction steps; the program counter restarts
// at 0 every step. `stopped` is set by HALT and is permanent for the episode.
struct MachineState {
    Word a = 0;
    Word b = 0;
    bool stopped = false;
};

// Source of agent randomness consumed word-by-word by RAND.
class RandomTape {
public:
    virtual ~RandomTape() = default;
    // nullopt signals exhaustion; run_step reports Trap::TapeExhausted.
    virtual std::optional<Word> next() = 0;
};

class ZeroTape final : public RandomTape {
public:
    std::optional<Word> next() override { return Word{0}; }
};

class FixedTape final : public RandomTape {
public:
    explicit FixedTape(std::vector<Word> words) : words_(std::move(words)) {}
    std::optional<Word> next() override {
        if (pos_ >= words_.size()) return std::nullopt;
        return words_[pos_++];
    }
    std::size_t consumed() const { return pos_; }

private:
    std::vector<Word> words_;
    std::size_t pos_ = 0;
};

class RngTape final : public RandomTape {
public:
    RngTape(std::uint64_t seed, const MachineConfig& cfg)
        : rng_(seed), mask_(cfg.word_mask()) {}
    std::optional<Word> next() override { return static_cast<Word>(rng_() & mask_); }

private:
    std::mt19937_64 rng_;
    Word mask_;
};

// Runs one interaction step: executes instructions from pc = 0 until the
// program emits an action (WRITE), reaches END, HALTs, or exhausts the
// per-step budget. Pure in (program, observation, state, tape).
ExecutionResult run_step(const Program& p, Word observation, MachineState& state,
                         const MachineConfig& cfg, RandomTape& tape);

// Runs a program as a deterministic stream generator: continuous execution
// where WRITE appends a symbol and reaching END wraps the program counter to
// 0 (registers persist). READ and RAND load 0. Returns n_symbols symbols, or
// nullopt when the program stalls (HALT, or budget n_symbols * s_max spent).
std::optional<std::vector<Word>> run_generator(const Program& p, int n_symbols,
                                               const MachineConfig& cfg);

// --- Misc --------------------------------------------------------------

// FNV-1a, used for stable content digests throughout.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed = 14695981039346656037ull);
std::uint64_t fnv1a64(const std::string& s, std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t v);

// Streams render as letters for human-readable docs: a = 0 .. p = 15.
std::string letters(std::span<const Word> symbols);

}  // namespace taskdiff
