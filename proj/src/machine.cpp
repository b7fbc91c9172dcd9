#include "taskdiff/machine.hpp"

#include <cmath>
#include <limits>

namespace taskdiff {

std::string Program::hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(words.size());
    for (Word w : words) out.push_back(digits[w & 0xf]);
    return out;
}

Program parse_hex(const std::string& hex, const MachineConfig& cfg) {
    std::vector<Word> words;
    words.reserve(hex.size());
    for (char ch : hex) {
        int v;
        if (ch >= '0' && ch <= '9') v = ch - '0';
        else if (ch >= 'a' && ch <= 'f') v = 10 + (ch - 'a');
        else throw ProgramError(ProgramFault::EmptyInput, "bad hex digit in program");
        words.push_back(static_cast<Word>(v));
    }
    return validate_program(words, cfg);
}

Program validate_program(std::span<const Word> words, const MachineConfig& cfg) {
    if (words.empty())
        throw ProgramError(ProgramFault::EmptyInput, "empty program");
    const Word end = cfg.end_word();
    if (words.back() != end)
        throw ProgramError(ProgramFault::MissingEnd, "program does not end with END");
    for (std::size_t i = 0; i + 1 < words.size(); ++i)
        if (words[i] == end)
            throw ProgramError(ProgramFault::InteriorEnd, "END before the last word");
    Program p;
    p.words.assign(words.begin(), words.end());
    p.length_bits = cfg.word_size_c * static_cast<int>(words.size());
    return p;
}

std::uint64_t count_programs(int h_bits, const MachineConfig& cfg) {
    const int c = cfg.word_size_c;
    if (h_bits < c || h_bits % c != 0) return 0;
    const int k = h_bits / c - 1;  // body words
    std::uint64_t n = 1;
    const std::uint64_t r = cfg.radix();
    for (int i = 0; i < k; ++i) {
        if (n > std::numeric_limits<std::uint64_t>::max() / r)
            throw std::overflow_error("count_programs: result exceeds 64 bits");
        n *= r;
    }
    return n;
}

Program program_at(std::uint64_t index, int h_bits, const MachineConfig& cfg) {
    const int c = cfg.word_size_c;
    const int k = h_bits / c - 1;
    const std::uint64_t r = cfg.radix();
    Program p;
    p.words.assign(static_cast<std::size_t>(k) + 1, 0);
    p.words.back() = cfg.end_word();
    // Most significant digit first, so index order is lexicographic word order.
    for (int i = k - 1; i >= 0; --i) {
        p.words[static_cast<std::size_t>(i)] = static_cast<Word>(index % r);
        index /= r;
    }
    p.length_bits = c * (k + 1);
    return p;
}

void enumerate_programs(int h_bits, const MachineConfig& cfg,
                        const std::function<void(const Program&)>& fn) {
    const int c = cfg.word_size_c;
    if (h_bits < c || h_bits % c != 0) return;
    const std::uint64_t n = count_programs(h_bits, cfg);
    const int k = h_bits / c - 1;
    Program p;
    p.words.assign(static_cast<std::size_t>(k) + 1, 0);
    p.words.back() = cfg.end_word();
    p.length_bits = h_bits;
    const Word top = static_cast<Word>(cfg.radix() - 1);
    for (std::uint64_t i = 0; i < n; ++i) {
        fn(p);
        // Odometer increment over the body, least significant word last.
        for (int d = k - 1; d >= 0; --d) {
            auto& w = p.words[static_cast<std::size_t>(d)];
            if (w < top) {
                ++w;
                break;
            }
            w = 0;
        }
    }
}

double coding_pmf(int h_bits, const MachineConfig& cfg) {
    const int c = cfg.word_size_c;
    if (h_bits < c || h_bits % c != 0) return 0.0;
    const int k = h_bits / c - 1;
    // (2^c - 1)^k * 2^-h, accumulated per word to stay in double range.
    double p = std::ldexp(1.0, -c);  // the END word
    const double factor = std::ldexp(static_cast<double>(cfg.radix()), -c);
    for (int i = 0; i < k; ++i) p *= factor;
    return p;
}

double coding_base(const MachineConfig& cfg) {
    return 1.0 + std::ldexp(1.0, -cfg.word_size_c);
}

double coding_pmf_approx(int h_bits, const MachineConfig& cfg) {
    const int c = cfg.word_size_c;
    const double b = coding_base(cfg);
    const double bc = std::pow(b, -c);
    const double nu = (1.0 / c) * bc / (1.0 - bc);
    return (1.0 / (c * nu)) * std::pow(b, -h_bits);
}

ExecutionResult run_step(const Program& p, Word observation, MachineState& state,
                         const MachineConfig& cfg, RandomTape& tape) {
    ExecutionResult r;
    if (state.stopped) {
        r.trap = Trap::Halted;
        return r;
    }
    const int end = p.body_size();
    const Word mask = cfg.word_mask();
    int pc = 0;
    while (r.steps_used < cfg.per_step_budget) {
        if (pc < 0 || pc >= end) return r;  // reached END: no action this step
        const Op op = cfg.decode(p.words[static_cast<std::size_t>(pc)]);
        ++r.steps_used;
        int next = pc + 1;
        // A missing trailing immediate decodes as 0.
        auto immediate = [&]() -> Word {
            if (next < end) return p.words[static_cast<std::size_t>(next++)];
            return 0;
        };
        switch (op) {
            case Op::Nop:
            case Op::Res0:
            case Op::Res1:
                break;
            case Op::Read:
                state.a = observation;
                break;
            case Op::Write:
                r.action = state.a;
                r.halted = true;
                return r;
            case Op::Inc:
                state.a = static_cast<Word>((state.a + 1) & mask);
                break;
            case Op::Dec:
                state.a = static_cast<Word>((state.a - 1) & mask);
                break;
            case Op::Swap:
                std::swap(state.a, state.b);
                break;
            case Op::Add:
                state.a = static_cast<Word>((state.a + state.b) & mask);
                break;
            case Op::Sub:
                state.a = static_cast<Word>((state.a - state.b) & mask);
                break;
            case Op::Load:
                state.a = static_cast<Word>(immediate() & mask);
                break;
            case Op::Jmp:
                next += cfg.signed_offset(immediate());
                break;
            case Op::Jz: {
                const int off = cfg.signed_offset(immediate());
                if (state.a == 0) next += off;
                break;
            }
            case Op::Rand: {
                auto v = tape.next();
                if (!v) {
                    r.trap = Trap::TapeExhausted;
                    return r;
                }
                state.a = static_cast<Word>(*v & mask);
                break;
            }
            case Op::Halt:
                state.stopped = true;
                r.trap = Trap::Halted;
                return r;
        }
        pc = next;
    }
    r.trap = Trap::BudgetExhausted;
    return r;
}

std::optional<std::vector<Word>> run_generator(const Program& p, int n_symbols,
                                               const MachineConfig& cfg) {
    std::vector<Word> out;
    if (n_symbols <= 0) return out;
    const int end = p.body_size();
    if (end == 0) return std::nullopt;  // END-only: never emits
    const Word mask = cfg.word_mask();
    const long budget = static_cast<long>(cfg.per_step_budget) * n_symbols;
    Word a = 0, b = 0;
    int pc = 0;
    for (long steps = 0; steps < budget;) {
        if (pc < 0 || pc >= end) {
            pc = 0;  // wrap at END, registers persist
            continue;
        }
        const Op op = cfg.decode(p.words[static_cast<std::size_t>(pc)]);
        ++steps;
        int next = pc + 1;
        auto immediate = [&]() -> Word {
            if (next < end) return p.words[static_cast<std::size_t>(next++)];
            return 0;
        };
        switch (op) {
            case Op::Nop:
            case Op::Res0:
            case Op::Res1:
                break;
            case Op::Read:
            case Op::Rand:
                a = 0;  // generators are deterministic: no input, no randomness
                break;
            case Op::Write:
                out.push_back(a);
                if (static_cast<int>(out.size()) >= n_symbols) return out;
                break;
            case Op::Inc:
                a = static_cast<Word>((a + 1) & mask);
                break;
            case Op::Dec:
                a = static_cast<Word>((a - 1) & mask);
                break;
            case Op::Swap:
                std::swap(a, b);
                break;
            case Op::Add:
                a = static_cast<Word>((a + b) & mask);
                break;
            case Op::Sub:
                a = static_cast<Word>((a - b) & mask);
                break;
            case Op::Load:
                a = static_cast<Word>(immediate() & mask);
                break;
            case Op::Jmp:
                next += cfg.signed_offset(immediate());
                break;
            case Op::Jz: {
                const int off = cfg.signed_offset(immediate());
                if (a == 0) next += off;
                break;
            }
            case Op::Halt:
                return std::nullopt;
        }
        pc = next;
    }
    return std::nullopt;  // budget spent before n_symbols emitted
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s, std::uint64_t seed) {
    return fnv1a64(std::span<const unsigned char>(
                       reinterpret_cast<const unsigned char*>(s.data()), s.size()),
                   seed);
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::string letters(std::span<const Word> symbols) {
    std::string out;
    out.reserve(symbols.size());
    for (Word w : symbols) out.push_back(static_cast<char>('a' + (w & 0xf)));
    return out;
}

}  // namespace taskdiff
