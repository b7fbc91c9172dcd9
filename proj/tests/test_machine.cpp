#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "taskdiff/machine.hpp"

using namespace taskdiff;

namespace {
const MachineConfig cfg{};

Program prog(std::initializer_list<Word> words) {
    return validate_program(std::vector<Word>(words), cfg);
}
}  // namespace

TEST_CASE("program encoding and validation") {
    CHECK(parse_hex("f", cfg).length_bits == 4);  // END-only is the smallest program
    CHECK(parse_hex("832f", cfg).words.size() == 4);
    CHECK(parse_hex("832f", cfg).hex() == "832f");

    CHECK_THROWS_AS(parse_hex("", cfg), ProgramError);
    CHECK_THROWS_AS(parse_hex("83", cfg), ProgramError);    // no END
    CHECK_THROWS_AS(parse_hex("8f2f", cfg), ProgramError);  // interior END
    CHECK_THROWS_AS(parse_hex("g", cfg), ProgramError);

    try {
        parse_hex("12", cfg);
        FAIL("expected ProgramError");
    } catch (const ProgramError& e) {
        CHECK(e.fault() == ProgramFault::MissingEnd);
    }
}

TEST_CASE("program counts match the closed form and the enumeration") {
    CHECK(count_programs(4, cfg) == 1);
    CHECK(count_programs(8, cfg) == 15);
    CHECK(count_programs(12, cfg) == 225);
    CHECK(count_programs(5, cfg) == 0);  // not a multiple of c
    CHECK(count_programs(0, cfg) == 0);

    for (int h = 4; h <= 24; h += 4) {
        CHECK(count_programs(h, cfg) == oracle::count_programs(h, cfg));
        std::uint64_t seen = 0;
        enumerate_programs(h, cfg, [&](const Program& p) {
            CHECK(p.length_bits == h);
            CHECK(p.words.back() == cfg.end_word());
            ++seen;
        });
        CHECK(seen == count_programs(h, cfg));
    }
}

TEST_CASE("program_at is the lexicographic enumeration order") {
    for (int h : {8, 12, 16}) {
        std::uint64_t i = 0;
        enumerate_programs(h, cfg, [&](const Program& p) {
            CHECK(program_at(i, h, cfg).words == p.words);
            ++i;
        });
    }
    // strictly increasing word sequences
    CHECK(program_at(0, 12, cfg).hex() == "00f");
    CHECK(program_at(1, 12, cfg).hex() == "01f");
    CHECK(program_at(15, 12, cfg).hex() == "10f");
    CHECK(program_at(224, 12, cfg).hex() == "eef");
}

TEST_CASE("coding pmf: exact values, decay, and mass") {
    CHECK(coding_pmf(4, cfg) == 0.0625);  // 2^-4 exactly
    CHECK(coding_pmf(6, cfg) == 0.0);

    double mass = 0.0, prev_mass = 0.0;
    for (int h = 4; h <= 128; h += 4) {
        CHECK(coding_pmf(h, cfg) ==
              doctest::Approx(oracle::coding_pmf(h, cfg)).epsilon(1e-14));
        mass += coding_pmf(h, cfg);
        CHECK(mass <= 1.0 + 1e-12);
        CHECK(mass >= prev_mass);
        prev_mass = mass;
    }

    for (int h = 4; h <= 64; h += 4) {
        const double ratio = coding_pmf(h + 4, cfg) / coding_pmf(h, cfg);
        CHECK(std::abs(ratio - 0.9375) <= 1e-12);
    }
}

TEST_CASE("coding pmf at larger word sizes") {
    MachineConfig wide;
    wide.word_size_c = 12;
    for (int h = 12; h <= 120; h += 12) {
        const double ratio = coding_pmf(h + 12, wide) / coding_pmf(h, wide);
        CHECK(std::abs(ratio - (1.0 - std::ldexp(1.0, -12))) <= 1e-12);
    }
    CHECK(coding_base(cfg) == 1.0625);
    CHECK(std::round(coding_base(wide) * 1e6) / 1e6 == 1.000244);
}

TEST_CASE("coding approximation is the printed formula") {
    // The approximation decays with base b per bit; its own mass stays <= 1.
    const double b = coding_base(cfg);
    double mass = 0.0;
    for (int h = 4; h <= 128; h += 4) {
        CHECK(coding_pmf_approx(h + 4, cfg) / coding_pmf_approx(h, cfg) ==
              doctest::Approx(std::pow(b, -4)).epsilon(1e-12));
        mass += coding_pmf_approx(h, cfg);
    }
    CHECK(mass <= 1.0 + 1e-9);
}

TEST_CASE("run_step executes the documented opcodes") {
    ZeroTape tape;

    SUBCASE("load then write emits the immediate") {
        MachineState st;
        const auto r = run_step(prog({8, 3, 2, 15}), 0, st, cfg, tape);
        CHECK(r.halted);
        CHECK(r.action == Word{3});
        CHECK(r.steps_used == 2);
    }

    SUBCASE("reaching END without WRITE emits nothing") {
        MachineState st;
        const auto r = run_step(prog({3, 3, 15}), 0, st, cfg, tape);
        CHECK_FALSE(r.halted);
        CHECK(st.a == 2);
    }

    SUBCASE("backward jump exhausts the step budget") {
        MachineState st;
        const auto r = run_step(prog({9, 14, 15}), 0, st, cfg, tape);
        CHECK_FALSE(r.halted);
        CHECK(r.trap == Trap::BudgetExhausted);
        CHECK(r.steps_used == cfg.per_step_budget);
    }

    SUBCASE("HALT stops the policy for good") {
        MachineState st;
        const auto r = run_step(prog({12, 15}), 0, st, cfg, tape);
        CHECK(r.trap == Trap::Halted);
        CHECK(st.stopped);
        const auto r2 = run_step(prog({12, 15}), 0, st, cfg, tape);
        CHECK(r2.trap == Trap::Halted);
        CHECK(r2.steps_used == 0);
    }

    SUBCASE("missing trailing immediate decodes as zero") {
        MachineState st;
        run_step(prog({8, 15}), 0, st, cfg, tape);  // LOAD with no operand
        CHECK(st.a == 0);
    }

    SUBCASE("READ copies the observation, registers persist between steps") {
        MachineState st;
        const Program echo = prog({1, 2, 15});
        auto r = run_step(echo, 7, st, cfg, tape);
        CHECK(r.action == Word{7});
        r = run_step(prog({2, 15}), 0, st, cfg, tape);  // bare WRITE sees old a
        CHECK(r.action == Word{7});
    }

    SUBCASE("RAND consumes the seed tape and traps when it runs out") {
        std::vector<Word> words{5};
        FixedTape ft(words);
        MachineState st;
        auto r = run_step(prog({11, 2, 15}), 0, st, cfg, ft);
        CHECK(r.action == Word{5});
        CHECK(ft.consumed() == 1);
        MachineState st2;
        r = run_step(prog({11, 11, 2, 15}), 0, st2, cfg, ft);
        CHECK(r.trap == Trap::TapeExhausted);
    }

    SUBCASE("JZ takes the offset only on zero") {
        MachineState st;
        // JZ +2 jumps over the LOAD, leaving a = 0, then WRITE
        auto r = run_step(prog({10, 2, 8, 9, 2, 15}), 0, st, cfg, tape);
        CHECK(r.action == Word{0});
        MachineState st2{.a = 1, .b = 0, .stopped = false};
        r = run_step(prog({10, 2, 8, 9, 2, 15}), 0, st2, cfg, tape);
        CHECK(r.action == Word{9});
    }
}

TEST_CASE("run_step agrees with the second interpreter") {
    // Exhaustive over all programs up to 12 bits, a handful of observations.
    for (int h = 4; h <= 12; h += 4) {
        for (const auto& words : oracle::all_programs(h, cfg)) {
            const Program p = validate_program(words, cfg);
            for (Word obs : {Word{0}, Word{3}, Word{15}}) {
                MachineState st;
                std::vector<Word> tape_words{9, 4, 1, 7};
                FixedTape tape(tape_words);
                const auto r = run_step(p, obs, st, cfg, tape);

                Word a = 0, b = 0;
                std::size_t pos = 0;
                const auto o = oracle::step(words, obs, a, b, tape_words, pos, cfg);
                CHECK(r.halted == o.action.has_value());
                if (r.halted) CHECK(*r.action == *o.action);
                if (!st.stopped) {
                    CHECK(st.a == a);
                    CHECK(st.b == b);
                }
            }
        }
    }
}

TEST_CASE("run_generator emits streams or refuses") {
    SUBCASE("write-inc counts upward") {
        const auto s = run_generator(prog({2, 3, 15}), 5, cfg);
        REQUIRE(s.has_value());
        CHECK(*s == std::vector<Word>{0, 1, 2, 3, 4});
        CHECK(letters(*s) == "abcde");
    }
    SUBCASE("stride three spells the classic item") {
        const auto s = run_generator(prog({2, 3, 3, 3, 15}), 5, cfg);
        REQUIRE(s.has_value());
        CHECK(letters(*s) == "adgjm");
    }
    SUBCASE("bare WRITE wraps at END and repeats") {
        const auto s = run_generator(prog({2, 15}), 4, cfg);
        REQUIRE(s.has_value());
        CHECK(letters(*s) == "aaaa");
    }
    SUBCASE("HALT, END-only, and stalls give no stream") {
        CHECK_FALSE(run_generator(prog({12, 15}), 3, cfg).has_value());
        CHECK_FALSE(run_generator(prog({15}), 3, cfg).has_value());
        CHECK_FALSE(run_generator(prog({3, 15}), 3, cfg).has_value());  // never writes
    }
}

TEST_CASE("hashing and letter rendering") {
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(hex64(0) == "0000000000000000");
    CHECK(hex64(0xdeadbeefull) == "00000000deadbeef");
    const std::vector<Word> w{0, 1, 15};
    CHECK(letters(w) == "abp");
}
