#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "taskdiff/aggregate.hpp"

using namespace taskdiff;

namespace {
const MachineConfig cfg{};
const ToleranceConfig tol{};

Program prog(std::initializer_list<Word> words) {
    return validate_program(std::vector<Word>(words), cfg);
}

// A small bank shared by most cases: generators to 12 bits, policies to 12.
const TaskBank& small_bank() {
    static const TaskBank bank = [] {
        BankConfig c;
        c.l_max_policy = 12;
        c.l_max_generator = 12;
        c.h_max = 12;
        return build_bank(c);
    }();
    return bank;
}
}  // namespace

TEST_CASE("weight schemes") {
    const WeightScheme one = WeightScheme::parse("one");
    CHECK(one(4) == 1.0);
    CHECK(one(400) == 1.0);
    CHECK(one.name() == "one");

    const WeightScheme uni = WeightScheme::parse("uniform:4:12");
    CHECK(uni(4) == doctest::Approx(1.0 / 9));
    CHECK(uni(12) == doctest::Approx(1.0 / 9));
    CHECK(uni(13) == 0.0);
    CHECK(uni(3) == 0.0);

    const WeightScheme geo = WeightScheme::parse("geometric:2");
    double mass = 0.0;
    for (int h = 0; h < 60; ++h) mass += geo(h);
    CHECK(mass == doctest::Approx(1.0));
    CHECK(geo(5) == doctest::Approx(2.0 * geo(6)));

    CHECK_THROWS_AS(WeightScheme::parse("nope"), ConfigError);
    CHECK_THROWS_AS(WeightScheme::parse("uniform:9"), ConfigError);
    CHECK_THROWS_AS(WeightScheme::parse("geometric:0.5"), ConfigError);
}

TEST_CASE("bank distributions normalize") {
    const TaskBank& bank = small_bank();
    REQUIRE_FALSE(bank.tasks.empty());
    for (TaskProb tp : {TaskProb::Uniform, TaskProb::TwoPowMinusKhat}) {
        const BankDistribution dist = make_distribution(bank, tp);
        double total = 0.0;
        for (double p : dist.p) total += p;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
        double strata_mass = 0.0;
        for (const auto& [h, m] : dist.p_h) strata_mass += m;
        CHECK(strata_mass == doctest::Approx(1.0).epsilon(1e-13));
        for (const auto& [h, idx] : dist.strata) {
            double cond = 0.0;
            for (int i : idx) cond += dist.conditional(i, h);
            CHECK(cond == doctest::Approx(1.0).epsilon(1e-13));
        }
    }
}

TEST_CASE("psi on a hand-checked two-task split") {
    // uniform over {heaven, hell}: any agent nets exactly one half
    BankConfig c;
    c.family_track = false;
    c.l_max_policy = 8;
    c.l_max_generator = 8;
    const TaskBank bank = build_bank(c);
    REQUIRE(bank.tasks.size() == 2);
    const BankDistribution dist = make_distribution(bank, TaskProb::Uniform);
    CHECK(psi(prog({15}), bank, dist) == doctest::Approx(0.5));
    CHECK(psi(prog({11, 2, 15}), bank, dist) == doctest::Approx(0.5));
}

TEST_CASE("decomposition identity holds to machine precision") {
    const TaskBank& bank = small_bank();
    const Program agents[] = {prog({15}), prog({1, 2, 15}), prog({3, 2, 15}),
                              prog({11, 2, 15}), prog({8, 3, 2, 15})};
    for (TaskProb tp : {TaskProb::Uniform, TaskProb::TwoPowMinusKhat}) {
        const BankDistribution dist = make_distribution(bank, tp);
        for (const Program& pi : agents)
            CHECK(decompose_check(pi, bank, dist) <= 1e-12);
    }
}

TEST_CASE("per-difficulty slices") {
    const TaskBank& bank = small_bank();
    const BankDistribution dist = make_distribution(bank, TaskProb::Uniform);
    REQUIRE(dist.strata.contains(4.0));  // heaven
    CHECK(psi_at_h(prog({15}), bank, dist, 4.0, true, tol) == doctest::Approx(1.0));
    CHECK_THROWS_AS(psi_at_h(prog({15}), bank, dist, 7.0, true, tol), EmptyStratum);
}

TEST_CASE("weighted aggregation and the unbounded refusal") {
    const TaskBank& bank = small_bank();
    const Program echo = prog({1, 2, 15});

    const double v = psi_weighted(echo, bank, tol, WeightScheme::parse("uniform:4:12"),
                                  TaskProb::Uniform);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);

    CHECK_THROWS_AS(psi_weighted(echo, bank, tol, WeightScheme::parse("one"),
                                 TaskProb::Uniform, DiffKind::Ls),
                    UnboundedAggregation);
    // a cutoff restores boundedness
    const double capped = psi_weighted(echo, bank, tol, WeightScheme::parse("one"),
                                       TaskProb::Uniform, DiffKind::Ls, 16.0);
    CHECK(capped >= 0.0);

    // w = one with the (bounded) min-length stratification is the plain sum
    const double score = psi_weighted(echo, bank, tol, WeightScheme::parse("one"),
                                      TaskProb::Uniform);
    CHECK(score >= 0.0);
}

TEST_CASE("pairs aggregation") {
    const TaskBank& bank = small_bank();
    const PairsTable table = materialize_pairs(bank);
    REQUIRE_FALSE(table.pairs.empty());

    // no pair's policy may be shorter than its task's min-length difficulty
    for (const PairEntry& e : table.pairs) {
        const auto* rec = bank.tasks[static_cast<std::size_t>(e.task_index)].record(
            DiffKind::MinLength);
        REQUIRE(rec != nullptr);
        if (rec->status == DiffStatus::Exact) CHECK(e.policy_h >= rec->value);
        CHECK(rec->status != DiffStatus::Infinite);  // hell pairs with nothing
    }

    const double v = psi_pairs(prog({1, 2, 15}), bank, table, tol,
                               WeightScheme::parse("uniform:4:12"));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-12);

    SUBCASE("a bank of only hell has no pairs") {
        BankConfig c;
        c.family_track = false;
        c.l_max_policy = 8;
        c.l_max_generator = 8;
        TaskBank degen = build_bank(c);
        degen.tasks.erase(
            std::remove_if(degen.tasks.begin(), degen.tasks.end(),
                           [](const BankedTask& t) {
                               return t.task.family != TaskFamily::Hell;
                           }),
            degen.tasks.end());
        const PairsTable empty = materialize_pairs(degen);
        CHECK(empty.pairs.empty());
        CHECK_THROWS_AS(psi_pairs(prog({15}), degen, empty, tol, WeightScheme{}),
                        EmptyPairs);
    }
}

TEST_CASE("response curves and their tail") {
    const TaskBank& bank = small_bank();
    const Program echo = prog({1, 2, 15});  // 12 bits
    const ResponseCurve curve = response_curve(echo, bank, tol);
    REQUIRE_FALSE(curve.points.empty());
    for (const auto& [h, pt] : curve.points) {
        CHECK(pt.psi >= 0.0);
        CHECK(pt.psi <= 1.0);
        if (h > echo.length_bits) CHECK(pt.psi == 0.0);  // nothing above its length
    }
    // heaven's stratum is a guaranteed win for any agent
    CHECK(curve.points.at(4.0).psi == 1.0);
}

TEST_CASE("the sequence-test score") {
    const TaskSpec zeros = make_track_task(prog({2, 15}), 4, cfg);     // aaaaa
    const TaskSpec inc = make_track_task(prog({2, 3, 15}), 4, cfg);    // abcde
    std::map<int, std::vector<TaskSpec>> items{{8, {zeros}}, {12, {inc}}};

    const Program echo = prog({1, 2, 15});
    const CtestResult flat = ctest_score(echo, items, 0.0, cfg);
    double hit_sum = 0.0;
    for (const auto& [h, r] : flat.hit_ratio) hit_sum += r;
    CHECK(flat.score == hit_sum);  // e = 0: exact equality, no tolerance
    CHECK(flat.hit_ratio.at(8) == 1.0);   // echo nails the constant stream
    CHECK(flat.hit_ratio.at(12) == 0.0);  // and misses the moving one

    const CtestResult weighted = ctest_score(echo, items, 2.0, cfg);
    CHECK(weighted.score == doctest::Approx(64.0 * 1.0 + 144.0 * 0.0));

    std::map<int, std::vector<TaskSpec>> ragged{{8, {zeros, zeros}}, {12, {inc}}};
    CHECK_THROWS_AS(ctest_score(echo, ragged, 0.0, cfg), RaggedStrata);
}
