#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taskdiff/bank.hpp"

namespace taskdiff {

// Per-difficulty weight w(h). `One` is w(h) = 1 for every h (a measure, not
// a probability); outputs under it are labeled scores.
struct WeightScheme {
    enum class Kind { One, UniformInterval, Geometric, Table };
    Kind kind = Kind::One;
    double lo = 0.0, hi = 0.0;  // uniform interval, inclusive integer bounds
    double base = 2.0;          // geometric decay base (> 1)
    std::map<double, double> table;

    double operator()(double h) const;
    std::string name() const;
    // "one" | "uniform:a:b" | "geometric:base"
    static WeightScheme parse(const std::string& spec);
};

enum class TaskProb { Uniform, TwoPowMinusKhat };

// Bank-wide task probability plus the induced per-stratum quantities
// p(h) and p(mu | h), stratified by a difficulty kind's exact records.
struct BankDistribution {
    std::vector<double> p;                       // per task, sums to 1
    std::map<double, double> p_h;                // stratum key -> mass
    std::map<double, std::vector<int>> strata;   // stratum key -> task indices
    std::vector<int> censored;                   // excluded: no exact difficulty

    double conditional(int task_index, double h) const;
};

BankDistribution make_distribution(const TaskBank& bank, TaskProb prob,
                                   DiffKind stratify_by = DiffKind::MinLength);

// Expected average result over the bank under dist.
double psi(const Program& pi, const TaskBank& bank, const BankDistribution& dist,
           bool parallel = true);

// Per-difficulty slice: conditional average of the raw expected response, or
// of binarized acceptability when binarized is set.
double psi_at_h(const Program& pi, const TaskBank& bank, const BankDistribution& dist,
                double h, bool binarized, const ToleranceConfig& tol, bool parallel = true);

// |psi - sum_h p(h) psi_h|; zero (within 1e-12) on banks with exact records.
double decompose_check(const Program& pi, const TaskBank& bank, const BankDistribution& dist,
                       bool parallel = true);

// Weighted binarized aggregation over strata. With w = One and the LS
// difficulty the sum is not bounded; such a request is refused unless a
// max-h cutoff is supplied.
double psi_weighted(const Program& pi, const TaskBank& bank, const ToleranceConfig& tol,
                    const WeightScheme& w, TaskProb task_prob,
                    DiffKind stratify_by = DiffKind::MinLength,
                    std::optional<double> max_h_cutoff = std::nullopt, bool parallel = true);

// Pairs-based aggregation: acceptable policies of each length uniformly, and
// for each policy its paired tasks under the 2^-K-hat conditional.
double psi_pairs(const Program& pi, const TaskBank& bank, const PairsTable& pairs,
                 const ToleranceConfig& tol, const WeightScheme& w, bool parallel = true);

struct CurvePoint {
    double psi = 0.0;
    long n_tasks = 0;
    long n_undecided = 0;
};

struct ResponseCurve {
    std::map<double, CurvePoint> points;  // stratum key -> binarized slice
    double epsilon = 0.0;
    std::string agent_id;
    long n_censored = 0;  // tasks excluded for lacking an exact difficulty
};

ResponseCurve response_curve(const Program& pi, const TaskBank& bank,
                             const ToleranceConfig& tol, bool parallel = true);

struct CtestResult {
    double score = 0.0;
    std::map<int, double> hit_ratio;  // difficulty -> inner sum
};

// The original sequence-test score over difficulty-stratified items: Hit is
// the (expected) correctness of the final prediction; every difficulty must
// carry the same number of items.
CtestResult ctest_score(const Program& pi, const std::map<int, std::vector<TaskSpec>>& items,
                        double exponent, const MachineConfig& cfg,
                        const EvalOptions& opts = {});

}  // namespace taskdiff
