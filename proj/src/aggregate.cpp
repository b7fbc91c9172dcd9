#include "taskdiff/aggregate.hpp"

#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace taskdiff {

double WeightScheme::operator()(double h) const {
    switch (kind) {
        case Kind::One:
            return 1.0;
        case Kind::UniformInterval: {
            if (h < lo || h > hi) return 0.0;
            return 1.0 / (hi - lo + 1.0);
        }
        case Kind::Geometric:
            return (1.0 - 1.0 / base) * std::pow(base, -h);
        case Kind::Table: {
            auto it = table.find(h);
            return it == table.end() ? 0.0 : it->second;
        }
    }
    return 0.0;
}

std::string WeightScheme::name() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::One: os << "one"; break;
        case Kind::UniformInterval: os << "uniform:" << lo << ":" << hi; break;
        case Kind::Geometric: os << "geometric:" << base; break;
        case Kind::Table: os << "table[" << table.size() << "]"; break;
    }
    return os.str();
}

WeightScheme WeightScheme::parse(const std::string& spec) {
    WeightScheme w;
    if (spec == "one") return w;
    if (spec.rfind("uniform:", 0) == 0) {
        w.kind = Kind::UniformInterval;
        const auto rest = spec.substr(8);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw ConfigError("uniform weight needs a:b");
        w.lo = std::stod(rest.substr(0, colon));
        w.hi = std::stod(rest.substr(colon + 1));
        if (w.lo > w.hi) throw ConfigError("uniform weight needs a <= b");
        return w;
    }
    if (spec.rfind("geometric:", 0) == 0) {
        w.kind = Kind::Geometric;
        w.base = std::stod(spec.substr(10));
        if (w.base <= 1.0) throw ConfigError("geometric weight needs base > 1");
        return w;
    }
    throw ConfigError("unknown weight scheme: " + spec);
}

double BankDistribution::conditional(int task_index, double h) const {
    const auto it = p_h.find(h);
    if (it == p_h.end() || it->second <= 0.0) return 0.0;
    return p[static_cast<std::size_t>(task_index)] / it->second;
}

BankDistribution make_distribution(const TaskBank& bank, TaskProb prob, DiffKind stratify_by) {
    BankDistribution dist;
    const std::size_t n = bank.tasks.size();
    dist.p.assign(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const BankedTask& bt = bank.tasks[i];
        double w = 1.0;
        if (prob == TaskProb::TwoPowMinusKhat)
            w = std::ldexp(1.0, -(bt.complexity.censored ? bank.config.l_max_generator
                                                         : bt.complexity.k_hat));
        dist.p[i] = w;
        total += w;
    }
    if (total > 0.0)
        for (double& v : dist.p) v /= total;
    for (std::size_t i = 0; i < n; ++i) {
        const DifficultyRecord* rec = bank.tasks[i].record(stratify_by);
        if (!rec || rec->status == DiffStatus::LowerBound) {
            dist.censored.push_back(static_cast<int>(i));
            continue;
        }
        const double key = rec->key();
        dist.strata[key].push_back(static_cast<int>(i));
        dist.p_h[key] += dist.p[i];
    }
    return dist;
}

namespace {

// Per-task expected responses, computed in parallel, folded in index order so
// thread count cannot change the result.
std::vector<double> responses(const Program& pi, const TaskBank& bank, bool parallel) {
    const std::int64_t n = static_cast<std::int64_t>(bank.tasks.size());
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    const EvalOptions eval = bank.config.search_options(parallel).eval;
#ifdef _OPENMP
    #pragma omp parallel for schedule(dynamic, 8) if (parallel)
#endif
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            expected_response(pi, bank.tasks[static_cast<std::size_t>(i)].task,
                              bank.config.machine, eval)
                .mean;
    return out;
}

std::vector<Accept> accepts(const Program& pi, const TaskBank& bank,
                            const std::vector<int>& indices, const ToleranceConfig& tol,
                            bool parallel) {
    const std::int64_t n = static_cast<std::int64_t>(indices.size());
    std::vector<Accept> out(static_cast<std::size_t>(n), Accept::Undecided);
    const EvalOptions eval = bank.config.search_options(parallel).eval;
#ifdef _OPENMP
    #pragma omp parallel for schedule(dynamic, 8) if (parallel)
#endif
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            acceptable(pi, bank.tasks[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])].task,
                       tol, bank.config.machine, eval);
    return out;
}

}  // namespace

double psi(const Program& pi, const TaskBank& bank, const BankDistribution& dist,
           bool parallel) {
    if (dist.p.size() != bank.tasks.size())
        throw DistributionMismatch("distribution covers " + std::to_string(dist.p.size()) +
                                   " tasks, bank has " + std::to_string(bank.tasks.size()));
    const std::vector<double> r = responses(pi, bank, parallel);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) sum += dist.p[i] * r[i];
    return sum;
}

double psi_at_h(const Program& pi, const TaskBank& bank, const BankDistribution& dist,
                double h, bool binarized, const ToleranceConfig& tol, bool parallel) {
    const auto it = dist.strata.find(h);
    if (it == dist.strata.end() || it->second.empty())
        throw EmptyStratum("no tasks at difficulty " + std::to_string(h));
    const std::vector<int>& idx = it->second;
    double sum = 0.0;
    if (binarized) {
        const std::vector<Accept> a = accepts(pi, bank, idx, tol, parallel);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            if (a[j] == Accept::Undecided)
                throw UndecidedPresent("undecided acceptability in stratum " +
                                       std::to_string(h));
            sum += dist.conditional(idx[j], h) * (a[j] == Accept::Yes ? 1.0 : 0.0);
        }
    } else {
        const EvalOptions eval = bank.config.search_options(parallel).eval;
        for (int i : idx)
            sum += dist.conditional(i, h) *
                   expected_response(pi, bank.tasks[static_cast<std::size_t>(i)].task,
                                     bank.config.machine, eval)
                       .mean;
    }
    return sum;
}

double decompose_check(const Program& pi, const TaskBank& bank, const BankDistribution& dist,
                       bool parallel) {
    const double whole = psi(pi, bank, dist, parallel);
    double by_strata = 0.0;
    for (const auto& [h, mass] : dist.p_h)
        by_strata += mass * psi_at_h(pi, bank, dist, h, /*binarized=*/false, {}, parallel);
    return std::abs(whole - by_strata);
}

double psi_weighted(const Program& pi, const TaskBank& bank, const ToleranceConfig& tol,
                    const WeightScheme& w, TaskProb task_prob, DiffKind stratify_by,
                    std::optional<double> max_h_cutoff, bool parallel) {
    if (w.kind == WeightScheme::Kind::One && stratify_by == DiffKind::Ls && !max_h_cutoff)
        throw UnboundedAggregation(
            "w(h)=1 over the LS difficulty is not bounded; supply a max-h cutoff");
    const BankDistribution dist = make_distribution(bank, task_prob, stratify_by);
    double sum = 0.0;
    for (const auto& [h, idx] : dist.strata) {
        if (std::isinf(h)) continue;  // no policy is acceptable there
        if (max_h_cutoff && h > *max_h_cutoff) continue;
        const double wh = w(h);
        if (wh == 0.0) continue;
        sum += wh * psi_at_h(pi, bank, dist, h, /*binarized=*/true, tol, parallel);
    }
    return sum;
}

double psi_pairs(const Program& pi, const TaskBank& bank, const PairsTable& pairs,
                 const ToleranceConfig& tol, const WeightScheme& w, bool parallel) {
    if (pairs.pairs.empty()) throw EmptyPairs("pairs table is empty");
    const MachineConfig& mc = bank.config.machine;

    auto khat = [&](int task_index) {
        const BankedTask& bt = bank.tasks[static_cast<std::size_t>(task_index)];
        return bt.complexity.censored ? bank.config.l_max_generator : bt.complexity.k_hat;
    };

    // Group by policy: nu(pi') over its paired tasks.
    std::map<std::pair<int, std::uint64_t>, std::vector<int>> by_policy;
    for (const PairEntry& e : pairs.pairs)
        by_policy[{e.policy_h, e.policy_index}].push_back(e.task_index);

    // Acceptability of the evaluated agent on each distinct paired task.
    std::map<int, Accept> accept_cache;
    for (const PairEntry& e : pairs.pairs) accept_cache.emplace(e.task_index, Accept::Undecided);
    {
        std::vector<int> distinct;
        distinct.reserve(accept_cache.size());
        for (const auto& [i, _] : accept_cache) distinct.push_back(i);
        const std::vector<Accept> a = accepts(pi, bank, distinct, tol, parallel);
        for (std::size_t j = 0; j < distinct.size(); ++j) {
            if (a[j] == Accept::Undecided)
                throw UndecidedPresent("undecided acceptability for task " +
                                       bank.tasks[static_cast<std::size_t>(distinct[j])].task.id);
            accept_cache[distinct[j]] = a[j];
        }
    }

    std::map<int, double> per_h;  // inner policy sums grouped by length
    for (const auto& [policy, tasks] : by_policy) {
        double nu = 0.0;
        for (int t : tasks) nu += std::ldexp(1.0, -khat(t));
        double inner = 0.0;
        for (int t : tasks)
            inner += std::ldexp(1.0, -khat(t)) * (accept_cache[t] == Accept::Yes ? 1.0 : 0.0);
        per_h[policy.first] += inner / nu;
    }
    double sum = 0.0;
    for (const auto& [h, v] : per_h)
        sum += w(static_cast<double>(h)) /
               static_cast<double>(count_programs(h, mc)) * v;
    return sum;
}

ResponseCurve response_curve(const Program& pi, const TaskBank& bank,
                             const ToleranceConfig& tol, bool parallel) {
    ResponseCurve curve;
    curve.epsilon = tol.epsilon;
    curve.agent_id = pi.hex();
    const BankDistribution dist =
        make_distribution(bank, TaskProb::TwoPowMinusKhat, DiffKind::MinLength);
    curve.n_censored = static_cast<long>(dist.censored.size());
    for (const auto& [h, idx] : dist.strata) {
        const std::vector<Accept> a = accepts(pi, bank, idx, tol, parallel);
        CurvePoint pt;
        pt.n_tasks = static_cast<long>(idx.size());
        double mass = 0.0, hit = 0.0;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            if (a[j] == Accept::Undecided) {
                ++pt.n_undecided;
                continue;
            }
            const double pw = dist.conditional(idx[j], h);
            mass += pw;
            if (a[j] == Accept::Yes) hit += pw;
        }
        // Conditional weights renormalized over the decided tasks.
        pt.psi = mass > 0.0 ? hit / mass : 0.0;
        curve.points[h] = pt;
    }
    return curve;
}

CtestResult ctest_score(const Program& pi, const std::map<int, std::vector<TaskSpec>>& items,
                        double exponent, const MachineConfig& cfg, const EvalOptions& opts) {
    CtestResult res;
    long n_items = -1;
    for (const auto& [h, xs] : items) {
        if (n_items < 0) n_items = static_cast<long>(xs.size());
        if (static_cast<long>(xs.size()) != n_items)
            throw RaggedStrata("item counts differ across difficulties");
    }
    if (n_items <= 0) throw RaggedStrata("need at least one item per difficulty");
    for (const auto& [h, xs] : items) {
        double hits = 0.0;
        for (const TaskSpec& x : xs)
            hits += expected_episode(pi, x, cfg, opts).mean_final_hit;
        const double ratio = hits / static_cast<double>(n_items);
        res.hit_ratio[h] = ratio;
        res.score += std::pow(static_cast<double>(h), exponent) * ratio;
    }
    return res;
}

}  // namespace taskdiff
