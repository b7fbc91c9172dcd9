#include "taskdiff/difficulty.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace taskdiff {

namespace {

constexpr double kThresholdSlack = 1e-12;

double threshold(double epsilon) { return 1.0 - epsilon; }

}  // namespace

Accept acceptability(const ResponseEstimate& r, double epsilon) {
    const double thr = threshold(epsilon) - kThresholdSlack;
    if (r.exact) return r.mean >= thr ? Accept::Yes : Accept::No;
    if (r.ci_low >= thr) return Accept::Yes;
    if (r.ci_high < thr) return Accept::No;
    return Accept::Undecided;
}

std::string diff_kind_name(DiffKind k) {
    switch (k) {
        case DiffKind::MinLength: return "min_length";
        case DiffKind::Multi: return "multi";
        case DiffKind::Ls: return "ls";
        case DiffKind::RandBaseline: return "rand_baseline";
        case DiffKind::Ratio: return "ratio";
        case DiffKind::MaxResponse: return "max_response";
    }
    return "?";
}

DiffKind diff_kind_from_name(const std::string& s) {
    for (DiffKind k : {DiffKind::MinLength, DiffKind::Multi, DiffKind::Ls,
                       DiffKind::RandBaseline, DiffKind::Ratio, DiffKind::MaxResponse})
        if (diff_kind_name(k) == s) return k;
    throw ConfigError("unknown difficulty kind: " + s);
}

std::string diff_status_name(DiffStatus s) {
    switch (s) {
        case DiffStatus::Exact: return "exact";
        case DiffStatus::LowerBound: return "lower_bound";
        case DiffStatus::Infinite: return "infinite";
    }
    return "?";
}

DiffStatus diff_status_from_name(const std::string& s) {
    for (DiffStatus st : {DiffStatus::Exact, DiffStatus::LowerBound, DiffStatus::Infinite})
        if (diff_status_name(st) == s) return st;
    throw ConfigError("unknown difficulty status: " + s);
}

namespace {

struct PolicyVerdict {
    Accept accept = Accept::Undecided;
    EpisodeStats stats;
};

// Evaluates (pi, mu) and resolves acceptability, escalating the Monte-Carlo
// sample budget (deterministically) when the CI straddles the threshold.
PolicyVerdict evaluate_policy(const Program& pi, const TaskSpec& mu, double epsilon,
                              const MachineConfig& cfg, const EvalOptions& eval) {
    PolicyVerdict v;
    v.stats = expected_episode(pi, mu, cfg, eval);
    v.accept = acceptability(v.stats.response, epsilon);
    EvalOptions esc = eval;
    for (int round = 1; v.accept == Accept::Undecided && round <= 2; ++round) {
        esc.mc_samples *= 16;
        esc.seed_salt = eval.seed_salt + static_cast<std::uint64_t>(round);
        v.stats = expected_episode(pi, mu, cfg, esc);
        v.accept = acceptability(v.stats.response, epsilon);
    }
    return v;
}

// Folds one policy verdict into a stratum reduction. All reductions are
// order-independent (integer sums, index-tie-broken minima), so the OpenMP
// variant reproduces the serial result exactly.
void fold(StratumScan& s, std::int64_t index, int h_bits, const PolicyVerdict& v,
          double r_max) {
    const double mean = v.stats.response.mean;
    if (v.accept == Accept::Undecided) {
        if (s.first_undecided < 0 || index < s.first_undecided) s.first_undecided = index;
    } else if (v.accept == Accept::Yes) {
        ++s.acceptable_count;
        if (s.first_acceptable < 0 || index < s.first_acceptable) s.first_acceptable = index;
        const double ls = h_bits + std::log2(v.stats.mean_steps);
        if (ls < s.min_ls || (ls == s.min_ls && index < s.min_ls_index)) {
            s.min_ls = ls;
            s.min_ls_index = index;
        }
    }
    if (mean > 0.0) {
        const double ratio = h_bits / mean;
        if (ratio < s.min_ratio || (ratio == s.min_ratio && index < s.min_ratio_index)) {
            s.min_ratio = ratio;
            s.min_ratio_index = index;
        }
    }
    if (std::abs(mean - r_max) <= kThresholdSlack &&
        (s.first_max_response < 0 || index < s.first_max_response))
        s.first_max_response = index;
}

void merge(StratumScan& a, const StratumScan& b) {
    a.acceptable_count += b.acceptable_count;
    auto min_index = [](std::int64_t x, std::int64_t y) {
        if (x < 0) return y;
        if (y < 0) return x;
        return std::min(x, y);
    };
    a.first_acceptable = min_index(a.first_acceptable, b.first_acceptable);
    a.first_undecided = min_index(a.first_undecided, b.first_undecided);
    a.first_max_response = min_index(a.first_max_response, b.first_max_response);
    if (b.min_ls < a.min_ls || (b.min_ls == a.min_ls && b.min_ls_index >= 0 &&
                                (a.min_ls_index < 0 || b.min_ls_index < a.min_ls_index))) {
        a.min_ls = b.min_ls;
        a.min_ls_index = b.min_ls_index;
    }
    if (b.min_ratio < a.min_ratio ||
        (b.min_ratio == a.min_ratio && b.min_ratio_index >= 0 &&
         (a.min_ratio_index < 0 || b.min_ratio_index < a.min_ratio_index))) {
        a.min_ratio = b.min_ratio;
        a.min_ratio_index = b.min_ratio_index;
    }
}

StratumScan scan_range(const TaskSpec& mu, int h_bits, double epsilon,
                       const MachineConfig& cfg, const EvalOptions& eval,
                       std::uint64_t begin, std::uint64_t end, double r_max) {
    StratumScan s;
    for (std::uint64_t i = begin; i < end; ++i) {
        const Program pi = program_at(i, h_bits, cfg);
        const PolicyVerdict v = evaluate_policy(pi, mu, epsilon, cfg, eval);
        fold(s, static_cast<std::int64_t>(i), h_bits, v, r_max);
    }
    return s;
}

}  // namespace

Accept acceptable(const Program& pi, const TaskSpec& mu, const ToleranceConfig& tol,
                  const MachineConfig& cfg, const EvalOptions& opts) {
    return evaluate_policy(pi, mu, tol.epsilon, cfg, opts).accept;
}

StratumScan scan_stratum_serial(const TaskSpec& mu, int h_bits, const ToleranceConfig& tol,
                                const MachineConfig& cfg, const EvalOptions& eval) {
    const std::uint64_t n = count_programs(h_bits, cfg);
    const double r_max = max_achievable_response(mu, cfg);
    StratumScan s = scan_range(mu, h_bits, tol.epsilon, cfg, eval, 0, n, r_max);
    s.n_programs = n;
    return s;
}

StratumScan scan_stratum_omp(const TaskSpec& mu, int h_bits, const ToleranceConfig& tol,
                             const MachineConfig& cfg, const EvalOptions& eval) {
#ifndef _OPENMP
    return scan_stratum_serial(mu, h_bits, tol, cfg, eval);
#else
    const std::uint64_t n = count_programs(h_bits, cfg);
    const double r_max = max_achievable_response(mu, cfg);
    const int max_threads = omp_get_max_threads();
    std::vector<StratumScan> partial(static_cast<std::size_t>(max_threads));
    #pragma omp parallel num_threads(max_threads)
    {
        const int t = omp_get_thread_num();
        const int nt = omp_get_num_threads();
        const std::uint64_t chunk = (n + nt - 1) / nt;
        const std::uint64_t begin = std::min<std::uint64_t>(n, chunk * static_cast<std::uint64_t>(t));
        const std::uint64_t end = std::min<std::uint64_t>(n, begin + chunk);
        partial[static_cast<std::size_t>(t)] =
            scan_range(mu, h_bits, tol.epsilon, cfg, eval, begin, end, r_max);
    }
    StratumScan s;
    for (const StratumScan& p : partial) merge(s, p);
    s.n_programs = n;
    return s;
#endif
}

StratumScan scan_stratum(const TaskSpec& mu, int h_bits, const ToleranceConfig& tol,
                         const MachineConfig& cfg, const SearchOptions& opts) {
    return opts.parallel ? scan_stratum_omp(mu, h_bits, tol, cfg, opts.eval)
                         : scan_stratum_serial(mu, h_bits, tol, cfg, opts.eval);
}

namespace {

DifficultyRecord base_record(DiffKind kind, const TaskSpec& mu, const ToleranceConfig& tol,
                             const SearchOptions& opts) {
    DifficultyRecord r;
    r.kind = kind;
    r.l_max = opts.l_max;
    r.epsilon = tol.epsilon;
    r.tau = mu.horizon_tau;
    return r;
}

bool hopeless(const TaskSpec& mu, const ToleranceConfig& tol, const MachineConfig& cfg) {
    return max_achievable_response(mu, cfg) < threshold(tol.epsilon) - kThresholdSlack;
}

DifficultyRecord infinite_record(DiffKind kind, const TaskSpec& mu, const ToleranceConfig& tol,
                                 const SearchOptions& opts) {
    DifficultyRecord r = base_record(kind, mu, tol, opts);
    r.status = DiffStatus::Infinite;
    r.value = r.value_lo = r.value_hi = std::numeric_limits<double>::infinity();
    return r;
}

}  // namespace

DifficultyRecord difficulty_min_length(const TaskSpec& mu, const ToleranceConfig& tol,
                                       const MachineConfig& cfg, const SearchOptions& opts) {
    ScanCache scans(mu, tol, cfg, opts);
    return difficulty_min_length(mu, tol, cfg, scans);
}

DifficultyRecord difficulty_min_length(const TaskSpec& mu, const ToleranceConfig& tol,
                                       const MachineConfig& cfg, ScanCache& scans) {
    const SearchOptions& opts = scans.options();
    if (hopeless(mu, tol, cfg)) return infinite_record(DiffKind::MinLength, mu, tol, opts);
    const int c = cfg.word_size_c;
    for (int h = c; h <= opts.l_max; h += c) {
        const StratumScan& s = scans.at(h);
        if (s.first_undecided >= 0 &&
            (s.first_acceptable < 0 || s.first_undecided < s.first_acceptable))
            throw UndecidedAtFrontier("undecided acceptability at length " + std::to_string(h) +
                                      " for task " + mu.id);
        if (s.first_acceptable >= 0) {
            DifficultyRecord r = base_record(DiffKind::MinLength, mu, tol, opts);
            r.value = r.value_lo = r.value_hi = h;
            r.witness = program_at(static_cast<std::uint64_t>(s.first_acceptable), h, cfg);
            r.status = DiffStatus::Exact;
            return r;
        }
    }
    DifficultyRecord r = base_record(DiffKind::MinLength, mu, tol, opts);
    r.status = DiffStatus::LowerBound;
    r.value = r.value_lo = opts.l_max;
    r.value_hi = std::numeric_limits<double>::infinity();
    return r;
}

DifficultyRecord difficulty_multi(const TaskSpec& mu, const ToleranceConfig& tol,
                                  const MachineConfig& cfg, const SearchOptions& opts) {
    ScanCache scans(mu, tol, cfg, opts);
    return difficulty_multi(mu, tol, cfg, scans);
}

DifficultyRecord difficulty_multi(const TaskSpec& mu, const ToleranceConfig& tol,
                                  const MachineConfig& cfg, ScanCache& scans) {
    const SearchOptions& opts = scans.options();
    if (hopeless(mu, tol, cfg)) return infinite_record(DiffKind::Multi, mu, tol, opts);
    const int c = cfg.word_size_c;
    double sum = 0.0;
    std::optional<Program> witness;
    for (int h = c; h <= opts.l_max; h += c) {
        const StratumScan& s = scans.at(h);
        if (s.first_undecided >= 0)
            throw UndecidedAtFrontier("undecided acceptability at length " + std::to_string(h) +
                                      " for task " + mu.id);
        sum += static_cast<double>(s.acceptable_count) * std::ldexp(1.0, -2 * h);
        if (!witness && s.first_acceptable >= 0)
            witness = program_at(static_cast<std::uint64_t>(s.first_acceptable), h, cfg);
    }
    DifficultyRecord r = base_record(DiffKind::Multi, mu, tol, opts);
    r.witness = witness;
    // Tail of the truncated sum: fewer than 2^h programs per length gives
    // sum_{h > l_max} 2^h 2^(-2h) < 2^(-l_max + 1).
    const double tail = std::ldexp(1.0, -(opts.l_max - 1));
    if (sum == 0.0) {
        r.status = DiffStatus::LowerBound;
        r.value = r.value_lo = -0.5 * std::log2(tail);
        r.value_hi = std::numeric_limits<double>::infinity();
        return r;
    }
    r.status = DiffStatus::Exact;
    r.value = r.value_hi = -0.5 * std::log2(sum);
    r.value_lo = -0.5 * std::log2(sum + tail);
    return r;
}

DifficultyRecord difficulty_ls(const TaskSpec& mu, const ToleranceConfig& tol,
                               const MachineConfig& cfg, const SearchOptions& opts) {
    ScanCache scans(mu, tol, cfg, opts);
    return difficulty_ls(mu, tol, cfg, scans);
}

DifficultyRecord difficulty_ls(const TaskSpec& mu, const ToleranceConfig& tol,
                               const MachineConfig& cfg, ScanCache& scans) {
    const SearchOptions& opts = scans.options();
    if (hopeless(mu, tol, cfg)) return infinite_record(DiffKind::Ls, mu, tol, opts);
    const int c = cfg.word_size_c;
    double best = std::numeric_limits<double>::infinity();
    int best_h = 0;
    std::int64_t best_index = -1;
    for (int h = c; h <= opts.l_max && h < best; h += c) {
        const StratumScan& s = scans.at(h);
        if (s.first_undecided >= 0)
            throw UndecidedAtFrontier("undecided acceptability at length " + std::to_string(h) +
                                      " for task " + mu.id);
        if (s.min_ls_index >= 0 && s.min_ls < best) {
            best = s.min_ls;
            best_h = h;
            best_index = s.min_ls_index;
        }
    }
    DifficultyRecord r = base_record(DiffKind::Ls, mu, tol, opts);
    if (best_index < 0) {
        r.status = DiffStatus::LowerBound;
        r.value = r.value_lo = opts.l_max;
        r.value_hi = std::numeric_limits<double>::infinity();
        return r;
    }
    r.value = r.value_lo = r.value_hi = best;
    r.witness = program_at(static_cast<std::uint64_t>(best_index), best_h, cfg);
    // Unscanned lengths h' > l_max satisfy LS >= h' >= l_max + c.
    r.status = best <= opts.l_max + c ? DiffStatus::Exact : DiffStatus::LowerBound;
    return r;
}

std::array<DifficultyRecord, 3> difficulty_baselines(const TaskSpec& mu,
                                                     const MachineConfig& cfg,
                                                     const SearchOptions& opts) {
    ScanCache scans(mu, ToleranceConfig{}, cfg, opts);
    return difficulty_baselines(mu, cfg, scans);
}

std::array<DifficultyRecord, 3> difficulty_baselines(const TaskSpec& mu,
                                                     const MachineConfig& cfg,
                                                     ScanCache& scans) {
    const SearchOptions& opts = scans.options();
    const ToleranceConfig tol{};  // baselines do not use acceptability
    const int c = cfg.word_size_c;

    DifficultyRecord rand_rec = base_record(DiffKind::RandBaseline, mu, tol, opts);
    rand_rec.epsilon = 0.0;
    switch (mu.family) {
        case TaskFamily::Heaven: rand_rec.value = 1.0; break;
        case TaskFamily::Hell: rand_rec.value = 0.0; break;
        case TaskFamily::Track: rand_rec.value = std::ldexp(1.0, -c); break;
    }
    rand_rec.value_lo = rand_rec.value_hi = rand_rec.value;

    DifficultyRecord ratio_rec = base_record(DiffKind::Ratio, mu, tol, opts);
    ratio_rec.epsilon = 0.0;
    double best_ratio = std::numeric_limits<double>::infinity();
    int ratio_h = 0;
    std::int64_t ratio_index = -1;

    DifficultyRecord max_rec = base_record(DiffKind::MaxResponse, mu, tol, opts);
    max_rec.epsilon = 0.0;
    int max_h = -1;
    std::int64_t max_index = -1;

    for (int h = c; h <= opts.l_max; h += c) {
        if (h >= best_ratio && max_index >= 0) break;  // neither can improve
        const StratumScan& s = scans.at(h);
        if (s.min_ratio_index >= 0 && s.min_ratio < best_ratio) {
            best_ratio = s.min_ratio;
            ratio_h = h;
            ratio_index = s.min_ratio_index;
        }
        if (max_index < 0 && s.first_max_response >= 0) {
            max_h = h;
            max_index = s.first_max_response;
        }
    }

    if (ratio_index < 0) {
        ratio_rec.status = DiffStatus::Infinite;
        ratio_rec.value = ratio_rec.value_lo = ratio_rec.value_hi =
            std::numeric_limits<double>::infinity();
    } else {
        ratio_rec.value = ratio_rec.value_lo = ratio_rec.value_hi = best_ratio;
        ratio_rec.witness = program_at(static_cast<std::uint64_t>(ratio_index), ratio_h, cfg);
        ratio_rec.status = best_ratio <= opts.l_max ? DiffStatus::Exact : DiffStatus::LowerBound;
    }

    if (max_index < 0) {
        max_rec.status = DiffStatus::LowerBound;
        max_rec.value = max_rec.value_lo = opts.l_max;
        max_rec.value_hi = std::numeric_limits<double>::infinity();
    } else {
        max_rec.status = DiffStatus::Exact;
        max_rec.value = max_rec.value_lo = max_rec.value_hi = max_h;
        max_rec.witness = program_at(static_cast<std::uint64_t>(max_index), max_h, cfg);
    }

    return {rand_rec, ratio_rec, max_rec};
}

std::vector<BoundednessViolation> check_strong_boundedness(
    const std::vector<Program>& policies, const std::vector<TaskWithDifficulty>& bank,
    const ToleranceConfig& tol, const MachineConfig& cfg, const SearchOptions& opts) {
    const std::int64_t n = static_cast<std::int64_t>(policies.size());
    std::vector<std::vector<BoundednessViolation>> per_policy(policies.size());
#ifdef _OPENMP
    #pragma omp parallel for schedule(dynamic, 16) if (opts.parallel)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        const Program& pi = policies[static_cast<std::size_t>(i)];
        for (const TaskWithDifficulty& t : bank) {
            if (!t.min_length || t.min_length->status == DiffStatus::LowerBound) continue;
            if (t.min_length->key() <= pi.length_bits) continue;
            const Accept a = acceptable(pi, *t.task, tol, cfg, opts.eval);
            if (a != Accept::No)
                per_policy[static_cast<std::size_t>(i)].push_back(
                    {pi.hex(), t.task->id, a});
        }
    }
    std::vector<BoundednessViolation> out;
    for (auto& v : per_policy)
        out.insert(out.end(), v.begin(), v.end());
    return out;
}

}  // namespace taskdiff
