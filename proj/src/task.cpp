#include "taskdiff/task.hpp"

#include <algorithm>
#include <cmath>

namespace taskdiff {

std::string family_name(TaskFamily f) {
    switch (f) {
        case TaskFamily::Track: return "track";
        case TaskFamily::Heaven: return "heaven";
        case TaskFamily::Hell: return "hell";
    }
    return "?";
}

TaskFamily family_from_name(const std::string& s) {
    if (s == "track") return TaskFamily::Track;
    if (s == "heaven") return TaskFamily::Heaven;
    if (s == "hell") return TaskFamily::Hell;
    throw ConfigError("unknown task family: " + s);
}

namespace {

std::string task_digest(const TaskSpec& mu) {
    std::string key = family_name(mu.family);
    key += '|';
    if (mu.generator) key += mu.generator->hex();
    key += '|';
    key += std::to_string(mu.horizon_tau);
    key += '|';
    key += std::to_string(mu.env_seed);
    return hex64(fnv1a64(key));
}

struct PathOutcome {
    double response = 0.0;
    double steps = 0.0;
    double final_hit = 0.0;
    bool tape_exhausted = false;
};

PathOutcome run_episode(const Program& pi, const TaskSpec& mu, const MachineConfig& cfg,
                        RandomTape& tape) {
    PathOutcome out;
    MachineState st;
    const int tau = mu.horizon_tau;
    int hits = 0;
    for (int t = 1; t <= tau; ++t) {
        const Word obs = mu.family == TaskFamily::Track ? mu.stream[static_cast<std::size_t>(t - 1)]
                                                        : Word{0};
        const ExecutionResult r = run_step(pi, obs, st, cfg, tape);
        if (r.trap == Trap::TapeExhausted) {
            out.tape_exhausted = true;
            return out;
        }
        out.steps += r.halted ? r.steps_used : cfg.per_step_budget;
        const bool hit = mu.family == TaskFamily::Track && r.halted &&
                         *r.action == mu.stream[static_cast<std::size_t>(t)];
        if (hit) ++hits;
        if (t == tau && hit) out.final_hit = 1.0;
    }
    switch (mu.family) {
        case TaskFamily::Track:
            out.response = static_cast<double>(hits) / tau;
            break;
        case TaskFamily::Heaven:
            out.response = 1.0;
            out.final_hit = 1.0;
            break;
        case TaskFamily::Hell:
            out.response = 0.0;
            out.final_hit = 0.0;
            break;
    }
    return out;
}

struct Accum {
    double response = 0.0;
    double steps = 0.0;
    double final_hit = 0.0;
};

// Exact expectation over the seed tape. Between interaction steps only the
// two registers carry over (the pc restarts), so the state space is the
// (a, b) grid plus a merged stopped state; the distribution over it is
// propagated step by step, branching depth-first on the RAND words each step
// reads. Gives up (for the Monte Carlo fallback) when a single step would
// read more than max_words words or the execution budget runs out.
class StepDp {
public:
    StepDp(const Program& pi, const TaskSpec& mu, const MachineConfig& cfg,
           const EvalOptions& opts)
        : pi_(pi), mu_(mu), cfg_(cfg), opts_(opts) {}

    bool run(Accum& acc) {
        const int tau = mu_.horizon_tau;
        const int n_states = cfg_.alphabet_size() * cfg_.alphabet_size();
        std::vector<double> dist(static_cast<std::size_t>(n_states), 0.0);
        dist[0] = 1.0;  // a = b = 0
        double stopped_mass = 0.0;
        double hits = 0.0, steps = 0.0, final_hit = 0.0;
        nodes_ = 0;
        for (int t = 1; t <= tau; ++t) {
            const Word obs = mu_.family == TaskFamily::Track
                                 ? mu_.stream[static_cast<std::size_t>(t - 1)]
                                 : Word{0};
            const Word target = mu_.family == TaskFamily::Track
                                    ? mu_.stream[static_cast<std::size_t>(t)]
                                    : Word{0};
            // A stopped policy never acts again; charge the budget outright.
            steps += stopped_mass * cfg_.per_step_budget;
            std::vector<double> next(static_cast<std::size_t>(n_states), 0.0);
            for (int s = 0; s < n_states; ++s) {
                if (dist[static_cast<std::size_t>(s)] == 0.0) continue;
                prefix_.clear();
                if (!paths(s, dist[static_cast<std::size_t>(s)], obs, target, t == tau, next,
                           stopped_mass, hits, steps, final_hit))
                    return false;
            }
            dist.swap(next);
        }
        switch (mu_.family) {
            case TaskFamily::Track:
                acc.response = hits / tau;
                acc.final_hit = final_hit;
                break;
            case TaskFamily::Heaven:
                acc.response = 1.0;
                acc.final_hit = 1.0;
                break;
            case TaskFamily::Hell:
                acc.response = 0.0;
                acc.final_hit = 0.0;
                break;
        }
        acc.steps = steps;
        return true;
    }

private:
    bool paths(int s, double p, Word obs, Word target, bool last, std::vector<double>& next,
               double& stopped_mass, double& hits, double& steps, double& final_hit) {
        if (++nodes_ > opts_.max_exact_nodes) return false;
        MachineState st;
        st.a = static_cast<Word>(s % cfg_.alphabet_size());
        st.b = static_cast<Word>(s / cfg_.alphabet_size());
        FixedTape tape(prefix_);
        const ExecutionResult r = run_step(pi_, obs, st, cfg_, tape);
        if (r.trap == Trap::TapeExhausted) {
            if (static_cast<int>(prefix_.size()) >= opts_.max_exact_tape_words) return false;
            for (int v = 0; v < cfg_.alphabet_size(); ++v) {
                prefix_.push_back(static_cast<Word>(v));
                if (!paths(s, p, obs, target, last, next, stopped_mass, hits, steps, final_hit))
                    return false;
                prefix_.pop_back();
            }
            return true;
        }
        const double q = p * std::ldexp(1.0, -cfg_.word_size_c *
                                                 static_cast<int>(prefix_.size()));
        steps += q * (r.halted ? r.steps_used : cfg_.per_step_budget);
        if (mu_.family == TaskFamily::Track && r.halted && *r.action == target) {
            hits += q;
            if (last) final_hit += q;
        }
        if (st.stopped)
            stopped_mass += q;
        else
            next[st.a + st.b * cfg_.alphabet_size()] += q;
        return true;
    }

    const Program& pi_;
    const TaskSpec& mu_;
    const MachineConfig& cfg_;
    const EvalOptions& opts_;
    std::vector<Word> prefix_;
    long nodes_ = 0;
};

}  // namespace

TaskSpec make_track_task(const Program& generator, int tau, const MachineConfig& cfg) {
    TaskSpec mu;
    mu.family = TaskFamily::Track;
    mu.generator = generator;
    mu.horizon_tau = tau;
    auto stream = run_generator(generator, tau + 1, cfg);
    if (!stream)
        throw GeneratorStalls("generator " + generator.hex() + " cannot produce " +
                              std::to_string(tau + 1) + " symbols");
    mu.stream = std::move(*stream);
    mu.id = task_digest(mu);
    return mu;
}

TaskSpec make_degenerate(TaskFamily kind, int tau) {
    TaskSpec mu;
    mu.family = kind;
    mu.horizon_tau = tau;
    mu.id = task_digest(mu);
    return mu;
}

std::uint64_t derive_seed(const Program& pi, const TaskSpec& mu, std::uint64_t salt) {
    std::string key = pi.hex();
    key += '|';
    key += mu.id;
    key += '|';
    key += std::to_string(salt);
    return fnv1a64(key);
}

EpisodeStats expected_episode(const Program& pi, const TaskSpec& mu,
                              const MachineConfig& cfg, const EvalOptions& opts) {
    EpisodeStats stats;
    Accum acc;
    if (StepDp(pi, mu, cfg, opts).run(acc)) {
        stats.response.mean = acc.response;
        stats.response.exact = true;
        stats.response.ci_low = acc.response;
        stats.response.ci_high = acc.response;
        stats.response.samples = 0;
        stats.mean_steps = acc.steps;
        stats.mean_final_hit = acc.final_hit;
        return stats;
    }
    // Monte Carlo fallback with a deterministic per-(pi, mu) seed.
    RngTape tape(derive_seed(pi, mu, opts.seed_salt), cfg);
    const long n = opts.mc_samples;
    double sum_r = 0.0, sum_s = 0.0, sum_f = 0.0;
    for (long i = 0; i < n; ++i) {
        const PathOutcome out = run_episode(pi, mu, cfg, tape);
        sum_r += out.response;
        sum_s += out.steps;
        sum_f += out.final_hit;
    }
    const double mean = sum_r / n;
    const double half = std::sqrt(std::log(2.0 / opts.ci_delta) / (2.0 * n));
    stats.response.mean = mean;
    stats.response.exact = false;
    stats.response.ci_low = std::max(0.0, mean - half);
    stats.response.ci_high = std::min(1.0, mean + half);
    stats.response.samples = n;
    stats.mean_steps = sum_s / n;
    stats.mean_final_hit = sum_f / n;
    return stats;
}

ResponseEstimate expected_response(const Program& pi, const TaskSpec& mu,
                                   const MachineConfig& cfg, const EvalOptions& opts) {
    return expected_episode(pi, mu, cfg, opts).response;
}

double max_achievable_response(const TaskSpec& mu, const MachineConfig&) {
    switch (mu.family) {
        case TaskFamily::Heaven: return 1.0;
        case TaskFamily::Hell: return 0.0;
        case TaskFamily::Track: return 1.0;  // the stream itself is an action sequence
    }
    return 0.0;
}

double max_achievable_response_enumerated(const TaskSpec& mu, const MachineConfig& cfg,
                                          std::uint64_t max_sequences) {
    const int tau = mu.horizon_tau;
    const std::uint64_t alph = static_cast<std::uint64_t>(cfg.alphabet_size());
    std::uint64_t total = 1;
    for (int t = 0; t < tau; ++t) {
        if (total > max_sequences / alph)
            throw SearchSpaceTooLarge("action-sequence space exceeds " +
                                      std::to_string(max_sequences));
        total *= alph;
    }
    double best = 0.0;
    for (std::uint64_t seq = 0; seq < total; ++seq) {
        double resp = 0.0;
        switch (mu.family) {
            case TaskFamily::Heaven:
                resp = 1.0;
                break;
            case TaskFamily::Hell:
                resp = 0.0;
                break;
            case TaskFamily::Track: {
                std::uint64_t s = seq;
                int hits = 0;
                for (int t = 1; t <= tau; ++t) {
                    const Word action = static_cast<Word>(s % alph);
                    s /= alph;
                    if (action == mu.stream[static_cast<std::size_t>(t)]) ++hits;
                }
                resp = static_cast<double>(hits) / tau;
                break;
            }
        }
        best = std::max(best, resp);
    }
    return best;
}

ComplexityEstimate estimate_task_complexity(const TaskSpec& mu, int l_max_bits,
                                            const MachineConfig& cfg) {
    ComplexityEstimate est;
    if (mu.family != TaskFamily::Track) {
        // Degenerate tasks are not generator-encoded; pinned canonical value.
        est.k_hat = 2 * cfg.word_size_c;
        return est;
    }
    const int c = cfg.word_size_c;
    const int want = mu.horizon_tau + 1;
    for (int h = c; h <= l_max_bits; h += c) {
        const std::uint64_t n = count_programs(h, cfg);
        for (std::uint64_t i = 0; i < n; ++i) {
            const Program g = program_at(i, h, cfg);
            auto stream = run_generator(g, want, cfg);
            if (stream && *stream == mu.stream) {
                est.k_hat = h;
                est.witness_generator = g;
                return est;
            }
        }
    }
    est.censored = true;
    return est;
}

}  // namespace taskdiff
