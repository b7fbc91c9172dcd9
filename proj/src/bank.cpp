#include "taskdiff/bank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "taskdiff/aggregate.hpp"

namespace taskdiff {

using nlohmann::json;

namespace {

json num_or_inf(double v) {
    if (std::isinf(v)) return json("inf");
    return json(v);
}

double parse_num_or_inf(const json& j) {
    if (j.is_string()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

json config_json(const BankConfig& cfg) {
    return json{{"word_size_c", cfg.machine.word_size_c},
                {"s_max", cfg.machine.per_step_budget},
                {"tau", cfg.tau},
                {"epsilon", cfg.epsilon},
                {"l_max_policy", cfg.l_max_policy},
                {"l_max_generator", cfg.l_max_generator},
                {"family_track", cfg.family_track},
                {"family_degenerate", cfg.family_degenerate},
                {"h_min", cfg.h_min},
                {"h_max", cfg.h_max},
                {"stratum_cap", cfg.stratum_cap},
                {"seed", cfg.seed},
                {"mc_samples", cfg.mc_samples},
                {"enumeration_budget", cfg.enumeration_budget}};
}

BankConfig config_from_json(const json& j) {
    BankConfig cfg;
    cfg.machine.word_size_c = j.at("word_size_c").get<int>();
    cfg.machine.per_step_budget = j.at("s_max").get<int>();
    cfg.tau = j.at("tau").get<int>();
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.l_max_policy = j.at("l_max_policy").get<int>();
    cfg.l_max_generator = j.at("l_max_generator").get<int>();
    cfg.family_track = j.at("family_track").get<bool>();
    cfg.family_degenerate = j.at("family_degenerate").get<bool>();
    cfg.h_min = j.at("h_min").get<int>();
    cfg.h_max = j.at("h_max").get<int>();
    cfg.stratum_cap = j.at("stratum_cap").get<long>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.mc_samples = j.at("mc_samples").get<long>();
    cfg.enumeration_budget = j.at("enumeration_budget").get<std::uint64_t>();
    return cfg;
}

json record_json(const DifficultyRecord& r) {
    json j{{"kind", diff_kind_name(r.kind)},
           {"value", num_or_inf(r.value)},
           {"value_lo", num_or_inf(r.value_lo)},
           {"value_hi", num_or_inf(r.value_hi)},
           {"status", diff_status_name(r.status)},
           {"l_max", r.l_max},
           {"epsilon", r.epsilon},
           {"tau", r.tau}};
    if (r.witness) j["witness_hex"] = r.witness->hex();
    return j;
}

DifficultyRecord record_from_json(const json& j, const MachineConfig& mc) {
    DifficultyRecord r;
    r.kind = diff_kind_from_name(j.at("kind").get<std::string>());
    r.value = parse_num_or_inf(j.at("value"));
    r.value_lo = parse_num_or_inf(j.at("value_lo"));
    r.value_hi = parse_num_or_inf(j.at("value_hi"));
    r.status = diff_status_from_name(j.at("status").get<std::string>());
    r.l_max = j.at("l_max").get<int>();
    r.epsilon = j.at("epsilon").get<double>();
    r.tau = j.at("tau").get<int>();
    if (j.contains("witness_hex")) r.witness = parse_hex(j.at("witness_hex").get<std::string>(), mc);
    return r;
}

json task_json(const BankedTask& bt) {
    json j{{"family", family_name(bt.task.family)},
           {"tau", bt.task.horizon_tau},
           {"seed", bt.task.env_seed},
           {"id", bt.task.id},
           {"k_hat", bt.complexity.k_hat},
           {"censored", bt.complexity.censored}};
    if (bt.task.generator) j["generator_hex"] = bt.task.generator->hex();
    if (!bt.task.stream.empty()) j["stream"] = letters(bt.task.stream);
    if (bt.complexity.witness_generator)
        j["k_witness_hex"] = bt.complexity.witness_generator->hex();
    json recs = json::object();
    for (const auto& [kind, rec] : bt.records) recs[diff_kind_name(kind)] = record_json(rec);
    j["records"] = recs;
    return j;
}

BankedTask task_from_json(const json& j, const MachineConfig& mc) {
    BankedTask bt;
    bt.task.family = family_from_name(j.at("family").get<std::string>());
    bt.task.horizon_tau = j.at("tau").get<int>();
    bt.task.env_seed = j.at("seed").get<std::uint64_t>();
    bt.task.id = j.at("id").get<std::string>();
    if (j.contains("generator_hex"))
        bt.task.generator = parse_hex(j.at("generator_hex").get<std::string>(), mc);
    if (j.contains("stream")) {
        const std::string s = j.at("stream").get<std::string>();
        for (char ch : s) bt.task.stream.push_back(static_cast<Word>(ch - 'a'));
    }
    bt.complexity.k_hat = j.at("k_hat").get<int>();
    bt.complexity.censored = j.at("censored").get<bool>();
    if (j.contains("k_witness_hex"))
        bt.complexity.witness_generator = parse_hex(j.at("k_witness_hex").get<std::string>(), mc);
    for (const auto& [name, rec] : j.at("records").items())
        bt.records[diff_kind_from_name(name)] = record_from_json(rec, mc);
    return bt;
}

json bank_body_json(const TaskBank& bank) {
    json tasks = json::array();
    for (const BankedTask& bt : bank.tasks) tasks.push_back(task_json(bt));
    return json{{"version", bank.version}, {"config", config_json(bank.config)},
                {"tasks", tasks}};
}

}  // namespace

std::string bank_digest(const TaskBank& bank) {
    return hex64(fnv1a64(bank_body_json(bank).dump()));
}

BankConfig parse_bank_config(const std::string& text) {
    BankConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto b2 = s.find_first_not_of(" \t");
            const auto e2 = s.find_last_not_of(" \t");
            s = b2 == std::string::npos ? "" : s.substr(b2, e2 - b2 + 1);
        };
        trim(key);
        trim(val);
        try {
            if (key == "word_size_c") cfg.machine.word_size_c = std::stoi(val);
            else if (key == "s_max") cfg.machine.per_step_budget = std::stoi(val);
            else if (key == "tau") cfg.tau = std::stoi(val);
            else if (key == "epsilon") cfg.epsilon = std::stod(val);
            else if (key == "l_max_policy") cfg.l_max_policy = std::stoi(val);
            else if (key == "l_max_generator") cfg.l_max_generator = std::stoi(val);
            else if (key == "family_track") cfg.family_track = val == "true" || val == "1";
            else if (key == "family_degenerate") cfg.family_degenerate = val == "true" || val == "1";
            else if (key == "h_min") cfg.h_min = std::stoi(val);
            else if (key == "h_max") cfg.h_max = std::stoi(val);
            else if (key == "stratum_cap") cfg.stratum_cap = std::stol(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "mc_samples") cfg.mc_samples = std::stol(val);
            else if (key == "enumeration_budget") cfg.enumeration_budget = std::stoull(val);
            else throw ConfigError("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw ConfigError("config line " + std::to_string(lineno) + ": bad value for " + key);
        }
    }
    if (cfg.epsilon <= 0.0 || cfg.epsilon >= 1.0) throw ConfigError("epsilon must be in (0,1)");
    if (cfg.tau < 1) throw ConfigError("tau must be >= 1");
    const int c = cfg.machine.word_size_c;
    if (cfg.l_max_policy < c || cfg.l_max_generator < c)
        throw ConfigError("search bounds must be at least one word");
    if (cfg.h_min < c || cfg.h_max < cfg.h_min || cfg.h_max > cfg.l_max_policy)
        throw ConfigError("target strata must lie within [c, l_max_policy]");
    return cfg;
}

std::string serialize_bank_config(const BankConfig& cfg) {
    std::ostringstream os;
    os << "word_size_c = " << cfg.machine.word_size_c << "\n"
       << "s_max = " << cfg.machine.per_step_budget << "\n"
       << "tau = " << cfg.tau << "\n"
       << "epsilon = " << cfg.epsilon << "\n"
       << "l_max_policy = " << cfg.l_max_policy << "\n"
       << "l_max_generator = " << cfg.l_max_generator << "\n"
       << "family_track = " << (cfg.family_track ? "true" : "false") << "\n"
       << "family_degenerate = " << (cfg.family_degenerate ? "true" : "false") << "\n"
       << "h_min = " << cfg.h_min << "\n"
       << "h_max = " << cfg.h_max << "\n"
       << "stratum_cap = " << cfg.stratum_cap << "\n"
       << "seed = " << cfg.seed << "\n"
       << "mc_samples = " << cfg.mc_samples << "\n"
       << "enumeration_budget = " << cfg.enumeration_budget << "\n";
    return os.str();
}

TaskBank build_bank(const BankConfig& cfg, bool parallel) {
    const MachineConfig& mc = cfg.machine;
    const int c = mc.word_size_c;
    TaskBank bank;
    bank.config = cfg;

    std::vector<BankedTask> candidates;
    if (cfg.family_track) {
        std::uint64_t total = 0;
        for (int h = c; h <= cfg.l_max_generator; h += c) total += count_programs(h, mc);
        if (total > cfg.enumeration_budget)
            throw BudgetExceeded("generator enumeration needs " + std::to_string(total) +
                                 " programs, budget is " + std::to_string(cfg.enumeration_budget) +
                                 "; no tasks were built");
        std::map<std::vector<Word>, int> seen;  // stream -> candidate index
        for (int h = c; h <= cfg.l_max_generator; h += c) {
            const std::uint64_t n = count_programs(h, mc);
            for (std::uint64_t i = 0; i < n; ++i) {
                const Program g = program_at(i, h, mc);
                auto stream = run_generator(g, cfg.tau + 1, mc);
                if (!stream) continue;
                if (seen.contains(*stream)) continue;  // keep the lowest-K-hat witness
                BankedTask bt;
                bt.task = make_track_task(g, cfg.tau, mc);
                bt.complexity.k_hat = h;
                bt.complexity.witness_generator = g;
                seen.emplace(*stream, static_cast<int>(candidates.size()));
                candidates.push_back(std::move(bt));
            }
        }
    }
    if (cfg.family_degenerate) {
        for (TaskFamily f : {TaskFamily::Heaven, TaskFamily::Hell}) {
            BankedTask bt;
            bt.task = make_degenerate(f, cfg.tau);
            bt.complexity = estimate_task_complexity(bt.task, cfg.l_max_generator, mc);
            candidates.push_back(std::move(bt));
        }
    }

    const SearchOptions search = cfg.search_options(parallel);
    const ToleranceConfig tol{cfg.epsilon};
    for (BankedTask& bt : candidates) {
        ScanCache scans(bt.task, tol, mc, search);
        bt.records[DiffKind::MinLength] = difficulty_min_length(bt.task, tol, mc, scans);
        bt.records[DiffKind::Multi] = difficulty_multi(bt.task, tol, mc, scans);
        bt.records[DiffKind::Ls] = difficulty_ls(bt.task, tol, mc, scans);
        const auto base = difficulty_baselines(bt.task, mc, scans);
        for (const DifficultyRecord& r : base) bt.records[r.kind] = r;
    }

    // Stratify by min-length difficulty; keep degenerates (the endpoints)
    // unconditionally, drop tracks outside the target range or without an
    // exact record, and sample over-full strata with the bank seed.
    std::map<double, std::vector<int>> strata;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const BankedTask& bt = candidates[i];
        const DifficultyRecord& rec = bt.records.at(DiffKind::MinLength);
        if (bt.task.family == TaskFamily::Track) {
            if (rec.status != DiffStatus::Exact) continue;
            if (rec.value < cfg.h_min || rec.value > cfg.h_max) continue;
        }
        strata[rec.key()].push_back(static_cast<int>(i));
    }
    for (auto& [h, idx] : strata) {
        if (static_cast<long>(idx.size()) <= cfg.stratum_cap) continue;
        std::vector<int> degen, track;
        for (int i : idx)
            (candidates[static_cast<std::size_t>(i)].task.family == TaskFamily::Track ? track
                                                                                      : degen)
                .push_back(i);
        std::stable_sort(track.begin(), track.end(), [&](int a, int b) {
            const auto ha = fnv1a64(candidates[static_cast<std::size_t>(a)].task.id,
                                    cfg.seed ^ 0x9e3779b97f4a7c15ull);
            const auto hb = fnv1a64(candidates[static_cast<std::size_t>(b)].task.id,
                                    cfg.seed ^ 0x9e3779b97f4a7c15ull);
            return ha < hb;
        });
        idx = degen;
        for (int i : track) {
            if (static_cast<long>(idx.size()) >= cfg.stratum_cap) break;
            idx.push_back(i);
        }
    }
    for (auto& [h, idx] : strata) {
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            return candidates[static_cast<std::size_t>(a)].task.id <
                   candidates[static_cast<std::size_t>(b)].task.id;
        });
        for (int i : idx) bank.tasks.push_back(candidates[static_cast<std::size_t>(i)]);
    }
    bank.digest = bank_digest(bank);
    return bank;
}

void save_bank(const TaskBank& bank, const std::string& path) {
    std::ostringstream os;
    os << json{{"version", bank.version},
               {"config", config_json(bank.config)},
               {"digest", bank.digest}}
              .dump()
       << "\n";
    for (const BankedTask& bt : bank.tasks) os << task_json(bt).dump() << "\n";
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + tmp);
        f << os.str();
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ConfigError("cannot rename " + tmp + " to " + path);
}

TaskBank load_bank(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CorruptBank("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw CorruptBank("empty bank file");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw CorruptBank(std::string("bad header: ") + e.what());
    }
    TaskBank bank;
    bank.version = header.at("version").get<int>();
    if (bank.version != kBankSchemaVersion)
        throw VersionMismatch("bank schema version " + std::to_string(bank.version) +
                              ", expected " + std::to_string(kBankSchemaVersion));
    bank.config = config_from_json(header.at("config"));
    const std::string stored_digest = header.at("digest").get<std::string>();
    try {
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            bank.tasks.push_back(task_from_json(json::parse(line), bank.config.machine));
        }
    } catch (const json::exception& e) {
        throw CorruptBank(std::string("bad task record: ") + e.what());
    }
    bank.digest = bank_digest(bank);
    if (bank.digest != stored_digest)
        throw CorruptBank("digest mismatch: stored " + stored_digest + ", recomputed " +
                          bank.digest);
    return bank;
}

PairsTable materialize_pairs(const TaskBank& bank, bool parallel) {
    PairsTable table;
    table.l_max = bank.config.l_max_policy;
    const MachineConfig& mc = bank.config.machine;
    const ToleranceConfig tol{bank.config.epsilon};
    const EvalOptions eval = bank.config.search_options(parallel).eval;
    const int c = mc.word_size_c;
    for (std::size_t ti = 0; ti < bank.tasks.size(); ++ti) {
        const TaskSpec& mu = bank.tasks[ti].task;
        for (int h = c; h <= table.l_max; h += c) {
            const std::int64_t n = static_cast<std::int64_t>(count_programs(h, mc));
            std::vector<char> hit(static_cast<std::size_t>(n), 0);
#ifdef _OPENMP
            #pragma omp parallel for schedule(dynamic, 64) if (parallel)
#endif
            for (std::int64_t i = 0; i < n; ++i) {
                const Program pi = program_at(static_cast<std::uint64_t>(i), h, mc);
                hit[static_cast<std::size_t>(i)] =
                    acceptable(pi, mu, tol, mc, eval) == Accept::Yes ? 1 : 0;
            }
            for (std::int64_t i = 0; i < n; ++i)
                if (hit[static_cast<std::size_t>(i)])
                    table.pairs.push_back(
                        {static_cast<int>(ti), h, static_cast<std::uint64_t>(i)});
        }
    }
    return table;
}

VerifyReport verify_bank(const TaskBank& bank, bool parallel) {
    VerifyReport report;
    auto add = [&](const std::string& name, bool ok, const std::string& detail) {
        report.checks.push_back({name, ok, detail});
        if (!ok) report.all_passed = false;
    };
    if (bank.tasks.empty()) {
        report.warning = "empty bank: all checks pass vacuously";
        add("witness_replay", true, "no tasks");
        add("witness_minimality", true, "no tasks");
        add("strong_boundedness", true, "no tasks");
        add("multi_bounds", true, "no tasks");
        add("normalization", true, "no tasks");
        return report;
    }
    const MachineConfig& mc = bank.config.machine;
    const ToleranceConfig tol{bank.config.epsilon};
    const SearchOptions search = bank.config.search_options(parallel);

    int replay_bad = 0;
    for (const BankedTask& bt : bank.tasks) {
        if (bt.complexity.censored || !bt.complexity.witness_generator) continue;
        auto stream = run_generator(*bt.complexity.witness_generator,
                                    bt.task.horizon_tau + 1, mc);
        if (!stream || *stream != bt.task.stream) ++replay_bad;
    }
    add("witness_replay", replay_bad == 0, std::to_string(replay_bad) + " bad witnesses");

    int minimality_bad = 0;
    for (const BankedTask& bt : bank.tasks) {
        const DifficultyRecord* rec = bt.record(DiffKind::MinLength);
        if (!rec || rec->status != DiffStatus::Exact) continue;
        if (!rec->witness ||
            acceptable(*rec->witness, bt.task, tol, mc, search.eval) != Accept::Yes) {
            ++minimality_bad;
            continue;
        }
        for (int h = mc.word_size_c; h < static_cast<int>(rec->value); h += mc.word_size_c) {
            const StratumScan s = scan_stratum(bt.task, h, tol, mc, search);
            if (s.first_acceptable >= 0) {
                ++minimality_bad;
                break;
            }
        }
    }
    add("witness_minimality", minimality_bad == 0,
        std::to_string(minimality_bad) + " non-minimal records");

    // Exhaustive boundedness probe over a small policy prefix of the space.
    const int probe_l = std::min(bank.config.l_max_policy, 12);
    std::vector<Program> policies;
    for (int h = mc.word_size_c; h <= probe_l; h += mc.word_size_c)
        enumerate_programs(h, mc, [&](const Program& p) { policies.push_back(p); });
    std::vector<TaskWithDifficulty> view;
    for (const BankedTask& bt : bank.tasks)
        view.push_back({&bt.task, bt.record(DiffKind::MinLength)});
    const auto violations = check_strong_boundedness(policies, view, tol, mc, search);
    add("strong_boundedness", violations.empty(),
        std::to_string(violations.size()) + " violations among " +
            std::to_string(policies.size()) + " policies");

    int bounds_bad = 0;
    for (const BankedTask& bt : bank.tasks) {
        const DifficultyRecord* ml = bt.record(DiffKind::MinLength);
        const DifficultyRecord* multi = bt.record(DiffKind::Multi);
        if (!ml || !multi || ml->status != DiffStatus::Exact ||
            multi->status != DiffStatus::Exact)
            continue;
        const double k = ml->value;
        // The record interval must intersect the theoretical [ (k-1)/2, k ]
        // band; value_lo may sit below it when the series was truncated.
        if (multi->value_hi < 0.5 * (k - 1) - 1e-9 || multi->value_lo > k + 1e-9 ||
            multi->value > k + 1e-9)
            ++bounds_bad;
    }
    add("multi_bounds", bounds_bad == 0, std::to_string(bounds_bad) + " out-of-bound records");

    bool norm_ok = true;
    std::string norm_detail = "ok";
    for (TaskProb prob : {TaskProb::Uniform, TaskProb::TwoPowMinusKhat}) {
        const BankDistribution dist = make_distribution(bank, prob);
        double total = 0.0;
        for (double v : dist.p) total += v;
        if (std::abs(total - 1.0) > 1e-12) {
            norm_ok = false;
            norm_detail = "task mass " + std::to_string(total);
        }
        for (const auto& [h, idx] : dist.strata) {
            double cond = 0.0;
            for (int i : idx) cond += dist.conditional(i, h);
            if (std::abs(cond - 1.0) > 1e-12) {
                norm_ok = false;
                norm_detail = "stratum mass " + std::to_string(cond);
            }
        }
    }
    add("normalization", norm_ok, norm_detail);
    return report;
}

}  // namespace taskdiff
