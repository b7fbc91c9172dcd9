#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "taskdiff/report.hpp"

using namespace taskdiff;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitVerify = 3;
constexpr int kExitBudget = 4;

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void emit(const std::string& out, const std::string& content) {
    if (out.empty() || out == "-")
        std::cout << content;
    else
        atomic_write(out, content);
}

Program parse_agent(const std::string& hex, const MachineConfig& mc) {
    try {
        return parse_hex(hex, mc);
    } catch (const ProgramError& e) {
        throw ConfigError(std::string("bad --agent: ") + e.what());
    }
}

std::string difficulty_csv(const TaskBank& bank) {
    std::ostringstream os;
    os << "task_id,family,k_hat,kind,value,value_lo,value_hi,status,witness\n";
    for (const BankedTask& bt : bank.tasks)
        for (const auto& [kind, rec] : bt.records)
            os << bt.task.id << ',' << family_name(bt.task.family) << ','
               << bt.complexity.k_hat << ',' << diff_kind_name(kind) << ','
               << format_double(rec.value) << ',' << format_double(rec.value_lo) << ','
               << format_double(rec.value_hi) << ',' << diff_status_name(rec.status) << ','
               << (rec.witness ? rec.witness->hex() : "") << '\n';
    return os.str();
}

std::string difficulty_json(const TaskBank& bank) {
    json arr = json::array();
    for (const BankedTask& bt : bank.tasks) {
        json recs = json::object();
        for (const auto& [kind, rec] : bt.records)
            recs[diff_kind_name(kind)] = {
                {"value", std::isinf(rec.value) ? json("inf") : json(rec.value)},
                {"value_lo", std::isinf(rec.value_lo) ? json("inf") : json(rec.value_lo)},
                {"value_hi", std::isinf(rec.value_hi) ? json("inf") : json(rec.value_hi)},
                {"status", diff_status_name(rec.status)},
                {"witness", rec.witness ? json(rec.witness->hex()) : json(nullptr)}};
        arr.push_back({{"task_id", bt.task.id},
                       {"family", family_name(bt.task.family)},
                       {"k_hat", bt.complexity.k_hat},
                       {"records", recs}});
    }
    return arr.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"task-difficulty toolkit: banks, difficulty records, and aggregations "
                 "over a tiny prefix-coded reference machine"};
    app.require_subcommand(1);

    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--threads", threads, "worker threads (output is identical for any count)");
    app.add_option("--seed", seed, "RNG seed: the bank seed for `build`, the Monte Carlo "
                                   "sampler salt elsewhere")
        ->each([&](const std::string&) { seed_set = true; });

    std::string config_path, bank_path, out_path, format = "csv", agent_hex,
                weights_spec = "one", task_prob_spec = "uniform", diff_spec = "min_length";
    bool print_config = false;
    double cutoff = -1.0, exponent = 2.0;
    int coding_c = 4, coding_hmax = 64;

    auto* build = app.add_subcommand("build", "build a task bank from a config file");
    build->add_option("--config", config_path, "key=value bank config");
    build->add_option("--out", out_path, "bank output path (JSONL)")->required();
    build->add_flag("--print-config", print_config, "print the effective config and exit");

    auto* verify = app.add_subcommand("verify", "re-check a bank's stored properties");
    verify->add_option("--bank", bank_path)->required();
    verify->add_option("--out", out_path, "report path (default: stdout)");

    auto* difficulty = app.add_subcommand("difficulty", "dump per-task difficulty records");
    difficulty->add_option("--bank", bank_path)->required();
    difficulty->add_option("--out", out_path);
    difficulty->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));

    auto* curve = app.add_subcommand("curve", "response curve for one agent");
    curve->add_option("--bank", bank_path)->required();
    curve->add_option("--agent", agent_hex, "agent program, lowercase hex")->required();
    curve->add_option("--out", out_path);
    curve->add_option("--format", format)->check(CLI::IsMember({"csv", "svg"}));

    auto* aggregate = app.add_subcommand("aggregate", "weighted tolerance aggregation");
    aggregate->add_option("--bank", bank_path)->required();
    aggregate->add_option("--agent", agent_hex)->required();
    aggregate->add_option("--weights", weights_spec, "one | uniform:a:b | geometric:base");
    aggregate->add_option("--task-prob", task_prob_spec)
        ->check(CLI::IsMember({"uniform", "universal"}));
    aggregate->add_option("--difficulty", diff_spec, "stratifying difficulty kind");
    aggregate->add_option("--cutoff", cutoff, "max difficulty included (bits)");
    aggregate->add_option("--out", out_path);

    auto* ctest = app.add_subcommand("ctest", "sequence-test score over bank strata");
    ctest->add_option("--bank", bank_path)->required();
    ctest->add_option("--agent", agent_hex)->required();
    ctest->add_option("--exponent", exponent, "difficulty exponent e");
    ctest->add_option("--out", out_path);

    auto* coding = app.add_subcommand("coding", "exact vs approximate program-length pmf");
    coding->add_option("--c", coding_c, "word size in bits");
    coding->add_option("--hmax", coding_hmax, "largest length tabulated");
    coding->add_option("--out", out_path);
    coding->add_option("--format", format)->check(CLI::IsMember({"csv", "svg"}));

    auto* pairs = app.add_subcommand("pairs", "policy-task pairs aggregation");
    pairs->add_option("--bank", bank_path)->required();
    pairs->add_option("--agent", agent_hex)->required();
    pairs->add_option("--weights", weights_spec);
    pairs->add_option("--out", out_path);

    // let --threads/--seed appear before or after the subcommand name
    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    try {
        if (build->parsed()) {
            BankConfig cfg =
                config_path.empty() ? BankConfig{} : parse_bank_config(slurp(config_path));
            if (seed_set) cfg.seed = seed;
            if (print_config) {
                std::cout << serialize_bank_config(cfg);
                return kExitOk;
            }
            TaskBank bank = build_bank(cfg);
            save_bank(bank, out_path);
            std::cout << "bank " << bank.digest << " with " << bank.tasks.size()
                      << " tasks -> " << out_path << "\n";
            return kExitOk;
        }
        if (verify->parsed()) {
            const TaskBank bank = load_bank(bank_path);
            const VerifyReport report = verify_bank(bank);
            emit(out_path, verify_report_text(report));
            return report.all_passed ? kExitOk : kExitVerify;
        }
        if (coding->parsed()) {
            if (coding_c < 1 || coding_c > 12 || coding_hmax < coding_c)
                throw ConfigError("coding: need 1 <= c <= 12 and hmax >= c");
            MachineConfig cc;
            cc.word_size_c = coding_c;
            const CodingTable table = coding_table(cc, coding_hmax);
            emit(out_path, format == "svg" ? coding_svg(table) : coding_csv(table));
            return kExitOk;
        }

        const TaskBank bank = load_bank(bank_path);
        const MachineConfig& mc = bank.config.machine;
        const ToleranceConfig tol{bank.config.epsilon};
        SearchOptions search = bank.config.search_options(true);
        if (seed_set) search.eval.seed_salt = seed;

        if (difficulty->parsed()) {
            emit(out_path, format == "json" ? difficulty_json(bank) : difficulty_csv(bank));
            return kExitOk;
        }
        if (curve->parsed()) {
            const Program pi = parse_agent(agent_hex, mc);
            ResponseCurve rc = response_curve(pi, bank, tol);
            rc.agent_id = agent_hex;
            emit(out_path, format == "svg" ? curve_svg(rc) : curve_csv(rc));
            return kExitOk;
        }
        if (aggregate->parsed()) {
            const Program pi = parse_agent(agent_hex, mc);
            const WeightScheme w = WeightScheme::parse(weights_spec);
            const TaskProb prob = task_prob_spec == "universal" ? TaskProb::TwoPowMinusKhat
                                                                : TaskProb::Uniform;
            const DiffKind kind = diff_kind_from_name(diff_spec);
            const std::optional<double> max_h =
                cutoff >= 0 ? std::optional<double>(cutoff) : std::nullopt;
            const double value = psi_weighted(pi, bank, tol, w, prob, kind, max_h);
            ResponseCurve rc = response_curve(pi, bank, tol);
            rc.agent_id = agent_hex;
            emit(out_path, aggregate_report_json(agent_hex, tol.epsilon, w, value, rc));
            return kExitOk;
        }
        if (ctest->parsed()) {
            const Program pi = parse_agent(agent_hex, mc);
            std::map<int, std::vector<TaskSpec>> items;
            for (const BankedTask& bt : bank.tasks) {
                const DifficultyRecord* rec = bt.record(DiffKind::MinLength);
                if (!rec || rec->status != DiffStatus::Exact) continue;
                items[static_cast<int>(rec->value)].push_back(bt.task);
            }
            std::size_t n = std::string::npos;
            for (const auto& [h, v] : items) n = std::min(n, v.size());
            for (auto& [h, v] : items) v.resize(n);  // equal item counts per difficulty
            const CtestResult res = ctest_score(pi, items, exponent, mc, search.eval);
            json j{{"agent_id", agent_hex}, {"exponent", exponent}, {"score", res.score}};
            json hr = json::object();
            for (const auto& [h, r] : res.hit_ratio) hr[std::to_string(h)] = r;
            j["hit_ratio"] = hr;
            emit(out_path, j.dump(2) + "\n");
            return kExitOk;
        }
        if (pairs->parsed()) {
            const Program pi = parse_agent(agent_hex, mc);
            const WeightScheme w = WeightScheme::parse(weights_spec);
            const PairsTable table = materialize_pairs(bank);
            const double value = psi_pairs(pi, bank, table, tol, w);
            json j{{"agent_id", agent_hex},
                   {"weight_scheme", w.name()},
                   {"n_pairs", table.pairs.size()},
                   {"value", value}};
            emit(out_path, j.dump(2) + "\n");
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ProgramError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerify;
    }
    return kExitOk;
}
