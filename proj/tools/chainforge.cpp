#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "chainforge/closed_form.hpp"
#include "chainforge/config.hpp"
#include "chainforge/engine.hpp"
#include "chainforge/experiments.hpp"
#include "chainforge/format.hpp"
#include "chainforge/optimize.hpp"
#include "chainforge/recourse.hpp"
#include "chainforge/rng.hpp"
#include "chainforge/uncertainty.hpp"

namespace {

namespace fs = std::filesystem;
using namespace chainforge;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "results";
    std::uint64_t seed = 0;  // 0 = use config
    int threads = -1;        // -1 = env/config
    bool dump_lp = false;
};

int effective_threads(const GlobalArgs& args, const config::ResolvedConfig& cfg) {
    if (args.threads >= 0) return args.threads;
    if (const char* env = std::getenv("CHAINFORGE_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    if (cfg.threads > 0) return cfg.threads;
    return static_cast<int>(std::thread::hardware_concurrency());
}

config::ResolvedConfig load_and_resolve(const GlobalArgs& args) {
    config::ResolvedConfig cfg = config::load_config(args.config_path);
    const int threads = effective_threads(args, cfg);
    for (auto& plan : cfg.plans) {
        plan.optimizer.threads = threads;
        if (args.seed != 0) plan.seed = args.seed;
    }
    cfg.optimizer.threads = threads;
    if (args.seed != 0) cfg.seed = args.seed;
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

int cmd_run(const GlobalArgs& args, const std::string& experiment, bool all) {
    const config::ResolvedConfig cfg = load_and_resolve(args);
    std::vector<const experiments::ExperimentPlan*> plans;
    if (all) {
        for (const auto& p : cfg.plans) plans.push_back(&p);
    } else {
        const auto* p = config::find_plan(cfg, experiment);
        if (!p) throw config::ConfigError("no experiment named '" + experiment + "' in config");
        plans.push_back(p);
    }
    if (plans.empty()) throw config::ConfigError("config defines no experiments");

    fs::create_directories(args.out_dir);
    write_file(fs::path(args.out_dir) / "resolved_config.json", config::resolved_config_json(cfg));

    for (const auto* plan : plans) {
        const experiments::SweepResult result = experiments::run(*plan);
        write_file(fs::path(args.out_dir) / (result.name + ".csv"), experiments::sweep_csv(result));
        write_file(fs::path(args.out_dir) / (result.name + ".json"),
                   experiments::sweep_json(result));
        write_file(fs::path(args.out_dir) / (result.name + "_shares.csv"),
                   experiments::policy_shares_csv(result));
        write_file(fs::path(args.out_dir) / (result.name + "_trace.csv"),
                   experiments::trace_csv(result));
        int failed = 0;
        for (const auto& p : result.points)
            if (p.failed) ++failed;
        std::cout << "experiment " << result.name << ": " << result.points.size() - failed << "/"
                  << result.points.size() << " points ok\n";
        for (const auto& p : result.points)
            if (p.failed)
                std::cerr << "  point " << fmt_double(p.value) << " failed: " << p.error << "\n";

        if (args.dump_lp && !result.points.empty()) {
            // Zero-uncertainty stage-3 LP of the first point, for external
            // solver cross-checks.
            const MarketSpec spec = experiments::build_point_spec(*plan, plan->values.front(), true);
            std::map<std::string, double> obtained, demanded;
            for (const auto& g : spec.produced) obtained[g.id] = g.yield_rate * 1e8;
            for (const auto& d : spec.demanded) demanded[d.id] = d.base_demand;
            write_file(fs::path(args.out_dir) / (result.name + ".lp"),
                       recourse::dump_stage3_lp(spec, obtained, demanded));
        }
        if (failed > 0) return kExitRuntime;
    }
    return kExitOk;
}

int cmd_validate_costs(const GlobalArgs& args) {
    const config::ResolvedConfig cfg = load_and_resolve(args);
    const auto& params = cfg.cost;
    std::cout << "cost model calibration (order " << fmt_double(params.order) << ")\n";
    std::cout << "cores  area_mm2  dies/wafer  yield   unit_cost  nre        unit_benefit\n";
    for (const int cores : {4, 8, 16, 32}) {
        const auto die = chipcost::die_for_cores(cores, params);
        const auto econ = chipcost::good_economics(cores, params);
        std::printf("%5d  %8.2f  %10ld  %.4f  %9.5f  %9.4g  %9.5f\n", cores, die.area_mm2,
                    chipcost::dies_per_wafer(params.wafer_radius_mm, die.area_mm2),
                    econ.yield, econ.unit_cost, econ.nre, econ.unit_benefit);
    }
    const double ratio = chipcost::composition_validation(params);
    bool ok = true;
    auto check = [&](const char* name, double value, double target, double tol) {
        const bool pass = std::fabs(value - target) <= tol;
        std::printf("%-34s %10.5f  target %.5g +/- %.3g  [%s]\n", name, value, target, tol,
                    pass ? "PASS" : "FAIL");
        ok = ok && pass;
    };
    check("monolithic/4x8c-chiplet ratio", ratio, 1.71, 0.05);
    check("16-core unit cost", chipcost::good_economics(16, params).unit_cost, 0.12, 0.12 * 0.15);
    check("8-core unit cost", chipcost::good_economics(8, params).unit_cost, 0.05, 0.05 * 0.15);
    check("4-core unit cost", chipcost::good_economics(4, params).unit_cost, 0.024, 0.024 * 0.15);
    return ok ? kExitOk : kExitRuntime;
}

int cmd_oracle_check(const GlobalArgs& args) {
    const config::ResolvedConfig cfg = load_and_resolve(args);
    bool ok = true;
    auto report = [&](const char* name, bool pass, const std::string& detail = "") {
        std::printf("%-44s [%s]%s%s\n", name, pass ? "PASS" : "FAIL", detail.empty() ? "" : "  ",
                    detail.c_str());
        ok = ok && pass;
    };

    // Break-even flip: engine vs (n1 - n2) / (c2 - c1) on a demand grid.
    {
        closed_form::SubstitutionScenario s;
        s.r = 8.0;
        s.t = 0.0;
        s.c1 = 1.0;
        s.c2 = 2.0;
        s.n1 = 100.0;
        s.n2 = 40.0;
        const double breakeven = closed_form::break_even_demand(s.n1, s.n2, s.c1, s.c2);
        double flip = -1.0;
        const double step = 3.0;
        bool agree = true;
        for (double zd = 30.0; zd <= 90.0; zd += step) {
            s.zd = zd;
            const MarketSpec spec = closed_form::substitution_market(s);
            const ScenarioSet scen =
                sample(spec.uncertainty, SampleStrategy::exhaustive(), cfg.seed);
            OptimizerConfig oc = cfg.optimizer;
            const OptimizationResult res = optimize(spec, scen, oc);
            const bool engine_substitute =
                res.policy.order_qty.at("g2") > res.policy.order_qty.at("g1");
            if (engine_substitute != closed_form::prefer_substitute(s) &&
                std::fabs(zd - breakeven) > step)
                agree = false;
            if (!engine_substitute && flip < 0.0) flip = zd;
        }
        report("substitution break-even grid", agree && std::fabs(flip - breakeven) <= step,
               "flip at " + fmt_double(flip) + ", analytic " + fmt_double(breakeven));
    }
    {
        bool skipped_ok = false;
        try {
            closed_form::break_even_demand(1.0, 2.0, 3.0, 3.0);
        } catch (const std::invalid_argument&) {
            skipped_ok = true;
        }
        report("break-even c1 == c2", skipped_ok, "skipped: no break-even when c1 == c2");
    }

    // Split-demand scenario: enumeration as ground truth, literal inequality
    // reported where it diverges.
    {
        const int k = 4;
        bool enum_ok = true;
        int divergences = 0;
        for (const double g : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
            for (const double t : {0.0, 0.25, 0.5, 1.0, 2.0}) {
                const auto costs = closed_form::goop_costs(k, g, t);
                const bool flexible = closed_form::goop_threshold(k, g, t);
                if (t == 0.0 && costs.flexible > costs.dedicated + 1e-9) enum_ok = false;
                if (g == 0.0 && flexible) enum_ok = false;
                if (flexible != closed_form::goop_paper_inequality(k, g, t)) ++divergences;
            }
        }
        report("split-demand enumeration (k=4)", enum_ok,
               "literal 'g*t <= k' diverges on " + std::to_string(divergences) + "/30 points");
    }

    // Programmability threshold by exhaustive Bernoulli enumeration.
    {
        closed_form::ProgrammabilityScenario s;
        s.m = 100.0;
        s.p = 0.5;
        s.margin = 1.0;
        s.salvage = 0.0;
        s.nre_asic = 60.0;  // slope m*(R*p) = 50 < 60 -> never build an ASIC
        s.nre_prog = 300.0;
        const double threshold = s.nre_prog / (s.p * s.m * s.margin);
        bool necessary = true, enum_matches = true, turns_positive = false;
        for (int k = 1; k <= 12; ++k) {
            s.k = k;
            if (closed_form::asic_expected_profit(s, s.m) != 0.0) necessary = false;
            const double best = closed_form::best_programmable_profit(s);
            if (best > 0.0 && static_cast<double>(k) <= threshold) necessary = false;
            if (best > 0.0) turns_positive = true;
            for (int units = 1; units <= k; ++units) {
                const double x = units * s.m;
                if (std::fabs(closed_form::programmable_expected_profit(s, x) -
                              closed_form::programmable_profit_enumerated(s, x)) > 1e-6)
                    enum_matches = false;
            }
        }
        report("programmability threshold k > n/(pmR)", necessary && turns_positive,
               "threshold " + fmt_double(threshold));
        report("programmable binomial == enumeration", enum_matches);
    }
    return ok ? kExitOk : kExitRuntime;
}

int cmd_export_scenarios(const GlobalArgs& args, const std::string& experiment,
                         std::size_t point_index) {
    const config::ResolvedConfig cfg = load_and_resolve(args);
    const auto* plan = config::find_plan(cfg, experiment);
    if (!plan) throw config::ConfigError("no experiment named '" + experiment + "' in config");
    if (point_index >= plan->values.size())
        throw config::ConfigError("point index out of range for '" + experiment + "'");
    const MarketSpec spec =
        experiments::build_point_spec(*plan, plan->values[point_index], true);
    const ScenarioSet set =
        sample(spec.uncertainty, experiments::resolve_strategy(*plan, spec.uncertainty),
               rng::derive_seed(plan->seed, "point", point_index));
    fs::create_directories(args.out_dir);
    const fs::path path = fs::path(args.out_dir) / (experiment + "_scenarios.csv");
    std::ofstream out(path, std::ios::binary);
    write_scenarios_csv(set, out);
    std::cout << "wrote " << path.string() << " (" << set.size() << " scenarios, rng "
              << set.rng_name << ")\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chainforge: stochastic chip supply-chain optimization"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    GlobalArgs args;
    app.add_option("--config", args.config_path, "config file (JSON with comments)");
    app.add_option("--seed", args.seed, "override the config seed");
    app.add_option("--threads", args.threads, "worker threads (default: CHAINFORGE_THREADS or cores)");
    app.add_option("--out", args.out_dir, "output directory")->capture_default_str();
    app.add_flag("--dump-lp", args.dump_lp, "dump a stage-3 recourse LP per experiment");

    std::string experiment;
    bool run_all = false;
    auto* run = app.add_subcommand("run", "run experiments and write CSV/JSON results");
    run->add_option("--experiment", experiment, "experiment name");
    run->add_flag("--all", run_all, "run all experiments in the config");

    app.add_subcommand("validate-costs", "print the cost-model calibration table");
    app.add_subcommand("oracle-check", "run engine-vs-analytic oracle grids");

    std::string export_experiment;
    std::size_t point_index = 0;
    auto* exp = app.add_subcommand("export-scenarios", "write a scenario audit CSV");
    exp->add_option("--experiment", export_experiment, "experiment name")->required();
    exp->add_option("--point-index", point_index, "sweep point index")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (args.config_path.empty())
            throw chainforge::config::ConfigError("--config is required");
        if (run->parsed()) {
            if (experiment.empty() && !run_all) run_all = true;
            return cmd_run(args, experiment, run_all);
        }
        if (app.get_subcommand("validate-costs")->parsed()) return cmd_validate_costs(args);
        if (app.get_subcommand("oracle-check")->parsed()) return cmd_oracle_check(args);
        if (exp->parsed()) return cmd_export_scenarios(args, export_experiment, point_index);
    } catch (const chainforge::config::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
