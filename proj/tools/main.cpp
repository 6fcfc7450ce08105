#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ttscale/config.hpp"
#include "ttscale/harness.hpp"

using namespace ttscale;

namespace {

ExperimentConfig load_config(const std::string& path) {
    ExperimentConfig cfg = ExperimentConfig::from_string(detail::read_file(path));
    if (cfg.metric_weights_off_unity())
        std::cerr << "note: metric weights do not sum to 1 and will be normalized\n";
    return cfg;
}

// Precedence: --out flag, then config output.dir, then TTSCALE_OUT_DIR, then "out".
std::filesystem::path resolve_out(const std::string& flag_out, const ExperimentConfig& cfg) {
    if (!flag_out.empty()) return flag_out;
    if (!cfg.output.dir.empty()) return cfg.output.dir;
    if (const char* env = std::getenv("TTSCALE_OUT_DIR"); env != nullptr && *env != '\0') return env;
    return "out";
}

void print_grid_summary(const nlohmann::json& summary) {
    for (const nlohmann::json& g : summary.at("grid")) {
        std::string line;
        char buf[256];
        if (g.at("aggregate").is_null()) {
            std::snprintf(buf, sizeof(buf), "  %-10s %-8s n=%-3d  (no completed seeds)",
                          g.at("algorithm").get<std::string>().c_str(),
                          g.at("model").get<std::string>().c_str(), g.at("n").get<int>());
        } else {
            std::snprintf(buf, sizeof(buf), "  %-10s %-8s n=%-3d  aggregate %.4f +/- %.4f  cost %.1f",
                          g.at("algorithm").get<std::string>().c_str(),
                          g.at("model").get<std::string>().c_str(), g.at("n").get<int>(),
                          g.at("aggregate").at("mean").get<double>(),
                          g.at("aggregate").at("std").get<double>(),
                          g.at("cost_total").at("mean").get<double>());
        }
        line = buf;
        int exhausted = g.at("budget_exhausted").get<int>();
        if (exhausted > 0) line += "  [" + std::to_string(exhausted) + " budget-exhausted]";
        std::cout << line << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Test-time scaling experiments on a toy autoregressive world model"};
    app.require_subcommand(0, 1);

    bool print_defaults = false;
    app.add_flag("--print-defaults", print_defaults,
                 "Print the default configuration as JSON and exit");

    std::string cfg_path, out_flag;
    int workers = 1;
    uint64_t seed_override = 0;
    bool seed_given = false;

    CLI::App* run = app.add_subcommand("run", "Execute the experiment grid from a config file");
    run->add_option("--config", cfg_path, "Path to the experiment config (JSON)")->required();
    run->add_option("--out", out_flag, "Output directory");
    run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed_override, "Override the base seed")
        ->each([&](const std::string&) { seed_given = true; });

    CLI::App* compare =
        app.add_subcommand("compare", "Compute-matched small-vs-large model comparison");
    compare->add_option("--config", cfg_path, "Path to the experiment config (JSON)")->required();
    compare->add_option("--out", out_flag, "Output directory");
    compare->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    compare->add_option("--seed", seed_override, "Override the base seed")
        ->each([&](const std::string&) { seed_given = true; });

    CLI::App* fixtures = app.add_subcommand("fixtures", "Write the bundled reference tables");
    fixtures->add_option("--out", out_flag, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (print_defaults) {
            std::cout << ExperimentConfig::defaults().to_json().dump(2) << "\n";
            return 0;
        }
        if (*run) {
            ExperimentConfig cfg = load_config(cfg_path);
            RunOptions opt;
            opt.out_dir = resolve_out(out_flag, cfg);
            opt.workers = workers;
            if (seed_given) opt.seed_override = seed_override;
            RunArtifacts art = run_experiment(cfg, opt);
            std::cout << "grid results (" << cfg.seeds.count << " seeds each):\n";
            print_grid_summary(art.summary);
            std::cout << "wrote " << art.results_path.string() << "\n"
                      << "wrote " << art.summary_path.string() << "\n"
                      << "wrote " << art.curve_path.string() << "\n";
            return 0;
        }
        if (*compare) {
            ExperimentConfig cfg = load_config(cfg_path);
            RunOptions opt;
            opt.out_dir = resolve_out(out_flag, cfg);
            opt.workers = workers;
            if (seed_given) opt.seed_override = seed_override;
            CompareReport rep = run_compare(cfg, opt);
            char buf[256];
            std::printf("compute-matched comparison over %d seeds (matched n = %d)\n", rep.seeds,
                        rep.n_star);
            std::snprintf(buf, sizeof(buf), "  small: %-8s best-of-%d  mean %.4f  [%.4f, %.4f]",
                          rep.small.model.c_str(), rep.small.n, rep.small.aggregate.mean,
                          rep.small.aggregate.ci95_lo, rep.small.aggregate.ci95_hi);
            std::cout << buf << "\n";
            std::snprintf(buf, sizeof(buf), "  large: %-8s n=1        mean %.4f  [%.4f, %.4f]",
                          rep.large.model.c_str(), rep.large.aggregate.mean,
                          rep.large.aggregate.ci95_lo, rep.large.aggregate.ci95_hi);
            std::cout << buf << "\n";
            std::snprintf(buf, sizeof(buf),
                          "  paired difference %.4f  (95%% one-sided lower bound %.4f, p %.3g)",
                          rep.difference.mean, rep.lower_bound_95, rep.p_one_sided);
            std::cout << buf << "\n";
            std::cout << "  verdict: "
                      << (rep.win_95 ? "small model wins at 95% confidence"
                                     : (rep.win ? "small model ahead, not significant at 95%"
                                                : "large model ahead"))
                      << "\n";
            return 0;
        }
        if (*fixtures) {
            for (const std::filesystem::path& p : emit_reference_tables(out_flag))
                std::cout << "wrote " << p.string() << "\n";
            return 0;
        }
        std::cout << app.help();
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
