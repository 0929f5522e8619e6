#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tsa/cli.hpp"

int main(int argc, char** argv)
{
    using namespace tsa;
    CLI::App app{"Age-threshold slotted ALOHA: simulation, analysis, sweeps and comparisons"};
    app.require_subcommand(1);

    cli::Overrides ov;
    std::string config_path, out;
    std::uint64_t seed = 0;
    int workers = 1;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--paper-scale", ov.paper_scale, "use the 1000 x 1000 region");
        sub->add_option("--out", out, "output directory");
    };
    auto* simulate = app.add_subcommand("simulate", "run the slot-level simulator");
    auto* analyze = app.add_subcommand("analyze", "solve the meta distribution and average AoI");
    auto* sweep = app.add_subcommand("sweep", "analytic (and optionally simulated) sweep over one parameter");
    auto* compare = app.add_subcommand("compare", "compare two result files point by point");
    for (auto* s : {simulate, analyze, sweep}) add_common(s);

    std::string file_a, file_b;
    Tolerances tol;
    compare->add_option("first", file_a, "simulation or analysis result JSON")->required()->check(CLI::ExistingFile);
    compare->add_option("second", file_b, "result JSON to compare against")->required()->check(CLI::ExistingFile);
    compare->add_option("--out", out, "output directory");
    compare->add_option("--tol-aoi-rel", tol.avg_aoi_rel, "relative tolerance on average AoI");
    compare->add_option("--tol-success-abs", tol.success_prob_abs, "absolute tolerance on success probability");
    compare->add_option("--tol-target-abs", tol.fraction_above_target_abs,
                        "absolute tolerance on the fraction of links above the target reliability");
    compare->add_option("--tol-ks", tol.meta_ks, "Kolmogorov distance tolerance on the meta distribution");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cli::ok : cli::config_error;
    }

    for (auto* s : {simulate, analyze, sweep}) {
        if (!s->parsed()) continue;
        if (s->count("--config")) ov.config_path = config_path;
        if (s->count("--seed")) ov.seed = seed;
        if (s->count("--workers")) ov.workers = workers;
        if (s->count("--out")) ov.out = out;
    }
    try {
        if (compare->parsed()) return cli::cmd_compare(file_a, file_b, tol, compare->count("--out") ? out : "out");
        const RunConfig cfg = cli::resolve(ov);
        if (simulate->parsed()) return cli::cmd_simulate(cfg);
        if (analyze->parsed()) return cli::cmd_analyze(cfg);
        return cli::cmd_sweep(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::config_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return cli::numerical_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::config_error;
    }
}
