#pragma once

// Subcommand implementations behind the tsa command-line tool. Each command
// writes its outputs under the configured directory and returns an exit code.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "analytics.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "sim.hpp"

namespace tsa::cli {

enum ExitCode : int { ok = 0, config_error = 1, numerical_error = 2, comparison_failed = 3 };

inline constexpr double full_side_length = 1000.0;

struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    bool paper_scale = false;
    std::optional<std::string> out;
};

/// Defaults or the config file, then command-line overrides, then validation.
inline RunConfig resolve(const Overrides& o)
{
    RunConfig cfg = o.config_path ? load_config(*o.config_path) : RunConfig{};
    if (o.seed) cfg.sim.master_seed = *o.seed;
    if (o.workers) {
        if (*o.workers < 1) throw ConfigError("--workers must be >= 1");
        cfg.sim.workers = *o.workers;
    }
    if (o.paper_scale) cfg.region.side_length = full_side_length;
    if (o.out) cfg.output_dir = *o.out;
    cfg.validate();
    return cfg;
}

namespace detail {

inline std::filesystem::path prepare_dir(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir + "'");
    return dir;
}

inline std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + p.string() + "'");
    return os;
}

inline void write_text(const std::filesystem::path& p, const std::string& text)
{
    auto os = open_out(p);
    os << text;
    if (!os) throw ConfigError("write failed for '" + p.string() + "'");
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline std::string header_comment(const RunConfig& cfg, const std::string& fp)
{
    return "fingerprint " + fp + "\nseed " + std::to_string(cfg.sim.master_seed) + "\n" + to_ini(cfg);
}

} // namespace detail

/// Replications of one parameter point, with the topologies kept for output.
struct SimulationRun {
    std::vector<Topology> topologies;
    std::vector<SimResult> results;
};

inline SimulationRun run_point(const SystemParams& p, const RunConfig& cfg, int workers)
{
    SimulationRun run;
    const auto reps = static_cast<std::size_t>(cfg.sim.replications);
    run.topologies.resize(reps);
    run.results.resize(reps);
    parallel_for(reps, workers, [&](std::size_t k) {
        SimConfig c = cfg.sim;
        c.master_seed = cfg.sim.master_seed + k;
        run.topologies[k] = sample_topology(p, cfg.region, c.master_seed);
        run.results[k] = run_simulation(run.topologies[k], p, c);
    });
    return run;
}

inline MetricRecord simulation_record(const SystemParams& p, const RunConfig& cfg, const SimulationRun& run,
                                      const std::string& label = "")
{
    MetricRecord r;
    r.kind = "simulation";
    r.fingerprint = fingerprint(p, cfg.region);
    r.label = label;
    std::vector<double> mu;
    double links = 0.0, aoi = 0.0, sq = 0.0, act = 0.0;
    std::int64_t att = 0, succ = 0;
    for (const auto& res : run.results) {
        const double n = static_cast<double>(res.per_link.size());
        links += n;
        aoi += n * res.network_avg_aoi;
        sq += n * (res.network_aoi_variance + res.network_avg_aoi * res.network_avg_aoi);
        for (const auto& l : res.per_link) {
            act += l.a_hat;
            att += l.attempts;
            succ += l.successes;
            if (l.attempts > 0) mu.push_back(l.mu_hat);
        }
    }
    const double mean = aoi / links;
    r.metrics["avg_aoi"] = mean;
    r.metrics["aoi_variance"] = std::max(0.0, sq / links - mean * mean);
    r.metrics["success_prob"] = att > 0 ? static_cast<double>(succ) / static_cast<double>(att) : 0.0;
    r.metrics["activity"] = act / links;
    r.metrics["links"] = links;
    r.metrics["links_without_attempts"] = links - static_cast<double>(mu.size());
    r.meta = MetaCurve::from_samples(std::move(mu));
    r.metrics["fraction_above_target"] = r.meta.samples.empty() ? 0.0 : r.meta.ccdf(cfg.target_reliability);
    return r;
}

inline MetricRecord analysis_record(const SystemParams& p, const RunConfig& cfg, const analytics::AnalyticResult& a,
                                    const std::string& label = "")
{
    MetricRecord r;
    r.kind = "analysis";
    r.fingerprint = fingerprint(p, cfg.region);
    r.label = label;
    r.metrics["avg_aoi"] = a.avg_aoi;
    r.metrics["avg_aoi_moment"] = a.avg_aoi_moment;
    r.metrics["success_prob"] = a.success_prob;
    r.metrics["success_prob_approx"] = a.success_prob_approx;
    r.metrics["activity"] = a.phi;
    r.metrics["mean_service_rate"] = a.mean_service_rate;
    r.metrics["first_moment"] = a.first_moment;
    r.metrics["fraction_above_target"] = a.meta_dist.ccdf_at(cfg.target_reliability);
    r.meta = MetaCurve::from_distribution(a.meta_dist);
    return r;
}

inline json diagnostics_json(const analytics::SolverDiagnostics& d)
{
    return {{"iterations", d.iterations},
            {"final_residual", d.final_residual},
            {"residual_history", d.residual_history},
            {"quadrature_error", d.quadrature_error},
            {"omega_used", d.omega_used},
            {"series_terms_used", d.series_terms_used},
            {"series_kernel_gap", d.series_kernel_gap}};
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& log = std::cout)
{
    const auto dir = detail::prepare_dir(cfg.output_dir);
    const auto& p = cfg.params;
    const auto run = run_point(p, cfg, cfg.sim.workers);
    const auto rec = simulation_record(p, cfg, run);
    {
        auto os = detail::open_out(dir / "sim_links.csv");
        CsvWriter w(os, detail::header_comment(cfg, rec.fingerprint),
                    {"replication", "link", "sx", "sy", "rx", "ry", "time_avg_aoi", "aoi_variance", "mu_hat", "mu_cond",
                     "a_hat", "attempts", "successes", "eligible_slots"});
        for (std::size_t k = 0; k < run.results.size(); ++k) {
            const auto& topo = run.topologies[k];
            const auto& res = run.results[k];
            for (std::size_t i = 0; i < res.per_link.size(); ++i) {
                const auto& l = res.per_link[i];
                w.cell(static_cast<long long>(k)).cell(static_cast<long long>(i));
                w.cell(topo.sources[i].x).cell(topo.sources[i].y).cell(topo.receivers[i].x).cell(topo.receivers[i].y);
                w.cell(l.time_avg_aoi).cell(l.aoi_variance).cell(l.mu_hat).cell(l.mu_cond).cell(l.a_hat);
                w.cell(static_cast<long long>(l.attempts)).cell(static_cast<long long>(l.successes));
                w.cell(static_cast<long long>(l.eligible_slots));
                w.end_row();
            }
        }
    }
    json doc = result_document("tsa-simulation", cfg, {rec});
    json reps = json::array();
    for (const auto& res : run.results)
        reps.push_back({{"seed", res.seed},
                        {"links", res.per_link.size()},
                        {"network_avg_aoi", res.network_avg_aoi},
                        {"network_aoi_variance", res.network_aoi_variance},
                        {"across_link_aoi_variance", res.across_link_aoi_variance},
                        {"success_fraction", res.success_fraction},
                        {"mean_activity", res.mean_activity},
                        {"measured_slots", res.measured_slots},
                        {"warmup", res.warmup},
                        {"cutoff_radius", number_or_null(res.cutoff_radius)},
                        {"zero_attempt_links", res.zero_attempt_links}});
    doc["replications"] = reps;
    doc["lower_bound"] = (p.age_threshold + 1) / 2.0;
    detail::write_json(dir / "sim_summary.json", doc);
    detail::write_text(dir / "resolved_config.ini", to_ini(cfg));
    log << "simulate: " << static_cast<long long>(rec.metrics.at("links")) << " links, avg AoI "
        << format_double(rec.metrics.at("avg_aoi")) << ", success " << format_double(rec.metrics.at("success_prob"))
        << ", fraction above " << format_double(cfg.target_reliability) << ": "
        << format_double(rec.metrics.at("fraction_above_target")) << "\n";
    return ok;
}

inline void write_meta_csv(std::ostream& os, const std::string& header, const ServiceRateDistribution& F)
{
    CsvWriter w(os, header, {"u", "cdf", "ccdf"});
    for (std::size_t k = 0; k < F.size(); ++k) {
        w.cell(F.grid[k]).cell(F.cdf[k]).cell(1.0 - F.cdf[k]);
        w.end_row();
    }
}

inline int cmd_analyze(const RunConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr)
{
    const auto dir = detail::prepare_dir(cfg.output_dir);
    const auto& p = cfg.params;
    const auto fp = fingerprint(p, cfg.region);
    analytics::AnalyticResult a;
    try {
        a = analytics::analyze(p, cfg.numerics);
    } catch (const NumericalError& e) {
        detail::write_json(dir / "analysis_failure.json",
                           {{"error", e.what()}, {"fingerprint", fp}, {"history", e.history()}, {"config", to_ini(cfg)}});
        err << "analyze: " << e.what() << "\n  history:";
        for (double h : e.history()) err << ' ' << format_double(h);
        err << "\n";
        return numerical_error;
    }
    const auto rec = analysis_record(p, cfg, a);
    json doc = result_document("tsa-analysis", cfg, {rec});
    doc["diagnostics"] = diagnostics_json(a.diagnostics);
    doc["lower_bound"] = (p.age_threshold + 1) / 2.0;
    detail::write_json(dir / "analysis.json", doc);
    {
        auto os = detail::open_out(dir / "meta_distribution.csv");
        write_meta_csv(os, detail::header_comment(cfg, fp), a.meta_dist);
    }
    detail::write_text(dir / "resolved_config.ini", to_ini(cfg));
    log << "analyze: avg AoI " << format_double(a.avg_aoi) << " (moment form " << format_double(a.avg_aoi_moment)
        << "), success " << format_double(a.success_prob) << ", phi " << format_double(a.phi) << ", "
        << a.diagnostics.iterations << " iterations\n";
    return ok;
}

struct SweepPoint {
    double value = 0.0;
    std::string label;
    SystemParams params;
    std::string status = "ok";
    std::string sim_status = "skipped";
    std::optional<analytics::AnalyticResult> analysis;
    std::optional<MetricRecord> analysis_rec, sim_rec;
};

inline int cmd_sweep(const RunConfig& cfg, std::ostream& log = std::cout)
{
    if (!cfg.sweep) throw ConfigError("sweep: config has no [sweep] section");
    const auto dir = detail::prepare_dir(cfg.output_dir);
    const auto& sw = *cfg.sweep;
    std::vector<SweepPoint> pts(sw.values.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i].value = sw.values[i];
        pts[i].label = sw.parameter + "=" + format_double(sw.values[i]);
        pts[i].params = with_sweep_value(cfg.params, sw.parameter, sw.values[i]);
    }
    parallel_for(pts.size(), cfg.sim.workers, [&](std::size_t i) {
        auto& pt = pts[i];
        try {
            pt.analysis = analytics::analyze(pt.params, cfg.numerics);
            pt.analysis_rec = analysis_record(pt.params, cfg, *pt.analysis, pt.label);
        } catch (const std::exception& e) {
            pt.status = std::string("error: ") + e.what();
        }
        if (!sw.simulate) return;
        try {
            pt.sim_rec = simulation_record(pt.params, cfg, run_point(pt.params, cfg, 1), pt.label);
            pt.sim_status = "ok";
        } catch (const std::exception& e) {
            pt.sim_status = std::string("error: ") + e.what();
        }
    });

    std::vector<MetricRecord> records;
    {
        auto os = detail::open_out(dir / "sweep.csv");
        CsvWriter w(os, detail::header_comment(cfg, fingerprint(cfg.params, cfg.region)),
                    {"parameter", "value", "fingerprint", "status", "phi", "success_prob", "success_prob_approx",
                     "avg_aoi", "avg_aoi_moment", "mean_service_rate", "fraction_above_target", "iterations",
                     "final_residual", "quadrature_error", "sim_status", "sim_avg_aoi", "sim_aoi_variance",
                     "sim_success_prob", "sim_activity", "sim_fraction_above_target", "sim_meta_ks"});
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (const auto& pt : pts) {
            w.cell(sw.parameter).cell(pt.value).cell(fingerprint(pt.params, cfg.region)).cell(pt.status);
            if (pt.analysis) {
                const auto& a = *pt.analysis;
                w.cell(a.phi).cell(a.success_prob).cell(a.success_prob_approx).cell(a.avg_aoi).cell(a.avg_aoi_moment);
                w.cell(a.mean_service_rate).cell(pt.analysis_rec->metrics.at("fraction_above_target"));
                w.cell(static_cast<long long>(a.diagnostics.iterations)).cell(a.diagnostics.final_residual);
                w.cell(a.diagnostics.quadrature_error);
                records.push_back(*pt.analysis_rec);
            } else {
                for (int k = 0; k < 7; ++k) w.cell(nan);
                w.cell(0LL).cell(nan).cell(nan);
            }
            w.cell(pt.sim_status);
            if (pt.sim_rec) {
                const auto& m = pt.sim_rec->metrics;
                w.cell(m.at("avg_aoi")).cell(m.at("aoi_variance")).cell(m.at("success_prob")).cell(m.at("activity"));
                w.cell(m.at("fraction_above_target"));
                w.cell(pt.analysis_rec ? kolmogorov_distance(pt.sim_rec->meta, pt.analysis_rec->meta) : nan);
                records.push_back(*pt.sim_rec);
            } else {
                for (int k = 0; k < 6; ++k) w.cell(nan);
            }
            w.end_row();
        }
    }
    detail::write_json(dir / "sweep.json", result_document("tsa-sweep", cfg, records));
    detail::write_text(dir / "resolved_config.ini", to_ini(cfg));
    std::size_t failed = 0;
    for (const auto& pt : pts) {
        failed += pt.status != "ok" || (sw.simulate && pt.sim_status != "ok");
        log << "sweep " << pt.label << ": " << pt.status;
        if (pt.analysis) log << ", avg AoI " << format_double(pt.analysis->avg_aoi);
        if (pt.sim_rec) log << ", simulated " << format_double(pt.sim_rec->metrics.at("avg_aoi"));
        log << "\n";
    }
    return failed ? numerical_error : ok;
}

inline int cmd_compare(const std::string& file_a, const std::string& file_b, const Tolerances& tol,
                       const std::string& out_dir, std::ostream& log = std::cout)
{
    const auto a = records_from_document(read_json_file(file_a));
    const auto b = records_from_document(read_json_file(file_b));
    const auto rep = compare_records(a, b, tol);
    const auto dir = detail::prepare_dir(out_dir);
    detail::write_json(dir / "comparison.json", to_json(rep));
    {
        auto os = detail::open_out(dir / "comparison.csv");
        write_comparison_csv(os, rep);
    }
    for (const auto& r : rep.rows)
        log << (r.pass ? "PASS " : "FAIL ") << r.point << ' ' << r.metric << ": " << format_double(r.value_a) << " vs "
            << format_double(r.value_b) << " (" << (r.relative ? "rel " : "abs ")
            << format_double(r.relative ? r.rel_dev : r.abs_dev) << ", tol " << format_double(r.tolerance) << ")\n";
    return rep.pass() ? ok : comparison_failed;
}

} // namespace tsa::cli
