#pragma once

// Run configuration: an INI file with sections [params], [region], [sim],
// [numerics], [sweep], [output]. Powers and thresholds in dB are accepted only
// in keys ending in _db / _dbm.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "errors.hpp"
#include "geometry.hpp"
#include "moments.hpp"
#include "params.hpp"
#include "sim.hpp"

namespace tsa {

/// Locale-independent shortest round-trip formatting.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct SweepSpec {
    std::string parameter; ///< update_rate | age_threshold | density | decode_threshold_db
    std::vector<double> values;
    bool simulate = false;
};

struct RunConfig {
    SystemParams params{};
    Region region{300.0};
    SimConfig sim{};
    analytics::MomentEngineConfig numerics{};
    std::optional<SweepSpec> sweep;
    double target_reliability = 0.89; ///< u at which the fraction of links with mu >= u is reported
    std::string output_dir = "out";

    void validate() const;
};

inline const std::vector<std::string>& sweep_parameters()
{
    static const std::vector<std::string> names = {"update_rate", "age_threshold", "density", "decode_threshold_db"};
    return names;
}

/// Applies one sweep value to a copy of the parameters.
inline SystemParams with_sweep_value(SystemParams p, const std::string& name, double v)
{
    if (name == "update_rate") p.update_rate = v;
    else if (name == "age_threshold") {
        if (v != std::floor(v)) throw ConfigError("[sweep] age_threshold values must be integers");
        p.age_threshold = static_cast<int>(v);
    } else if (name == "density") p.density = v;
    else if (name == "decode_threshold_db") p.decode_threshold = db_to_linear(v);
    else throw ConfigError("[sweep] unknown parameter '" + name + "'");
    return p;
}

inline void RunConfig::validate() const
{
    try {
        params.validate();
        region.validate();
        numerics.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (params.link_distance >= region.side_length / 2) throw ConfigError("[params] link_distance must be below L/2");
    if (!(target_reliability > 0.0 && target_reliability < 1.0))
        throw ConfigError("[metrics] target_reliability must be in (0, 1)");
    if (sim.horizon < 1) throw ConfigError("[sim] horizon must be >= 1");
    if (sim.warmup && (*sim.warmup < 0 || *sim.warmup >= sim.horizon))
        throw ConfigError("[sim] warmup must be in [0, horizon)");
    if (sim.cutoff_radius && !(*sim.cutoff_radius > 0.0)) throw ConfigError("[sim] cutoff_radius must be > 0");
    if (sim.cutoff_radius && std::isfinite(*sim.cutoff_radius) && *sim.cutoff_radius >= region.side_length / 2)
        throw ConfigError("[sim] cutoff_radius must be below L/2 (use inf for all pairs)");
    if (!(sim.cutoff_tolerance > 0.0)) throw ConfigError("[sim] cutoff_tolerance must be > 0");
    if (sim.replications < 1) throw ConfigError("[sim] replications must be >= 1");
    if (sweep) {
        if (sweep->values.empty()) throw ConfigError("[sweep] values must not be empty");
        for (double v : sweep->values) {
            try {
                with_sweep_value(params, sweep->parameter, v).validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("[sweep] value ") + format_double(v) + ": " + e.what());
            }
        }
    }
}

namespace detail {

inline double parse_number(const std::string& section, const std::string& key, const std::string& text)
{
    std::string t = text;
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
    if (t == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size())
        throw ConfigError("[" + section + "] " + key + ": expected a number, got '" + text + "'");
    return v;
}

inline std::int64_t parse_integer(const std::string& section, const std::string& key, const std::string& text)
{
    const double v = parse_number(section, key, text);
    if (v != std::floor(v) || std::abs(v) > 9e15)
        throw ConfigError("[" + section + "] " + key + ": expected an integer, got '" + text + "'");
    return static_cast<std::int64_t>(v);
}

inline bool parse_bool(const std::string& section, const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": expected true/false, got '" + text + "'");
}

} // namespace detail

/// Parses INI text; unknown sections and keys are errors.
inline RunConfig parse_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(e.message(), static_cast<int>(e.line()));
    }
    RunConfig cfg;
    std::optional<double> threshold_linear, threshold_db;
    static const std::map<std::string, std::set<std::string>> allowed = {
        {"params",
         {"density", "link_distance", "pathloss_exponent", "decode_threshold", "decode_threshold_db", "tx_power_dbm",
          "noise_power_dbm", "update_rate", "age_threshold"}},
        {"region", {"side_length"}},
        {"sim", {"horizon", "warmup", "cutoff_radius", "cutoff_tolerance", "replications", "seed", "workers"}},
        {"numerics",
         {"series_cutoff", "series_tol", "quadrature_max_omega", "quadrature_rule", "omega_step", "panel_width",
          "quadrature_tol", "fixed_point_tol", "damping", "max_iterations", "grid_points"}},
        {"sweep", {"parameter", "values", "simulate"}},
        {"metrics", {"target_reliability"}},
        {"output", {"dir"}},
    };
    for (const auto& [section, body] : tree) {
        auto sec = allowed.find(section);
        if (sec == allowed.end()) throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, node] : body) {
            if (!sec->second.count(key)) throw ConfigError("[" + section + "] unknown key '" + key + "'");
            const std::string v = node.get_value<std::string>();
            auto num = [&] { return detail::parse_number(section, key, v); };
            auto integer = [&] { return detail::parse_integer(section, key, v); };
            if (section == "params") {
                if (key == "density") cfg.params.density = num();
                else if (key == "link_distance") cfg.params.link_distance = num();
                else if (key == "pathloss_exponent") cfg.params.pathloss_exponent = num();
                else if (key == "decode_threshold") threshold_linear = num();
                else if (key == "decode_threshold_db") threshold_db = num();
                else if (key == "tx_power_dbm") cfg.params.budget.tx_power_dbm = num();
                else if (key == "noise_power_dbm") cfg.params.budget.noise_power_dbm = num();
                else if (key == "update_rate") cfg.params.update_rate = num();
                else if (key == "age_threshold") cfg.params.age_threshold = static_cast<int>(integer());
            } else if (section == "region") {
                cfg.region.side_length = num();
            } else if (section == "sim") {
                if (key == "horizon") cfg.sim.horizon = integer();
                else if (key == "warmup") {
                    if (v == "auto") cfg.sim.warmup.reset();
                    else cfg.sim.warmup = integer();
                } else if (key == "cutoff_radius") {
                    if (v == "auto") cfg.sim.cutoff_radius.reset();
                    else cfg.sim.cutoff_radius = num();
                } else if (key == "cutoff_tolerance") cfg.sim.cutoff_tolerance = num();
                else if (key == "replications") cfg.sim.replications = static_cast<int>(integer());
                else if (key == "seed") cfg.sim.master_seed = static_cast<std::uint64_t>(integer());
                else if (key == "workers") cfg.sim.workers = static_cast<int>(integer());
            } else if (section == "numerics") {
                auto& n = cfg.numerics;
                if (key == "series_cutoff") n.series_cutoff = static_cast<int>(integer());
                else if (key == "series_tol") n.series_tol = num();
                else if (key == "quadrature_max_omega") n.quadrature_max_omega = num();
                else if (key == "quadrature_rule") {
                    if (v == "trapezoid") n.quadrature_rule = analytics::QuadratureRule::trapezoid;
                    else if (v == "gauss_kronrod") n.quadrature_rule = analytics::QuadratureRule::gauss_kronrod;
                    else throw ConfigError("[numerics] quadrature_rule: expected trapezoid or gauss_kronrod");
                } else if (key == "omega_step") n.omega_step = num();
                else if (key == "panel_width") n.panel_width = num();
                else if (key == "quadrature_tol") n.quadrature_tol = num();
                else if (key == "fixed_point_tol") n.fixed_point_tol = num();
                else if (key == "damping") n.damping = num();
                else if (key == "max_iterations") n.max_iterations = static_cast<int>(integer());
                else if (key == "grid_points") n.grid_points = static_cast<int>(integer());
            } else if (section == "sweep") {
                if (!cfg.sweep) cfg.sweep = SweepSpec{};
                if (key == "parameter") {
                    const auto& names = sweep_parameters();
                    if (std::find(names.begin(), names.end(), v) == names.end())
                        throw ConfigError("[sweep] parameter: unknown sweep parameter '" + v + "'");
                    cfg.sweep->parameter = v;
                } else if (key == "values") {
                    std::stringstream ss(v);
                    std::string item;
                    while (std::getline(ss, item, ',')) cfg.sweep->values.push_back(detail::parse_number(section, key, item));
                } else if (key == "simulate") cfg.sweep->simulate = detail::parse_bool(section, key, v);
            } else if (section == "metrics") {
                cfg.target_reliability = num();
            } else if (section == "output") {
                cfg.output_dir = v;
            }
        }
    }
    if (threshold_linear && threshold_db) throw ConfigError("[params] give decode_threshold or decode_threshold_db, not both");
    if (threshold_linear) cfg.params.decode_threshold = *threshold_linear;
    if (threshold_db) cfg.params.decode_threshold = db_to_linear(*threshold_db);
    if (cfg.sweep && cfg.sweep->parameter.empty()) throw ConfigError("[sweep] parameter is required");
    cfg.validate();
    return cfg;
}

inline RunConfig parse_config_string(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

/// Resolved configuration with every default written out; parses back to the same values.
inline std::string to_ini(const RunConfig& c)
{
    std::ostringstream o;
    const auto& p = c.params;
    o << "[params]\n"
      << "density = " << format_double(p.density) << "\n"
      << "link_distance = " << format_double(p.link_distance) << "\n"
      << "pathloss_exponent = " << format_double(p.pathloss_exponent) << "\n"
      << "decode_threshold = " << format_double(p.decode_threshold) << "\n"
      << "tx_power_dbm = " << format_double(p.budget.tx_power_dbm) << "\n"
      << "noise_power_dbm = " << format_double(p.budget.noise_power_dbm) << "\n"
      << "update_rate = " << format_double(p.update_rate) << "\n"
      << "age_threshold = " << p.age_threshold << "\n\n";
    o << "[region]\nside_length = " << format_double(c.region.side_length) << "\n\n";
    const auto& s = c.sim;
    o << "[sim]\n"
      << "horizon = " << s.horizon << "\n"
      << "warmup = " << (s.warmup ? std::to_string(*s.warmup) : "auto") << "\n"
      << "cutoff_radius = " << (s.cutoff_radius ? format_double(*s.cutoff_radius) : "auto") << "\n"
      << "cutoff_tolerance = " << format_double(s.cutoff_tolerance) << "\n"
      << "replications = " << s.replications << "\n"
      << "seed = " << s.master_seed << "\n"
      << "workers = " << s.workers << "\n\n";
    const auto& n = c.numerics;
    o << "[numerics]\n"
      << "series_cutoff = " << n.series_cutoff << "\n"
      << "series_tol = " << format_double(n.series_tol) << "\n"
      << "quadrature_max_omega = " << format_double(n.quadrature_max_omega) << "\n"
      << "quadrature_rule = "
      << (n.quadrature_rule == analytics::QuadratureRule::trapezoid ? "trapezoid" : "gauss_kronrod") << "\n"
      << "omega_step = " << format_double(n.omega_step) << "\n"
      << "panel_width = " << format_double(n.panel_width) << "\n"
      << "quadrature_tol = " << format_double(n.quadrature_tol) << "\n"
      << "fixed_point_tol = " << format_double(n.fixed_point_tol) << "\n"
      << "damping = " << format_double(n.damping) << "\n"
      << "max_iterations = " << n.max_iterations << "\n"
      << "grid_points = " << n.grid_points << "\n";
    if (c.sweep) {
        o << "\n[sweep]\nparameter = " << c.sweep->parameter << "\nvalues = ";
        for (std::size_t i = 0; i < c.sweep->values.size(); ++i)
            o << (i ? ", " : "") << format_double(c.sweep->values[i]);
        o << "\nsimulate = " << (c.sweep->simulate ? "true" : "false") << "\n";
    }
    o << "\n[metrics]\ntarget_reliability = " << format_double(c.target_reliability) << "\n";
    o << "\n[output]\ndir = " << c.output_dir << "\n";
    return o.str();
}

/// FNV-1a over the model parameters and region; the key cmd_compare matches on.
inline std::string fingerprint(const SystemParams& p, const Region& r)
{
    std::ostringstream o;
    o << format_double(p.density) << '|' << format_double(p.link_distance) << '|' << format_double(p.pathloss_exponent)
      << '|' << format_double(p.decode_threshold) << '|' << format_double(p.budget.tx_power_dbm) << '|'
      << format_double(p.budget.noise_power_dbm) << '|' << format_double(p.update_rate) << '|' << p.age_threshold << '|'
      << format_double(r.side_length);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : o.str()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace tsa
