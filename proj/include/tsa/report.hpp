#pragma once

// Output records shared by the CLI subcommands, the Kolmogorov distance
// between meta distributions, and paired comparisons of two result files.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "distribution.hpp"
#include "errors.hpp"

namespace tsa {

using json = nlohmann::json;

/// A meta distribution given either by per-link samples or by a gridded CDF.
struct MetaCurve {
    std::vector<double> samples; ///< sorted; used when non-empty
    std::optional<ServiceRateDistribution> dist;

    static MetaCurve from_samples(std::vector<double> s)
    {
        std::sort(s.begin(), s.end());
        MetaCurve c;
        c.samples = std::move(s);
        return c;
    }
    static MetaCurve from_distribution(ServiceRateDistribution F)
    {
        MetaCurve c;
        c.dist = std::move(F);
        return c;
    }

    bool empty() const { return samples.empty() && !dist; }

    /// Fraction with mu >= u.
    double ccdf(double u) const
    {
        if (!samples.empty()) {
            const auto below = std::lower_bound(samples.begin(), samples.end(), u) - samples.begin();
            return static_cast<double>(samples.size() - static_cast<std::size_t>(below)) /
                   static_cast<double>(samples.size());
        }
        return u <= 0.0 ? 1.0 : dist->ccdf_at(u);
    }

    /// Fraction with mu > u.
    double ccdf_above(double u) const
    {
        if (!samples.empty()) {
            const auto upto = std::upper_bound(samples.begin(), samples.end(), u) - samples.begin();
            return static_cast<double>(samples.size() - static_cast<std::size_t>(upto)) /
                   static_cast<double>(samples.size());
        }
        return dist->ccdf_at(std::nextafter(u, 2.0));
    }

    std::vector<double> knots() const { return samples.empty() ? dist->grid : samples; }
};

/// sup_u |ccdf_a(u) - ccdf_b(u)|, evaluated at every jump and knot from both sides.
inline double kolmogorov_distance(const MetaCurve& a, const MetaCurve& b)
{
    if (a.empty() || b.empty()) throw std::invalid_argument("kolmogorov_distance: empty curve");
    auto xs = a.knots();
    const auto xb = b.knots();
    xs.insert(xs.end(), xb.begin(), xb.end());
    double d = 0.0;
    for (double x : xs) {
        d = std::max(d, std::abs(a.ccdf(x) - b.ccdf(x)));
        d = std::max(d, std::abs(a.ccdf_above(x) - b.ccdf_above(x)));
    }
    return d;
}

inline double kolmogorov_distance(std::span<const double> samples, const ServiceRateDistribution& F)
{
    return kolmogorov_distance(MetaCurve::from_samples({samples.begin(), samples.end()}),
                               MetaCurve::from_distribution(F));
}

/// One simulated or analytical result at one parameter point.
struct MetricRecord {
    std::string kind; ///< "simulation" or "analysis"
    std::string fingerprint;
    std::string label;
    std::map<std::string, double> metrics;
    MetaCurve meta;
};

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const MetricRecord& r)
{
    json j;
    j["kind"] = r.kind;
    j["fingerprint"] = r.fingerprint;
    j["label"] = r.label;
    json m = json::object();
    for (const auto& [k, v] : r.metrics) m[k] = number_or_null(v);
    j["metrics"] = m;
    if (!r.meta.samples.empty()) j["meta"] = {{"samples", r.meta.samples}};
    else if (r.meta.dist) j["meta"] = {{"u", r.meta.dist->grid}, {"cdf", r.meta.dist->cdf}};
    return j;
}

inline MetricRecord record_from_json(const json& j)
{
    MetricRecord r;
    r.kind = j.at("kind").get<std::string>();
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.label = j.value("label", std::string{});
    for (const auto& [k, v] : j.at("metrics").items())
        r.metrics[k] = v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
    if (j.contains("meta")) {
        const auto& m = j.at("meta");
        if (m.contains("samples")) r.meta = MetaCurve::from_samples(m.at("samples").get<std::vector<double>>());
        else {
            ServiceRateDistribution F;
            F.grid = m.at("u").get<std::vector<double>>();
            F.cdf = m.at("cdf").get<std::vector<double>>();
            F.validate();
            r.meta = MetaCurve::from_distribution(std::move(F));
        }
    }
    return r;
}

/// Result file layout common to simulate, analyze and sweep outputs.
inline json result_document(const std::string& format, const RunConfig& cfg, const std::vector<MetricRecord>& records)
{
    json doc;
    doc["format"] = format;
    doc["seed"] = cfg.sim.master_seed;
    doc["config"] = to_ini(cfg);
    json recs = json::array();
    for (const auto& r : records) recs.push_back(to_json(r));
    doc["records"] = recs;
    return doc;
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline std::vector<MetricRecord> records_from_document(const json& doc)
{
    std::vector<MetricRecord> out;
    try {
        for (const auto& r : doc.at("records")) out.push_back(record_from_json(r));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed result file: ") + e.what());
    }
    return out;
}

struct Tolerances {
    double avg_aoi_rel = 0.10;
    double success_prob_abs = 0.02;
    double fraction_above_target_abs = 0.05;
    double meta_ks = 0.05;
};

struct ComparisonRow {
    std::string point;
    std::string metric;
    std::string kind_a, kind_b;
    double value_a = 0.0;
    double value_b = 0.0;
    double abs_dev = 0.0;
    double rel_dev = 0.0;
    double tolerance = 0.0;
    bool relative = false;
    bool pass = false;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;

    bool pass() const
    {
        return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.pass; });
    }
};

namespace detail {

inline ComparisonRow make_row(const MetricRecord& a, const MetricRecord& b, const std::string& metric, double va,
                              double vb, double tol, bool relative)
{
    ComparisonRow row;
    row.point = a.label.empty() ? a.fingerprint : a.label;
    row.metric = metric;
    row.kind_a = a.kind;
    row.kind_b = b.kind;
    row.value_a = va;
    row.value_b = vb;
    row.abs_dev = std::abs(va - vb);
    row.rel_dev = vb != 0.0 ? row.abs_dev / std::abs(vb) : (row.abs_dev == 0.0 ? 0.0 : INFINITY);
    row.tolerance = tol;
    row.relative = relative;
    const double dev = relative ? row.rel_dev : row.abs_dev;
    row.pass = std::isfinite(va) && std::isfinite(vb) ? dev <= tol : (va == vb);
    return row;
}

} // namespace detail

/// Pairs every record of `a` with a record of `b` sharing its fingerprint,
/// preferring a record of the other kind, then compares the shared metrics.
inline ComparisonReport compare_records(const std::vector<MetricRecord>& a, const std::vector<MetricRecord>& b,
                                        const Tolerances& tol = {})
{
    if (a.empty() || b.empty()) throw ConfigError("compare: a result file has no records");
    ComparisonReport rep;
    for (const auto& ra : a) {
        const MetricRecord* match = nullptr;
        for (const auto& rb : b) {
            if (rb.fingerprint != ra.fingerprint) continue;
            if (!match || (match->kind == ra.kind && rb.kind != ra.kind)) match = &rb;
        }
        if (!match) throw ConfigError("compare: no record with fingerprint " + ra.fingerprint + " in second input");
        const auto& rb = *match;
        const struct {
            const char* name;
            double tol;
            bool relative;
        } metrics[] = {{"avg_aoi", tol.avg_aoi_rel, true},
                       {"success_prob", tol.success_prob_abs, false},
                       {"fraction_above_target", tol.fraction_above_target_abs, false}};
        for (const auto& m : metrics) {
            auto ia = ra.metrics.find(m.name);
            auto ib = rb.metrics.find(m.name);
            if (ia == ra.metrics.end() || ib == rb.metrics.end()) continue;
            rep.rows.push_back(detail::make_row(ra, rb, m.name, ia->second, ib->second, m.tol, m.relative));
        }
        if (!ra.meta.empty() && !rb.meta.empty()) {
            auto row = detail::make_row(ra, rb, "meta_ks", kolmogorov_distance(ra.meta, rb.meta), 0.0, tol.meta_ks, false);
            row.rel_dev = 0.0;
            rep.rows.push_back(row);
        }
    }
    return rep;
}

inline json to_json(const ComparisonReport& rep)
{
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"point", r.point},
                        {"metric", r.metric},
                        {"kind_a", r.kind_a},
                        {"kind_b", r.kind_b},
                        {"value_a", number_or_null(r.value_a)},
                        {"value_b", number_or_null(r.value_b)},
                        {"abs_dev", number_or_null(r.abs_dev)},
                        {"rel_dev", number_or_null(r.rel_dev)},
                        {"tolerance", r.tolerance},
                        {"relative", r.relative},
                        {"pass", r.pass}});
    return {{"format", "tsa-comparison"}, {"pass", rep.pass()}, {"rows", rows}};
}

/// CSV with optional '#' header lines; '.' decimal separator whatever the locale.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::string& header_comment, const std::vector<std::string>& columns) : os_(os)
    {
        std::size_t start = 0;
        while (start < header_comment.size()) {
            const auto end = header_comment.find('\n', start);
            const auto line = header_comment.substr(start, end == std::string::npos ? std::string::npos : end - start);
            os_ << "# " << line << '\n';
            if (end == std::string::npos) break;
            start = end + 1;
        }
        for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
        os_ << '\n';
    }

    CsvWriter& cell(double v) { return raw(format_double(v)); }
    CsvWriter& cell(long long v) { return raw(std::to_string(v)); }
    CsvWriter& cell(const std::string& v)
    {
        if (v.find_first_of(",\"\n") == std::string::npos) return raw(v);
        std::string q = "\"";
        for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return raw(q + "\"");
    }
    void end_row()
    {
        os_ << '\n';
        first_ = true;
    }

private:
    CsvWriter& raw(const std::string& s)
    {
        if (!first_) os_ << ',';
        os_ << s;
        first_ = false;
        return *this;
    }
    std::ostream& os_;
    bool first_ = true;
};

inline void write_comparison_csv(std::ostream& os, const ComparisonReport& rep)
{
    CsvWriter w(os, "", {"point", "metric", "kind_a", "kind_b", "value_a", "value_b", "abs_dev", "rel_dev", "tolerance",
                         "relative", "pass"});
    for (const auto& r : rep.rows) {
        w.cell(r.point).cell(r.metric).cell(r.kind_a).cell(r.kind_b).cell(r.value_a).cell(r.value_b).cell(r.abs_dev);
        w.cell(r.rel_dev).cell(r.tolerance).cell(std::string(r.relative ? "true" : "false"));
        w.cell(std::string(r.pass ? "true" : "false"));
        w.end_row();
    }
}

} // namespace tsa
