#pragma once

// Poisson bipolar topologies on a square torus, with a uniform-grid cell list
// over the sources for fixed-radius queries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "params.hpp"
#include "rng.hpp"

namespace tsa {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Region {
    double side_length = 300.0;
    bool torus = true;

    void validate() const
    {
        if (!(side_length > 0.0) || !std::isfinite(side_length))
            throw std::invalid_argument("Region: side_length must be > 0");
        if (!torus) throw std::invalid_argument("Region: only torus regions are supported");
    }
};

inline double wrap_coordinate(double v, double L)
{
    double w = std::fmod(v, L);
    if (w < 0.0) w += L;
    if (w >= L) w = 0.0; // fmod rounding can land exactly on L
    return w;
}

/// Shortest per-axis offset on a circle of circumference L.
inline double torus_offset(double a, double b, double L)
{
    const double d = std::abs(a - b);
    return std::min(d, L - d);
}

inline double torus_distance_sq(const Point& a, const Point& b, double L)
{
    const double dx = torus_offset(a.x, b.x, L);
    const double dy = torus_offset(a.y, b.y, L);
    return dx * dx + dy * dy;
}

inline double torus_distance(const Point& a, const Point& b, const Region& region)
{
    return std::sqrt(torus_distance_sq(a, b, region.side_length));
}

/// Cell list (CSR layout) over a static point set on the torus.
class CellList {
public:
    CellList() = default;

    CellList(const std::vector<Point>& pts, double side_length, double cell_size) : L_(side_length)
    {
        if (!(cell_size > 0.0)) throw std::invalid_argument("CellList: cell_size must be > 0");
        n_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(L_ / cell_size)));
        n_ = std::min<std::size_t>(n_, 4096);
        cell_ = L_ / static_cast<double>(n_);
        std::vector<std::size_t> counts(n_ * n_ + 1, 0);
        std::vector<std::size_t> where(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            where[i] = cell_of(pts[i]);
            ++counts[where[i] + 1];
        }
        for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
        start_ = counts;
        items_.resize(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) items_[counts[where[i]]++] = static_cast<std::uint32_t>(i);
    }

    double cell_size() const { return cell_; }
    std::size_t cells_per_side() const { return n_; }

    /// Calls f(index) for every point in a cell within `radius` of center (superset of the disk).
    template <class Fn>
    void for_each_candidate(const Point& center, double radius, Fn&& f) const
    {
        if (n_ == 0) return;
        const auto reach = static_cast<std::ptrdiff_t>(std::ceil(radius / cell_));
        const auto n = static_cast<std::ptrdiff_t>(n_);
        const auto cx = static_cast<std::ptrdiff_t>(axis_cell(center.x));
        const auto cy = static_cast<std::ptrdiff_t>(axis_cell(center.y));
        // When the window wraps onto itself visit each cell once.
        const std::ptrdiff_t lo = 2 * reach + 1 >= n ? 0 : -reach;
        const std::ptrdiff_t hi = 2 * reach + 1 >= n ? n - 1 : reach;
        const bool full = 2 * reach + 1 >= n;
        for (std::ptrdiff_t dy = lo; dy <= hi; ++dy) {
            const std::ptrdiff_t y = full ? dy : ((cy + dy) % n + n) % n;
            for (std::ptrdiff_t dx = lo; dx <= hi; ++dx) {
                const std::ptrdiff_t x = full ? dx : ((cx + dx) % n + n) % n;
                const std::size_t c = static_cast<std::size_t>(y) * n_ + static_cast<std::size_t>(x);
                for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) f(items_[k]);
            }
        }
    }

private:
    std::size_t axis_cell(double v) const
    {
        return std::min(n_ - 1, static_cast<std::size_t>(v / cell_));
    }
    std::size_t cell_of(const Point& p) const { return axis_cell(p.y) * n_ + axis_cell(p.x); }

    double L_ = 0.0;
    double cell_ = 1.0;
    std::size_t n_ = 0;
    std::vector<std::size_t> start_;
    std::vector<std::uint32_t> items_;
};

/// A realized dipole pattern. Immutable after construction.
struct Topology {
    std::vector<Point> sources;
    std::vector<Point> receivers;
    double link_distance = 0.0;
    Region region;
    CellList index;
    std::uint64_t seed = 0;

    std::size_t size() const { return sources.size(); }
    bool empty() const { return sources.empty(); }

    void rebuild_index(double cell_size) { index = CellList(sources, region.side_length, cell_size); }
};

/// Default cell size for the source index.
inline double default_cell_size(const Region& region, double link_distance)
{
    return std::max(4.0 * link_distance, region.side_length / 1024.0);
}

/// Builds a topology from explicit source positions, placing receivers at the given angles.
inline Topology make_topology(const std::vector<Point>& sources, const std::vector<double>& angles,
                              double link_distance, const Region& region, std::uint64_t seed = 0)
{
    region.validate();
    if (sources.size() != angles.size()) throw std::invalid_argument("make_topology: size mismatch");
    if (!(link_distance > 0.0) || link_distance >= region.side_length / 2)
        throw std::invalid_argument("make_topology: link distance must be in (0, L/2)");
    Topology t;
    t.link_distance = link_distance;
    t.region = region;
    t.seed = seed;
    const double L = region.side_length;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const Point s{wrap_coordinate(sources[i].x, L), wrap_coordinate(sources[i].y, L)};
        t.sources.push_back(s);
        t.receivers.push_back({wrap_coordinate(s.x + link_distance * std::cos(angles[i]), L),
                               wrap_coordinate(s.y + link_distance * std::sin(angles[i]), L)});
    }
    t.rebuild_index(default_cell_size(region, link_distance));
    return t;
}

/// Poisson number of dipoles with mean density * L^2, uniform sources, uniform receiver angles.
inline Topology sample_topology(const SystemParams& params, const Region& region, std::uint64_t seed)
{
    region.validate();
    if (!(params.density > 0.0)) throw std::invalid_argument("sample_topology: density must be > 0");
    const double L = region.side_length;
    if (params.link_distance >= L / 2)
        throw std::invalid_argument("sample_topology: link distance must be below L/2");
    auto rng = make_stream(seed, StreamPurpose::topology);
    std::poisson_distribution<std::uint64_t> count_dist(params.density * L * L);
    const std::uint64_t n = count_dist(rng);
    std::vector<Point> src(n);
    std::vector<double> ang(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        src[i] = {rng.uniform() * L, rng.uniform() * L};
        ang[i] = 2.0 * std::numbers::pi * rng.uniform();
    }
    return make_topology(src, ang, params.link_distance, region, seed);
}

/// Source indices at torus distance <= radius from center.
inline std::vector<std::size_t> neighbors_within(const Topology& topo, const Point& center, double radius)
{
    const double L = topo.region.side_length;
    if (!(radius >= 0.0) || radius >= L / 2) throw std::invalid_argument("neighbors_within: radius must be in [0, L/2)");
    std::vector<std::size_t> out;
    const double r2 = radius * radius;
    topo.index.for_each_candidate(center, radius, [&](std::uint32_t j) {
        if (torus_distance_sq(topo.sources[j], center, L) <= r2) out.push_back(j);
    });
    std::sort(out.begin(), out.end());
    return out;
}

/// `index sx sy rx ry` per line; header lines start with '#'.
inline void dump_topology(std::ostream& os, const Topology& t)
{
    os << "# side_length " << std::setprecision(17) << t.region.side_length << "\n";
    os << "# link_distance " << t.link_distance << "\n";
    os << "# seed " << t.seed << "\n";
    os << "# index sx sy rx ry\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        os << i << ' ' << t.sources[i].x << ' ' << t.sources[i].y << ' ' << t.receivers[i].x << ' '
           << t.receivers[i].y << "\n";
}

inline Topology load_topology(std::istream& is)
{
    Topology t;
    t.region.side_length = std::numeric_limits<double>::quiet_NaN();
    std::string line;
    std::size_t expected = 0;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key;
            ls >> hash >> key;
            if (key == "side_length") ls >> t.region.side_length;
            else if (key == "link_distance") ls >> t.link_distance;
            else if (key == "seed") ls >> t.seed;
            continue;
        }
        std::size_t idx;
        Point s, r;
        if (!(ls >> idx >> s.x >> s.y >> r.x >> r.y) || idx != expected)
            throw std::runtime_error("load_topology: malformed line " + std::to_string(lineno));
        t.sources.push_back(s);
        t.receivers.push_back(r);
        ++expected;
    }
    t.region.validate();
    t.rebuild_index(default_cell_size(t.region, t.link_distance));
    return t;
}

} // namespace tsa
