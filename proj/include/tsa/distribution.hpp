#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace tsa {

/// Discretized CDF F(u) = P(mu < u) of the per-link service rate on [0, top].
///
/// The grid starts at 0 and ends at `top`, the noise-limited maximum. Mass in
/// (u_{k-1}, u_k] is placed at the cell midpoint; whatever F leaves below 1 at
/// `top` is an atom located at `top`.
struct ServiceRateDistribution {
    std::vector<double> grid;
    std::vector<double> cdf;

    double top() const { return grid.back(); }
    std::size_t size() const { return grid.size(); }
    double atom_mass() const { return std::max(0.0, 1.0 - cdf.back()); }

    /// Grid on [0, top] clustered toward both ends (Chebyshev-Lobatto in u).
    static std::vector<double> make_grid(std::size_t n, double top)
    {
        if (n < 3) throw std::invalid_argument("ServiceRateDistribution: grid needs >= 3 points");
        std::vector<double> g(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double x = std::numbers::pi * static_cast<double>(k) / static_cast<double>(n - 1);
            g[k] = top * 0.5 * (1.0 - std::cos(x));
        }
        g.front() = 0.0;
        g.back() = top;
        return g;
    }

    /// All mass in the terminal atom.
    static ServiceRateDistribution step_at_top(std::vector<double> grid)
    {
        ServiceRateDistribution d;
        d.cdf.assign(grid.size(), 0.0);
        d.grid = std::move(grid);
        return d;
    }

    double cdf_at(double u) const
    {
        if (u <= grid.front()) return cdf.front();
        if (u > top()) return 1.0;
        auto it = std::lower_bound(grid.begin(), grid.end(), u);
        const auto k = static_cast<std::size_t>(it - grid.begin());
        if (grid[k] == u) return cdf[k];
        const double w = (u - grid[k - 1]) / (grid[k] - grid[k - 1]);
        return cdf[k - 1] + w * (cdf[k] - cdf[k - 1]);
    }

    /// Meta distribution value: fraction of links with service rate >= u.
    double ccdf_at(double u) const { return 1.0 - cdf_at(u); }

    /// Stieltjes integral of g against dF, including the terminal atom.
    template <class G>
    double integrate(G&& g) const
    {
        double acc = cdf.front() > 0.0 ? cdf.front() * g(grid.front()) : 0.0;
        for (std::size_t k = 1; k < grid.size(); ++k) {
            const double m = cdf[k] - cdf[k - 1];
            if (m != 0.0) acc += m * g(0.5 * (grid[k - 1] + grid[k]));
        }
        const double atom = atom_mass();
        if (atom > 0.0) acc += atom * g(top());
        return acc;
    }

    double mean() const
    {
        return integrate([](double u) { return u; });
    }

    void validate() const
    {
        if (grid.size() != cdf.size() || grid.size() < 2)
            throw std::invalid_argument("ServiceRateDistribution: grid/cdf size mismatch");
        for (std::size_t k = 1; k < grid.size(); ++k) {
            if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("ServiceRateDistribution: grid not increasing");
            if (cdf[k] < cdf[k - 1]) throw std::invalid_argument("ServiceRateDistribution: cdf decreasing");
        }
        if (grid.front() < 0.0 || grid.back() > 1.0) throw std::invalid_argument("ServiceRateDistribution: grid outside [0,1]");
        if (cdf.front() < 0.0 || cdf.back() > 1.0) throw std::invalid_argument("ServiceRateDistribution: cdf outside [0,1]");
    }
};

/// Least-squares nondecreasing fit (pool adjacent violators), then clamp to [0, 1].
inline void isotonic_project(std::vector<double>& v)
{
    const std::size_t n = v.size();
    std::vector<double> level;
    std::vector<std::size_t> count;
    level.reserve(n);
    count.reserve(n);
    for (double x : v) {
        level.push_back(x);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const std::size_t c2 = count.back();
            const double l2 = level.back();
            level.pop_back();
            count.pop_back();
            const std::size_t c1 = count.back();
            level.back() = (level.back() * c1 + l2 * c2) / static_cast<double>(c1 + c2);
            count.back() = c1 + c2;
        }
    }
    std::size_t pos = 0;
    for (std::size_t b = 0; b < level.size(); ++b)
        for (std::size_t i = 0; i < count[b]; ++i) v[pos++] = std::clamp(level[b], 0.0, 1.0);
}

} // namespace tsa
