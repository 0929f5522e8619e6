#pragma once

// Per-link renewal results, the meta-distribution fixed point, network
// average AoI and its special cases.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "distribution.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "gil_pelaez.hpp"
#include "moments.hpp"
#include "params.hpp"
#include "special.hpp"

namespace tsa::analytics {

/// Returned in place of an AoI value when the age grows without bound.
inline constexpr double divergent = std::numeric_limits<double>::infinity();

inline bool is_divergent(double aoi) { return std::isinf(aoi); }

namespace detail {
inline void check_link_args(int A, double eta, double mu)
{
    if (A < 0) throw std::invalid_argument("age threshold must be >= 0");
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("update rate must be in [0, 1]");
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("service rate must be in [0, 1]");
}
} // namespace detail

/// Time-average age of one link with service rate mu.
inline double cond_avg_aoi(int A, double eta, double mu)
{
    detail::check_link_args(A, eta, mu);
    if (eta == 0.0 || mu == 0.0) return divergent;
    const double x = eta * mu;
    return (A + 1) / 2.0 + ((A - 1) / 2.0 + 1.0 / x) / (1.0 + A * x);
}

/// Long-run fraction of slots in which the link transmits.
inline double cond_active_prob(int A, double eta, double mu)
{
    detail::check_link_args(A, eta, mu);
    return eta / (1.0 + A * eta * mu);
}

/// Service rate of `receiver` given every other source's activity probability (no cutoff).
inline double cond_success_prob(const Topology& topo, std::size_t receiver, std::span<const double> active_probs,
                                const SystemParams& params)
{
    if (active_probs.size() != topo.size()) throw std::invalid_argument("cond_success_prob: size mismatch");
    const double alpha = params.pathloss_exponent;
    const double tra = params.decode_threshold * std::pow(topo.link_distance, alpha);
    const double L = topo.region.side_length;
    double log_mu = -params.noise_term();
    for (std::size_t j = 0; j < topo.size(); ++j) {
        if (j == receiver) continue;
        const double a = active_probs[j];
        if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("cond_success_prob: activity outside [0, 1]");
        if (a == 0.0) continue;
        const double d2 = torus_distance_sq(topo.sources[j], topo.receivers[receiver], L);
        log_mu += std::log1p(-a / (1.0 + std::pow(d2, alpha / 2) / tra));
    }
    return std::exp(log_mu);
}

struct TopologyFixedPoint {
    std::vector<double> mu;
    std::vector<double> activity;
    int iterations = 0;
};

/// Joint solution of the per-link service rates and activities on one topology.
inline TopologyFixedPoint topology_fixed_point(const Topology& topo, const SystemParams& params, double tol = 1e-13,
                                               int max_iterations = 10000)
{
    const std::size_t n = topo.size();
    TopologyFixedPoint fp;
    fp.activity.assign(n, params.update_rate);
    fp.mu.assign(n, 1.0);
    for (int it = 1; it <= max_iterations; ++it) {
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double m = cond_success_prob(topo, i, fp.activity, params);
            change = std::max(change, std::abs(m - fp.mu[i]));
            fp.mu[i] = m;
        }
        for (std::size_t i = 0; i < n; ++i)
            fp.activity[i] = cond_active_prob(params.age_threshold, params.update_rate, fp.mu[i]);
        fp.iterations = it;
        if (change < tol) return fp;
    }
    throw NumericalError("topology fixed point did not converge");
}

/// phi = int eta / (1 + A eta u) dF(u).
inline double activity_phi(const ServiceRateDistribution& F, double eta, int A)
{
    if (A == 0) return eta;
    return F.integrate([&](double u) { return eta / (1.0 + A * eta * u); });
}

/// Success probability of the typical link, interference-limited form.
inline double success_prob(double phi, const SystemParams& p)
{
    return std::exp(-p.interference_scale() * phi * special::omega_delta(p.delta()));
}

/// Scalar fixed point P = exp(-k eta / (1 + A eta P)), damped iteration from P = 1.
inline double success_prob_approx(const SystemParams& p, double tol = 1e-10, int max_iterations = 10000)
{
    const double k = p.interference_scale() * special::omega_delta(p.delta());
    const double eta = p.update_rate;
    const int A = p.age_threshold;
    if (A == 0) return std::exp(-k * eta);
    double P = 1.0;
    std::vector<double> history;
    for (int it = 0; it < max_iterations; ++it) {
        const double next = std::exp(-k * eta / (1.0 + A * eta * P));
        const double step = next - P;
        history.push_back(std::abs(step));
        P += 0.5 * step;
        if (std::abs(step) < tol) return next;
    }
    throw NumericalError("success_prob_approx did not converge", history);
}

/// 1 - k eta / (1 + A eta), clamped to [0, 1].
inline double success_prob_large_threshold(const SystemParams& p)
{
    const double k = p.interference_scale() * special::omega_delta(p.delta());
    return std::clamp(1.0 - k * p.update_rate / (1.0 + p.age_threshold * p.update_rate), 0.0, 1.0);
}

/// Network average AoI from the activity probability phi.
inline double avg_aoi(const SystemParams& p, double phi)
{
    const double eta = p.update_rate;
    if (!(phi > 0.0)) return divergent;
    if (phi > eta * (1.0 + 1e-12)) throw std::invalid_argument("avg_aoi: phi must not exceed the update rate");
    if (phi >= 1.0) return divergent;
    const double d = p.delta();
    const double expo =
        p.noise_term() + p.interference_scale() * special::omega_delta(d) * phi / std::pow(1.0 - phi, 1.0 - d);
    return (p.age_threshold + 1) / 2.0 * (1.0 - phi / eta) + std::exp(expo) / eta;
}

/// E[1 / mu] from the moment formula at m = -1, keeping each atom's activity.
inline double inverse_service_rate_moment(const ServiceRateDistribution& F, const SystemParams& p)
{
    const auto atoms = ActivityAtoms::from(F, p.update_rate, p.age_threshold);
    double s = 0.0;
    for (std::size_t a = 0; a < atoms.c.size(); ++a) {
        const double c = atoms.c[a];
        if (c >= 1.0) return divergent;
        s += atoms.mass[a] * c * std::pow(1.0 - c, p.delta() - 1.0);
    }
    return std::exp(p.noise_term() + p.interference_scale() * special::omega_delta(p.delta()) * s);
}

/// Network average AoI with E[1/mu] taken from the m = -1 moment of F.
inline double avg_aoi_from_distribution(const SystemParams& p, const ServiceRateDistribution& F)
{
    const double phi = activity_phi(F, p.update_rate, p.age_threshold);
    const double inv = inverse_service_rate_moment(F, p);
    if (is_divergent(inv)) return divergent;
    return (p.age_threshold + 1) / 2.0 * (1.0 - phi / p.update_rate) + inv / p.update_rate;
}

/// No interferers: every link has mu = exp(-theta r^alpha / rho).
inline double avg_aoi_sparse(const SystemParams& p)
{
    return cond_avg_aoi(p.age_threshold, p.update_rate, p.noise_limited_rate());
}

/// d/dA of avg_aoi_sparse, treating A as continuous. Never negative.
inline double avg_aoi_sparse_threshold_slope(const SystemParams& p)
{
    const double x = p.update_rate * p.noise_limited_rate();
    const double q = 1.0 + p.age_threshold * x;
    return 0.5 - (1.0 - x) / (2.0 * q * q);
}

/// Slotted ALOHA (A = 0) closed form.
inline double avg_aoi_no_threshold(const SystemParams& p)
{
    const double eta = p.update_rate;
    if (eta >= 1.0) return divergent;
    const double d = p.delta();
    return std::exp(p.noise_term() + p.interference_scale() * special::omega_delta(d) * eta / std::pow(1.0 - eta, 1.0 - d)) /
           eta;
}

/// Root of k eta (1 - delta eta) (1 - eta)^{delta - 2} = 1 on (0, min(1, 1/delta)).
inline double optimal_update_rate_no_threshold(const SystemParams& p, double tol = 1e-12)
{
    const double k = p.interference_scale() * special::omega_delta(p.delta());
    if (!(k > 0.0)) throw std::invalid_argument("optimal_update_rate_no_threshold: needs interference");
    const double d = p.delta();
    const double hi = std::min(1.0, 1.0 / d);
    auto g = [&](double eta) {
        // log form keeps the pole at eta = 1 finite
        return std::log(k) + std::log(eta) + std::log1p(-d * eta) + (d - 2.0) * std::log1p(-eta);
    };
    const double a = 1e-12, b = hi * (1.0 - 1e-12);
    if (g(a) * g(b) > 0.0) throw NumericalError("optimal_update_rate_no_threshold: no sign change on the bracket");
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(
        g, a, b, [tol](double x, double y) { return std::abs(x - y) < tol; }, iters);
    return 0.5 * (r.first + r.second);
}

/// Upper bound on the average AoI when every eligible source transmits (eta = 1).
inline double avg_aoi_aggressive_bound(const SystemParams& p, double ps)
{
    if (!(ps > 0.0 && ps <= 1.0)) throw std::invalid_argument("avg_aoi_aggressive_bound: P_s must be in (0, 1]");
    const double d = p.delta();
    return p.age_threshold / 2.0 +
           std::exp(p.noise_term() + p.interference_scale() * special::omega_delta(d) / std::pow(ps / 2.0, 1.0 - d));
}

inline double avg_aoi_large_threshold_asymptote(int A) { return A / 2.0; }

struct SolverDiagnostics {
    int iterations = 0;
    double final_residual = 0.0;
    std::vector<double> residual_history;
    double quadrature_error = 0.0; ///< largest inversion error estimate in the last iteration
    double omega_used = 0.0;       ///< inversion frequency range in the last iteration
    int series_terms_used = 0;     ///< k-series cross-check of the kernel at w = 1 (0 if skipped)
    double series_kernel_gap = 0.0;
};

struct MetaDistributionSolution {
    ServiceRateDistribution F;
    SolverDiagnostics diagnostics;
};

namespace detail {

/// Mean interferer activity above which the configured frequency range is used as is.
inline constexpr double reference_activity = 0.15;

/// Largest stretch applied to the trapezoid step.
inline constexpr double max_step_stretch = 20.0;

/// min over t of u^t E[mu^-t] >= P(mu < u), from real negative moments.
inline double chernoff_cdf_bound(const ServiceRateMoments& src, const SystemParams& p, double lu)
{
    double best = 1.0;
    for (double t : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
        const double logm = t * p.noise_term() - p.interference_scale() * src.kernel()(cplx(-t, 0.0)).real();
        if (std::isfinite(logm)) best = std::min(best, std::exp(t * lu + logm));
    }
    return best;
}

/// One application of the fixed-point map: F -> invert(moments(F)).
///
/// The spread of log mu shrinks in proportion to the interferer activity, so
/// the frequency range, step and panel width are first stretched by
/// reference_activity / (mean activity) when that ratio exceeds 1. A
/// stretched step shortens the aliasing period 2 pi / h in log u; grid points
/// more than 0.45 periods below the top are then assigned 0 with a Chernoff
/// bound as their error, or the step is left unstretched when that bound is
/// not below tolerance. The range is finally doubled (up to 16 times) while
/// the inversion error estimate is above tolerance.
inline std::vector<double> apply_map(const ServiceRateDistribution& F, const SystemParams& p,
                                     const MomentEngineConfig& cfg, double& quad_err, double& omega_used)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const auto atoms = ActivityAtoms::from(F, p.update_rate, p.age_threshold);
    const double top = F.top();
    const double lref = std::log(top);
    MomentEngineConfig c = cfg;
    const ServiceRateMoments probe(atoms, p, 1.0);
    double activity = 0.0;
    for (std::size_t a = 0; a < atoms.c.size(); ++a) activity += atoms.mass[a] * atoms.c[a];
    std::size_t first = 1; // first grid index handed to the inversion
    double low_bound = 0.0;
    if (activity > 0.0 && activity < reference_activity) {
        const double stretch = reference_activity / activity;
        c.quadrature_max_omega *= stretch;
        const double step_stretch = std::min(stretch, max_step_stretch);
        const double lcut = lref - 0.45 * two_pi / (cfg.omega_step * step_stretch);
        std::size_t k = 1;
        while (k < F.size() && std::log(F.grid[k]) < lcut) ++k;
        double bound = 0.0;
        if (k > 1) bound = chernoff_cdf_bound(probe, p, std::log(F.grid[k - 1]));
        // mass a full period below the evaluated points aliases onto them
        const double alias = chernoff_cdf_bound(probe, p, lref - 0.55 * two_pi / (cfg.omega_step * step_stretch));
        if (std::max(bound, alias) <= 0.1 * cfg.quadrature_tol) {
            c.omega_step *= step_stretch;
            c.panel_width *= step_stretch;
            first = k;
            low_bound = std::max(bound, alias);
        }
    }
    std::vector<double> u(F.grid.begin() + static_cast<std::ptrdiff_t>(first), F.grid.end());
    const double base_omega = c.quadrature_max_omega;
    GilPelaezOutput r;
    for (;;) {
        const ServiceRateMoments src(atoms, p, c.quadrature_max_omega);
        r = gil_pelaez(src, u, c, top);
        if (r.max_error() + low_bound <= cfg.quadrature_tol || c.quadrature_max_omega >= 16.0 * base_omega) break;
        c.quadrature_max_omega *= 2.0;
    }
    std::vector<double> out(F.size(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) out[i + first] = r.cdf[i];
    quad_err = r.max_error() + low_bound;
    omega_used = c.quadrature_max_omega;
    isotonic_project(out);
    return out;
}

} // namespace detail

/// Discretized F(u) = P(mu < u) solving the meta-distribution fixed point.
inline MetaDistributionSolution solve_meta_distribution(const SystemParams& p, const MomentEngineConfig& cfg = {})
{
    p.validate();
    cfg.validate();
    const double top = p.noise_limited_rate();
    MetaDistributionSolution sol;
    auto& diag = sol.diagnostics;
    ServiceRateDistribution F;
    F.grid = ServiceRateDistribution::make_grid(static_cast<std::size_t>(cfg.grid_points), top);
    if (p.density == 0.0) {
        F.cdf.assign(F.size(), 0.0);
        diag.iterations = 1;
        sol.F = std::move(F);
        return sol;
    }
    // Start from the solution with F-independent activity.
    {
        SystemParams p0 = p;
        p0.age_threshold = 0;
        F.cdf.assign(F.size(), 0.0);
        double qe = 0.0, om = 0.0;
        F.cdf = detail::apply_map(F, p0, cfg, qe, om);
    }
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        double qe = 0.0, om = 0.0;
        const auto T = detail::apply_map(F, p, cfg, qe, om);
        double res = 0.0;
        for (std::size_t k = 0; k < F.size(); ++k) res = std::max(res, std::abs(T[k] - F.cdf[k]));
        diag.residual_history.push_back(res);
        diag.iterations = it;
        diag.final_residual = res;
        diag.quadrature_error = qe;
        diag.omega_used = om;
        if (qe > cfg.quadrature_tol)
            throw NumericalError("inversion error estimate " + std::to_string(qe) + " exceeds tolerance",
                                 diag.residual_history);
        if (res < cfg.fixed_point_tol) {
            F.cdf = T;
            break;
        }
        std::vector<double> next(F.size());
        for (std::size_t k = 0; k < F.size(); ++k) next[k] = (1.0 - cfg.damping) * F.cdf[k] + cfg.damping * T[k];
        isotonic_project(next);
        F.cdf = std::move(next);
        if (it == cfg.max_iterations)
            throw NumericalError("meta-distribution fixed point did not converge in " + std::to_string(it) +
                                     " iterations",
                                 diag.residual_history);
    }
    // Cross-check the integral kernel against the k-series where the series is well conditioned.
    try {
        const auto atoms = ActivityAtoms::from(F, p.update_rate, p.age_threshold);
        const InterferenceKernel kernel(atoms, p.delta(), cfg.quadrature_max_omega);
        const auto s = series_sum(cplx(0.0, 1.0), atoms, p.delta(), cfg);
        diag.series_terms_used = s.terms_used;
        diag.series_kernel_gap = std::abs(special::omega_delta(p.delta()) * s.value - kernel(cplx(0.0, 1.0)));
    } catch (const NumericalError&) {
        diag.series_terms_used = 0;
    }
    sol.F = std::move(F);
    return sol;
}

struct AnalyticResult {
    ServiceRateDistribution meta_dist;
    double phi = 0.0;
    double success_prob = 0.0;
    double success_prob_approx = 0.0;
    double avg_aoi = 0.0;         ///< closed form in phi
    double avg_aoi_moment = 0.0;  ///< E[1/mu] from the m = -1 moment of F
    double mean_service_rate = 0.0;
    double first_moment = 0.0;    ///< moment(1) from the model, to compare with mean_service_rate
    SolverDiagnostics diagnostics;
};

inline AnalyticResult analyze(const SystemParams& p, const MomentEngineConfig& cfg = {})
{
    auto sol = solve_meta_distribution(p, cfg);
    AnalyticResult r;
    r.meta_dist = std::move(sol.F);
    r.diagnostics = std::move(sol.diagnostics);
    r.phi = activity_phi(r.meta_dist, p.update_rate, p.age_threshold);
    r.success_prob = success_prob(r.phi, p);
    r.success_prob_approx = success_prob_approx(p);
    r.avg_aoi = avg_aoi(p, r.phi);
    r.avg_aoi_moment = avg_aoi_from_distribution(p, r.meta_dist);
    r.mean_service_rate = r.meta_dist.mean();
    r.first_moment = moment(1.0, r.meta_dist, p, cfg).real();
    return r;
}

} // namespace tsa::analytics
