#pragma once

// Moments of the service rate mu under the PGFL/fixed-point model:
//
//   E[mu^m] = exp(-m * theta r^a / rho - lambda pi r^2 theta^d * S(m)),
//   S(m)    = Omega_d * sum_k binom(m, k) binom(d - 1, k - 1) Q_k,
//   Q_k     = int_0^1 (eta / (1 + A eta s))^k dF(s).
//
// Three evaluations of S are provided:
//   * series_kernel:   the k-series above, truncated and monitored;
//   * integer_kernel:  the finite binomial expansion for integer m >= 0, using
//                      (-1)^{k+1} int_0^inf (1 + v^{a/2})^{-k} dv in place of
//                      binom(d - 1, k - 1) Omega_d;
//   * InterferenceKernel: per atom c = eta / (1 + A eta s) the series equals
//                      m c int_0^1 t^{-d} (1-t)^d (1 - c t)^{m-1} dt, which stays
//                      well conditioned for large |m| where the series cancels.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "params.hpp"
#include "special.hpp"

namespace tsa::analytics {

using cplx = std::complex<double>;

enum class QuadratureRule { trapezoid, gauss_kronrod };

struct MomentEngineConfig {
    int series_cutoff = 64;
    double series_tol = 1e-12;
    double quadrature_max_omega = 200.0;
    QuadratureRule quadrature_rule = QuadratureRule::trapezoid;
    double omega_step = 0.05;   ///< trapezoid spacing; aliasing period 2 pi / step in log u
    double panel_width = 1.0;   ///< initial Gauss-Kronrod panel width
    double quadrature_tol = 1e-3;
    double fixed_point_tol = 1e-4;
    double damping = 0.5;
    int max_iterations = 100;
    int grid_points = 200;

    void validate() const
    {
        auto fail = [](const std::string& m) { throw std::invalid_argument("MomentEngineConfig: " + m); };
        if (series_cutoff < 1) fail("series_cutoff must be >= 1");
        if (!(series_tol > 0)) fail("series_tol must be > 0");
        if (!(quadrature_max_omega > 0)) fail("quadrature_max_omega must be > 0");
        if (!(omega_step > 0) || omega_step >= quadrature_max_omega) fail("omega_step out of range");
        if (!(panel_width > 0)) fail("panel_width must be > 0");
        if (!(quadrature_tol > 0)) fail("quadrature_tol must be > 0");
        if (!(fixed_point_tol > 0)) fail("fixed_point_tol must be > 0");
        if (!(damping > 0 && damping <= 1)) fail("damping must be in (0, 1]");
        if (max_iterations < 1) fail("max_iterations must be >= 1");
        if (grid_points < 3) fail("grid_points must be >= 3");
    }
};

/// Point masses of the interferer activity factor c = eta / (1 + A eta s) under dF(s).
struct ActivityAtoms {
    std::vector<double> c;
    std::vector<double> mass;

    static ActivityAtoms from(const ServiceRateDistribution& F, double eta, int A)
    {
        ActivityAtoms out;
        if (A == 0) {
            out.c.push_back(eta);
            out.mass.push_back(1.0);
            return out;
        }
        auto push = [&](double s, double m) {
            if (m <= 0.0) return;
            out.c.push_back(eta / (1.0 + A * eta * s));
            out.mass.push_back(m);
        };
        if (F.cdf.front() > 0.0) push(F.grid.front(), F.cdf.front());
        for (std::size_t k = 1; k < F.size(); ++k) push(0.5 * (F.grid[k - 1] + F.grid[k]), F.cdf[k] - F.cdf[k - 1]);
        push(F.top(), F.atom_mass());
        return out;
    }

    static ActivityAtoms point(double c)
    {
        return ActivityAtoms{{c}, {1.0}};
    }

    /// Q_k for k = 1..K.
    std::vector<double> power_moments(int K) const
    {
        std::vector<double> q(static_cast<std::size_t>(K), 0.0);
        for (std::size_t a = 0; a < c.size(); ++a) {
            double p = 1.0;
            for (int k = 0; k < K; ++k) {
                p *= c[a];
                q[k] += mass[a] * p;
                if (p < 1e-300) break;
            }
        }
        return q;
    }

    double total_mass() const
    {
        double s = 0;
        for (double m : mass) s += m;
        return s;
    }
};

struct SeriesValue {
    cplx value;
    int terms_used = 0;
};

/// sum_k binom(m, k) binom(d - 1, k - 1) Q_k, without the Omega_d factor.
/// Throws NumericalError (carrying |partial sums|) if the series has not met
/// series_tol within series_cutoff terms, or if cancellation has destroyed
/// the result (largest term exceeding the sum by more than 1e8).
inline SeriesValue series_sum(cplx m, const ActivityAtoms& atoms, double delta, const MomentEngineConfig& cfg)
{
    const int K = cfg.series_cutoff;
    const auto q = atoms.power_moments(K);
    const auto b = special::binomial_delta_coefficients(delta, K);
    const bool nonneg_int = m.imag() == 0.0 && m.real() >= 0.0 && std::floor(m.real()) == m.real();
    cplx binom = 1.0;
    cplx sum = 0.0;
    double max_term = 0.0;
    std::vector<double> partial;
    partial.reserve(static_cast<std::size_t>(K));
    for (int k = 1; k <= K; ++k) {
        binom *= (m - static_cast<double>(k - 1)) / static_cast<double>(k);
        const cplx term = binom * b[k - 1] * q[k - 1];
        sum += term;
        partial.push_back(std::abs(sum));
        max_term = std::max(max_term, std::abs(term));
        const bool exact_end = nonneg_int && k >= m.real();
        if (exact_end || std::abs(term) <= cfg.series_tol * std::abs(sum) || q[k - 1] == 0.0) {
            if (max_term > 1e8 * std::max(std::abs(sum), 1e-300))
                throw NumericalError("moment series: catastrophic cancellation at |m| = " + std::to_string(std::abs(m)),
                                     partial);
            return {sum, k};
        }
    }
    throw NumericalError("moment series did not converge within " + std::to_string(K) + " terms", partial);
}

/// Finite binomial form for integer m >= 0, using the interference integrals directly.
inline double integer_sum(int m, const ActivityAtoms& atoms, double delta)
{
    if (m < 0) throw std::invalid_argument("integer_sum: m must be >= 0");
    if (m == 0) return 0.0;
    const auto q = atoms.power_moments(m);
    double sum = 0.0;
    double binom = 1.0;
    for (int k = 1; k <= m; ++k) {
        binom *= static_cast<double>(m - k + 1) / k;
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        sum += binom * sign * special::interference_integral(delta, k) * q[k - 1];
    }
    return sum;
}

/// E[mu^m] through the k-series.
inline cplx moment_from_atoms(cplx m, const ActivityAtoms& atoms, const SystemParams& p, const MomentEngineConfig& cfg,
                              int* terms_used = nullptr)
{
    if (m == cplx(0.0)) return 1.0;
    const double omega = special::omega_delta(p.delta());
    const auto s = series_sum(m, atoms, p.delta(), cfg);
    if (terms_used) *terms_used = s.terms_used;
    return std::exp(-m * p.noise_term() - p.interference_scale() * omega * s.value);
}

inline cplx moment(cplx m, const ServiceRateDistribution& F, const SystemParams& p, const MomentEngineConfig& cfg,
                   int* terms_used = nullptr)
{
    return moment_from_atoms(m, ActivityAtoms::from(F, p.update_rate, p.age_threshold), p, cfg, terms_used);
}

/// E[mu^m] for integer m >= 0 through the finite binomial expansion.
inline double moment_integer(int m, const ServiceRateDistribution& F, const SystemParams& p)
{
    const auto atoms = ActivityAtoms::from(F, p.update_rate, p.age_threshold);
    return std::exp(-m * p.noise_term() - p.interference_scale() * integer_sum(m, atoms, p.delta()));
}

/// S(m) = Omega_d * sum_k binom(m,k) binom(d-1,k-1) Q_k through its Euler-integral
/// representation, discretized with Gauss-Jacobi rules per atom. Supports
/// evaluation along m = j k h by phase recurrence for the inversion integral.
class InterferenceKernel {
public:
    /// `omega_max` sizes the per-atom rules so that the phase m log(1 - c t)
    /// stays resolved for |m| up to omega_max.
    InterferenceKernel(const ActivityAtoms& atoms, double delta, double omega_max) : delta_(delta)
    {
        for (std::size_t a = 0; a < atoms.c.size(); ++a) {
            const double c = atoms.c[a];
            const double w = atoms.mass[a];
            if (w <= 0.0 || c <= 0.0) continue;
            if (c >= 1.0 - 1e-12) {
                unit_mass_ += w;
                continue;
            }
            const double phase = omega_max * -std::log1p(-c);
            int n = 16;
            while (n < 1024 && n < 0.6 * phase + 24.0) n *= 2;
            const auto& rule = special::interference_rule(delta, n);
            for (int i = 0; i < n; ++i) {
                const double t = rule.nodes[i];
                const double one_minus = 1.0 - c * t;
                log_base_.push_back(std::log1p(-c * t));
                coeff_.push_back(w * c * rule.weights[i] / one_minus);
            }
        }
    }

    std::size_t points() const { return coeff_.size(); }

    cplx operator()(cplx m) const
    {
        if (m == cplx(0.0)) return 0.0;
        cplx acc = 0.0;
        for (std::size_t p = 0; p < coeff_.size(); ++p) acc += coeff_[p] * std::exp(m * log_base_[p]);
        acc *= m;
        if (unit_mass_ > 0.0) acc += unit_mass_ * unit_atom(m);
        return acc;
    }

    /// Values at m = j k h for k = 0..count-1.
    void on_imaginary_grid(double h, std::size_t count, std::vector<cplx>& out) const
    {
        out.assign(count, cplx(0.0));
        const std::size_t P = coeff_.size();
        std::vector<double> zr(P), zi(P), yr(P), yi(P);
        for (std::size_t p = 0; p < P; ++p) {
            zr[p] = std::cos(h * log_base_[p]);
            zi[p] = std::sin(h * log_base_[p]);
            yr[p] = coeff_[p];
            yi[p] = 0.0;
        }
        for (std::size_t k = 1; k < count; ++k) {
            double sr = 0.0, si = 0.0;
            for (std::size_t p = 0; p < P; ++p) {
                const double nr = yr[p] * zr[p] - yi[p] * zi[p];
                const double ni = yr[p] * zi[p] + yi[p] * zr[p];
                yr[p] = nr;
                yi[p] = ni;
                sr += nr;
                si += ni;
            }
            const cplx m(0.0, h * static_cast<double>(k));
            out[k] = m * cplx(sr, si);
            if (unit_mass_ > 0.0) out[k] += unit_mass_ * unit_atom(m);
        }
    }

    /// S'(0) = d S / d m at m = 0, giving E[log mu] = -noise - scale * S'(0).
    double derivative_at_zero() const
    {
        double s = 0.0;
        for (double c : coeff_) s += c;
        if (unit_mass_ > 0.0) {
            // Gamma(1-d) Gamma(m+d) / Gamma(m) ~ m Gamma(1-d) Gamma(d)
            s += unit_mass_ * special::omega_delta(delta_) / delta_;
        }
        return s;
    }

private:
    cplx unit_atom(cplx m) const
    {
        // c = 1: Omega_d m 2F1(1-m, 1-d; 2; 1) = Gamma(1-d) Gamma(m+d) / Gamma(m)
        if (m.imag() == 0.0 && m.real() <= -delta_) return -std::numeric_limits<double>::infinity();
        return std::exp(std::lgamma(1.0 - delta_) + special::lgamma(m + delta_) - special::lgamma(m));
    }

    double delta_;
    double unit_mass_ = 0.0;
    std::vector<double> log_base_;
    std::vector<double> coeff_;
};

/// log E[mu^{j w}] for the fixed-point model with a given activity measure.
class ServiceRateMoments {
public:
    ServiceRateMoments(const ActivityAtoms& atoms, const SystemParams& p, double omega_max)
        : kernel_(atoms, p.delta(), omega_max), noise_(p.noise_term()), scale_(p.interference_scale())
    {
    }

    cplx log_moment(double w) const
    {
        const cplx m(0.0, w);
        return -m * noise_ - scale_ * kernel_(m);
    }

    void log_moment_grid(double h, std::size_t count, std::vector<cplx>& out) const
    {
        kernel_.on_imaginary_grid(h, count, out);
        for (std::size_t k = 0; k < count; ++k) {
            const cplx m(0.0, h * static_cast<double>(k));
            out[k] = -m * noise_ - scale_ * out[k];
        }
    }

    double mean_log() const { return -noise_ - scale_ * kernel_.derivative_at_zero(); }

    /// Noise-limited maximum; the distribution's upper support point.
    double top() const { return std::exp(-noise_); }

    const InterferenceKernel& kernel() const { return kernel_; }

private:
    InterferenceKernel kernel_;
    double noise_;
    double scale_;
};

} // namespace tsa::analytics
