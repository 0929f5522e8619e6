#pragma once

// CDF recovery from complex moments:
//
//   F(u) = P(X < u) = 1/2 - (1/pi) int_0^inf Im{ u^{-j w} E[X^{j w}] } dw / w.
//
// A moment source provides log E[X^{j w}]. Two rules are available: the
// trapezoid rule on a uniform w grid (the integrand is even and smooth in w,
// so the error is aliasing at period 2 pi / h in log u) and adaptive
// Gauss-Kronrod panels. The tail beyond the last node is integrated to first
// order from the local log-derivative of the moment, and contributes to the
// error estimate.
//
// When the caller knows the upper support point `ref` of X and the moments
// are close to those of a point mass there (sparse networks), the point-mass
// part is inverted exactly and only the remainder is integrated numerically.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "moments.hpp"

namespace tsa::analytics {

template <class S>
concept MomentSource = requires(const S& s, double w) {
    { s.log_moment(w) } -> std::convertible_to<cplx>;
};

template <class S>
concept GridMomentSource = MomentSource<S> && requires(const S& s, double h, std::size_t n, std::vector<cplx>& out) {
    s.log_moment_grid(h, n, out);
};

template <class S>
concept MeanLogSource = MomentSource<S> && requires(const S& s) {
    { s.mean_log() } -> std::convertible_to<double>;
};

/// Adapts a callable w -> log E[X^{j w}].
template <class Fn>
struct LogMomentFn {
    Fn fn;
    cplx log_moment(double w) const { return fn(w); }
};
template <class Fn>
LogMomentFn(Fn) -> LogMomentFn<Fn>;

struct GilPelaezOutput {
    std::vector<double> cdf;
    std::vector<double> error; ///< per-point error estimate
    double omega_end = 0.0;
    bool reference_subtracted = false;
    std::size_t nodes = 0;

    double max_error() const { return error.empty() ? 0.0 : *std::max_element(error.begin(), error.end()); }
};

namespace detail {

template <MomentSource S>
double mean_log(const S& src)
{
    if constexpr (MeanLogSource<S>) {
        return src.mean_log();
    } else {
        constexpr double eps = 1e-5;
        return src.log_moment(eps).imag() / eps;
    }
}

inline double wrap_phase(double x)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return x - two_pi * std::round(x / two_pi);
}

/// Log of the integrand's complex amplitude near the truncation point, and its slope.
struct TailModel {
    cplx value;  ///< V(omega_end)
    cplx slope;  ///< d log V / d omega at omega_end
};

/// First-order tail: Im int_W^inf V(w) e^{-j w lu} / w dw, with V(w) ~ V(W) e^{slope (w - W)}.
inline void tail_term(const TailModel& t, double W, double lu, double& value, double& err)
{
    const cplx rot = std::exp(cplx(0.0, -W * lu));
    const cplx kappa = cplx(0.0, lu) - t.slope;
    const double amp = std::abs(t.value);
    if (amp == 0.0) {
        value = 0.0;
        err = 0.0;
        return;
    }
    if (std::abs(kappa) * W < 1.0) {
        value = 0.0;
        err = amp;
        return;
    }
    const cplx T = t.value * rot / (W * kappa);
    value = T.imag();
    err = std::abs(T) * 2.0 / (W * std::abs(kappa));
}

inline cplx log_ratio(cplx a, cplx b)
{
    // log(a / b) with the phase wrapped to (-pi, pi]
    const double re = std::log(std::abs(a)) - std::log(std::abs(b));
    const double im = wrap_phase(std::arg(a) - std::arg(b));
    return {re, im};
}

// QUADPACK G7-K15 tables.
inline constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                  0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                  0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                  0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                  0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                  0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                  0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                 0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

} // namespace detail

/// Invert at every u in `u`. Values of u <= 0 give 0.
template <MomentSource S>
GilPelaezOutput gil_pelaez(const S& src, std::span<const double> u, const MomentEngineConfig& cfg,
                           std::optional<double> reference_atom = std::nullopt)
{
    constexpr double pi = std::numbers::pi;
    const double W = cfg.quadrature_max_omega;
    const double meanlog = detail::mean_log(src);
    GilPelaezOutput out;
    out.cdf.assign(u.size(), 0.0);
    out.error.assign(u.size(), 0.0);

    // Decide whether to split off a point mass at the reference atom.
    const double lref = reference_atom ? std::log(*reference_atom) : 0.0;
    auto reference = [&](double w) { return std::exp(cplx(0.0, w * lref)); };
    cplx m_end = std::exp(src.log_moment(W));
    bool subtract = false;
    if (reference_atom) subtract = std::abs(m_end - reference(W)) < std::abs(m_end);
    out.reference_subtracted = subtract;

    // Complex amplitude V(w) = E[X^{jw}] (minus the reference part when subtracted).
    auto amplitude = [&](cplx logm, double w) {
        cplx v = std::exp(logm);
        if (subtract) v -= reference(w);
        return v;
    };
    const double g0_base = subtract ? meanlog - lref : meanlog; // integrand limit at w -> 0 is g0_base - lu (plain)

    auto finish = [&](std::size_t i, double lu, double integral, double err) {
        double F;
        if (subtract) {
            F = (lu > lref ? 1.0 : 0.0) - integral / pi;
        } else {
            F = 0.5 - integral / pi;
        }
        out.cdf[i] = std::clamp(F, 0.0, 1.0);
        out.error[i] = err / pi;
    };

    if (cfg.quadrature_rule == QuadratureRule::trapezoid) {
        const double h = cfg.omega_step;
        std::size_t K = static_cast<std::size_t>(std::ceil(W / (2.0 * h))) * 2;
        std::vector<cplx> logm;
        if constexpr (GridMomentSource<S>) {
            src.log_moment_grid(h, K + 1, logm);
        } else {
            logm.resize(K + 1);
            for (std::size_t k = 0; k <= K; ++k) logm[k] = src.log_moment(h * static_cast<double>(k));
        }
        std::vector<cplx> V(K + 1);
        for (std::size_t k = 0; k <= K; ++k) V[k] = amplitude(logm[k], h * static_cast<double>(k));
        // Drop the negligible end of the grid.
        std::size_t Keff = K;
        while (Keff > 4 && std::abs(V[Keff]) < 1e-17 && std::abs(V[Keff - 1]) < 1e-17) --Keff;
        if (Keff % 2) ++Keff;
        const double Wend = h * static_cast<double>(Keff);
        detail::TailModel tail{V[Keff], detail::log_ratio(V[Keff], V[Keff - 1]) / h};
        if (std::abs(V[Keff]) == 0.0 || std::abs(V[Keff - 1]) == 0.0) tail.slope = cplx(-1e300, 0.0);
        out.omega_end = Wend;
        out.nodes = Keff + 1;

        std::vector<double> inv_w(Keff + 1, 0.0);
        for (std::size_t k = 1; k <= Keff; ++k) inv_w[k] = 1.0 / (h * static_cast<double>(k));

        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!(u[i] > 0.0)) {
                out.cdf[i] = 0.0;
                continue;
            }
            const double lu = std::log(u[i]);
            const cplx step = std::exp(cplx(0.0, -h * lu));
            cplx rot = 1.0;
            const double g0 = subtract ? g0_base : meanlog - lu;
            double s_all = 0.5 * g0, s_even = 0.5 * g0;
            double gk = 0.0;
            for (std::size_t k = 1; k <= Keff; ++k) {
                rot *= step;
                if ((k & 63) == 0) rot = std::exp(cplx(0.0, -h * static_cast<double>(k) * lu));
                gk = (V[k] * rot).imag() * inv_w[k];
                if (k < Keff) {
                    s_all += gk;
                    if (k % 2 == 0) s_even += gk;
                }
            }
            s_all += 0.5 * gk;
            s_even += 0.5 * gk;
            const double ih = h * s_all;
            const double i2h = 2.0 * h * s_even;
            double tv = 0, te = 0;
            detail::tail_term(tail, Wend, lu, tv, te);
            finish(i, lu, ih + tv, std::abs(ih - i2h) + te);
        }
        return out;
    }

    // Adaptive Gauss-Kronrod panels.
    const std::size_t n = u.size();
    std::vector<double> lu(n);
    for (std::size_t i = 0; i < n; ++i) lu[i] = u[i] > 0.0 ? std::log(u[i]) : 0.0;
    std::vector<double> integral(n, 0.0), err(n, 0.0);
    const double panel_tol = 0.1 * cfg.quadrature_tol * pi * cfg.panel_width / W;
    std::vector<double> kr(n), ga(n);

    auto eval_panel = [&](double a, double b) {
        const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
        std::fill(kr.begin(), kr.end(), 0.0);
        std::fill(ga.begin(), ga.end(), 0.0);
        for (int j = 0; j < 15; ++j) {
            const int idx = j < 8 ? j : 14 - j;
            const double x = j < 8 ? -detail::xgk[idx] : detail::xgk[idx];
            if (j == 7) continue; // center handled below
            const double w = c + hw * x;
            const cplx v = amplitude(src.log_moment(w), w);
            for (std::size_t i = 0; i < n; ++i) {
                const double g = (v * std::exp(cplx(0.0, -w * lu[i]))).imag() / w;
                kr[i] += detail::wgk[idx] * g;
                if (idx % 2 == 1) ga[i] += detail::wg[idx / 2] * g;
            }
            ++out.nodes;
        }
        {
            const double w = c;
            const cplx v = amplitude(src.log_moment(w), w);
            for (std::size_t i = 0; i < n; ++i) {
                const double g = (v * std::exp(cplx(0.0, -w * lu[i]))).imag() / w;
                kr[i] += detail::wgk[7] * g;
                ga[i] += detail::wg[3] * g;
            }
            ++out.nodes;
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            kr[i] *= hw;
            ga[i] *= hw;
            worst = std::max(worst, std::abs(kr[i] - ga[i]));
        }
        return worst;
    };

    struct Panel {
        double a, b;
        int depth;
    };
    std::vector<Panel> stack;
    for (double a = 0.0; a < W; a += cfg.panel_width) stack.push_back({a, std::min(W, a + cfg.panel_width), 0});
    std::reverse(stack.begin(), stack.end());
    while (!stack.empty()) {
        const Panel p = stack.back();
        stack.pop_back();
        const double worst = eval_panel(p.a, p.b);
        const double tol = panel_tol * (p.b - p.a) / cfg.panel_width;
        if (worst > tol && p.depth < 10) {
            const double mid = 0.5 * (p.a + p.b);
            stack.push_back({mid, p.b, p.depth + 1});
            stack.push_back({p.a, mid, p.depth + 1});
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            integral[i] += kr[i];
            err[i] += std::abs(kr[i] - ga[i]);
        }
    }
    const double dw = 1e-3;
    const cplx va = amplitude(src.log_moment(W), W);
    const cplx vb = amplitude(src.log_moment(W - dw), W - dw);
    detail::TailModel tail{va, (std::abs(va) > 0 && std::abs(vb) > 0) ? detail::log_ratio(va, vb) / dw : cplx(-1e300)};
    out.omega_end = W;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(u[i] > 0.0)) {
            out.cdf[i] = 0.0;
            continue;
        }
        double tv = 0, te = 0;
        detail::tail_term(tail, W, lu[i], tv, te);
        finish(i, lu[i], integral[i] + tv, err[i] + te);
    }
    return out;
}

/// Single-point inversion; throws NumericalError when the error estimate exceeds quadrature_tol.
template <MomentSource S>
double gil_pelaez_cdf(double u, const S& src, const MomentEngineConfig& cfg)
{
    if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("gil_pelaez_cdf: u must be in (0, 1]");
    const double uu[1] = {u};
    const auto r = gil_pelaez(src, std::span<const double>(uu, 1), cfg);
    if (r.error[0] > cfg.quadrature_tol)
        throw NumericalError("Gil-Pelaez quadrature error estimate " + std::to_string(r.error[0]) + " exceeds tolerance",
                             r.error);
    return r.cdf[0];
}

} // namespace tsa::analytics
