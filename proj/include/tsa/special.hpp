#pragma once

// Special functions and quadrature rules used by the analytical engine.

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

namespace tsa::special {

using cplx = std::complex<double>;

/// log sin(pi z), stable for large |Im z|.
inline cplx log_sin_pi(cplx z)
{
    constexpr double pi = std::numbers::pi;
    const cplx i(0.0, 1.0);
    if (std::abs(z.imag()) < 1.0) return std::log(std::sin(pi * z));
    if (z.imag() > 0.0) {
        // sin(pi z) = e^{-i pi z} (e^{2 i pi z} - 1) / (2i)
        return -i * pi * z + std::log((std::exp(2.0 * i * pi * z) - 1.0) / (2.0 * i));
    }
    return std::conj(log_sin_pi(std::conj(z)));
}

/// log Gamma(z) for complex z (Lanczos, g = 7). The branch is not continuous
/// across the negative real axis; callers only exponentiate differences.
inline cplx lgamma(cplx z)
{
    static constexpr double g = 7.0;
    static constexpr double coef[9] = {0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                                       771.32342877765313,   -176.61502916214059,   12.507343278686905,
                                       -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    constexpr double pi = std::numbers::pi;
    if (z.real() < 0.5) {
        // reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return std::log(pi) - log_sin_pi(z) - lgamma(1.0 - z);
    }
    z -= 1.0;
    cplx x = coef[0];
    for (int i = 1; i < 9; ++i) x += coef[i] / (z + static_cast<double>(i));
    const cplx t = z + g + 0.5;
    return 0.5 * std::log(2.0 * pi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

/// z (z-1) ... (z-k+1) / k!, with value 1 at k = 0.
inline cplx generalized_binomial(cplx z, int k)
{
    if (k < 0) throw std::invalid_argument("generalized_binomial: k must be >= 0");
    cplx out = 1.0;
    for (int i = 0; i < k; ++i) out *= (z - static_cast<double>(i)) / static_cast<double>(i + 1);
    return out;
}

/// pi delta / sin(pi delta); the Rayleigh interference constant.
inline double omega_delta(double delta)
{
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("omega_delta: delta must be in (0, 1)");
    const double x = std::numbers::pi * delta;
    return x / std::sin(x);
}

/// binom(delta - 1, k - 1) for k = 1..K (index 0 holds k = 1). Alternates in sign.
inline std::vector<double> binomial_delta_coefficients(double delta, int K)
{
    std::vector<double> b(static_cast<std::size_t>(std::max(K, 0)));
    if (K <= 0) return b;
    b[0] = 1.0;
    for (int k = 1; k < K; ++k) b[k] = b[k - 1] * (delta - k) / k;
    return b;
}

/// Integral over v in (0, inf) of (1 + v^{1/delta})^{-k}, in closed form
/// delta * B(delta, k - delta).
inline double interference_integral(double delta, int k)
{
    if (k < 1) throw std::invalid_argument("interference_integral: k must be >= 1");
    return delta * std::exp(std::lgamma(delta) + std::lgamma(k - delta) - std::lgamma(static_cast<double>(k)));
}

/// Gauss quadrature rule on [0, 1] for the weight t^{-delta} (1 - t)^{delta}.
/// The weights sum to B(1 - delta, 1 + delta) = omega_delta(delta).
struct JacobiRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch for the Jacobi weight (1-x)^a (1+x)^b on [-1, 1], mapped to [0, 1].
inline JacobiRule gauss_jacobi_unit(int n, double a, double b)
{
    if (n < 1) throw std::invalid_argument("gauss_jacobi_unit: n must be >= 1");
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(std::max(n - 1, 1));
    const double ab = a + b;
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + ab;
        diag(k) = (k == 0) ? (b - a) / (ab + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    }
    for (int k = 1; k < n; ++k) {
        const double s = 2.0 * k + ab;
        const double num = 4.0 * k * (k + a) * (k + b) * (k + ab);
        const double den = s * s * (s + 1.0) * (s - 1.0);
        sub(k - 1) = std::sqrt(num / den);
    }
    const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                std::lgamma(ab + 2.0));
    JacobiRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    if (n == 1) {
        rule.nodes[0] = 0.5 * (1.0 + diag(0));
        rule.weights[0] = mu0 / std::pow(2.0, ab + 1.0);
        return rule;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
    const double scale = 1.0 / std::pow(2.0, ab + 1.0);
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        rule.nodes[i] = 0.5 * (1.0 + es.eigenvalues()(i));
        rule.weights[i] = mu0 * v0 * v0 * scale;
    }
    return rule;
}

/// Cached rule for weight t^{-delta} (1-t)^{delta}; thread-safe.
inline const JacobiRule& interference_rule(double delta, int n)
{
    static std::mutex mtx;
    static std::map<std::pair<double, int>, JacobiRule> cache;
    std::lock_guard lock(mtx);
    auto key = std::make_pair(delta, n);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, gauss_jacobi_unit(n, delta, -delta)).first;
    return it->second;
}

} // namespace tsa::special
