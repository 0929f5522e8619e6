#pragma once

// Model parameters shared by the simulator and the analytical engine.
// All quantities are linear; dB conversions happen only at the config boundary.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tsa {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Transmit and noise power; the normalized SNR is their ratio (path loss excluded).
struct LinkBudget {
    double tx_power_dbm = 17.0;
    double noise_power_dbm = -90.0;

    double snr() const { return db_to_linear(tx_power_dbm - noise_power_dbm); }
};

struct SystemParams {
    double density = 5e-2;          ///< dipoles per unit area
    double link_distance = 2.5;     ///< source to own receiver
    double pathloss_exponent = 3.8; ///< > 2
    double decode_threshold = 1.0;  ///< linear SINR threshold
    LinkBudget budget{};
    double update_rate = 0.3;       ///< per-slot sampling probability once eligible
    int age_threshold = 0;          ///< silent while age <= threshold

    double delta() const { return 2.0 / pathloss_exponent; }
    double snr() const { return budget.snr(); }

    /// theta * r^alpha / rho; the per-link noise penalty in the exponent.
    double noise_term() const
    {
        return decode_threshold * std::pow(link_distance, pathloss_exponent) / snr();
    }

    /// lambda * pi * r^2 * theta^delta; the interference intensity scale.
    double interference_scale() const
    {
        return density * std::numbers::pi * link_distance * link_distance * std::pow(decode_threshold, delta());
    }

    /// Largest achievable service rate (no interferers).
    double noise_limited_rate() const { return std::exp(-noise_term()); }

    void validate() const
    {
        auto fail = [](const std::string& m) { throw std::invalid_argument("SystemParams: " + m); };
        if (!(density >= 0.0) || !std::isfinite(density)) fail("density must be >= 0");
        if (!(link_distance > 0.0)) fail("link_distance must be > 0");
        if (!(pathloss_exponent > 2.0)) fail("pathloss_exponent must be > 2");
        if (!(decode_threshold > 0.0)) fail("decode_threshold must be > 0");
        if (!(snr() > 0.0)) fail("snr must be > 0");
        if (!(update_rate > 0.0 && update_rate <= 1.0)) fail("update_rate must be in (0, 1]");
        if (age_threshold < 0) fail("age_threshold must be >= 0");
    }
};

/// Defaults used throughout the evaluation: r = 2.5, lambda = 0.05, alpha = 3.8,
/// theta = 0 dB, P_tx = 17 dBm, noise = -90 dBm.
inline SystemParams default_params(double update_rate = 0.3, int age_threshold = 0)
{
    SystemParams p;
    p.update_rate = update_rate;
    p.age_threshold = age_threshold;
    return p;
}

} // namespace tsa
