#pragma once

// Rayleigh fading, SINR and the decoding rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "geometry.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace tsa {

/// Unit-mean exponential power gain.
inline double sample_fading(Xoshiro256& rng) { return rng.exponential(); }

/// Fading per source index, for one receiver in one slot (own link included).
using FadingMap = std::unordered_map<std::size_t, double>;

/// H_own r^-alpha / (interference + 1/rho).
inline double sinr_value(double own_gain, double signal_pathloss, double interference, double inv_snr)
{
    return own_gain * signal_pathloss / (interference + inv_snr);
}

/// SINR at `receiver` with the given active set. Interferers farther than
/// `cutoff_radius` (torus distance from their source to this receiver) are ignored.
inline double sinr(std::size_t receiver, const Topology& topo, std::span<const std::size_t> active,
                   const FadingMap& fadings, const SystemParams& params,
                   double cutoff_radius = std::numeric_limits<double>::infinity())
{
    const auto need = [&](std::size_t j) {
        auto it = fadings.find(j);
        if (it == fadings.end())
            throw std::logic_error("sinr: no fading supplied for source " + std::to_string(j) + " at receiver " +
                                   std::to_string(receiver));
        return it->second;
    };
    if (std::find(active.begin(), active.end(), receiver) == active.end())
        throw std::logic_error("sinr: own source of receiver " + std::to_string(receiver) + " is not active");
    const double alpha = params.pathloss_exponent;
    const double L = topo.region.side_length;
    const Point& rx = topo.receivers.at(receiver);
    double interference = 0.0;
    for (std::size_t j : active) {
        if (j == receiver) continue;
        const double d = std::sqrt(torus_distance_sq(topo.sources.at(j), rx, L));
        if (d > cutoff_radius) continue;
        interference += need(j) * std::pow(d, -alpha);
    }
    return sinr_value(need(receiver), std::pow(topo.link_distance, -alpha), interference, 1.0 / params.snr());
}

/// Strict threshold test.
inline bool decode_success(double sinr_value, double threshold) { return sinr_value > threshold; }

} // namespace tsa
