#pragma once

// Slot-synchronous simulation of age-threshold slotted ALOHA on a fixed topology.
//
// Per slot: a link is eligible when its age exceeds the threshold, eligible
// links transmit with probability eta, every active link draws fresh fading
// for its own signal and each active interferer inside the cutoff, and the
// age resets to 1 on success or grows by one otherwise. Ages are recorded at
// the start of the slot.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "channel.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace tsa {

struct LinkState {
    std::int64_t age = 1;
    std::int64_t attempts = 0;
    std::int64_t successes = 0;
    double age_sum = 0.0;
    double age_sq_sum = 0.0;
    std::int64_t active_slots = 0; ///< slots spent eligible (age > threshold)
    double pass_sum = 0.0;         ///< sum over attempts of P(success | active set)
};

struct SimConfig {
    std::int64_t horizon = 11000;              ///< total slots, warmup included
    std::optional<std::int64_t> warmup;        ///< default: max(1000, 10 (A + 1/eta))
    std::optional<double> cutoff_radius;       ///< default from cutoff_tolerance; infinity = all pairs
    double cutoff_tolerance = 5e-3;            ///< truncated mean interference relative to r^-alpha / theta
    int replications = 1;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

struct LinkStats {
    double time_avg_aoi = 0.0;
    double aoi_variance = 0.0; ///< temporal variance of this link's age
    double mu_hat = std::numeric_limits<double>::quiet_NaN();
    double mu_cond = std::numeric_limits<double>::quiet_NaN(); ///< mean over attempts of P(success | active set)
    double a_hat = 0.0;
    std::int64_t attempts = 0;
    std::int64_t successes = 0;
    std::int64_t eligible_slots = 0;
};

struct SimResult {
    std::vector<LinkStats> per_link;
    double network_avg_aoi = 0.0;
    double network_aoi_variance = 0.0;    ///< variance of the age over all links and slots
    double across_link_aoi_variance = 0.0; ///< variance of per-link time averages
    double success_fraction = 0.0;        ///< total successes / total attempts
    double mean_activity = 0.0;
    std::int64_t measured_slots = 0;
    std::int64_t warmup = 0;
    double cutoff_radius = 0.0;
    std::uint64_t seed = 0;
    std::size_t zero_attempt_links = 0;
};

inline std::int64_t default_warmup(const SystemParams& p)
{
    return std::max<std::int64_t>(1000, static_cast<std::int64_t>(std::ceil(10.0 * (p.age_threshold + 1.0 / p.update_rate))));
}

/// Radius beyond which the mean interference from all potentially active
/// sources, lambda eta 2 pi R^{2-alpha} / (alpha - 2), is below `tolerance`
/// times the decoding-level interference r^-alpha / theta. Capped below L/2.
inline double default_cutoff_radius(const SystemParams& p, const Region& region, double tolerance)
{
    const double alpha = p.pathloss_exponent;
    const double cap = region.side_length / 2.0 * (1.0 - 1e-9);
    if (p.density <= 0.0) return cap;
    const double rhs = p.decode_threshold * std::pow(p.link_distance, alpha) * 2.0 * std::numbers::pi * p.density *
                       p.update_rate / ((alpha - 2.0) * tolerance);
    return std::min(cap, std::pow(rhs, 1.0 / (alpha - 2.0)));
}

namespace detail {

struct Neighbor {
    std::uint32_t source;
    double gain;     ///< d^-alpha
    double log_pass; ///< log P(own signal survives this interferer) = -log(1 + theta r^alpha d^-alpha)
};

/// Per receiver: interfering sources within the cutoff, nearest first.
inline std::vector<std::vector<Neighbor>> interference_lists(const Topology& topo, const SystemParams& p, double cutoff)
{
    const double tra = p.decode_threshold * std::pow(topo.link_distance, p.pathloss_exponent);
    const std::size_t n = topo.size();
    const double L = topo.region.side_length;
    const double alpha = p.pathloss_exponent;
    std::vector<std::vector<Neighbor>> lists(n);
    std::vector<std::pair<double, std::uint32_t>> buf;
    const bool all_pairs = !(cutoff < L / 2);
    const CellList* index = &topo.index;
    CellList coarse;
    if (!all_pairs && cutoff > index->cell_size() * 8) {
        coarse = CellList(topo.sources, L, cutoff / 4);
        index = &coarse;
    }
    for (std::size_t i = 0; i < n; ++i) {
        buf.clear();
        auto consider = [&](std::uint32_t j) {
            if (j == i) return;
            const double d2 = torus_distance_sq(topo.sources[j], topo.receivers[i], L);
            if (all_pairs || d2 <= cutoff * cutoff) buf.emplace_back(d2, j);
        };
        if (all_pairs) {
            for (std::uint32_t j = 0; j < n; ++j) consider(j);
        } else {
            index->for_each_candidate(topo.receivers[i], cutoff, consider);
        }
        std::sort(buf.begin(), buf.end());
        lists[i].reserve(buf.size());
        for (const auto& [d2, j] : buf) {
            const double g = std::pow(d2, -alpha / 2);
            lists[i].push_back({j, g, -std::log1p(tra * g)});
        }
    }
    return lists;
}

inline LinkStats finish_link(const LinkState& s, std::int64_t slots)
{
    LinkStats out;
    const double T = static_cast<double>(slots);
    out.time_avg_aoi = s.age_sum / T;
    out.aoi_variance = std::max(0.0, s.age_sq_sum / T - out.time_avg_aoi * out.time_avg_aoi);
    out.attempts = s.attempts;
    out.successes = s.successes;
    out.eligible_slots = s.active_slots;
    out.a_hat = static_cast<double>(s.attempts) / T;
    if (s.attempts > 0) {
        out.mu_hat = static_cast<double>(s.successes) / static_cast<double>(s.attempts);
        out.mu_cond = s.pass_sum / static_cast<double>(s.attempts);
    }
    return out;
}

} // namespace detail

inline SimResult run_simulation(const Topology& topo, const SystemParams& params, const SimConfig& cfg)
{
    params.validate();
    if (topo.empty()) throw std::invalid_argument("run_simulation: empty topology");
    const std::int64_t warmup = cfg.warmup.value_or(default_warmup(params));
    if (warmup < 0 || cfg.horizon <= warmup) throw std::invalid_argument("run_simulation: horizon must exceed warmup");
    const double cutoff = cfg.cutoff_radius.value_or(default_cutoff_radius(params, topo.region, cfg.cutoff_tolerance));
    if (!(cutoff > 0.0)) throw std::invalid_argument("run_simulation: cutoff radius must be > 0");

    const std::size_t n = topo.size();
    const auto lists = detail::interference_lists(topo, params, cutoff);
    const double signal = std::pow(topo.link_distance, -params.pathloss_exponent);
    const double inv_snr = 1.0 / params.snr();
    const double theta = params.decode_threshold;
    const double eta = params.update_rate;
    const std::int64_t A = params.age_threshold;

    std::vector<LinkState> state(n);
    {
        auto rng = make_stream(cfg.master_seed, StreamPurpose::initial_age);
        const auto span = static_cast<std::uint64_t>(A + static_cast<std::int64_t>(std::ceil(1.0 / eta)));
        for (auto& s : state) s.age = 1 + static_cast<std::int64_t>(rng() % span);
    }
    auto coins = make_stream(cfg.master_seed, StreamPurpose::protocol);
    std::vector<char> active(n, 0), success(n, 0);
    std::vector<double> pass(n, 0.0);
    const double noise_log = -params.noise_term();
    std::vector<std::uint32_t> active_list;
    active_list.reserve(n);

    for (std::int64_t t = 0; t < cfg.horizon; ++t) {
        active_list.clear();
        for (std::size_t i = 0; i < n; ++i) {
            // one coin per link per slot keeps runs with different cutoffs coupled
            const double u = coins.uniform();
            active[i] = state[i].age > A && u < eta;
            if (active[i]) active_list.push_back(static_cast<std::uint32_t>(i));
        }
        for (std::uint32_t i : active_list) {
            auto rng = make_stream(cfg.master_seed, StreamPurpose::fading, static_cast<std::uint64_t>(t), i);
            const double h_own = sample_fading(rng);
            double interference = 0.0, log_pass = noise_log;
            for (const auto& nb : lists[i])
                if (active[nb.source]) {
                    interference += sample_fading(rng) * nb.gain;
                    log_pass += nb.log_pass;
                }
            success[i] = decode_success(sinr_value(h_own, signal, interference, inv_snr), theta);
            pass[i] = std::exp(log_pass);
        }
        const bool record = t >= warmup;
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = state[i];
            if (record) {
                const double a = static_cast<double>(s.age);
                s.age_sum += a;
                s.age_sq_sum += a * a;
                if (s.age > A) ++s.active_slots;
                if (active[i]) {
                    ++s.attempts;
                    s.pass_sum += pass[i];
                    if (success[i]) ++s.successes;
                }
            }
            s.age = (active[i] && success[i]) ? 1 : s.age + 1;
            success[i] = 0;
        }
    }

    SimResult res;
    res.measured_slots = cfg.horizon - warmup;
    res.warmup = warmup;
    res.cutoff_radius = cutoff;
    res.seed = cfg.master_seed;
    res.per_link.reserve(n);
    double sum_avg = 0.0, sum_sq_avg = 0.0, pooled_sq = 0.0, act = 0.0;
    std::int64_t att = 0, succ = 0;
    for (const auto& s : state) {
        const auto l = detail::finish_link(s, res.measured_slots);
        sum_avg += l.time_avg_aoi;
        sum_sq_avg += l.time_avg_aoi * l.time_avg_aoi;
        pooled_sq += s.age_sq_sum / static_cast<double>(res.measured_slots);
        act += l.a_hat;
        att += l.attempts;
        succ += l.successes;
        if (l.attempts == 0) ++res.zero_attempt_links;
        res.per_link.push_back(l);
    }
    const double N = static_cast<double>(n);
    res.network_avg_aoi = sum_avg / N;
    res.network_aoi_variance = std::max(0.0, pooled_sq / N - res.network_avg_aoi * res.network_avg_aoi);
    res.across_link_aoi_variance = std::max(0.0, sum_sq_avg / N - res.network_avg_aoi * res.network_avg_aoi);
    res.success_fraction = att > 0 ? static_cast<double>(succ) / static_cast<double>(att) : 0.0;
    res.mean_activity = act / N;
    return res;
}

/// Independent replications, each on its own topology drawn from seed master_seed + k.
inline std::vector<SimResult> run_replications(const SystemParams& params, const Region& region, const SimConfig& cfg)
{
    if (cfg.replications < 1) throw std::invalid_argument("run_replications: replications must be >= 1");
    std::vector<SimResult> out(static_cast<std::size_t>(cfg.replications));
    parallel_for(out.size(), cfg.workers, [&](std::size_t k) {
        SimConfig c = cfg;
        c.master_seed = cfg.master_seed + k;
        const auto topo = sample_topology(params, region, c.master_seed);
        out[k] = run_simulation(topo, params, c);
    });
    return out;
}

struct EmpiricalCcdf {
    std::vector<double> u;
    std::vector<double> value;
    std::size_t included = 0;
    std::size_t excluded = 0; ///< links with no attempts
};

/// Fraction of links (with at least one attempt) whose mu_hat >= u; 1 at u <= 0.
inline EmpiricalCcdf empirical_meta_ccdf(const SimResult& result, std::span<const double> grid)
{
    if (result.per_link.empty()) throw std::invalid_argument("empirical_meta_ccdf: empty result");
    std::vector<double> mu;
    EmpiricalCcdf out;
    for (const auto& l : result.per_link) {
        if (l.attempts > 0) mu.push_back(l.mu_hat);
        else ++out.excluded;
    }
    out.included = mu.size();
    if (mu.empty()) throw std::invalid_argument("empirical_meta_ccdf: no link has an attempt");
    std::sort(mu.begin(), mu.end());
    for (double u : grid) {
        out.u.push_back(u);
        if (u <= 0.0) {
            out.value.push_back(1.0);
            continue;
        }
        const auto below = std::lower_bound(mu.begin(), mu.end(), u) - mu.begin();
        out.value.push_back(static_cast<double>(mu.size() - static_cast<std::size_t>(below)) / static_cast<double>(mu.size()));
    }
    return out;
}

struct SingleLinkStats {
    double time_avg_aoi = 0.0;
    double activity = 0.0;
    double success_rate = 0.0;
};

/// One link whose every attempt succeeds with probability mu, no SINR.
inline SingleLinkStats single_link_oracle(const SystemParams& params, double mu, std::int64_t horizon, std::uint64_t seed)
{
    if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("single_link_oracle: mu must be in (0, 1]");
    const std::int64_t warmup = std::min(default_warmup(params), horizon / 10);
    const std::int64_t A = params.age_threshold;
    const double eta = params.update_rate;
    auto rng = make_stream(seed, StreamPurpose::oracle);
    const auto span = static_cast<std::uint64_t>(A + static_cast<std::int64_t>(std::ceil(1.0 / eta)));
    std::int64_t age = 1 + static_cast<std::int64_t>(rng() % span);
    double sum = 0.0;
    std::int64_t attempts = 0, successes = 0;
    for (std::int64_t t = 0; t < warmup + horizon; ++t) {
        const bool tx = age > A && rng.uniform() < eta;
        const bool ok = tx && rng.uniform() < mu;
        if (t >= warmup) {
            sum += static_cast<double>(age);
            attempts += tx;
            successes += ok;
        }
        age = ok ? 1 : age + 1;
    }
    SingleLinkStats s;
    s.time_avg_aoi = sum / static_cast<double>(horizon);
    s.activity = static_cast<double>(attempts) / static_cast<double>(horizon);
    s.success_rate = attempts ? static_cast<double>(successes) / static_cast<double>(attempts) : 0.0;
    return s;
}

} // namespace tsa
