#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "tsa/analytics.hpp"
#include "tsa/sim.hpp"

using namespace tsa;

namespace {

Topology lone_dipole() { return make_topology({{10, 10}}, {0.0}, 2.5, Region{100.0}); }

SimConfig short_run(std::int64_t horizon, std::int64_t warmup = 1000, std::uint64_t seed = 1)
{
    SimConfig c;
    c.horizon = horizon;
    c.warmup = warmup;
    c.master_seed = seed;
    return c;
}

} // namespace

TEST(SingleDipole, DeterministicCycleAtFullRate)
{
    // eta = 1, no interference: the age runs 1..A+1 and resets, mean (A+2)/2
    for (int A : {0, 1, 5, 12}) {
        const auto p = default_params(1.0, A);
        const auto r = run_simulation(lone_dipole(), p, short_run(1000 + 60060));
        EXPECT_NEAR(r.network_avg_aoi, (A + 2) / 2.0, 1e-9) << A;
        EXPECT_NEAR(r.per_link[0].a_hat, 1.0 / (A + 1), 1e-9);
        EXPECT_EQ(r.per_link[0].attempts, r.per_link[0].successes);
        EXPECT_NEAR(r.network_avg_aoi, analytics::cond_avg_aoi(A, 1.0, 1.0), 1e-9);
    }
}

TEST(SingleDipole, GeometricWaitingMatchesLinkFormula)
{
    const auto p = default_params(0.25, 3);
    const auto r = run_simulation(lone_dipole(), p, short_run(401000));
    const double mu = p.noise_limited_rate();
    EXPECT_NEAR(r.per_link[0].mu_hat, mu, 1e-3);
    EXPECT_NEAR(r.network_avg_aoi / analytics::cond_avg_aoi(3, 0.25, mu), 1.0, 0.01);
    EXPECT_NEAR(r.per_link[0].a_hat / analytics::cond_active_prob(3, 0.25, mu), 1.0, 0.01);
    EXPECT_NEAR(r.per_link[0].mu_cond, mu, 1e-12);
}

TEST(Simulation, CountersAreConsistent)
{
    const auto p = default_params(0.4, 4);
    const auto topo = sample_topology(p, Region{60.0}, 3);
    const auto r = run_simulation(topo, p, short_run(6000));
    const double T = static_cast<double>(r.measured_slots);
    for (const auto& l : r.per_link) {
        EXPECT_LE(l.successes, l.attempts);
        EXPECT_LE(l.attempts, l.eligible_slots);
        EXPECT_LE(static_cast<double>(l.eligible_slots), T);
        EXPECT_GE(l.time_avg_aoi, 1.0);
        // one success per cycle and every cycle spends A slots silent
        EXPECT_LE(static_cast<double>(l.successes) * p.age_threshold, T - l.eligible_slots + p.age_threshold);
    }
    EXPECT_EQ(r.measured_slots, 5000);
}

TEST(Simulation, NoTransmissionWhileBelowThreshold)
{
    // after a success the age restarts at 1 and never passes this threshold again
    const auto p = default_params(1.0, 100000);
    const auto topo = sample_topology(p, Region{40.0}, 2);
    const auto r = run_simulation(topo, p, short_run(3000, 0));
    std::size_t silent = 0;
    for (const auto& l : r.per_link) {
        EXPECT_LE(l.successes, 1);
        EXPECT_EQ(l.attempts, l.eligible_slots);
        if (l.successes == 0) {
            EXPECT_TRUE(l.attempts == 0 || l.attempts == 3000);
        }
        silent += l.attempts == 0;
    }
    EXPECT_GT(silent, r.per_link.size() / 2);
}

TEST(Simulation, RespectsAgeLowerBound)
{
    for (int A : {0, 3, 10}) {
        const auto p = default_params(0.5, A);
        const auto topo = sample_topology(p, Region{50.0}, 4);
        const auto r = run_simulation(topo, p, short_run(5000));
        EXPECT_GE(r.network_avg_aoi, (A + 1) / 2.0);
        for (const auto& l : r.per_link) EXPECT_GE(l.time_avg_aoi, (A + 1) / 2.0 - 1e-12);
    }
}

TEST(Simulation, SlottedAlohaActivityEqualsUpdateRate)
{
    const auto p = default_params(0.3, 0);
    const auto topo = sample_topology(p, Region{60.0}, 5);
    const auto r = run_simulation(topo, p, short_run(21000));
    const double n = static_cast<double>(topo.size()) * 20000.0;
    EXPECT_NEAR(r.mean_activity, 0.3, 4.0 * std::sqrt(0.21 / n));
}

TEST(Simulation, PerLinkActivityFollowsServiceRate)
{
    const auto p = default_params(0.3, 5);
    const auto topo = sample_topology(p, Region{40.0}, 6);
    const auto r = run_simulation(topo, p, short_run(201000));
    for (const auto& l : r.per_link) {
        const double expect = analytics::cond_active_prob(5, 0.3, l.mu_hat);
        EXPECT_NEAR(l.a_hat / expect, 1.0, 0.02);
    }
}

TEST(Simulation, IdenticalUnderFixedSeed)
{
    const auto p = default_params(0.3, 2);
    const auto topo = sample_topology(p, Region{50.0}, 7);
    const auto a = run_simulation(topo, p, short_run(3000, 500, 9));
    const auto b = run_simulation(topo, p, short_run(3000, 500, 9));
    const auto c = run_simulation(topo, p, short_run(3000, 500, 10));
    ASSERT_EQ(a.per_link.size(), b.per_link.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.per_link.size(); ++i) {
        EXPECT_EQ(a.per_link[i].time_avg_aoi, b.per_link[i].time_avg_aoi);
        EXPECT_EQ(a.per_link[i].successes, b.per_link[i].successes);
        differs |= a.per_link[i].time_avg_aoi != c.per_link[i].time_avg_aoi;
    }
    EXPECT_TRUE(differs);
}

TEST(Simulation, CutoffChangesSuccessLittle)
{
    const auto p = default_params(0.3, 0);
    const auto topo = sample_topology(p, Region{70.0}, 8); // about 245 links
    ASSERT_LE(topo.size(), 300u);
    auto cfg = short_run(11000);
    const auto cut = run_simulation(topo, p, cfg);
    cfg.cutoff_radius = std::numeric_limits<double>::infinity();
    const auto full = run_simulation(topo, p, cfg);
    EXPECT_LT(cut.cutoff_radius, 35.0);
    EXPECT_TRUE(std::isinf(full.cutoff_radius));
    EXPECT_LT(std::abs(cut.success_fraction - full.success_fraction), 1e-2);
    EXPECT_GE(cut.success_fraction, full.success_fraction - 1e-3);
    // per link, on the conditional success given the active sets
    ASSERT_EQ(cut.per_link.size(), full.per_link.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < cut.per_link.size(); ++i)
        if (cut.per_link[i].attempts > 0 && full.per_link[i].attempts > 0)
            worst = std::max(worst, std::abs(cut.per_link[i].mu_cond - full.per_link[i].mu_cond));
    EXPECT_LT(worst, 1e-2);
}

TEST(Simulation, DefaultCutoffRadius)
{
    const auto p = default_params(0.3, 0);
    const double R = default_cutoff_radius(p, Region{300.0}, 5e-3);
    const double alpha = p.pathloss_exponent;
    const double tail = p.density * p.update_rate * 2.0 * std::numbers::pi * std::pow(R, 2.0 - alpha) / (alpha - 2.0);
    EXPECT_NEAR(tail / (std::pow(p.link_distance, -alpha) / p.decode_threshold), 5e-3, 1e-12);
    EXPECT_LT(default_cutoff_radius(p, Region{20.0}, 5e-3), 10.0);
}

TEST(Simulation, RejectsBadConfig)
{
    const auto p = default_params();
    EXPECT_THROW(run_simulation(lone_dipole(), p, short_run(100, 100)), std::invalid_argument);
    auto c = short_run(2000);
    c.cutoff_radius = 0.0;
    EXPECT_THROW(run_simulation(lone_dipole(), p, c), std::invalid_argument);
}

TEST(Replications, UseSuccessiveSeeds)
{
    const auto p = default_params(0.3, 0);
    auto cfg = short_run(1500, 500, 40);
    cfg.replications = 3;
    cfg.workers = 2;
    const auto r = run_replications(p, Region{40.0}, cfg);
    ASSERT_EQ(r.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(r[k].seed, 40 + k);
        const auto single = run_simulation(sample_topology(p, Region{40.0}, 40 + k), p, short_run(1500, 500, 40 + k));
        EXPECT_EQ(single.network_avg_aoi, r[k].network_avg_aoi);
    }
}

TEST(EmpiricalCcdf, Conventions)
{
    SimResult r;
    for (double m : {0.2, 0.5, 0.5, 0.9}) {
        LinkStats l;
        l.attempts = 10;
        l.mu_hat = m;
        r.per_link.push_back(l);
    }
    r.per_link.push_back(LinkStats{}); // no attempts
    const std::vector<double> grid{-1.0, 0.0, 0.2, 0.3, 0.5, 0.9, 0.95, 1.0};
    const auto c = empirical_meta_ccdf(r, grid);
    const std::vector<double> expect{1.0, 1.0, 1.0, 0.75, 0.75, 0.25, 0.0, 0.0};
    EXPECT_EQ(c.value, expect);
    EXPECT_EQ(c.included, 4u);
    EXPECT_EQ(c.excluded, 1u);
    EXPECT_THROW(empirical_meta_ccdf(SimResult{}, grid), std::invalid_argument);
}

TEST(SingleLinkOracle, MatchesLinkFormulas)
{
    for (double mu : {0.3, 0.8})
        for (double eta : {0.2, 1.0})
            for (int A : {0, 4}) {
                const auto p = default_params(eta, A);
                const auto s = single_link_oracle(p, mu, 2000000, 5);
                EXPECT_NEAR(s.time_avg_aoi / analytics::cond_avg_aoi(A, eta, mu), 1.0, 0.01);
                EXPECT_NEAR(s.activity / analytics::cond_active_prob(A, eta, mu), 1.0, 0.01);
                EXPECT_NEAR(s.success_rate, mu, 0.005);
            }
    EXPECT_THROW(single_link_oracle(default_params(), 0.0, 10, 1), std::invalid_argument);
}
