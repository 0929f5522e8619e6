// Solves the meta distribution at one operating point, simulates the same
// point on a small torus and prints both CCDFs side by side.
//
//   meta_demo [eta] [A] [side_length]

#include <cstdio>
#include <cstdlib>

#include "tsa/analytics.hpp"
#include "tsa/report.hpp"
#include "tsa/sim.hpp"

int main(int argc, char** argv)
{
    const double eta = argc > 1 ? std::atof(argv[1]) : 0.3;
    const int A = argc > 2 ? std::atoi(argv[2]) : 5;
    const double side = argc > 3 ? std::atof(argv[3]) : 150.0;

    const auto p = tsa::default_params(eta, A);
    const auto a = tsa::analytics::analyze(p);
    std::printf("analysis: phi %.5f  P_s %.5f  avg AoI %.4f (moment form %.4f)  %d iterations\n", a.phi,
                a.success_prob, a.avg_aoi, a.avg_aoi_moment, a.diagnostics.iterations);

    tsa::SimConfig c;
    c.warmup = tsa::default_warmup(p);
    c.horizon = *c.warmup + 10000;
    const auto topo = tsa::sample_topology(p, tsa::Region{side}, c.master_seed);
    const auto s = tsa::run_simulation(topo, p, c);
    std::printf("simulation: %zu links  success %.5f  activity %.5f  avg AoI %.4f\n", s.per_link.size(),
                s.success_fraction, s.mean_activity, s.network_avg_aoi);

    std::vector<double> mu;
    for (const auto& l : s.per_link)
        if (l.attempts > 0) mu.push_back(l.mu_hat);
    const auto sim = tsa::MetaCurve::from_samples(mu);
    std::printf("\n   u    analysis  simulation\n");
    for (double u = 0.5; u < 1.0 - 1e-9; u += 0.05)
        std::printf("%5.2f    %.4f    %.4f\n", u, a.meta_dist.ccdf_at(u), sim.ccdf(u));
    std::printf("\nKolmogorov distance %.4f\n", tsa::kolmogorov_distance(mu, a.meta_dist));
}
