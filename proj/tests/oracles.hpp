#ifndef SMOLCIRCLE_TEST_ORACLES_HPP
#define SMOLCIRCLE_TEST_ORACLES_HPP

#include <cstdint>
#include <span>
#include <vector>

// Independent reference implementations used only by tests. Nothing here
// shares code with the library paths it checks: the bridge local-time mean
// is recomputed from the hitting-time law of the pinned bridge, local-time
// paths are sampled exactly from that law piece by piece, and the discrete
// coagulation system is integrated by a plain dense RK4.

namespace smolcircle::oracles {

// scaled complementary error function erfcx(x) = exp(x^2) erfc(x)
double erfcx(double x);

// E[L] of a Brownian bridge pinned from d0 to d1 with total variance v,
// from P(L > l) = exp(-((c0 + l)^2 - g^2) / (2v)), c0 = |d0| + |d1|,
// g = d1 - d0:
//   E[L] = sqrt(pi v / 2) * erfcx(c0 / sqrt(2v)) * exp((g^2 - c0^2) / (2v)).
double bridge_local_time_mean_closed_form(double d0, double d1, double v);

// draws one exact local-time increment for a bridge piece with endpoints
// (a, b) and piece variance v, given a uniform u in (0, 1]
double sample_bridge_local_time(double a, double b, double v, double u);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

// Path-simulation estimate of the bridge local time: a Gaussian bridge
// skeleton with `substeps` pieces, each piece contributing an exact
// local-time draw. Unbiased for the pinned-bridge local time.
MonteCarloEstimate mc_bridge_local_time(double d0, double d1, double sigma2,
                                        std::size_t n_paths,
                                        std::size_t substeps,
                                        std::uint64_t seed);

// Fine-step merge-time law for the two-particle system on the circle:
// the signed gap performs a random walk of variance rate a_sum, local time
// at zero accrues through exact per-piece draws, and the pair merges when
// rate * L exceeds an independent unit exponential. Returns the smoothed
// CDF  F(t) = 1 - E[exp(-rate * L_t)]  on a uniform time grid.
struct MergeTimeCurve {
  std::vector<double> times;
  std::vector<double> cdf;
};
MergeTimeCurve two_particle_merge_cdf(double a_sum, double rate, double t_final,
                                      std::size_t n_times, std::size_t n_paths,
                                      std::size_t substeps_per_cell,
                                      std::uint64_t seed);

// Kolmogorov-Smirnov statistics. Samples may exceed the grid (censored
// beyond t_final); the sup runs over the curve's grid.
double ks_vs_curve(std::span<const double> samples, const MergeTimeCurve& curve);
double ks_two_sample(std::span<const double> a, std::span<const double> b,
                     double t_max);
// sup_x |F_n(x) - x| against the uniform law on [0, 1)
double ks_vs_uniform(std::span<const double> samples);
// critical value c(alpha) with c(0.05) = 1.358, c(0.01) = 1.628
double ks_critical(double alpha);

// Dense RK4 integration of the discrete coagulation system
//   dn_k/dt = 1/2 sum_{i+j=k} kappa(i,j) n_i n_j - n_k sum_j kappa(k,j) n_j
// on `bins` integer masses; gains beyond the last bin are dropped, so use
// horizons where that flux is negligible.
std::vector<double> integrate_concentrations(
    std::span<const double> initial,
    const std::vector<std::vector<double>>& kappa, double t_final,
    std::size_t steps);

// same system with constant kernel K0, monodisperse start n0
std::vector<double> integrate_constant_kernel(double K0, double n0,
                                              std::size_t bins, double t_final,
                                              std::size_t steps);

}  // namespace smolcircle::oracles

#endif
