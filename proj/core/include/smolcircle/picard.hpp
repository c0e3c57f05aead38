#ifndef SMOLCIRCLE_PICARD_HPP
#define SMOLCIRCLE_PICARD_HPP

#include <stdexcept>
#include <vector>

#include "smolcircle/massflow.hpp"

// Truncated fixed-point scheme for the mass-flow equation in the spatially
// homogeneous reduction. Masses are restricted to the window
// E_n = [1/n, n]; the iterate chain solves
//   mu~_t = Ptilde_t(c) nu_n + int_0^t Ptilde_ts(c) [Kn+(mu~_s) + delta_s mu~_s] ds
// where, with no x-dependence, the propagator Ptilde(c) collapses to the
// scalar damping exp(-int c) and
//   delta_t(m) = << (omega(m) omega(m') - kappa(m, m')) / m', mu~_t >>
//   c_t(m)     = << omega(m) omega(m') / m', nu >>
//                + int_0^t << omega(m) omega(m') / m', Kn(mu~_s) >> ds.
// Successive fixed points increase with n and stay below the reference
// solution, which the result carries along for comparison.

namespace smolcircle {

struct HomogeneousState {
  MassGrid bins;
  std::vector<double> values;
  double time = 0.0;
};

enum class PicardInit {
  ReferenceTruncated,  // start from the reference solve restricted to E_n
  Zero,                // start from the zero measure (monotone iterates)
};

struct PicardOptions {
  double dt = 1e-4;
  double tol = 1e-8;
  int max_iter = 50;
  PicardInit init = PicardInit::ReferenceTruncated;
  SolverOptions reference;  // options for the internal reference solve
};

struct PicardResult {
  std::vector<double> times;  // uniform grid 0..T
  // trajectories indexed [time][bin]
  std::vector<std::vector<double>> fixed_point;
  std::vector<std::vector<double>> c_trajectory;
  std::vector<std::vector<double>> reference;  // untruncated solve
  // iterate history: iterates[k] is the k-th iterate trajectory
  std::vector<std::vector<std::vector<double>>> iterates;
  // sup_t total-variation distance between consecutive iterates
  std::vector<double> iterate_distances;
  std::size_t iterations = 0;
  bool converged = false;
};

class PicardNonConvergence : public std::runtime_error {
 public:
  PicardNonConvergence(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), distance_history(std::move(history)) {}
  std::vector<double> distance_history;
};

// Throws std::invalid_argument if no bin lies inside E_n, and
// PicardNonConvergence if max_iter is exhausted.
PicardResult picard_truncated(int n, const HomogeneousState& nu_star,
                              double t_final, const DerivedCoefficients& coeffs,
                              const PicardOptions& opts);

}  // namespace smolcircle

#endif
