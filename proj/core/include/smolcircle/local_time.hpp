#ifndef SMOLCIRCLE_LOCAL_TIME_HPP
#define SMOLCIRCLE_LOCAL_TIME_HPP

#include <vector>

namespace smolcircle {

enum class TailMode { Truncate, GaussianTail };

// Expected local time at the origin, over one time step, of a Brownian
// bridge pinned to the signed gaps d0 (start) and d1 (end), with total
// variance sigma2 = (a_i + a_j) * dt.
//
// Computed from the bridge decomposition
//   E[L] = sigma2_rate * int_0^dt p_s(d0,0) p_{dt-s}(0,d1) ds / p_dt(d0,d1)
// which in normalized time reads
//   E[L] = v * int_0^1 exp(g^2/(2v) - d0^2/(2 v tau) - d1^2/(2 v (1-tau)))
//              / sqrt(2 pi v tau (1-tau)) dtau,          v = sigma2, g = d1-d0.
// The integrand has inverse-square-root endpoints, removed by the
// substitution tau = u^2 (3 - 2u); a 32-point Gauss-Legendre rule on u
// then resolves it to near machine precision.
//
// Truncate uses the line heat kernel (nearest image only); GaussianTail
// adds one wrap-around image pair on the circle of circumference 1.
//
// Gaps must be nearest-image signed differences in (-1/2, 1/2].
// Throws std::domain_error if sigma2 <= 0.
double bridge_local_time_mean(double d0, double d1, double sigma2,
                              TailMode mode = TailMode::Truncate);

// Tabulated evaluation of bridge_local_time_mean for the Truncate mode.
// By Brownian scaling E[L] = sigma * G(d0/sigma, d1/sigma); G is stored on
// a fixed grid and interpolated bilinearly. Arguments far outside the grid
// contribute nothing and return 0. Built once per process; deterministic.
class LocalTimeTable {
 public:
  static const LocalTimeTable& instance();
  double value(double d0, double d1, double sigma2) const;
  // dimensionless lookup G(u0, u1) with u = gap / sigma, for callers that
  // hoist the normalization out of a pair loop
  double normalized(double u0, double u1) const;

  // table construction parameters, exposed for accuracy tests
  static constexpr double kRange = 8.0;   // grid covers [-8, 8]^2 in gap/sigma
  static constexpr int kPoints = 513;

 private:
  LocalTimeTable();
  std::vector<double> g_;  // kPoints x kPoints
};

}  // namespace smolcircle

#endif
