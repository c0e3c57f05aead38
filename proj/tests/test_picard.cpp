#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "smolcircle/picard.hpp"

using namespace smolcircle;

namespace {

HomogeneousState monodisperse_state(std::size_t bins, double mass) {
  HomogeneousState s;
  s.bins = MassGrid::integer(bins);
  s.values.assign(bins, 0.0);
  s.values[0] = mass;
  return s;
}

}  // namespace

TEST_CASE("zero kernel, one bin: the truncated datum is the exact fixed point") {
  // with kappa = 0 the scheme reads y' = -c y + delta y, c = omega^2 nu / m,
  // delta = omega^2 y / m, so y = nu is stationary; the discrete update
  // preserves it to round-off
  const DerivedCoefficients coeffs(KernelSpec::constant(0.0),
                                   DiffusivitySpec::constant(1.0));
  const auto nu = monodisperse_state(1, 0.7);
  PicardOptions opts;
  opts.dt = 1e-3;
  opts.tol = 1e-10;
  const auto res = picard_truncated(2, nu, 0.2, coeffs, opts);
  CHECK(res.converged);
  CHECK(res.iterations <= 2);
  for (const auto& state : res.fixed_point) {
    CHECK(state[0] == doctest::Approx(0.7).epsilon(1e-9));
  }
  // c is constant in time and across iterations: omega(1)^2 * 0.7
  const double omega1 = coeffs.omega(1.0);
  for (const auto& c : res.c_trajectory) {
    CHECK(c[0] == doctest::Approx(omega1 * omega1 * 0.7).epsilon(1e-12));
  }
}

TEST_CASE("fixed point is insensitive to the starting iterate") {
  const DerivedCoefficients coeffs(KernelSpec::constant(1.0),
                                   DiffusivitySpec::constant(1.0));
  const auto nu = monodisperse_state(8, 1.0);
  PicardOptions opts;
  opts.dt = 2e-4;
  opts.tol = 1e-10;
  opts.max_iter = 200;
  const double T = 0.02;
  opts.init = PicardInit::ReferenceTruncated;
  const auto a = picard_truncated(4, nu, T, coeffs, opts);
  opts.init = PicardInit::Zero;
  const auto b = picard_truncated(4, nu, T, coeffs, opts);
  REQUIRE(a.fixed_point.size() == b.fixed_point.size());
  for (std::size_t s = 0; s < a.fixed_point.size(); ++s) {
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(a.fixed_point[s][k] ==
            doctest::Approx(b.fixed_point[s][k]).epsilon(1e-7).scale(1.0));
    }
  }
}

TEST_CASE("iterates from zero are monotone nondecreasing bin-wise") {
  const DerivedCoefficients coeffs(KernelSpec::constant(1.0),
                                   DiffusivitySpec::constant(1.0));
  const auto nu = monodisperse_state(8, 1.0);
  PicardOptions opts;
  opts.dt = 2e-4;
  opts.tol = 1e-9;
  opts.max_iter = 200;
  opts.init = PicardInit::Zero;
  const auto res = picard_truncated(4, nu, 0.02, coeffs, opts);
  for (std::size_t k = 1; k < res.iterates.size(); ++k) {
    for (std::size_t s = 0; s < res.iterates[k].size(); ++s) {
      for (std::size_t b = 0; b < 8; ++b) {
        CHECK(res.iterates[k][s][b] >=
              res.iterates[k - 1][s][b] - 1e-12);
      }
    }
  }
}

TEST_CASE("truncation ladder: fixed points increase with n and stay below the solve") {
  const DerivedCoefficients coeffs(KernelSpec::constant(1.0),
                                   DiffusivitySpec::constant(1.0));
  const auto nu = monodisperse_state(16, 1.0);
  PicardOptions opts;
  opts.dt = 2e-4;
  opts.tol = 1e-9;
  opts.max_iter = 200;
  const double T = 0.02;
  const auto r2 = picard_truncated(2, nu, T, coeffs, opts);
  const auto r4 = picard_truncated(4, nu, T, coeffs, opts);
  const auto r8 = picard_truncated(8, nu, T, coeffs, opts);
  REQUIRE(r2.times.size() == r4.times.size());
  REQUIRE(r4.times.size() == r8.times.size());
  const double tol = 1e-8;
  for (std::size_t s = 0; s < r2.times.size(); ++s) {
    for (std::size_t b = 0; b < 16; ++b) {
      CHECK(r2.fixed_point[s][b] <= r4.fixed_point[s][b] + tol);
      CHECK(r4.fixed_point[s][b] <= r8.fixed_point[s][b] + tol);
      CHECK(r8.fixed_point[s][b] <= r8.reference[s][b] + tol);
    }
  }
}

TEST_CASE("non-convergence raises with the distance history attached") {
  const DerivedCoefficients coeffs(KernelSpec::constant(1.0),
                                   DiffusivitySpec::constant(1.0));
  const auto nu = monodisperse_state(8, 1.0);
  PicardOptions opts;
  opts.dt = 1e-3;
  opts.tol = 1e-14;  // unreachable in one iteration
  opts.max_iter = 1;
  opts.init = PicardInit::Zero;
  try {
    picard_truncated(4, nu, 0.05, coeffs, opts);
    FAIL("expected PicardNonConvergence");
  } catch (const PicardNonConvergence& e) {
    CHECK(e.distance_history.size() == 1);
  }
}

TEST_CASE("E_n window with no bins is rejected") {
  HomogeneousState nu;
  nu.bins = MassGrid::geometric(4, 1000.0, 2.0);  // all representatives > 8
  nu.values.assign(4, 0.1);
  const DerivedCoefficients coeffs(KernelSpec::constant(1.0),
                                   DiffusivitySpec::constant(1.0));
  PicardOptions opts;
  CHECK_THROWS_AS(picard_truncated(8, nu, 0.1, coeffs, opts),
                  std::invalid_argument);
}
