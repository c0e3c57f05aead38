#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "smolcircle/particle_system.hpp"
#include "smolcircle/rng.hpp"

using namespace smolcircle;

namespace {

DerivedCoefficients unit_constant_model(double rate = 1.0) {
  return DerivedCoefficients(KernelSpec::constant(rate),
                             DiffusivitySpec::constant(1.0));
}

}  // namespace

TEST_CASE("monodisperse uniform initial state") {
  const auto sys = sample_initial(100, InitialProfile::monodisperse_uniform(), 1);
  CHECK(sys.size() == 100);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    CHECK(sys.m[i] == 0.01);
    CHECK(sys.x[i] >= 0.0);
    CHECK(sys.x[i] < 1.0);
    CHECK(sys.alive[i] == 1);
  }
  CHECK(std::abs(sys.total_mass() - 1.0) < 1e-14);
  CHECK_THROWS_AS(sample_initial(1, InitialProfile::monodisperse_uniform(), 1),
                  std::invalid_argument);
}

TEST_CASE("initial positions follow the density support") {
  const auto profile =
      InitialProfile::monodisperse([](double x) { return x < 0.5 ? 2.0 : 0.0; });
  const auto sys = sample_initial(4, profile, 42);
  for (double x : sys.x) CHECK(x < 0.5);
}

TEST_CASE("initial spatial law passes a KS test against uniform") {
  const auto sys = sample_initial(10000, InitialProfile::monodisperse_uniform(), 7);
  const double d = oracles::ks_vs_uniform(sys.x);
  CHECK(d < oracles::ks_critical(0.05) / std::sqrt(10000.0));
}

TEST_CASE("non-normalizable or negative densities are rejected") {
  CHECK_THROWS_AS(
      sample_initial(10, InitialProfile::monodisperse([](double) { return 0.0; }), 1),
      std::invalid_argument);
  CHECK_THROWS_AS(
      sample_initial(10, InitialProfile::monodisperse([](double) { return -1.0; }), 1),
      std::invalid_argument);
}

TEST_CASE("product profile sums to exactly one") {
  const auto profile = InitialProfile::product(
      [](double) { return 1.0; },
      [](double u) { return -std::log1p(-u * (1.0 - 1e-12)); });
  const auto sys = sample_initial(1000, profile, 3);
  CHECK(sys.total_mass() == 1.0);
  for (double m : sys.m) CHECK(m > 0.0);
}

TEST_CASE("zero rate freezes the masses for every seed") {
  const DerivedCoefficients coeffs(KernelSpec::constant(0.0),
                                   DiffusivitySpec::constant(1.0));
  StepParams params;
  params.dt = 1e-3;
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    auto sys = sample_initial(64, InitialProfile::monodisperse_uniform(), seed);
    const auto masses = sys.m;
    const auto result = run(sys, 0.05, coeffs, params, {{0.05}});
    CHECK(result.events.empty());
    CHECK(result.stats.total_events == 0);
  }
}

TEST_CASE("positions perform wrapped Gaussian increments") {
  // with zero rate, increments over one step are N(0, a dt) on the circle
  const DerivedCoefficients coeffs(KernelSpec::constant(0.0),
                                   DiffusivitySpec::constant(1.0));
  StepParams params;
  params.dt = 4e-4;
  auto sys = sample_initial(20000, InitialProfile::monodisperse_uniform(), 5);
  // rescaled mass is 1, so a(N m) = 1 and the step sd is sqrt(dt)
  const auto x0 = sys.x;
  step(sys, coeffs, params);
  double mean = 0.0, var = 0.0;
  std::vector<double> incs(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    double d = sys.x[i] - x0[i];
    if (d > 0.5) d -= 1.0;
    if (d <= -0.5) d += 1.0;
    incs[i] = d;
    mean += d;
  }
  mean /= static_cast<double>(sys.size());
  for (double d : incs) var += (d - mean) * (d - mean);
  var /= static_cast<double>(sys.size() - 1);
  const double sd_mean = std::sqrt(params.dt / static_cast<double>(sys.size()));
  CHECK(std::abs(mean) < 4.0 * sd_mean);
  CHECK(var == doctest::Approx(params.dt).epsilon(0.05));
}

TEST_CASE("mass is conserved bit-for-bit with power-of-two N") {
  auto sys = sample_initial(1024, InitialProfile::monodisperse_uniform(), 17);
  const auto coeffs = unit_constant_model(50.0);
  StepParams params;
  params.dt = 5e-4;
  const double before = sys.total_mass();
  CHECK(before == 1.0);
  std::size_t events = 0;
  for (int s = 0; s < 200; ++s) {
    events += step(sys, coeffs, params).events.size();
    CHECK(sys.total_mass() == before);
  }
  CHECK(events > 0);  // the kernel is hot enough to coagulate
}

TEST_CASE("second moment is pathwise nondecreasing and alive = N - events") {
  auto sys = sample_initial(500, InitialProfile::monodisperse_uniform(), 23);
  const auto coeffs = unit_constant_model(20.0);
  StepParams params;
  params.dt = 1e-3;
  const auto result = run(sys, 0.3, coeffs, params, {{0.1, 0.2, 0.3}});
  CHECK(result.stats.min_second_moment_increment == 0.0);
  CHECK(result.stats.total_events > 0);
  for (const auto& snap : result.stats.snapshots) {
    CHECK(snap.alive == 500 - snap.events_so_far);
  }
}

TEST_CASE("forced same-step candidates: one merge per particle, mass conserved") {
  // three particles stacked at one point with an enormous rate: several
  // candidates form, only non-conflicting ones resolve
  ParticleSystem sys;
  sys.x = {0.5, 0.5, 0.5 + 1e-9};
  sys.m = {0.25, 0.35, 0.40};
  sys.alive = {1, 1, 1};
  sys.id = {0, 1, 2};
  sys.rng.seed = 4;
  const DerivedCoefficients coeffs(KernelSpec::constant(1e9),
                                   DiffusivitySpec::constant(1.0));
  StepParams params;
  params.dt = 1e-4;
  const auto res = step(sys, coeffs, params);
  CHECK(res.events.size() == 1);  // second candidate must be discarded
  CHECK(sys.total_mass() == doctest::Approx(1.0).epsilon(1e-15));
  std::set<std::uint32_t> touched;
  for (const auto& e : res.events) {
    CHECK(!touched.count(e.i));
    CHECK(!touched.count(e.j));
    touched.insert(e.i);
    touched.insert(e.j);
  }
}

TEST_CASE("events record pre-merge masses with the lower id surviving") {
  ParticleSystem sys;
  sys.x = {0.2, 0.2 + 1e-9};
  sys.m = {0.5, 0.5};
  sys.alive = {1, 1};
  sys.id = {3, 1};  // the slot order is not the id order
  sys.rng.seed = 9;
  const DerivedCoefficients coeffs(KernelSpec::constant(1e9),
                                   DiffusivitySpec::constant(1.0));
  StepParams params;
  params.dt = 1e-4;
  const auto res = step(sys, coeffs, params);
  REQUIRE(res.events.size() == 1);
  CHECK(res.events[0].i == 1);
  CHECK(res.events[0].j == 3);
  CHECK(res.events[0].mass_i_before == 0.5);
  CHECK(res.events[0].mass_j_before == 0.5);
  CHECK(sys.m[1] == 1.0);  // slot of id 1
  CHECK(sys.m[0] == 0.0);
  CHECK(sys.alive[0] == 0);
}

TEST_CASE("permutation equivariance: relabeled runs give the same events") {
  const std::uint64_t seed = 31;
  const auto coeffs = unit_constant_model(40.0);
  StepParams params;
  params.dt = 1e-3;

  auto base = sample_initial(64, InitialProfile::monodisperse_uniform(), seed);
  auto permuted = base;
  std::mt19937_64 shuffler(5);
  std::vector<std::size_t> perm(base.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), shuffler);
  for (std::size_t i = 0; i < base.size(); ++i) {
    permuted.x[perm[i]] = base.x[i];
    permuted.m[perm[i]] = base.m[i];
    permuted.alive[perm[i]] = base.alive[i];
    permuted.id[perm[i]] = base.id[i];
  }

  auto run_events = [&](ParticleSystem sys) {
    std::multiset<std::tuple<double, std::uint32_t, std::uint32_t>> events;
    for (int s = 0; s < 40; ++s) {
      for (const auto& e : step(sys, coeffs, params).events) {
        events.insert({e.time, e.i, e.j});
      }
    }
    return events;
  };
  CHECK(run_events(base) == run_events(permuted));
}

TEST_CASE("runs are reproducible for a fixed seed") {
  const auto coeffs = unit_constant_model(10.0);
  StepParams params;
  params.dt = 1e-3;
  auto a = sample_initial(128, InitialProfile::monodisperse_uniform(), 77);
  auto b = sample_initial(128, InitialProfile::monodisperse_uniform(), 77);
  const auto ra = run(std::move(a), 0.2, coeffs, params, {{0.2}});
  const auto rb = run(std::move(b), 0.2, coeffs, params, {{0.2}});
  REQUIRE(ra.events.size() == rb.events.size());
  for (std::size_t i = 0; i < ra.events.size(); ++i) {
    CHECK(ra.events[i].time == rb.events[i].time);
    CHECK(ra.events[i].i == rb.events[i].i);
    CHECK(ra.events[i].j == rb.events[i].j);
  }
  CHECK(ra.stats.accumulated_hazard == rb.stats.accumulated_hazard);
}

TEST_CASE("run at T = 0 returns the initial empirical measure") {
  auto sys = sample_initial(32, InitialProfile::monodisperse_uniform(), 2);
  const auto coeffs = unit_constant_model();
  StepParams params;
  const auto res = run(std::move(sys), 0.0, coeffs, params, {{0.0}});
  REQUIRE(res.snapshots.size() == 1);
  CHECK(res.snapshots[0].atoms.size() == 32);
  CHECK(res.events.empty());
  for (const auto& a : res.snapshots[0].atoms) {
    CHECK(a.m == doctest::Approx(1.0));
    CHECK(a.w == doctest::Approx(1.0 / 32.0));
  }
}

TEST_CASE("window invariant is enforced in truncate mode") {
  auto sys = sample_initial(16, InitialProfile::monodisperse_uniform(), 8);
  const auto coeffs = unit_constant_model();
  StepParams params;
  params.dt = 1e-3;
  params.interaction_window = 1e-4;  // far below 3 pair-sigma
  CHECK_THROWS_AS(step(sys, coeffs, params), std::invalid_argument);
}

TEST_CASE("two-particle merge-time law matches the fine-step oracle") {
  // desk-size companion of the acceptance criterion: 2000 replicas,
  // KS at 99%
  const double rate_phi = 4.0;  // Phi(1,1)
  const double a0 = 1.0;
  const double t_final = 0.5;
  const DerivedCoefficients coeffs(KernelSpec::constant(rate_phi),
                                   DiffusivitySpec::constant(a0));
  StepParams params;
  params.dt = 2.5e-4;  // fine enough that the thinning bias sits well
                       // inside the KS band (checked against dt/4)

  const std::size_t replicas = 2000;
  std::vector<double> merge_times;
  merge_times.reserve(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    auto sys = sample_initial(2, InitialProfile::monodisperse_uniform(),
                              rng::replica_seed(909, r));
    const auto res = run(std::move(sys), t_final, coeffs, params, {});
    merge_times.push_back(res.events.empty() ? 2.0 * t_final
                                             : res.events[0].time);
  }
  const auto curve = oracles::two_particle_merge_cdf(
      2.0 * a0, rate_phi / 2.0, t_final, 100, 20000, 40, 5150);
  const double d = oracles::ks_vs_curve(merge_times, curve);
  INFO("KS distance ", d);
  CHECK(d < oracles::ks_critical(0.01) / std::sqrt(static_cast<double>(replicas)));
}

TEST_CASE("compensated event count is centered: counting-measure monitor") {
  // events(T) minus the accumulated pair hazard is (up to O(dt) resolution
  // effects) a centered quantity; its replica mean must sit inside a
  // four-sigma band
  const auto coeffs = unit_constant_model(6.0);
  StepParams params;
  params.dt = 1e-3;
  const std::size_t replicas = 60;
  std::vector<double> residual(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    auto sys = sample_initial(256, InitialProfile::monodisperse_uniform(),
                              rng::replica_seed(2024, r));
    const auto res = run(std::move(sys), 0.25, coeffs, params, {});
    residual[r] = static_cast<double>(res.stats.total_events) -
                  res.stats.accumulated_hazard;
  }
  double mean = 0.0;
  for (double x : residual) mean += x;
  mean /= static_cast<double>(replicas);
  double var = 0.0;
  for (double x : residual) var += (x - mean) * (x - mean);
  var /= static_cast<double>(replicas - 1);
  const double se = std::sqrt(var / static_cast<double>(replicas));
  INFO("mean residual ", mean, " se ", se);
  CHECK(std::abs(mean) <= 4.0 * se);
}
