#ifndef SMOLCIRCLE_PARTICLE_SYSTEM_HPP
#define SMOLCIRCLE_PARTICLE_SYSTEM_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "smolcircle/kernels.hpp"
#include "smolcircle/local_time.hpp"
#include "smolcircle/measures.hpp"

// N coagulating particles on the circle of circumference 1. Each alive
// particle diffuses with coefficient a(N M^i); an alive pair (i, j)
// coagulates with hazard Phi(N M^i, N M^j) / N per unit of the expected
// intersection local time accrued by the pair over the step. On a merge
// the lower-index particle keeps the summed mass and its own position;
// the higher-index particle keeps its slot with mass 0 and never
// interacts again.

namespace smolcircle {

struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t step_index = 0;
};

struct ParticleSystem {
  std::vector<double> x;       // positions in [0, 1)
  std::vector<double> m;       // masses, initial total 1
  std::vector<std::uint8_t> alive;
  std::vector<std::uint32_t> id;  // randomness stream ids (initial indices)
  double time = 0.0;
  RngState rng;

  std::size_t size() const { return x.size(); }
  std::size_t alive_count() const;
  double total_mass() const;     // compensated sum
  double second_moment() const;  // N * sum_i m_i^2, compensated
  // throws std::logic_error with a diagnostic dump on violation
  void check_invariants() const;
};

struct InitialProfile {
  enum class Kind { Monodisperse, ProductMeasure };
  Kind kind = Kind::Monodisperse;
  std::function<double(double)> spatial_density;  // h(x) on [0, 1)
  // quantile of the rescaled-mass distribution (ProductMeasure only)
  std::function<double(double)> mass_quantile;

  static InitialProfile monodisperse_uniform();
  static InitialProfile monodisperse(std::function<double(double)> h);
  static InitialProfile product(std::function<double(double)> h,
                                std::function<double(double)> mass_quantile);
};

// Positions are drawn i.i.d. from the density h via an inverse-CDF table
// with 4096 cells. Monodisperse assigns every particle mass 1/N;
// ProductMeasure draws rescaled masses, normalizes, and lets the final
// particle take the remainder so the total is exactly 1.
// Throws std::invalid_argument for n < 2 or a non-normalizable density.
ParticleSystem sample_initial(std::size_t n, const InitialProfile& profile,
                              std::uint64_t seed);

struct StepParams {
  double dt = 1e-3;
  // pair-interaction window; 0 selects 6 * sqrt(max_alive a * dt), capped
  // at 0.49
  double interaction_window = 0.0;
  TailMode tail_mode = TailMode::Truncate;
  bool use_local_time_table = true;  // tabulated fast path (Truncate only)
};

struct CoagulationEvent {
  double time;
  std::uint32_t i, j;  // particle ids, i < j; i keeps the merged mass
  double mass_i_before, mass_j_before;
};

struct StepResult {
  std::vector<CoagulationEvent> events;
  double hazard_sum = 0.0;  // total coagulation hazard accrued this step
};

StepResult step(ParticleSystem& sys, const DerivedCoefficients& coeffs,
                const StepParams& params);

struct SnapshotStats {
  double time = 0.0;
  double total_mass = 0.0;
  double second_moment = 0.0;
  std::size_t alive = 0;
  std::size_t events_so_far = 0;
};

struct RunStats {
  std::vector<SnapshotStats> snapshots;
  std::size_t total_events = 0;
  double accumulated_hazard = 0.0;
  // most negative step-to-step change of N sum m_i^2 observed (0 if the
  // trajectory was nondecreasing, as it must be)
  double min_second_moment_increment = 0.0;
  std::size_t steps = 0;
};

struct RunResult {
  std::vector<EmpiricalMeasure> snapshots;
  std::vector<CoagulationEvent> events;
  RunStats stats;
};

// Advances the system to t_final, emitting the empirical measure
// Pi_N = sum_i M^i delta_(X^i, N M^i) at the first step boundary at or
// after each requested snapshot time. Snapshot times must lie in
// [current time, t_final].
RunResult run(ParticleSystem sys, double t_final,
              const DerivedCoefficients& coeffs, const StepParams& params,
              std::span<const double> snapshot_times);

EmpiricalMeasure empirical_measure(const ParticleSystem& sys);

}  // namespace smolcircle

#endif
