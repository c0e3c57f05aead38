#ifndef SMOLCIRCLE_MASSFLOW_HPP
#define SMOLCIRCLE_MASSFLOW_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "smolcircle/kernels.hpp"
#include "smolcircle/measures.hpp"

// Deterministic solver for the mass-flow equation
//   d(upsilon)/dt = (1/2) a(m) d^2/dx^2 upsilon + K+(upsilon) - K-(upsilon)
// on the circle x a mass-bin grid, by heat/coagulation operator splitting.
// The heat substep is a spectral circular convolution per mass bin; the
// coagulation substep integrates the bilinear gain/loss rates cell by cell.
// Dividing the solution bin-wise by the representative mass yields the
// number-concentration form of Smoluchowski's equation with kernel kappa.

namespace smolcircle {

struct FieldState {
  std::size_t x_cells = 0;
  MassGrid bins;
  std::vector<double> values;  // x-major cell masses, values[j * B + b]
  double time = 0.0;

  FieldState() = default;
  FieldState(std::size_t x_cells, MassGrid grid);
  double& at(std::size_t j, std::size_t b) { return values[j * bins.bins + b]; }
  double at(std::size_t j, std::size_t b) const { return values[j * bins.bins + b]; }
  double total() const;
  GridMeasure to_grid_measure() const;

  // total mass `mass` in the bin holding rescaled mass 1, spread over x
  // proportionally to the density h
  static FieldState monodisperse(std::size_t x_cells, const MassGrid& grid,
                                 double mass,
                                 const std::function<double(double)>& h);
};

enum class Splitting { Lie, Strang };
enum class CoagIntegrator { Euler, RK2 };

struct SolverOptions {
  double dt = 1e-3;
  Splitting splitting = Splitting::Strang;
  CoagIntegrator coag_integrator = CoagIntegrator::RK2;
  bool positivity_clip = true;
  double clip_budget_fraction = 1e-6;  // abort when clipped mass exceeds this
  double picard_tol = 1e-8;
  int picard_max_iter = 50;
};

// One heat substep: per mass bin, circular convolution with the torus heat
// kernel of variance a(m_b) * dt via the Fourier multiplier
// exp(-(1/2) a(m_b) (2 pi k)^2 dt). Requires x_cells to be a power of two;
// throws std::invalid_argument otherwise. Bins with a(m_b) = 0 are left
// untouched exactly.
void heat_step(FieldState& field, const DiffusivitySpec& diffusivity, double dt);

// Precomputed kappa(m_i, m_j) / m_j weights and pair-sum bin targets.
// Pair sums beyond the last bin deposit their mass in the last bin, so the
// rate conserves total mass for any occupied input.
class CoagOperator {
 public:
  CoagOperator(const DerivedCoefficients& coeffs, const MassGrid& grid);

  // dv/dt for one cell of per-bin mass-flow values
  void apply(std::span<const double> v, std::span<double> rate) const;
  // largest per-bin loss-rate coefficient, used for substep control
  double max_loss_rate(std::span<const double> v) const;
  std::size_t bins() const { return b_; }

 private:
  std::size_t b_;
  std::vector<double> weight_;       // kappa(m_i, m_j) / m_j
  std::vector<std::uint32_t> t_lo_;  // pair-sum target bins
  std::vector<std::uint32_t> t_hi_;
  std::vector<double> f_lo_;         // fraction of the value sent to t_lo
};

// Per-bin rate K+(v) - K-(v) for a single cell of mass-flow values.
std::vector<double> coag_rate(std::span<const double> values,
                              const DerivedCoefficients& coeffs,
                              const MassGrid& grid);

struct SolveResult {
  std::vector<FieldState> snapshots;
  double mass_drift = 0.0;    // |total(T) - total(0)|
  double clipped_mass = 0.0;  // total positivity-clipped mass
  std::size_t steps = 0;
};

// Splitting solve to time T with snapshots at the first step boundary at
// or after each requested time. Aborts (std::runtime_error) if clipping
// exceeds the budget.
SolveResult solve(const FieldState& initial, double t_final,
                  const DerivedCoefficients& coeffs, const SolverOptions& opts,
                  std::span<const double> snapshot_times);

// Closed-form constant-kernel concentrations for monodisperse initial data:
// n_k(t) = n0 (K0 n0 t / 2)^(k-1) / (1 + K0 n0 t / 2)^(k+1), k = 1..k_max.
std::vector<double> constant_kernel_oracle(double t, double K0, double n0,
                                           std::size_t k_max);

}  // namespace smolcircle

#endif
