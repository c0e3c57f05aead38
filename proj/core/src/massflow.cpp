#include "smolcircle/massflow.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace smolcircle {

FieldState::FieldState(std::size_t x_cells_, MassGrid grid)
    : x_cells(x_cells_), bins(grid), values(x_cells_ * grid.bins, 0.0) {}

double FieldState::total() const { return neumaier_sum(values); }

GridMeasure FieldState::to_grid_measure() const {
  GridMeasure g(x_cells, bins);
  g.values = values;
  return g;
}

FieldState FieldState::monodisperse(std::size_t x_cells, const MassGrid& grid,
                                    double mass,
                                    const std::function<double(double)>& h) {
  FieldState f(x_cells, grid);
  const std::size_t b1 = grid.bin_of(1.0);
  std::vector<double> cell(x_cells);
  double total = 0.0;
  for (std::size_t j = 0; j < x_cells; ++j) {
    const double xm = (static_cast<double>(j) + 0.5) / static_cast<double>(x_cells);
    cell[j] = h ? h(xm) : 1.0;
    if (!(cell[j] >= 0.0)) {
      throw std::invalid_argument("monodisperse field: density must be >= 0");
    }
    total += cell[j];
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("monodisperse field: density not normalizable");
  }
  for (std::size_t j = 0; j < x_cells; ++j) {
    f.at(j, b1) = mass * cell[j] / total;
  }
  return f;
}

namespace {

bool is_pow2(std::size_t j) { return j != 0 && (j & (j - 1)) == 0; }

// cached FFTW plans per transform length; plan creation is serialized,
// execution uses the new-array interface and is thread-safe
struct FftPlans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::size_t n = 0;
};

const FftPlans& plans_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, FftPlans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  FftPlans p;
  p.n = n;
  std::vector<double> real(n);
  std::vector<fftw_complex> cplx(n / 2 + 1);
  p.fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), real.data(), cplx.data(),
                               FFTW_ESTIMATE);
  p.bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n), cplx.data(), real.data(),
                               FFTW_ESTIMATE);
  return cache.emplace(n, p).first->second;
}

}  // namespace

void heat_step(FieldState& field, const DiffusivitySpec& diffusivity,
               double dt) {
  if (!(dt >= 0.0)) throw std::invalid_argument("heat_step: dt must be >= 0");
  const std::size_t j_cells = field.x_cells;
  if (!is_pow2(j_cells)) {
    throw std::invalid_argument("heat_step: x_cells must be a power of two");
  }
  if (j_cells == 1 || dt == 0.0) return;  // single cell: nothing diffuses

  const std::size_t b_count = field.bins.bins;
  const FftPlans& plans = plans_for(j_cells);
  const std::size_t half = j_cells / 2 + 1;
  std::vector<double> real(j_cells);
  std::vector<fftw_complex> spec(half);
  const double two_pi = 2.0 * M_PI;

  for (std::size_t b = 0; b < b_count; ++b) {
    const double a = diffusivity.a(field.bins.representative(b));
    if (a * dt == 0.0) continue;  // zero diffusivity: exact identity
    for (std::size_t j = 0; j < j_cells; ++j) real[j] = field.at(j, b);
    fftw_execute_dft_r2c(plans.fwd, real.data(), spec.data());
    for (std::size_t k = 1; k < half; ++k) {
      const double freq = two_pi * static_cast<double>(k);
      const double mult = std::exp(-0.5 * a * freq * freq * dt);
      spec[k][0] *= mult;
      spec[k][1] *= mult;
    }
    fftw_execute_dft_c2r(plans.bwd, spec.data(), real.data());
    const double inv = 1.0 / static_cast<double>(j_cells);
    for (std::size_t j = 0; j < j_cells; ++j) field.at(j, b) = real[j] * inv;
  }
}

CoagOperator::CoagOperator(const DerivedCoefficients& coeffs,
                           const MassGrid& grid)
    : b_(grid.bins) {
  weight_.resize(b_ * b_);
  t_lo_.resize(b_ * b_);
  t_hi_.resize(b_ * b_);
  f_lo_.resize(b_ * b_);
  std::vector<double> rep(b_);
  for (std::size_t b = 0; b < b_; ++b) rep[b] = grid.representative(b);
  for (std::size_t i = 0; i < b_; ++i) {
    for (std::size_t j = 0; j < b_; ++j) {
      const std::size_t idx = i * b_ + j;
      weight_[idx] = coeffs.kappa(rep[i], rep[j]) / rep[j];
      const double s = rep[i] + rep[j];
      if (grid.kind == MassGrid::Kind::Integer) {
        const std::size_t t = std::min(i + j + 1, b_ - 1);
        t_lo_[idx] = t_hi_[idx] = static_cast<std::uint32_t>(t);
        f_lo_[idx] = 1.0;
      } else {
        // bracket s between representatives; split preserving mass and,
        // where possible, particle number
        if (s >= rep[b_ - 1]) {
          t_lo_[idx] = t_hi_[idx] = static_cast<std::uint32_t>(b_ - 1);
          f_lo_[idx] = 1.0;
        } else {
          std::size_t k = 0;
          while (k + 1 < b_ && rep[k + 1] < s) ++k;
          const double lo = rep[k], hi = rep[k + 1];
          t_lo_[idx] = static_cast<std::uint32_t>(k);
          t_hi_[idx] = static_cast<std::uint32_t>(k + 1);
          f_lo_[idx] = lo * (hi - s) / (s * (hi - lo));
        }
      }
    }
  }
}

void CoagOperator::apply(std::span<const double> v, std::span<double> rate) const {
  if (v.size() != b_ || rate.size() != b_) {
    throw std::invalid_argument("CoagOperator::apply: size mismatch");
  }
  std::fill(rate.begin(), rate.end(), 0.0);
  for (std::size_t i = 0; i < b_; ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const std::size_t row = i * b_;
    for (std::size_t j = 0; j < b_; ++j) {
      const double vj = v[j];
      if (vj == 0.0) continue;
      const double flux = weight_[row + j] * vi * vj;
      if (flux == 0.0) continue;
      rate[i] -= flux;  // loss of the (i, j) encounter, charged to i
      const double f = f_lo_[row + j];
      rate[t_lo_[row + j]] += f * flux;
      if (f != 1.0) rate[t_hi_[row + j]] += (1.0 - f) * flux;
    }
  }
}

double CoagOperator::max_loss_rate(std::span<const double> v) const {
  double lam = 0.0;
  for (std::size_t i = 0; i < b_; ++i) {
    double li = 0.0;
    const std::size_t row = i * b_;
    for (std::size_t j = 0; j < b_; ++j) li += weight_[row + j] * v[j];
    lam = std::max(lam, li);
  }
  return lam;
}

std::vector<double> coag_rate(std::span<const double> values,
                              const DerivedCoefficients& coeffs,
                              const MassGrid& grid) {
  CoagOperator op(coeffs, grid);
  std::vector<double> rate(grid.bins);
  op.apply(values, rate);
  return rate;
}

namespace {

struct CoagStepper {
  const CoagOperator& op;
  CoagIntegrator integrator;
  bool clip;
  double clipped = 0.0;
  std::vector<double> k1, k2, tmp;

  explicit CoagStepper(const CoagOperator& o, CoagIntegrator integ, bool clip_)
      : op(o), integrator(integ), clip(clip_),
        k1(o.bins()), k2(o.bins()), tmp(o.bins()) {}

  // one explicit substep of length h on a single cell, in place
  void substep(std::span<double> v, double h) {
    op.apply(v, k1);
    if (integrator == CoagIntegrator::Euler) {
      for (std::size_t b = 0; b < v.size(); ++b) v[b] += h * k1[b];
    } else {
      for (std::size_t b = 0; b < v.size(); ++b) tmp[b] = v[b] + h * k1[b];
      op.apply(tmp, k2);
      for (std::size_t b = 0; b < v.size(); ++b) {
        v[b] += 0.5 * h * (k1[b] + k2[b]);
      }
    }
    if (clip) {
      for (std::size_t b = 0; b < v.size(); ++b) {
        if (v[b] < 0.0) {
          clipped += -v[b];
          v[b] = 0.0;
        }
      }
    }
  }

  // advance a cell by dt, splitting into substeps that keep the explicit
  // integrator inside the stability region
  void advance(std::span<double> v, double dt) {
    const double lam = op.max_loss_rate(v);
    const int n_sub = std::max(1, static_cast<int>(std::ceil(dt * lam / 0.5)));
    const double h = dt / n_sub;
    for (int s = 0; s < n_sub; ++s) substep(v, h);
  }
};

}  // namespace

SolveResult solve(const FieldState& initial, double t_final,
                  const DerivedCoefficients& coeffs, const SolverOptions& opts,
                  std::span<const double> snapshot_times) {
  if (!(opts.dt > 0.0)) throw std::invalid_argument("solve: dt must be > 0");
  for (double t : snapshot_times) {
    if (t < initial.time - 1e-12 || t > t_final + 1e-12) {
      throw std::invalid_argument("solve: snapshot time outside [t0, T]");
    }
  }
  std::vector<double> snaps(snapshot_times.begin(), snapshot_times.end());
  std::sort(snaps.begin(), snaps.end());

  FieldState field = initial;
  const double total0 = field.total();
  const CoagOperator op(coeffs, field.bins);
  CoagStepper stepper(op, opts.coag_integrator, opts.positivity_clip);
  const std::size_t b_count = field.bins.bins;
  const double cell_width = 1.0 / static_cast<double>(field.x_cells);
  std::vector<double> density(b_count);

  SolveResult out;
  std::size_t next_snap = 0;
  auto emit = [&](double boundary) {
    while (next_snap < snaps.size() && snaps[next_snap] <= boundary + 1e-12) {
      out.snapshots.push_back(field);
      ++next_snap;
    }
  };
  emit(field.time);

  const double t0 = field.time;
  const auto n_steps = static_cast<std::size_t>(
      std::ceil((t_final - t0) / opts.dt - 1e-9));
  for (std::size_t s = 0; s < n_steps; ++s) {
    const double dt = opts.dt;
    const double dt_heat = (opts.splitting == Splitting::Strang) ? 0.5 * dt : dt;
    heat_step(field, coeffs.diffusivity(), dt_heat);
    for (std::size_t j = 0; j < field.x_cells; ++j) {
      for (std::size_t b = 0; b < b_count; ++b) {
        density[b] = field.at(j, b) / cell_width;
      }
      stepper.advance(density, dt);
      for (std::size_t b = 0; b < b_count; ++b) {
        field.at(j, b) = density[b] * cell_width;
      }
    }
    if (opts.splitting == Splitting::Strang) {
      heat_step(field, coeffs.diffusivity(), 0.5 * dt);
    }
    field.time = t0 + static_cast<double>(s + 1) * dt;
    if (opts.positivity_clip &&
        stepper.clipped * cell_width > opts.clip_budget_fraction * total0) {
      std::ostringstream os;
      os << "solve: positivity clipping exceeded budget at t=" << field.time
         << " (clipped " << stepper.clipped * cell_width << " of " << total0
         << "); decrease dt";
      throw std::runtime_error(os.str());
    }
    emit(field.time);
  }
  emit(t_final);
  out.steps = n_steps;
  out.clipped_mass = stepper.clipped * cell_width;
  out.mass_drift = std::abs(field.total() - total0);
  return out;
}

std::vector<double> constant_kernel_oracle(double t, double K0, double n0,
                                           std::size_t k_max) {
  if (!(K0 > 0.0) || !(n0 > 0.0)) {
    throw std::invalid_argument("constant_kernel_oracle: K0, n0 must be > 0");
  }
  std::vector<double> n(k_max);
  const double tau = 0.5 * K0 * n0 * t;
  const double denom = 1.0 + tau;
  // n_k = n0 tau^(k-1) / (1+tau)^(k+1)
  double num = n0 / (denom * denom);
  for (std::size_t k = 0; k < k_max; ++k) {
    n[k] = num;
    num *= tau / denom;
  }
  return n;
}

}  // namespace smolcircle
