#include "smolcircle/picard.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace smolcircle {

namespace {

// ETD weights for int_0^h exp(-cbar (h-s)) S(s) ds with S linear on the
// step: I = h (alpha S0 + beta S1). Exact for constant sources, so
// stationary states are preserved to round-off.
void etd_weights(double z, double& e, double& alpha, double& beta) {
  e = std::exp(-z);
  if (std::abs(z) < 1e-4) {
    alpha = 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0;
    beta = 0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0;
  } else {
    alpha = (1.0 - (1.0 + z) * e) / (z * z);
    beta = (z - 1.0 + e) / (z * z);
  }
}

// gain/loss forms masked by the truncation window: the gain keeps only
// targets inside E_n, the loss only encounters whose pair sum lies in E_n
struct TruncatedKernels {
  std::size_t b;
  std::vector<double> weight;        // kappa(m_i, m_j) / m_j
  std::vector<std::uint32_t> t_lo, t_hi;
  std::vector<double> f_lo;
  std::vector<std::uint8_t> sum_in_en;
  std::vector<std::uint8_t> bin_in_en;

  TruncatedKernels(const DerivedCoefficients& coeffs, const MassGrid& grid,
                   int n)
      : b(grid.bins), weight(b * b), t_lo(b * b), t_hi(b * b), f_lo(b * b),
        sum_in_en(b * b), bin_in_en(b) {
    const double lo = 1.0 / static_cast<double>(n);
    const double hi = static_cast<double>(n);
    std::vector<double> rep(b);
    bool any = false;
    for (std::size_t i = 0; i < b; ++i) {
      rep[i] = grid.representative(i);
      bin_in_en[i] = (rep[i] >= lo && rep[i] <= hi) ? 1 : 0;
      any = any || bin_in_en[i];
    }
    if (!any) {
      throw std::invalid_argument("picard_truncated: no bin lies inside E_n");
    }
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const std::size_t idx = i * b + j;
        weight[idx] = coeffs.kappa(rep[i], rep[j]) / rep[j];
        const double s = rep[i] + rep[j];
        sum_in_en[idx] = (s >= lo && s <= hi) ? 1 : 0;
        if (grid.kind == MassGrid::Kind::Integer || s >= rep[b - 1]) {
          t_lo[idx] = t_hi[idx] = static_cast<std::uint32_t>(
              grid.kind == MassGrid::Kind::Integer ? std::min(i + j + 1, b - 1)
                                                   : b - 1);
          f_lo[idx] = 1.0;
        } else {
          std::size_t k = 0;
          while (k + 1 < b && rep[k + 1] < s) ++k;
          const double rl = rep[k], rh = rep[k + 1];
          t_lo[idx] = static_cast<std::uint32_t>(k);
          t_hi[idx] = static_cast<std::uint32_t>(k + 1);
          f_lo[idx] = rl * (rh - s) / (s * (rh - rl));
        }
      }
    }
  }

  // K_n^+ only (the source term of the scheme)
  void gain(const std::vector<double>& v, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      if (v[i] == 0.0) continue;
      for (std::size_t j = 0; j < b; ++j) {
        if (v[j] == 0.0) continue;
        const std::size_t idx = i * b + j;
        const double flux = weight[idx] * v[i] * v[j];
        const double f = f_lo[idx];
        if (bin_in_en[t_lo[idx]]) out[t_lo[idx]] += f * flux;
        if (f != 1.0 && bin_in_en[t_hi[idx]]) out[t_hi[idx]] += (1.0 - f) * flux;
      }
    }
  }

  // K_n = K_n^+ - K_n^- (drives the c-potential update)
  void net(const std::vector<double>& v, std::vector<double>& out) const {
    gain(v, out);
    for (std::size_t i = 0; i < b; ++i) {
      if (v[i] == 0.0) continue;
      double loss = 0.0;
      for (std::size_t j = 0; j < b; ++j) {
        const std::size_t idx = i * b + j;
        if (sum_in_en[idx]) loss += weight[idx] * v[j];
      }
      out[i] -= v[i] * loss;
    }
  }
};

}  // namespace

PicardResult picard_truncated(int n, const HomogeneousState& nu_star,
                              double t_final, const DerivedCoefficients& coeffs,
                              const PicardOptions& opts) {
  if (n < 1) throw std::invalid_argument("picard_truncated: n must be >= 1");
  if (!(opts.dt > 0.0) || !(opts.tol > 0.0)) {
    throw std::invalid_argument("picard_truncated: dt and tol must be > 0");
  }
  const std::size_t b = nu_star.bins.bins;
  if (nu_star.values.size() != b) {
    throw std::invalid_argument("picard_truncated: state size mismatch");
  }
  const TruncatedKernels kn(coeffs, nu_star.bins, n);

  const auto steps = static_cast<std::size_t>(
      std::ceil(t_final / opts.dt - 1e-9));
  const std::size_t nt = steps + 1;
  const double dt = opts.dt;

  PicardResult result;
  result.times.resize(nt);
  for (std::size_t s = 0; s < nt; ++s) {
    result.times[s] = static_cast<double>(s) * dt;
  }

  // reference solution of the untruncated equation on the same grid
  {
    FieldState init(1, nu_star.bins);
    init.values = nu_star.values;
    SolverOptions ropts = opts.reference;
    ropts.dt = dt;
    SolveResult ref = solve(init, t_final, coeffs, ropts, result.times);
    if (ref.snapshots.size() != nt) {
      throw std::logic_error("picard_truncated: reference snapshot mismatch");
    }
    result.reference.resize(nt);
    for (std::size_t s = 0; s < nt; ++s) {
      result.reference[s] = ref.snapshots[s].values;
    }
  }

  std::vector<double> rep(b), omega(b);
  for (std::size_t i = 0; i < b; ++i) {
    rep[i] = nu_star.bins.representative(i);
    omega[i] = coeffs.omega(rep[i]);
  }
  // omega(m) omega(m') - kappa(m, m'), the nonnegative compensator weight
  std::vector<double> delta_w(b * b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      delta_w[i * b + j] =
          (omega[i] * omega[j] - coeffs.kappa(rep[i], rep[j])) / rep[j];
    }
  }

  std::vector<double> nu_n(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    if (kn.bin_in_en[i]) nu_n[i] = nu_star.values[i];
  }
  // <omega(m')/m', nu> over the full initial measure
  double a_nu = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    a_nu += omega[i] / rep[i] * nu_star.values[i];
  }

  using Traj = std::vector<std::vector<double>>;
  Traj mu(nt, std::vector<double>(b, 0.0));
  if (opts.init == PicardInit::ReferenceTruncated) {
    for (std::size_t s = 0; s < nt; ++s) {
      for (std::size_t i = 0; i < b; ++i) {
        if (kn.bin_in_en[i]) mu[s][i] = result.reference[s][i];
      }
    }
  }

  // c_t(m) = omega(m) (A + int_0^t <omega/m', Kn(mu_s)> ds), trapezoid in t
  std::vector<double> knet(b);
  auto compute_c = [&](const Traj& m_traj, Traj& c_traj) {
    c_traj.assign(nt, std::vector<double>(b, 0.0));
    double integral = 0.0;
    double g_prev = 0.0;
    for (std::size_t s = 0; s < nt; ++s) {
      kn.net(m_traj[s], knet);
      double g = 0.0;
      for (std::size_t i = 0; i < b; ++i) g += omega[i] / rep[i] * knet[i];
      if (s > 0) integral += 0.5 * dt * (g_prev + g);
      g_prev = g;
      const double base = a_nu + integral;
      for (std::size_t i = 0; i < b; ++i) c_traj[s][i] = omega[i] * base;
    }
  };

  Traj c_k;
  compute_c(mu, c_k);

  auto source_at = [&](const std::vector<double>& state,
                       std::vector<double>& src) {
    kn.gain(state, src);
    for (std::size_t i = 0; i < b; ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < b; ++j) d += delta_w[i * b + j] * state[j];
      src[i] += d * state[i];
    }
  };

  result.iterates.push_back(mu);
  Traj mu_next(nt, std::vector<double>(b, 0.0));
  std::vector<double> src0(b), src1(b);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    mu_next[0] = nu_n;
    source_at(mu[0], src0);
    for (std::size_t s = 0; s + 1 < nt; ++s) {
      source_at(mu[s + 1], src1);
      for (std::size_t i = 0; i < b; ++i) {
        const double cbar = 0.5 * (c_k[s][i] + c_k[s + 1][i]);
        double e, alpha, beta;
        etd_weights(cbar * dt, e, alpha, beta);
        mu_next[s + 1][i] =
            e * mu_next[s][i] + dt * (alpha * src0[i] + beta * src1[i]);
      }
      std::swap(src0, src1);
    }

    double dist = 0.0;
    for (std::size_t s = 0; s < nt; ++s) {
      double tv = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        tv += std::abs(mu_next[s][i] - mu[s][i]);
      }
      dist = std::max(dist, tv);
    }
    result.iterate_distances.push_back(dist);
    mu.swap(mu_next);
    compute_c(mu, c_k);
    result.iterates.push_back(mu);
    result.iterations = static_cast<std::size_t>(iter + 1);
    if (dist < opts.tol) {
      result.converged = true;
      break;
    }
  }

  if (!result.converged) {
    std::ostringstream os;
    os << "picard_truncated: no convergence after " << opts.max_iter
       << " iterations; sup-TV distances:";
    for (double d : result.iterate_distances) os << " " << d;
    throw PicardNonConvergence(os.str(), result.iterate_distances);
  }

  result.fixed_point = mu;
  result.c_trajectory = c_k;
  return result;
}

}  // namespace smolcircle
