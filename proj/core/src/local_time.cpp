#include "smolcircle/local_time.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace smolcircle {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

// 32-point Gauss-Legendre rule on [0, 1], nodes/weights generated once by
// Newton iteration on the Legendre polynomial
struct Gauss32 {
  std::array<double, 32> node{};
  std::array<double, 32> weight{};
  Gauss32() {
    constexpr int n = 32;
    for (int i = 0; i < n; ++i) {
      // initial guess on [-1, 1]
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (x * p0 - p1) / (x * x - 1.0);
        const double dx = p0 / pp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      node[i] = 0.5 * (1.0 - x);  // map to [0,1]
      weight[i] = 1.0 / ((1.0 - x * x) * pp * pp);
    }
  }
};

const Gauss32& gauss32() {
  static const Gauss32 g;
  return g;
}

}  // namespace

double bridge_local_time_mean(double d0, double d1, double sigma2,
                              TailMode mode) {
  if (!(sigma2 > 0.0)) {
    throw std::domain_error("bridge_local_time_mean: sigma2 must be > 0");
  }
  // canonical representative of the symmetry orbit
  // (d0,d1) ~ (d1,d0) ~ (-d0,-d1), so the symmetries hold exactly
  if (d0 + d1 < 0.0) {
    d0 = -d0;
    d1 = -d1;
  }
  if (d0 > d1) std::swap(d0, d1);
  const double v = sigma2;
  const double g = d1 - d0;

  // quick reject: the hazard scale is exp(-(c0^2 - g^2) / (2v)) with
  // c0 = |d0| + |d1|; far pairs contribute nothing representable
  const double c0 = std::abs(d0) + std::abs(d1);
  if ((c0 * c0 - g * g) / (2.0 * v) > 700.0 && mode == TailMode::Truncate) {
    return 0.0;
  }

  const int klo = (mode == TailMode::GaussianTail) ? -1 : 0;
  const int khi = (mode == TailMode::GaussianTail) ? 1 : 0;

  // denominator relative to exp(-g^2/(2v)); the nearest-image term is 1
  double den = 0.0;
  for (int k = klo; k <= khi; ++k) {
    const double gk = g + k;
    const double e = (g * g - gk * gk) / (2.0 * v);
    if (e > -700.0) den += std::exp(e);
  }
  if (den == 0.0) return 0.0;

  const auto& q = gauss32();
  const double inv_sqrt_2piv = 1.0 / std::sqrt(kTwoPi * v);

  double integral = 0.0;
  for (int i = 0; i < 32; ++i) {
    const double u = q.node[i];
    const double tau = u * u * (3.0 - 2.0 * u);
    const double jac = 6.0 * u * (1.0 - u);
    if (tau <= 0.0 || tau >= 1.0) continue;
    double num = 0.0;
    for (int k0 = klo; k0 <= khi; ++k0) {
      const double a = d0 + k0;
      for (int k1 = klo; k1 <= khi; ++k1) {
        const double b = d1 + k1;
        const double expo =
            (g * g - a * a / tau - b * b / (1.0 - tau)) / (2.0 * v);
        if (expo > -700.0) num += std::exp(expo);
      }
    }
    integral += q.weight[i] * jac * num / std::sqrt(tau * (1.0 - tau));
  }
  return v * inv_sqrt_2piv * integral / den;
}

LocalTimeTable::LocalTimeTable() : g_(kPoints * kPoints) {
  const double h = 2.0 * kRange / (kPoints - 1);
  for (int i = 0; i < kPoints; ++i) {
    const double u0 = -kRange + i * h;
    for (int j = 0; j < kPoints; ++j) {
      const double u1 = -kRange + j * h;
      g_[static_cast<std::size_t>(i) * kPoints + j] =
          bridge_local_time_mean(u0, u1, 1.0, TailMode::Truncate);
    }
  }
}

const LocalTimeTable& LocalTimeTable::instance() {
  static const LocalTimeTable table;
  return table;
}

double LocalTimeTable::normalized(double u0, double u1) const {
  if (std::abs(u0) >= kRange || std::abs(u1) >= kRange) return 0.0;
  constexpr double inv_h = (kPoints - 1) / (2.0 * kRange);
  const double fi = (u0 + kRange) * inv_h;
  const double fj = (u1 + kRange) * inv_h;
  const int i = static_cast<int>(fi);
  const int j = static_cast<int>(fj);
  const double s = fi - i;
  const double t = fj - j;
  const std::size_t idx = static_cast<std::size_t>(i) * kPoints + j;
  const double v00 = g_[idx], v01 = g_[idx + 1];
  const double v10 = g_[idx + kPoints], v11 = g_[idx + kPoints + 1];
  return (1 - s) * ((1 - t) * v00 + t * v01) + s * ((1 - t) * v10 + t * v11);
}

double LocalTimeTable::value(double d0, double d1, double sigma2) const {
  const double sigma = std::sqrt(sigma2);
  return sigma * normalized(d0 / sigma, d1 / sigma);
}

}  // namespace smolcircle
