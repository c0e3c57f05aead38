#include "smolcircle/measures.hpp"

#include <algorithm>
#include <cmath>

#include "smolcircle/kernels.hpp"

namespace smolcircle {

double neumaier_sum(std::span<const double> values) {
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double EmpiricalMeasure::total_weight() const {
  double sum = 0.0, comp = 0.0;
  for (const Atom& a : atoms) {
    const double t = sum + a.w;
    if (std::abs(sum) >= std::abs(a.w)) {
      comp += (sum - t) + a.w;
    } else {
      comp += (a.w - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

MassGrid MassGrid::integer(std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("mass grid needs >= 1 bin");
  MassGrid g;
  g.kind = Kind::Integer;
  g.bins = bins;
  return g;
}

MassGrid MassGrid::geometric(std::size_t bins, double m_min, double ratio) {
  if (bins == 0) throw std::invalid_argument("mass grid needs >= 1 bin");
  if (!(m_min > 0.0) || !(ratio > 1.0)) {
    throw std::invalid_argument("geometric grid needs m_min > 0, ratio > 1");
  }
  MassGrid g;
  g.kind = Kind::Geometric;
  g.bins = bins;
  g.m_min = m_min;
  g.ratio = ratio;
  return g;
}

double MassGrid::representative(std::size_t b) const {
  if (kind == Kind::Integer) return static_cast<double>(b + 1);
  return m_min * std::pow(ratio, static_cast<double>(b));
}

std::size_t MassGrid::bin_of(double m) const {
  if (kind == Kind::Integer) {
    if (m < 0.5) return 0;
    const double r = std::floor(m + 0.5);
    if (r >= static_cast<double>(bins)) return bins - 1;
    return static_cast<std::size_t>(r) - 1;
  }
  // geometric: nearest representative in log mass, overflow to last bin
  if (m <= m_min) return 0;
  const double k = std::log(m / m_min) / std::log(ratio);
  const double r = std::floor(k + 0.5);
  if (r >= static_cast<double>(bins)) return bins - 1;
  if (r < 0.0) return 0;
  return static_cast<std::size_t>(r);
}

GridMeasure::GridMeasure(std::size_t x_cells_, MassGrid grid)
    : x_cells(x_cells_), bins(grid), values(x_cells_ * grid.bins, 0.0) {}

double GridMeasure::total() const { return neumaier_sum(values); }

double TestFamily::eval(std::size_t k, double x, double m) const {
  const std::size_t nq = qs.size();
  const std::size_t p = k / (2 * nq) + 1;
  const std::size_t trig = (k / nq) % 2;
  const double q = qs[k % nq];
  const double phase = 2.0 * M_PI * static_cast<double>(p) * x;
  const double spatial = (trig == 0) ? std::cos(phase) : std::sin(phase);
  return spatial * std::exp(-m / q);
}

const TestFamily& TestFamily::standard() {
  static const TestFamily f;
  return f;
}

namespace {

template <typename M>
std::vector<double> family_moments_impl(const M& mu, const TestFamily& family) {
  std::vector<double> out(family.size());
  for (std::size_t k = 0; k < family.size(); ++k) {
    out[k] = moment(mu, [&](double x, double m) { return family.eval(k, x, m); });
  }
  return out;
}

}  // namespace

std::vector<double> family_moments(const EmpiricalMeasure& mu,
                                   const TestFamily& family) {
  return family_moments_impl(mu, family);
}

std::vector<double> family_moments(const GridMeasure& mu,
                                   const TestFamily& family) {
  return family_moments_impl(mu, family);
}

double rho_from_moments(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("rho_from_moments: size mismatch");
  }
  double rho = 0.0;
  double w = 1.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    w *= 0.5;  // weights 2^{-k}, k starting at 1
    const double d = std::abs(a[k] - b[k]);
    rho += w * d / (1.0 + d);
  }
  return rho;
}

GridMeasure project(const EmpiricalMeasure& mu, std::size_t x_cells,
                    const MassGrid& bins) {
  if (x_cells == 0) throw std::invalid_argument("project: x_cells must be > 0");
  GridMeasure g(x_cells, bins);
  for (const Atom& a : mu.atoms) {
    auto j = static_cast<std::size_t>(a.x * static_cast<double>(x_cells));
    if (j >= x_cells) j = x_cells - 1;
    g.at(j, bins.bin_of(a.m)) += a.w;
  }
  return g;
}

GridMeasure to_concentration(const GridMeasure& g) {
  GridMeasure out = g;
  for (std::size_t b = 0; b < g.bins.bins; ++b) {
    const double m = g.bins.representative(b);
    if (!(m > 0.0)) throw std::domain_error("to_concentration: zero-mass bin");
    for (std::size_t j = 0; j < g.x_cells; ++j) {
      out.at(j, b) = g.at(j, b) / m;
    }
  }
  return out;
}

double omega_over_m_sup(const EmpiricalMeasure& mu,
                        const DerivedCoefficients& coeffs,
                        std::size_t x_cells) {
  std::vector<double> cell(x_cells, 0.0);
  for (const Atom& a : mu.atoms) {
    if (a.m <= 0.0) continue;
    auto j = static_cast<std::size_t>(a.x * static_cast<double>(x_cells));
    if (j >= x_cells) j = x_cells - 1;
    cell[j] += a.w * coeffs.omega(a.m) / a.m;
  }
  const double width = 1.0 / static_cast<double>(x_cells);
  double sup = 0.0;
  for (double c : cell) sup = std::max(sup, c / width);
  return sup;
}

double omega_over_m_sup(const GridMeasure& g, const DerivedCoefficients& coeffs) {
  const double width = 1.0 / static_cast<double>(g.x_cells);
  double sup = 0.0;
  for (std::size_t j = 0; j < g.x_cells; ++j) {
    double c = 0.0;
    for (std::size_t b = 0; b < g.bins.bins; ++b) {
      const double m = g.bins.representative(b);
      if (m > 0.0) c += g.at(j, b) * coeffs.omega(m) / m;
    }
    sup = std::max(sup, c / width);
  }
  return sup;
}

}  // namespace smolcircle
