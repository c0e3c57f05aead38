#ifndef SMOLCIRCLE_MEASURES_HPP
#define SMOLCIRCLE_MEASURES_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

// Measures on the circle x mass half-line: weighted atom clouds (empirical
// measures), cell/bin grid measures, moments against test functions, and
// the weak-convergence distance built from a fixed countable test family.

namespace smolcircle {

class DerivedCoefficients;

struct Atom {
  double x;  // circle coordinate in [0, 1)
  double m;  // rescaled mass
  double w;  // weight (mass carried by the atom)
};

struct EmpiricalMeasure {
  std::vector<Atom> atoms;
  double total_weight() const;
};

struct MassGrid {
  enum class Kind { Integer, Geometric };
  Kind kind = Kind::Integer;
  std::size_t bins = 0;
  double m_min = 1.0;  // Geometric only
  double ratio = 1.0;  // Geometric only

  static MassGrid integer(std::size_t bins);
  static MassGrid geometric(std::size_t bins, double m_min, double ratio);

  double representative(std::size_t b) const;
  // Bin receiving an atom of mass m; masses beyond the last representative
  // collect in the last bin so that totals are preserved.
  std::size_t bin_of(double m) const;
};

struct GridMeasure {
  std::size_t x_cells = 0;
  MassGrid bins;
  std::vector<double> values;  // x-major: values[j * bins + b], cell masses

  GridMeasure() = default;
  GridMeasure(std::size_t x_cells, MassGrid grid);

  double& at(std::size_t j, std::size_t b) {
    return values[j * bins.bins + b];
  }
  double at(std::size_t j, std::size_t b) const {
    return values[j * bins.bins + b];
  }
  double cell_center(std::size_t j) const {
    return (static_cast<double>(j) + 0.5) / static_cast<double>(x_cells);
  }
  double total() const;
};

// compensated (Neumaier) summation; the running error term is folded in
// at the end
double neumaier_sum(std::span<const double> values);

template <typename F>
double moment(const EmpiricalMeasure& mu, F&& f) {
  double sum = 0.0, comp = 0.0;
  for (const Atom& a : mu.atoms) {
    const double term = a.w * f(a.x, a.m);
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      comp += (sum - t) + term;
    } else {
      comp += (term - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

template <typename F>
double moment(const GridMeasure& g, F&& f) {
  double sum = 0.0, comp = 0.0;
  for (std::size_t j = 0; j < g.x_cells; ++j) {
    const double x = g.cell_center(j);
    for (std::size_t b = 0; b < g.bins.bins; ++b) {
      const double term = g.at(j, b) * f(x, g.bins.representative(b));
      const double t = sum + term;
      if (std::abs(sum) >= std::abs(term)) {
        comp += (sum - t) + term;
      } else {
        comp += (term - t) + sum;
      }
      sum = t;
    }
  }
  return sum + comp;
}

// Fixed countable family of bounded continuous test functions: tensor
// products trig(2 pi p x) * exp(-m / q) for p = 1..p_max, trig in
// {cos, sin}, q in qs, enumerated in that nesting order (p outer, trig
// middle, q inner). All members have sup norm <= 1.
struct TestFamily {
  int p_max = 8;
  std::vector<double> qs = {1.0, 2.0, 4.0, 8.0, 16.0};

  std::size_t size() const { return 2 * static_cast<std::size_t>(p_max) * qs.size(); }
  double eval(std::size_t k, double x, double m) const;
  static const TestFamily& standard();
};

std::vector<double> family_moments(const EmpiricalMeasure& mu,
                                   const TestFamily& family);
std::vector<double> family_moments(const GridMeasure& mu,
                                   const TestFamily& family);

// rho(mu, nu) = sum_k 2^{-k} |<f_k, mu> - <f_k, nu>| / (1 + |...|),
// k = 1..K; truncation error of the full series is below 2^{-K}.
double rho_from_moments(std::span<const double> a, std::span<const double> b);

template <typename M1, typename M2>
double rho_distance(const M1& mu, const M2& nu,
                    const TestFamily& family = TestFamily::standard()) {
  const auto a = family_moments(mu, family);
  const auto b = family_moments(nu, family);
  return rho_from_moments(a, b);
}

// Bins every atom into its (cell, bin); totals are preserved exactly.
GridMeasure project(const EmpiricalMeasure& mu, std::size_t x_cells,
                    const MassGrid& bins);

// Mass-flow density -> number-concentration density (divide bin-wise by
// the representative mass). Throws std::domain_error on a zero-mass bin.
GridMeasure to_concentration(const GridMeasure& g);

// sup over x-cells of <<omega(m)/m, upsilon>> (cell sums of w omega(m)/m
// divided by the cell width), the boundedness diagnostic for solutions.
double omega_over_m_sup(const EmpiricalMeasure& mu,
                        const DerivedCoefficients& coeffs,
                        std::size_t x_cells);
double omega_over_m_sup(const GridMeasure& g, const DerivedCoefficients& coeffs);

}  // namespace smolcircle

#endif
