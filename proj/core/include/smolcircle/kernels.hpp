#ifndef SMOLCIRCLE_KERNELS_HPP
#define SMOLCIRCLE_KERNELS_HPP

#include <span>
#include <string>
#include <vector>

// Model coefficients: the symmetric coagulation rate Phi(m, m'), the
// mass-dependent diffusivity a(m), and the derived quantities
//   kappa(m, m') = Phi(m, m') * (a(m) + a(m'))
//   omega(m)     = (1 + c + a(1)) * (m^p + a(m) + 1)
//   varpi(m)     = a(m) + 1
// together with a numerical validator for the standing assumptions
// (symmetry, vanishing at zero, growth bound, Lipschitz estimate,
// subadditivity, monotone diffusivity) on a user-supplied mass grid.
//
// All types are immutable after construction and safe to share across
// threads.

namespace smolcircle {

enum class PhiFamily { PowerSum, Constant, Custom };

class KernelSpec {
 public:
  // Phi(m, m') = scale * (m^alpha + m'^alpha) on m, m' > 0.
  // Defaults p_exponent = min(alpha, 1/2) and c_bound = scale, which makes
  // the growth bound an equality for alpha <= 1/2.
  static KernelSpec power_sum(double scale, double alpha);
  static KernelSpec power_sum(double scale, double alpha, double p_exponent,
                              double c_bound);

  // Phi(m, m') = rate on m, m' > 0. Growth bound holds with p = 0 and
  // c = rate / 2 (tight).
  static KernelSpec constant(double rate);
  static KernelSpec constant(double rate, double p_exponent, double c_bound);

  // Tabulated symmetric kernel, interpolated piecewise-linearly in
  // (log m, log m'). The table is symmetrized on construction.
  static KernelSpec custom(std::vector<double> mass_grid,
                           std::vector<double> table, double p_exponent,
                           double c_bound);

  double phi(double m, double m2) const;
  double p_exponent() const { return p_exponent_; }
  double c_bound() const { return c_bound_; }
  PhiFamily family() const { return family_; }

  // PowerSum and Constant decompose as phi(m,m') = term(m) + term(m') on
  // positive masses; the particle stepper uses this to cache per-particle
  // contributions.
  bool is_additive() const { return family_ != PhiFamily::Custom; }
  double additive_term(double m) const;

 private:
  KernelSpec() = default;
  PhiFamily family_ = PhiFamily::Constant;
  double scale_ = 0.0;   // PowerSum C / Constant rate
  double alpha_ = 0.0;   // PowerSum exponent
  double p_exponent_ = 0.0;
  double c_bound_ = 0.0;
  std::vector<double> log_grid_;  // Custom
  std::vector<double> table_;     // Custom, row-major over grid x grid
};

class DiffusivitySpec {
 public:
  // a(m) = m^(-beta) for m > 0, a(0) = 0; requires beta <= 1.
  static DiffusivitySpec power_law(double beta);
  // a(m) = a0 for m > 0, a(0) = 0.
  static DiffusivitySpec constant(double a0);
  // Tabulated nonincreasing values, piecewise-linear in log mass.
  static DiffusivitySpec custom_monotone(std::vector<double> mass_grid,
                                         std::vector<double> values);

  double a(double m) const;

 private:
  enum class Family { PowerLaw, Constant, Custom };
  DiffusivitySpec() = default;
  Family family_ = Family::Constant;
  double beta_ = 0.0;
  double a0_ = 0.0;
  std::vector<double> log_grid_;
  std::vector<double> values_;
};

class DerivedCoefficients {
 public:
  DerivedCoefficients(KernelSpec kernel, DiffusivitySpec diffusivity);

  double phi(double m, double m2) const { return kernel_.phi(m, m2); }
  double a(double m) const { return diffusivity_.a(m); }
  double kappa(double m, double m2) const;
  double omega(double m) const;
  double varpi(double m) const;

  const KernelSpec& kernel() const { return kernel_; }
  const DiffusivitySpec& diffusivity() const { return diffusivity_; }

 private:
  KernelSpec kernel_;
  DiffusivitySpec diffusivity_;
  double omega_prefactor_ = 0.0;  // 1 + c + a(1)
};

struct ConditionResult {
  std::string name;
  bool pass = false;
  double worst_margin = 0.0;  // most violated amount (<= 0 means clean pass)
  double worst_m = 0.0;
  double worst_m2 = 0.0;
  std::string note;
};

struct ValidationReport {
  std::vector<ConditionResult> conditions;
  // Lipschitz constants Gamma(L) estimated by finite differences for a few
  // thresholds L taken from the grid.
  std::vector<std::pair<double, double>> lipschitz_constants;
  bool all_pass() const;
  const ConditionResult* find(const std::string& name) const;
  std::string summary() const;
};

// Spot-checks the standing assumptions on the given strictly positive,
// sorted mass grid. Throws std::invalid_argument on an empty grid.
ValidationReport validate_assumptions(const KernelSpec& kernel,
                                      const DiffusivitySpec& diffusivity,
                                      std::span<const double> mass_grid);

// 256 log-spaced points in [1e-3, 1e3].
std::vector<double> default_mass_grid();

}  // namespace smolcircle

#endif
