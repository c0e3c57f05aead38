#include "smolcircle/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace smolcircle {

namespace {

void require_nonnegative(double m, double m2) {
  if (m < 0.0 || m2 < 0.0) {
    throw std::domain_error("kernel evaluated at negative mass");
  }
}

// index of the left grid point for piecewise-linear interpolation, clamped
std::size_t bracket(const std::vector<double>& grid, double v) {
  if (v <= grid.front()) return 0;
  if (v >= grid[grid.size() - 2]) return grid.size() - 2;
  return static_cast<std::size_t>(
             std::upper_bound(grid.begin(), grid.end(), v) - grid.begin()) -
         1;
}

double lerp_frac(const std::vector<double>& grid, std::size_t i, double v) {
  const double lo = grid[i], hi = grid[i + 1];
  double t = (v - lo) / (hi - lo);
  return std::clamp(t, 0.0, 1.0);
}

}  // namespace

KernelSpec KernelSpec::power_sum(double scale, double alpha) {
  return power_sum(scale, alpha, std::min(alpha, 0.5), scale);
}

KernelSpec KernelSpec::power_sum(double scale, double alpha, double p_exponent,
                                 double c_bound) {
  if (scale < 0.0) throw std::invalid_argument("power_sum: scale must be >= 0");
  if (alpha < 0.0) throw std::invalid_argument("power_sum: alpha must be >= 0");
  if (p_exponent < 0.0 || p_exponent > 0.5) {
    throw std::invalid_argument("p_exponent must lie in [0, 1/2]");
  }
  KernelSpec k;
  k.family_ = PhiFamily::PowerSum;
  k.scale_ = scale;
  k.alpha_ = alpha;
  k.p_exponent_ = p_exponent;
  k.c_bound_ = c_bound;
  return k;
}

KernelSpec KernelSpec::constant(double rate) {
  return constant(rate, 0.0, 0.5 * rate);
}

KernelSpec KernelSpec::constant(double rate, double p_exponent, double c_bound) {
  if (rate < 0.0) throw std::invalid_argument("constant: rate must be >= 0");
  if (p_exponent < 0.0 || p_exponent > 0.5) {
    throw std::invalid_argument("p_exponent must lie in [0, 1/2]");
  }
  KernelSpec k;
  k.family_ = PhiFamily::Constant;
  k.scale_ = rate;
  k.p_exponent_ = p_exponent;
  k.c_bound_ = c_bound;
  return k;
}

KernelSpec KernelSpec::custom(std::vector<double> mass_grid,
                              std::vector<double> table, double p_exponent,
                              double c_bound) {
  const std::size_t n = mass_grid.size();
  if (n < 2) throw std::invalid_argument("custom kernel: need >= 2 grid points");
  if (table.size() != n * n) {
    throw std::invalid_argument("custom kernel: table must be grid^2");
  }
  if (!std::is_sorted(mass_grid.begin(), mass_grid.end()) ||
      mass_grid.front() <= 0.0) {
    throw std::invalid_argument("custom kernel: grid must be sorted, positive");
  }
  if (p_exponent < 0.0 || p_exponent > 0.5) {
    throw std::invalid_argument("p_exponent must lie in [0, 1/2]");
  }
  KernelSpec k;
  k.family_ = PhiFamily::Custom;
  k.p_exponent_ = p_exponent;
  k.c_bound_ = c_bound;
  k.log_grid_.resize(n);
  for (std::size_t i = 0; i < n; ++i) k.log_grid_[i] = std::log(mass_grid[i]);
  k.table_.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      k.table_[i * n + j] = 0.5 * (table[i * n + j] + table[j * n + i]);
    }
  }
  return k;
}

double KernelSpec::additive_term(double m) const {
  if (m <= 0.0) return 0.0;
  switch (family_) {
    case PhiFamily::PowerSum:
      return scale_ * std::pow(m, alpha_);
    case PhiFamily::Constant:
      return 0.5 * scale_;
    case PhiFamily::Custom:
      throw std::logic_error("custom kernel is not additive");
  }
  return 0.0;
}

double KernelSpec::phi(double m, double m2) const {
  require_nonnegative(m, m2);
  if (m == 0.0 || m2 == 0.0) return 0.0;
  switch (family_) {
    case PhiFamily::PowerSum:
      return scale_ * (std::pow(m, alpha_) + std::pow(m2, alpha_));
    case PhiFamily::Constant:
      return scale_;
    case PhiFamily::Custom: {
      if (m > m2) std::swap(m, m2);  // exact symmetry under round-off
      const std::size_t n = log_grid_.size();
      const double lu = std::log(m), lv = std::log(m2);
      const std::size_t i = bracket(log_grid_, lu);
      const std::size_t j = bracket(log_grid_, lv);
      const double s = lerp_frac(log_grid_, i, lu);
      const double t = lerp_frac(log_grid_, j, lv);
      const double v00 = table_[i * n + j], v01 = table_[i * n + j + 1];
      const double v10 = table_[(i + 1) * n + j], v11 = table_[(i + 1) * n + j + 1];
      return (1 - s) * ((1 - t) * v00 + t * v01) + s * ((1 - t) * v10 + t * v11);
    }
  }
  return 0.0;
}

DiffusivitySpec DiffusivitySpec::power_law(double beta) {
  if (beta > 1.0) throw std::invalid_argument("power_law: beta must be <= 1");
  if (beta < 0.0) throw std::invalid_argument("power_law: beta must be >= 0");
  DiffusivitySpec d;
  d.family_ = Family::PowerLaw;
  d.beta_ = beta;
  return d;
}

DiffusivitySpec DiffusivitySpec::constant(double a0) {
  if (a0 <= 0.0) throw std::invalid_argument("constant diffusivity must be > 0");
  DiffusivitySpec d;
  d.family_ = Family::Constant;
  d.a0_ = a0;
  return d;
}

DiffusivitySpec DiffusivitySpec::custom_monotone(std::vector<double> mass_grid,
                                                 std::vector<double> values) {
  const std::size_t n = mass_grid.size();
  if (n < 2 || values.size() != n) {
    throw std::invalid_argument("custom diffusivity: bad table sizes");
  }
  if (!std::is_sorted(mass_grid.begin(), mass_grid.end()) ||
      mass_grid.front() <= 0.0) {
    throw std::invalid_argument("custom diffusivity: grid must be sorted, positive");
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (values[i + 1] > values[i]) {
      throw std::invalid_argument("custom diffusivity: values must be nonincreasing");
    }
  }
  if (values.back() <= 0.0) {
    throw std::invalid_argument("custom diffusivity: values must be positive");
  }
  DiffusivitySpec d;
  d.family_ = Family::Custom;
  d.log_grid_.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.log_grid_[i] = std::log(mass_grid[i]);
  d.values_ = std::move(values);
  return d;
}

double DiffusivitySpec::a(double m) const {
  if (m < 0.0) throw std::domain_error("diffusivity evaluated at negative mass");
  if (m == 0.0) return 0.0;
  switch (family_) {
    case Family::PowerLaw:
      return std::pow(m, -beta_);
    case Family::Constant:
      return a0_;
    case Family::Custom: {
      const double lm = std::log(m);
      const std::size_t i = bracket(log_grid_, lm);
      const double t = lerp_frac(log_grid_, i, lm);
      return (1 - t) * values_[i] + t * values_[i + 1];
    }
  }
  return 0.0;
}

DerivedCoefficients::DerivedCoefficients(KernelSpec kernel,
                                         DiffusivitySpec diffusivity)
    : kernel_(std::move(kernel)), diffusivity_(std::move(diffusivity)) {
  omega_prefactor_ = 1.0 + kernel_.c_bound() + diffusivity_.a(1.0);
}

double DerivedCoefficients::kappa(double m, double m2) const {
  const double p = kernel_.phi(m, m2);
  if (p == 0.0) return 0.0;
  return p * (diffusivity_.a(m) + diffusivity_.a(m2));
}

double DerivedCoefficients::omega(double m) const {
  return omega_prefactor_ *
         (std::pow(m, kernel_.p_exponent()) + diffusivity_.a(m) + 1.0);
}

double DerivedCoefficients::varpi(double m) const {
  return diffusivity_.a(m) + 1.0;
}

bool ValidationReport::all_pass() const {
  for (const auto& c : conditions) {
    if (!c.pass) return false;
  }
  return true;
}

const ConditionResult* ValidationReport::find(const std::string& name) const {
  for (const auto& c : conditions) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : conditions) {
    os << (c.pass ? "pass " : "FAIL ") << c.name << " worst_margin="
       << c.worst_margin << " at (" << c.worst_m << ", " << c.worst_m2 << ")";
    if (!c.note.empty()) os << " [" << c.note << "]";
    os << "\n";
  }
  for (const auto& [L, G] : lipschitz_constants) {
    os << "Gamma(" << L << ") ~= " << G << "\n";
  }
  return os.str();
}

namespace {

// relative slack absorbing round-off in checks that are equalities for the
// reference families
constexpr double kRelTol = 1e-12;

ConditionResult check_pairs(
    const std::string& name, std::span<const double> grid,
    const std::function<double(double, double)>& violation) {
  ConditionResult r;
  r.name = name;
  r.pass = true;
  r.worst_margin = -std::numeric_limits<double>::infinity();
  for (double m : grid) {
    for (double m2 : grid) {
      const double v = violation(m, m2);
      if (v > r.worst_margin) {
        r.worst_margin = v;
        r.worst_m = m;
        r.worst_m2 = m2;
      }
      if (v > 0.0) r.pass = false;
    }
  }
  return r;
}

}  // namespace

ValidationReport validate_assumptions(const KernelSpec& kernel,
                                      const DiffusivitySpec& diffusivity,
                                      std::span<const double> mass_grid) {
  if (mass_grid.empty()) {
    throw std::invalid_argument("validate_assumptions: empty mass grid");
  }
  for (double m : mass_grid) {
    if (!(m > 0.0)) {
      throw std::invalid_argument("validate_assumptions: grid must be strictly positive");
    }
  }
  const DerivedCoefficients coeffs(kernel, diffusivity);
  ValidationReport report;

  report.conditions.push_back(check_pairs(
      "symmetry", mass_grid, [&](double m, double m2) {
        return std::abs(kernel.phi(m, m2) - kernel.phi(m2, m));
      }));

  {
    ConditionResult r;
    r.name = "vanishes_at_zero";
    r.pass = true;
    r.worst_margin = 0.0;
    for (double m : mass_grid) {
      const double v = std::max(kernel.phi(0.0, m), kernel.phi(m, 0.0));
      if (v > r.worst_margin) {
        r.worst_margin = v;
        r.worst_m = m;
      }
      if (v != 0.0) r.pass = false;
    }
    report.conditions.push_back(std::move(r));
  }

  const double c = kernel.c_bound();
  const double p = kernel.p_exponent();
  report.conditions.push_back(check_pairs(
      "growth_bound", mass_grid, [&](double m, double m2) {
        const double bound = c * (std::pow(m, p) + std::pow(m2, p));
        return kernel.phi(m, m2) - bound * (1.0 + kRelTol);
      }));
  report.conditions.back().note = "Phi <= c (m^p + m'^p)";

  {
    // finite-difference Lipschitz estimate away from the origin; the
    // increment is the adjacent grid spacing
    ConditionResult r;
    r.name = "lipschitz_away_from_origin";
    r.pass = true;
    const std::size_t n = mass_grid.size();
    const std::size_t idxs[] = {n / 8, n / 4, n / 2, (3 * n) / 4};
    for (std::size_t idx : idxs) {
      if (idx + 1 >= n) continue;
      const double L = mass_grid[idx];
      double gamma = 0.0;
      for (std::size_t i = idx; i + 1 < n; ++i) {
        const double m = mass_grid[i];
        const double h = mass_grid[i + 1] - mass_grid[i];
        if (h <= 0.0) continue;
        for (double m2 : mass_grid) {
          const double d = std::abs(kernel.phi(m + h, m2) - kernel.phi(m, m2)) / h;
          gamma = std::max(gamma, d);
        }
      }
      if (!std::isfinite(gamma)) r.pass = false;
      report.lipschitz_constants.emplace_back(L, gamma);
    }
    r.note = "finite-difference estimate; see lipschitz_constants";
    report.conditions.push_back(std::move(r));
  }

  const auto g_omega = [&](double m) {
    return coeffs.omega(m) / std::sqrt(diffusivity.a(m));
  };
  report.conditions.push_back(check_pairs(
      "subadditive_ainv_omega", mass_grid, [&](double m, double m2) {
        const double lhs = g_omega(m + m2);
        const double rhs = g_omega(m) + g_omega(m2);
        return lhs - rhs * (1.0 + kRelTol);
      }));

  const auto g_omega_varpi = [&](double m) {
    return coeffs.omega(m) * coeffs.varpi(m) / std::sqrt(diffusivity.a(m));
  };
  report.conditions.push_back(check_pairs(
      "subadditive_ainv_omega_varpi", mass_grid, [&](double m, double m2) {
        const double lhs = g_omega_varpi(m + m2);
        const double rhs = g_omega_varpi(m) + g_omega_varpi(m2);
        return lhs - rhs * (1.0 + kRelTol);
      }));

  {
    ConditionResult r;
    r.name = "diffusivity_nonincreasing";
    r.pass = true;
    r.worst_margin = -std::numeric_limits<double>::infinity();
    if (diffusivity.a(0.0) != 0.0) r.pass = false;
    for (std::size_t i = 0; i + 1 < mass_grid.size(); ++i) {
      const double lhs = diffusivity.a(mass_grid[i + 1]);
      const double rhs = diffusivity.a(mass_grid[i]);
      const double v = lhs - rhs * (1.0 + kRelTol);
      if (v > r.worst_margin) {
        r.worst_margin = v;
        r.worst_m = mass_grid[i];
        r.worst_m2 = mass_grid[i + 1];
      }
      if (v > 0.0) r.pass = false;
    }
    r.note = "a nonincreasing on (0,inf), a(0)=0";
    report.conditions.push_back(std::move(r));
  }

  return report;
}

std::vector<double> default_mass_grid() {
  constexpr std::size_t n = 256;
  std::vector<double> grid(n);
  const double lo = std::log(1e-3), hi = std::log(1e3);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(n - 1));
  }
  return grid;
}

}  // namespace smolcircle
