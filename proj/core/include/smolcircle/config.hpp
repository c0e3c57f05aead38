#ifndef SMOLCIRCLE_CONFIG_HPP
#define SMOLCIRCLE_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smolcircle/kernels.hpp"
#include "smolcircle/massflow.hpp"
#include "smolcircle/particle_system.hpp"
#include "smolcircle/picard.hpp"

// Experiment configuration: a flat `key = value` text file with '#'
// comments. Unknown keys, missing required keys, and inconsistent values
// are configuration errors. The full key set is documented in the README.

namespace smolcircle {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RunMode { Mc, Pde, Picard, Compare, Sweep };

struct RunConfig {
  int schema_version = 1;
  RunMode mode = RunMode::Mc;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  std::string out_dir = "out";

  // kernel
  std::string kernel_family = "constant";  // constant | power_sum
  double kernel_rate = 1.0;
  double kernel_scale = 1.0;
  double kernel_alpha = 0.5;
  std::optional<double> kernel_p_exponent;
  std::optional<double> kernel_c_bound;

  // diffusivity
  std::string diffusivity_family = "constant";  // constant | power_law
  double diffusivity_a0 = 1.0;
  double diffusivity_beta = 1.0;

  // initial profile
  std::string initial_profile = "monodisperse";  // monodisperse | product
  std::string initial_spatial = "uniform";       // uniform | cosine | step
  double initial_cosine_amplitude = 0.5;
  std::string initial_mass_dist = "exponential";  // exponential | uniform
  double initial_mass_mean = 1.0;
  double initial_mass_lo = 0.5;
  double initial_mass_hi = 1.5;

  // Monte Carlo
  std::size_t n_particles = 1000;
  std::vector<std::size_t> n_list;  // sweep mode
  std::vector<std::uint64_t> sweep_seeds;  // optional per-N base seeds
  double t_final = 1.0;
  double dt = 1e-3;
  std::size_t replicas = 1;
  double window = 0.0;
  std::string tail_mode = "truncate";  // truncate | gaussian_tail
  std::vector<double> snapshot_times;

  // grids
  std::size_t x_cells = 256;
  std::size_t mass_bins = 64;
  std::string mass_grid = "integer";  // integer | geometric
  double geometric_ratio = 1.189207115002721;  // 2^(1/4)
  double geometric_m_min = 1.0;

  // PDE
  std::string splitting = "strang";        // strang | lie
  std::string coag_integrator = "rk2";     // rk2 | euler
  bool positivity_clip = true;
  std::optional<double> pde_dt;

  // Picard
  std::vector<int> picard_n_list = {2, 4, 8};
  double picard_tol = 1e-8;
  int picard_max_iter = 50;
  std::optional<double> picard_dt;

  // --- derived factories ---
  KernelSpec make_kernel() const;
  DiffusivitySpec make_diffusivity() const;
  DerivedCoefficients make_coefficients() const;
  InitialProfile make_initial_profile() const;
  MassGrid make_mass_grid() const;
  StepParams make_step_params() const;
  SolverOptions make_solver_options() const;
  PicardOptions make_picard_options() const;

  // canonical text form (sorted key=value lines) and its FNV-1a hash
  std::string canonical() const;
  std::string config_hash() const;
};

// Parses and validates; throws ConfigError with a descriptive message.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace smolcircle

#endif
