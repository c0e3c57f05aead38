#include "smolcircle/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace smolcircle {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (...) {
    throw ConfigError("config: bad numeric value for '" + key + "': " + v);
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return u;
  } catch (...) {
    throw ConfigError("config: bad integer value for '" + key + "': " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean value for '" + key + "': " + v);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config: empty key or value on line " +
                        std::to_string(lineno));
    }
    if (kv.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
    kv[key] = value;
  }

  RunConfig c;
  std::set<std::string> seen;
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    seen.insert(key);
    return it->second;
  };

  if (auto v = take("schema_version")) {
    c.schema_version = static_cast<int>(to_u64("schema_version", *v));
    if (c.schema_version != 1) {
      throw ConfigError("config: unsupported schema_version");
    }
  }
  if (auto v = take("mode")) {
    static const std::map<std::string, RunMode> modes = {
        {"mc", RunMode::Mc},         {"pde", RunMode::Pde},
        {"picard", RunMode::Picard}, {"compare", RunMode::Compare},
        {"sweep", RunMode::Sweep}};
    auto it = modes.find(*v);
    if (it == modes.end()) throw ConfigError("config: unknown mode '" + *v + "'");
    c.mode = it->second;
  }

  if (auto v = take("seed")) c.seed = to_u64("seed", *v);
  if (auto v = take("threads")) c.threads = static_cast<int>(to_u64("threads", *v));
  if (auto v = take("out_dir")) c.out_dir = *v;

  if (auto v = take("kernel.family")) c.kernel_family = *v;
  if (auto v = take("kernel.rate")) c.kernel_rate = to_double("kernel.rate", *v);
  if (auto v = take("kernel.scale")) c.kernel_scale = to_double("kernel.scale", *v);
  if (auto v = take("kernel.alpha")) c.kernel_alpha = to_double("kernel.alpha", *v);
  if (auto v = take("kernel.p_exponent")) {
    c.kernel_p_exponent = to_double("kernel.p_exponent", *v);
  }
  if (auto v = take("kernel.c_bound")) {
    c.kernel_c_bound = to_double("kernel.c_bound", *v);
  }

  if (auto v = take("diffusivity.family")) c.diffusivity_family = *v;
  if (auto v = take("diffusivity.a0")) {
    c.diffusivity_a0 = to_double("diffusivity.a0", *v);
  }
  if (auto v = take("diffusivity.beta")) {
    c.diffusivity_beta = to_double("diffusivity.beta", *v);
  }

  if (auto v = take("initial.profile")) c.initial_profile = *v;
  if (auto v = take("initial.spatial")) c.initial_spatial = *v;
  if (auto v = take("initial.cosine_amplitude")) {
    c.initial_cosine_amplitude = to_double("initial.cosine_amplitude", *v);
  }
  if (auto v = take("initial.mass_dist")) c.initial_mass_dist = *v;
  if (auto v = take("initial.mass_mean")) {
    c.initial_mass_mean = to_double("initial.mass_mean", *v);
  }
  if (auto v = take("initial.mass_lo")) {
    c.initial_mass_lo = to_double("initial.mass_lo", *v);
  }
  if (auto v = take("initial.mass_hi")) {
    c.initial_mass_hi = to_double("initial.mass_hi", *v);
  }

  if (auto v = take("N")) c.n_particles = to_u64("N", *v);
  if (auto v = take("N_list")) {
    for (const auto& s : split_csv(*v)) c.n_list.push_back(to_u64("N_list", s));
  }
  if (auto v = take("sweep.seeds")) {
    for (const auto& s : split_csv(*v)) {
      c.sweep_seeds.push_back(to_u64("sweep.seeds", s));
    }
  }
  if (auto v = take("T")) c.t_final = to_double("T", *v);
  if (auto v = take("dt")) c.dt = to_double("dt", *v);
  if (auto v = take("replicas")) c.replicas = to_u64("replicas", *v);
  if (auto v = take("window")) c.window = to_double("window", *v);
  if (auto v = take("tail_mode")) c.tail_mode = *v;
  if (auto v = take("snapshot_times")) {
    for (const auto& s : split_csv(*v)) {
      c.snapshot_times.push_back(to_double("snapshot_times", s));
    }
  }

  if (auto v = take("J")) c.x_cells = to_u64("J", *v);
  if (auto v = take("B")) c.mass_bins = to_u64("B", *v);
  if (auto v = take("mass_grid")) c.mass_grid = *v;
  if (auto v = take("geometric_ratio")) {
    c.geometric_ratio = to_double("geometric_ratio", *v);
  }
  if (auto v = take("geometric_m_min")) {
    c.geometric_m_min = to_double("geometric_m_min", *v);
  }

  if (auto v = take("splitting")) c.splitting = *v;
  if (auto v = take("coag_integrator")) c.coag_integrator = *v;
  if (auto v = take("positivity_clip")) {
    c.positivity_clip = to_bool("positivity_clip", *v);
  }
  if (auto v = take("pde.dt")) c.pde_dt = to_double("pde.dt", *v);

  if (auto v = take("picard.n_list")) {
    c.picard_n_list.clear();
    for (const auto& s : split_csv(*v)) {
      c.picard_n_list.push_back(static_cast<int>(to_u64("picard.n_list", s)));
    }
  }
  if (auto v = take("picard.tol")) c.picard_tol = to_double("picard.tol", *v);
  if (auto v = take("picard.max_iter")) {
    c.picard_max_iter = static_cast<int>(to_u64("picard.max_iter", *v));
  }
  if (auto v = take("picard.dt")) c.picard_dt = to_double("picard.dt", *v);

  for (const auto& [key, value] : kv) {
    if (!seen.count(key)) throw ConfigError("config: unknown key '" + key + "'");
  }

  // --- validation ---
  if (c.kernel_family != "constant" && c.kernel_family != "power_sum") {
    throw ConfigError("config: kernel.family must be constant or power_sum");
  }
  if (c.diffusivity_family != "constant" && c.diffusivity_family != "power_law") {
    throw ConfigError("config: diffusivity.family must be constant or power_law");
  }
  if (c.initial_profile != "monodisperse" && c.initial_profile != "product") {
    throw ConfigError("config: initial.profile must be monodisperse or product");
  }
  if (c.initial_spatial != "uniform" && c.initial_spatial != "cosine" &&
      c.initial_spatial != "step") {
    throw ConfigError("config: initial.spatial must be uniform, cosine or step");
  }
  if (c.initial_mass_dist != "exponential" && c.initial_mass_dist != "uniform") {
    throw ConfigError("config: initial.mass_dist must be exponential or uniform");
  }
  if (c.tail_mode != "truncate" && c.tail_mode != "gaussian_tail") {
    throw ConfigError("config: tail_mode must be truncate or gaussian_tail");
  }
  if (c.mass_grid != "integer" && c.mass_grid != "geometric") {
    throw ConfigError("config: mass_grid must be integer or geometric");
  }
  if (c.splitting != "strang" && c.splitting != "lie") {
    throw ConfigError("config: splitting must be strang or lie");
  }
  if (c.coag_integrator != "rk2" && c.coag_integrator != "euler") {
    throw ConfigError("config: coag_integrator must be rk2 or euler");
  }
  if (!(c.dt > 0.0)) throw ConfigError("config: dt must be > 0");
  if (!(c.t_final >= 0.0)) throw ConfigError("config: T must be >= 0");
  if (c.replicas == 0) throw ConfigError("config: replicas must be >= 1");
  if (c.n_particles < 2) throw ConfigError("config: N must be >= 2");
  for (double t : c.snapshot_times) {
    if (t < 0.0 || t > c.t_final + 1e-12) {
      throw ConfigError("config: snapshot time outside [0, T]");
    }
  }
  if (c.mode == RunMode::Sweep) {
    if (c.n_list.size() < 3) {
      throw ConfigError("config: sweep needs an N_list with >= 3 values");
    }
    if (!std::is_sorted(c.n_list.begin(), c.n_list.end()) ||
        std::adjacent_find(c.n_list.begin(), c.n_list.end()) != c.n_list.end()) {
      throw ConfigError("config: N_list must be strictly increasing");
    }
    if (!c.sweep_seeds.empty()) {
      if (c.sweep_seeds.size() != c.n_list.size()) {
        throw ConfigError("config: sweep.seeds must match N_list length");
      }
      std::set<std::uint64_t> uniq(c.sweep_seeds.begin(), c.sweep_seeds.end());
      if (uniq.size() != c.sweep_seeds.size()) {
        throw ConfigError("config: sweep.seeds must be distinct per N");
      }
    }
  }
  if (c.snapshot_times.empty()) c.snapshot_times.push_back(c.t_final);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

KernelSpec RunConfig::make_kernel() const {
  if (kernel_family == "constant") {
    if (kernel_p_exponent || kernel_c_bound) {
      return KernelSpec::constant(kernel_rate,
                                  kernel_p_exponent.value_or(0.0),
                                  kernel_c_bound.value_or(0.5 * kernel_rate));
    }
    return KernelSpec::constant(kernel_rate);
  }
  if (kernel_p_exponent || kernel_c_bound) {
    return KernelSpec::power_sum(
        kernel_scale, kernel_alpha,
        kernel_p_exponent.value_or(std::min(kernel_alpha, 0.5)),
        kernel_c_bound.value_or(kernel_scale));
  }
  return KernelSpec::power_sum(kernel_scale, kernel_alpha);
}

DiffusivitySpec RunConfig::make_diffusivity() const {
  if (diffusivity_family == "constant") {
    return DiffusivitySpec::constant(diffusivity_a0);
  }
  return DiffusivitySpec::power_law(diffusivity_beta);
}

DerivedCoefficients RunConfig::make_coefficients() const {
  return DerivedCoefficients(make_kernel(), make_diffusivity());
}

InitialProfile RunConfig::make_initial_profile() const {
  std::function<double(double)> h;
  if (initial_spatial == "uniform") {
    h = [](double) { return 1.0; };
  } else if (initial_spatial == "cosine") {
    const double eps = initial_cosine_amplitude;
    h = [eps](double x) { return 1.0 + eps * std::cos(2.0 * M_PI * x); };
  } else {  // step
    h = [](double x) { return x < 0.5 ? 2.0 : 0.0; };
  }
  if (initial_profile == "monodisperse") {
    return InitialProfile::monodisperse(std::move(h));
  }
  std::function<double(double)> q;
  if (initial_mass_dist == "exponential") {
    const double mean = initial_mass_mean;
    q = [mean](double u) { return -mean * std::log1p(-u * (1.0 - 1e-12)); };
  } else {
    const double lo = initial_mass_lo, hi = initial_mass_hi;
    q = [lo, hi](double u) { return lo + (hi - lo) * u; };
  }
  return InitialProfile::product(std::move(h), std::move(q));
}

MassGrid RunConfig::make_mass_grid() const {
  if (mass_grid == "integer") return MassGrid::integer(mass_bins);
  return MassGrid::geometric(mass_bins, geometric_m_min, geometric_ratio);
}

StepParams RunConfig::make_step_params() const {
  StepParams p;
  p.dt = dt;
  p.interaction_window = window;
  p.tail_mode = (tail_mode == "truncate") ? TailMode::Truncate
                                          : TailMode::GaussianTail;
  return p;
}

SolverOptions RunConfig::make_solver_options() const {
  SolverOptions o;
  o.dt = pde_dt.value_or(dt);
  o.splitting = (splitting == "strang") ? Splitting::Strang : Splitting::Lie;
  o.coag_integrator = (coag_integrator == "rk2") ? CoagIntegrator::RK2
                                                 : CoagIntegrator::Euler;
  o.positivity_clip = positivity_clip;
  o.picard_tol = picard_tol;
  o.picard_max_iter = picard_max_iter;
  return o;
}

PicardOptions RunConfig::make_picard_options() const {
  PicardOptions o;
  o.dt = picard_dt.value_or(dt);
  o.tol = picard_tol;
  o.max_iter = picard_max_iter;
  o.reference = make_solver_options();
  o.reference.dt = o.dt;
  return o;
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "B=" << mass_bins << "\n";
  os << "J=" << x_cells << "\n";
  os << "N=" << n_particles << "\n";
  os << "N_list=";
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    os << (i ? "," : "") << n_list[i];
  }
  os << "\n";
  os << "T=" << t_final << "\n";
  os << "coag_integrator=" << coag_integrator << "\n";
  os << "diffusivity.a0=" << diffusivity_a0 << "\n";
  os << "diffusivity.beta=" << diffusivity_beta << "\n";
  os << "diffusivity.family=" << diffusivity_family << "\n";
  os << "dt=" << dt << "\n";
  os << "geometric_m_min=" << geometric_m_min << "\n";
  os << "geometric_ratio=" << geometric_ratio << "\n";
  os << "initial.cosine_amplitude=" << initial_cosine_amplitude << "\n";
  os << "initial.mass_dist=" << initial_mass_dist << "\n";
  os << "initial.mass_hi=" << initial_mass_hi << "\n";
  os << "initial.mass_lo=" << initial_mass_lo << "\n";
  os << "initial.mass_mean=" << initial_mass_mean << "\n";
  os << "initial.profile=" << initial_profile << "\n";
  os << "initial.spatial=" << initial_spatial << "\n";
  os << "kernel.alpha=" << kernel_alpha << "\n";
  os << "kernel.c_bound=" << (kernel_c_bound ? *kernel_c_bound : -1.0) << "\n";
  os << "kernel.family=" << kernel_family << "\n";
  os << "kernel.p_exponent=" << (kernel_p_exponent ? *kernel_p_exponent : -1.0)
     << "\n";
  os << "kernel.rate=" << kernel_rate << "\n";
  os << "kernel.scale=" << kernel_scale << "\n";
  os << "mass_grid=" << mass_grid << "\n";
  os << "mode=" << static_cast<int>(mode) << "\n";
  os << "pde.dt=" << (pde_dt ? *pde_dt : -1.0) << "\n";
  os << "picard.dt=" << (picard_dt ? *picard_dt : -1.0) << "\n";
  os << "picard.max_iter=" << picard_max_iter << "\n";
  os << "picard.n_list=";
  for (std::size_t i = 0; i < picard_n_list.size(); ++i) {
    os << (i ? "," : "") << picard_n_list[i];
  }
  os << "\n";
  os << "picard.tol=" << picard_tol << "\n";
  os << "positivity_clip=" << (positivity_clip ? 1 : 0) << "\n";
  os << "replicas=" << replicas << "\n";
  os << "schema_version=" << schema_version << "\n";
  os << "seed=" << seed << "\n";
  os << "snapshot_times=";
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    os << (i ? "," : "") << snapshot_times[i];
  }
  os << "\n";
  os << "splitting=" << splitting << "\n";
  os << "sweep.seeds=";
  for (std::size_t i = 0; i < sweep_seeds.size(); ++i) {
    os << (i ? "," : "") << sweep_seeds[i];
  }
  os << "\n";
  os << "tail_mode=" << tail_mode << "\n";
  os << "window=" << window << "\n";
  return os.str();
}

std::string RunConfig::config_hash() const {
  // FNV-1a 64
  const std::string s = canonical();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace smolcircle
