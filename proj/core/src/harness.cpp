#include "smolcircle/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <thread>

#include <json.hpp>

#include "smolcircle/rng.hpp"

namespace smolcircle {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// fixed shortest-round-trip formatting so CSV bytes are stable
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_events_csv(const fs::path& path,
                      const std::vector<CoagulationEvent>& events) {
  std::ofstream f(path);
  f << "time,i,j,mass_i_before,mass_j_before\n";
  for (const auto& e : events) {
    f << fmt(e.time) << ',' << e.i << ',' << e.j << ',' << fmt(e.mass_i_before)
      << ',' << fmt(e.mass_j_before) << '\n';
  }
}

void write_snapshots_csv(const fs::path& path,
                         const std::vector<double>& times,
                         const std::vector<EmpiricalMeasure>& snaps) {
  std::ofstream f(path);
  f << "snapshot_time,x,rescaled_mass,weight\n";
  for (std::size_t s = 0; s < snaps.size(); ++s) {
    for (const Atom& a : snaps[s].atoms) {
      f << fmt(times[s]) << ',' << fmt(a.x) << ',' << fmt(a.m) << ','
        << fmt(a.w) << '\n';
    }
  }
}

void write_grid_csv(const fs::path& path, const GridMeasure& g) {
  std::ofstream f(path);
  f << "x_index,bin_index,m_rep,value\n";
  for (std::size_t j = 0; j < g.x_cells; ++j) {
    for (std::size_t b = 0; b < g.bins.bins; ++b) {
      f << j << ',' << b << ',' << fmt(g.bins.representative(b)) << ','
        << fmt(g.at(j, b)) << '\n';
    }
  }
}

json grid_manifest(const RunConfig& cfg, const MassGrid& grid) {
  json m;
  m["x_cells"] = cfg.x_cells;
  m["mass_grid"] = (grid.kind == MassGrid::Kind::Integer) ? "integer"
                                                          : "geometric";
  m["bins"] = grid.bins;
  if (grid.kind == MassGrid::Kind::Geometric) {
    m["m_min"] = grid.m_min;
    m["ratio"] = grid.ratio;
  }
  return m;
}

json snapshot_stats_json(const SnapshotStats& s, double omega_sup) {
  json j;
  j["time"] = s.time;
  j["total_mass"] = s.total_mass;
  j["second_moment"] = s.second_moment;
  j["alive"] = s.alive;
  j["events_so_far"] = s.events_so_far;
  j["omega_over_m_sup"] = omega_sup;
  return j;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  f << j.dump(2) << '\n';
}

}  // namespace

std::vector<ReplicaOutcome> run_replicas(const RunConfig& cfg, std::size_t n,
                                         std::uint64_t base_seed,
                                         std::size_t replicas, int threads) {
  std::vector<ReplicaOutcome> out(replicas);
  const InitialProfile profile = cfg.make_initial_profile();
  const DerivedCoefficients coeffs = cfg.make_coefficients();
  const StepParams params = cfg.make_step_params();
  const std::vector<double> snaps = cfg.snapshot_times;
  const double t_final = cfg.t_final;

  {
    std::set<std::uint64_t> seeds;
    for (std::size_t r = 0; r < replicas; ++r) {
      seeds.insert(rng::replica_seed(base_seed, r));
    }
    if (seeds.size() != replicas) {
      throw ConfigError("replica seed derivation collided; change the base seed");
    }
  }

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  std::size_t workers = (threads > 0) ? static_cast<std::size_t>(threads) : hw;
  workers = std::min(workers, replicas);

  std::exception_ptr first_error;
  std::mutex error_mu;
  auto work = [&](std::size_t w) {
    for (std::size_t r = w; r < replicas; r += workers) {
      try {
        const std::uint64_t seed = rng::replica_seed(base_seed, r);
        ParticleSystem sys = sample_initial(n, profile, seed);
        out[r].seed = seed;
        out[r].result = run(std::move(sys), t_final, coeffs, params, snaps);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

SolveResult reference_solve(const RunConfig& cfg) {
  const DerivedCoefficients coeffs = cfg.make_coefficients();
  const MassGrid grid = cfg.make_mass_grid();
  std::function<double(double)> h;
  {
    const InitialProfile p = cfg.make_initial_profile();
    h = p.spatial_density;
    if (p.kind != InitialProfile::Kind::Monodisperse) {
      throw ConfigError(
          "pde/compare/sweep reference requires a monodisperse initial profile");
    }
  }
  FieldState init = FieldState::monodisperse(cfg.x_cells, grid, 1.0, h);
  return solve(init, cfg.t_final, coeffs, cfg.make_solver_options(),
               cfg.snapshot_times);
}

CompareSummary summarize_compare(const std::vector<ReplicaOutcome>& outcomes,
                                 const std::vector<double>& snapshot_times) {
  CompareSummary s;
  s.snapshot_times = snapshot_times;
  const std::size_t k = snapshot_times.size();
  s.rho_mean.assign(k, 0.0);
  s.rho_stderr.assign(k, 0.0);
  const double r = static_cast<double>(outcomes.size());
  for (std::size_t i = 0; i < k; ++i) {
    double mean = 0.0;
    for (const auto& o : outcomes) mean += o.rho[i];
    mean /= r;
    double var = 0.0;
    for (const auto& o : outcomes) {
      var += (o.rho[i] - mean) * (o.rho[i] - mean);
    }
    s.rho_mean[i] = mean;
    s.rho_stderr[i] = (outcomes.size() > 1)
                          ? std::sqrt(var / (r * (r - 1.0)))
                          : 0.0;
  }
  return s;
}

double spearman_rank_correlation(const std::vector<double>& xs,
                                 const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  if (n != ys.size() || n < 2) {
    throw std::invalid_argument("spearman: need two samples of equal size >= 2");
  }
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      r[idx[i]] = static_cast<double>(i);
    }
    return r;
  };
  const auto rx = ranks(xs);
  const auto ry = ranks(ys);
  const double mean = (static_cast<double>(n) - 1.0) / 2.0;
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (rx[i] - mean) * (ry[i] - mean);
    dx += (rx[i] - mean) * (rx[i] - mean);
    dy += (ry[i] - mean) * (ry[i] - mean);
  }
  return num / std::sqrt(dx * dy);
}

namespace {

// attach per-snapshot rho distances: each empirical snapshot is projected
// onto the reference grid and compared there
void attach_rho(std::vector<ReplicaOutcome>& outcomes,
                const std::vector<FieldState>& reference) {
  const TestFamily& family = TestFamily::standard();
  std::vector<std::vector<double>> ref_moments;
  ref_moments.reserve(reference.size());
  for (const auto& f : reference) {
    ref_moments.push_back(family_moments(f.to_grid_measure(), family));
  }
  for (auto& o : outcomes) {
    o.rho.resize(o.result.snapshots.size());
    for (std::size_t s = 0; s < o.result.snapshots.size(); ++s) {
      const GridMeasure projected = project(
          o.result.snapshots[s], reference[s].x_cells, reference[s].bins);
      const auto mu = family_moments(projected, family);
      o.rho[s] = rho_from_moments(mu, ref_moments[s]);
    }
  }
}

json replica_report(const RunConfig& cfg, const ReplicaOutcome& o) {
  const DerivedCoefficients coeffs = cfg.make_coefficients();
  json r;
  r["seed"] = o.seed;
  r["events"] = o.result.events.size();
  r["accumulated_hazard"] = o.result.stats.accumulated_hazard;
  r["min_second_moment_increment"] =
      o.result.stats.min_second_moment_increment;
  json snaps = json::array();
  for (std::size_t s = 0; s < o.result.stats.snapshots.size(); ++s) {
    const double omega_sup =
        omega_over_m_sup(o.result.snapshots[s], coeffs, cfg.x_cells);
    snaps.push_back(snapshot_stats_json(o.result.stats.snapshots[s], omega_sup));
  }
  r["snapshots"] = snaps;
  if (!o.rho.empty()) r["rho"] = o.rho;
  return r;
}

int mode_mc(const RunConfig& cfg, const fs::path& out, json& report) {
  auto outcomes = run_replicas(cfg, cfg.n_particles, cfg.seed, cfg.replicas,
                               cfg.threads);
  json reps = json::array();
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    const std::string suffix =
        (outcomes.size() == 1)
            ? std::string()
            : "_r" + std::to_string(r);
    write_events_csv(out / ("events" + suffix + ".csv"),
                     outcomes[r].result.events);
    write_snapshots_csv(out / ("snapshots" + suffix + ".csv"),
                        cfg.snapshot_times, outcomes[r].result.snapshots);
    reps.push_back(replica_report(cfg, outcomes[r]));
  }
  report["replicas"] = reps;
  return 0;
}

void write_fields(const RunConfig& cfg, const fs::path& out,
                  const SolveResult& res, json& report) {
  const MassGrid grid = cfg.make_mass_grid();
  const DerivedCoefficients coeffs = cfg.make_coefficients();
  json snaps = json::array();
  for (std::size_t s = 0; s < res.snapshots.size(); ++s) {
    const GridMeasure g = res.snapshots[s].to_grid_measure();
    write_grid_csv(out / ("field_" + std::to_string(s) + ".csv"), g);
    json j;
    j["time"] = res.snapshots[s].time;
    j["total_mass"] = res.snapshots[s].total();
    j["omega_over_m_sup"] = omega_over_m_sup(g, coeffs);
    snaps.push_back(j);
  }
  json manifest = grid_manifest(cfg, grid);
  manifest["dt"] = cfg.pde_dt.value_or(cfg.dt);
  manifest["splitting"] = cfg.splitting;
  manifest["clipped_mass"] = res.clipped_mass;
  write_json(out / "manifest.json", manifest);
  report["pde"] = {{"snapshots", snaps},
                   {"mass_drift", res.mass_drift},
                   {"clipped_mass", res.clipped_mass},
                   {"steps", res.steps}};
}

int mode_pde(const RunConfig& cfg, const fs::path& out, json& report) {
  SolveResult res = reference_solve(cfg);
  write_fields(cfg, out, res, report);
  return 0;
}

int mode_picard(const RunConfig& cfg, const fs::path& out, json& report) {
  if (cfg.initial_spatial != "uniform" ||
      cfg.initial_profile != "monodisperse") {
    throw ConfigError(
        "picard mode runs the spatially homogeneous reduction; it requires "
        "initial.spatial = uniform and initial.profile = monodisperse");
  }
  const DerivedCoefficients coeffs = cfg.make_coefficients();
  const MassGrid grid = cfg.make_mass_grid();
  HomogeneousState nu;
  nu.bins = grid;
  nu.values.assign(grid.bins, 0.0);
  nu.values[grid.bin_of(1.0)] = 1.0;  // homogeneous monodisperse datum
  const PicardOptions opts = cfg.make_picard_options();

  json per_n = json::array();
  for (int n : cfg.picard_n_list) {
    PicardResult res = picard_truncated(n, nu, cfg.t_final, coeffs, opts);
    std::ofstream f(out / ("picard_n" + std::to_string(n) + ".csv"));
    f << "time,bin_index,m_rep,value\n";
    for (std::size_t s = 0; s < res.times.size(); ++s) {
      for (std::size_t b = 0; b < grid.bins; ++b) {
        f << fmt(res.times[s]) << ',' << b << ','
          << fmt(grid.representative(b)) << ',' << fmt(res.fixed_point[s][b])
          << '\n';
      }
    }
    json j;
    j["n"] = n;
    j["iterations"] = res.iterations;
    j["converged"] = res.converged;
    j["iterate_distances"] = res.iterate_distances;
    json ratios = json::array();
    for (std::size_t k = 1; k < res.iterate_distances.size(); ++k) {
      if (res.iterate_distances[k - 1] > 0.0) {
        ratios.push_back(res.iterate_distances[k] /
                         res.iterate_distances[k - 1]);
      }
    }
    j["contraction_ratios"] = ratios;
    double worst_vs_ref = 0.0;
    for (std::size_t s = 0; s < res.times.size(); ++s) {
      for (std::size_t b = 0; b < grid.bins; ++b) {
        worst_vs_ref = std::max(
            worst_vs_ref, res.fixed_point[s][b] - res.reference[s][b]);
      }
    }
    j["max_excess_over_reference"] = worst_vs_ref;
    per_n.push_back(j);
  }
  report["picard"] = per_n;
  return 0;
}

int mode_compare(const RunConfig& cfg, const fs::path& out, json& report) {
  SolveResult ref = reference_solve(cfg);
  write_fields(cfg, out, ref, report);
  auto outcomes = run_replicas(cfg, cfg.n_particles, cfg.seed, cfg.replicas,
                               cfg.threads);
  attach_rho(outcomes, ref.snapshots);
  const CompareSummary summary = summarize_compare(outcomes, cfg.snapshot_times);

  std::ofstream f(out / "compare.csv");
  f << "snapshot_time,rho_mean,rho_stderr\n";
  for (std::size_t s = 0; s < summary.snapshot_times.size(); ++s) {
    f << fmt(summary.snapshot_times[s]) << ',' << fmt(summary.rho_mean[s])
      << ',' << fmt(summary.rho_stderr[s]) << '\n';
  }
  json reps = json::array();
  for (const auto& o : outcomes) reps.push_back(replica_report(cfg, o));
  report["replicas"] = reps;
  report["compare"] = {{"snapshot_times", summary.snapshot_times},
                       {"rho_mean", summary.rho_mean},
                       {"rho_stderr", summary.rho_stderr},
                       {"pde_mass_drift", ref.mass_drift}};
  return 0;
}

int mode_sweep(const RunConfig& cfg, const fs::path& out, json& report) {
  SolveResult ref = reference_solve(cfg);
  write_fields(cfg, out, ref, report);
  SweepSummary sweep;
  json per_n = json::array();
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    const std::uint64_t base = cfg.sweep_seeds.empty()
                                   ? rng::replica_seed(cfg.seed, 1000 + i)
                                   : cfg.sweep_seeds[i];
    auto outcomes =
        run_replicas(cfg, cfg.n_list[i], base, cfg.replicas, cfg.threads);
    attach_rho(outcomes, ref.snapshots);
    const CompareSummary s = summarize_compare(outcomes, cfg.snapshot_times);
    const std::size_t last = s.rho_mean.size() - 1;
    sweep.rows.push_back({cfg.n_list[i], s.rho_mean[last], s.rho_stderr[last]});
    json j;
    j["N"] = cfg.n_list[i];
    j["rho_mean"] = s.rho_mean;
    j["rho_stderr"] = s.rho_stderr;
    per_n.push_back(j);
  }
  std::vector<double> ns, rhos;
  for (const auto& row : sweep.rows) {
    ns.push_back(static_cast<double>(row.n));
    rhos.push_back(row.rho_mean);
  }
  sweep.spearman = spearman_rank_correlation(ns, rhos);

  std::ofstream f(out / "sweep.csv");
  f << "N,rho_mean,rho_stderr\n";
  for (const auto& row : sweep.rows) {
    f << row.n << ',' << fmt(row.rho_mean) << ',' << fmt(row.rho_stderr) << '\n';
  }
  report["sweep"] = {{"per_N", per_n}, {"spearman", sweep.spearman}};
  return 0;
}

}  // namespace

int execute(const RunConfig& cfg) {
  Timer timer;
  const fs::path out(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory " << out << "\n";
    return 2;
  }

  json report;
  report["schema_version"] = cfg.schema_version;
  report["config_hash"] = cfg.config_hash();
  int rc = 0;
  try {
    switch (cfg.mode) {
      case RunMode::Mc:
        report["mode"] = "mc";
        rc = mode_mc(cfg, out, report);
        break;
      case RunMode::Pde:
        report["mode"] = "pde";
        rc = mode_pde(cfg, out, report);
        break;
      case RunMode::Picard:
        report["mode"] = "picard";
        rc = mode_picard(cfg, out, report);
        break;
      case RunMode::Compare:
        report["mode"] = "compare";
        rc = mode_compare(cfg, out, report);
        break;
      case RunMode::Sweep:
        report["mode"] = "sweep";
        rc = mode_sweep(cfg, out, report);
        break;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  }
  if (rc == 0) {
    write_json(out / "report.json", report);
    json timing;
    timing["wall_seconds"] = timer.seconds();
    write_json(out / "timing.json", timing);
  }
  return rc;
}

int run_cli(int argc, const char* const* argv) {
  const std::string usage =
      "usage: smolcircle <mc|pde|picard|compare|sweep> --config <path> "
      "[--out <dir>] [--seed <u64>] [--threads <n>]";
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "-h" || args[0] == "--help") {
    std::cout << usage << "\n";
    return args.empty() ? 2 : 0;
  }
  static const std::map<std::string, RunMode> modes = {
      {"mc", RunMode::Mc},         {"pde", RunMode::Pde},
      {"picard", RunMode::Picard}, {"compare", RunMode::Compare},
      {"sweep", RunMode::Sweep}};
  const auto mode_it = modes.find(args[0]);
  if (mode_it == modes.end()) {
    std::cerr << "error: unknown mode '" << args[0] << "'\n" << usage << "\n";
    return 2;
  }

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  for (std::size_t i = 1; i < args.size(); ++i) {
    auto next = [&](const char* flag) -> std::string {
      if (i + 1 >= args.size()) {
        throw ConfigError(std::string("missing value for ") + flag);
      }
      return args[++i];
    };
    try {
      if (args[i] == "--config") {
        config_path = next("--config");
      } else if (args[i] == "--out") {
        out_dir = next("--out");
      } else if (args[i] == "--seed") {
        seed = std::stoull(next("--seed"));
      } else if (args[i] == "--threads") {
        threads = std::stoi(next("--threads"));
      } else {
        std::cerr << "error: unknown option '" << args[i] << "'\n"
                  << usage << "\n";
        return 2;
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n" << usage << "\n";
      return 2;
    }
  }
  if (config_path.empty()) {
    std::cerr << "error: --config is required\n" << usage << "\n";
    return 2;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  cfg.mode = mode_it->second;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  return execute(cfg);
}

}  // namespace smolcircle
