#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "smolcircle/harness.hpp"

using namespace smolcircle;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

const char* kBaseConfig = R"(
mode = mc
seed = 11
N = 64
T = 0.05
dt = 1e-3
replicas = 2
snapshot_times = 0.05
kernel.family = constant
kernel.rate = 2.0
diffusivity.family = constant
diffusivity.a0 = 1.0
J = 16
B = 8
)";

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("smolcircle_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config parses and round-trips through the hash") {
  const RunConfig cfg = parse_config_text(kBaseConfig);
  CHECK(cfg.mode == RunMode::Mc);
  CHECK(cfg.n_particles == 64);
  CHECK(cfg.replicas == 2);
  CHECK(cfg.config_hash() == parse_config_text(kBaseConfig).config_hash());
}

TEST_CASE("malformed keys and values are rejected") {
  CHECK_THROWS_AS(parse_config_text("mode = mc\nbogus_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("mode = warp\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("mode = mc\ndt = banana\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("mode = mc\nmode = pde\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("mode = mc\ndt = -1\n"), ConfigError);
}

TEST_CASE("sweep validation") {
  CHECK_THROWS_AS(parse_config_text("mode = sweep\nN_list = 500\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("mode = sweep\nN_list = 500,400,800\n"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("mode = sweep\nN_list = 100,200,400\nsweep.seeds = 7,7,9\n"),
      ConfigError);
  const auto ok =
      parse_config_text("mode = sweep\nN_list = 100,200,400\nsweep.seeds = 7,8,9\n");
  CHECK(ok.n_list.size() == 3);
}

TEST_CASE("zero-rate mc run writes an empty event log") {
  const fs::path out = temp_dir("freeze");
  RunConfig cfg = parse_config_text(kBaseConfig);
  cfg.kernel_rate = 0.0;
  cfg.replicas = 1;
  cfg.out_dir = out.string();
  CHECK(execute(cfg) == 0);
  const std::string events = slurp(out / "events.csv");
  CHECK(events == "time,i,j,mass_i_before,mass_j_before\n");
  fs::remove_all(out);
}

TEST_CASE("repeated runs produce byte-identical outputs") {
  RunConfig cfg = parse_config_text(kBaseConfig);
  const fs::path out_a = temp_dir("det_a");
  const fs::path out_b = temp_dir("det_b");
  cfg.out_dir = out_a.string();
  REQUIRE(execute(cfg) == 0);
  cfg.out_dir = out_b.string();
  REQUIRE(execute(cfg) == 0);
  for (const char* name :
       {"events_r0.csv", "events_r1.csv", "snapshots_r0.csv", "report.json"}) {
    CHECK(slurp(out_a / name) == slurp(out_b / name));
  }
  fs::remove_all(out_a);
  fs::remove_all(out_b);
}

TEST_CASE("thread count does not change the bytes") {
  RunConfig cfg = parse_config_text(kBaseConfig);
  cfg.replicas = 3;
  const fs::path out_a = temp_dir("thr_a");
  const fs::path out_b = temp_dir("thr_b");
  cfg.out_dir = out_a.string();
  cfg.threads = 1;
  REQUIRE(execute(cfg) == 0);
  cfg.out_dir = out_b.string();
  cfg.threads = 3;
  REQUIRE(execute(cfg) == 0);
  for (const char* name : {"events_r0.csv", "events_r1.csv", "events_r2.csv",
                           "report.json"}) {
    CHECK(slurp(out_a / name) == slurp(out_b / name));
  }
  fs::remove_all(out_a);
  fs::remove_all(out_b);
}

TEST_CASE("replica statistics are independent of batch composition") {
  RunConfig cfg = parse_config_text(kBaseConfig);
  cfg.replicas = 3;
  const auto batch = run_replicas(cfg, cfg.n_particles, cfg.seed, 3, 1);
  // re-running replica 2 alone: same derived seed, same trajectory
  const auto partial = run_replicas(cfg, cfg.n_particles, cfg.seed, 3, 2);
  REQUIRE(batch.size() == partial.size());
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(batch[r].seed == partial[r].seed);
    CHECK(batch[r].result.events.size() == partial[r].result.events.size());
    CHECK(batch[r].result.stats.accumulated_hazard ==
          partial[r].result.stats.accumulated_hazard);
  }
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman_rank_correlation({1, 2, 3}, {0.9, 0.5, 0.1}) ==
        doctest::Approx(-1.0));
  CHECK(spearman_rank_correlation({1, 2, 3}, {0.1, 0.5, 0.9}) ==
        doctest::Approx(1.0));
}

TEST_CASE("compare mode emits rho statistics") {
  RunConfig cfg = parse_config_text(kBaseConfig);
  cfg.mode = RunMode::Compare;
  cfg.n_particles = 128;
  cfg.x_cells = 32;
  cfg.mass_bins = 8;
  cfg.replicas = 2;
  const fs::path out = temp_dir("compare");
  cfg.out_dir = out.string();
  REQUIRE(execute(cfg) == 0);
  const std::string csv = slurp(out / "compare.csv");
  CHECK(csv.find("snapshot_time,rho_mean,rho_stderr") == 0);
  CHECK(slurp(out / "report.json").find("\"compare\"") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("run_cli maps bad configs to exit 2 without writing outputs") {
  const fs::path out = temp_dir("cli");
  const fs::path cfg_path = out / "bad.cfg";
  {
    std::ofstream f(cfg_path);
    f << "mode = mc\nbanana = 1\n";
  }
  const fs::path run_dir = out / "run";
  const std::string cfg_s = cfg_path.string();
  const std::string run_s = run_dir.string();
  const char* argv[] = {"smolcircle", "mc", "--config", cfg_s.c_str(),
                        "--out", run_s.c_str()};
  CHECK(run_cli(6, argv) == 2);
  CHECK(!fs::exists(run_dir / "report.json"));
  fs::remove_all(out);
}
