#ifndef SMOLCIRCLE_HARNESS_HPP
#define SMOLCIRCLE_HARNESS_HPP

#include <string>
#include <vector>

#include "smolcircle/config.hpp"

// Experiment orchestration: Monte Carlo replica batches on a bounded
// worker pool, the PDE reference, distance diagnostics between the two,
// and machine-readable CSV/JSON artifacts. All outputs are reproducible
// byte-for-byte given (config, seed, build); wall-clock timings go to a
// separate timing.json that is excluded from that guarantee.

namespace smolcircle {

struct ReplicaOutcome {
  std::uint64_t seed = 0;
  RunResult result;
  // rho distance to the PDE reference per snapshot (compare/sweep modes)
  std::vector<double> rho;
};

struct CompareSummary {
  std::vector<double> snapshot_times;
  std::vector<double> rho_mean;    // over replicas, per snapshot
  std::vector<double> rho_stderr;  // sample stderr of the mean
};

struct SweepRow {
  std::size_t n = 0;
  double rho_mean = 0.0;
  double rho_stderr = 0.0;
};

struct SweepSummary {
  std::vector<SweepRow> rows;  // at the final snapshot time
  double spearman = 0.0;       // rank correlation of mean rho vs N
};

// Runs `replicas` independent particle systems (seeds derived from
// base_seed by replica index) on at most `threads` workers; results are
// returned in replica order regardless of scheduling.
std::vector<ReplicaOutcome> run_replicas(const RunConfig& cfg, std::size_t n,
                                         std::uint64_t base_seed,
                                         std::size_t replicas, int threads);

// PDE reference solve for the configured kernel/profile on the configured
// grids, with snapshots at the configured times.
SolveResult reference_solve(const RunConfig& cfg);

CompareSummary summarize_compare(const std::vector<ReplicaOutcome>& outcomes,
                                 const std::vector<double>& snapshot_times);

double spearman_rank_correlation(const std::vector<double>& xs,
                                 const std::vector<double>& ys);

// Mode drivers; each writes its artifacts under cfg.out_dir.
// Exit codes: 0 success, 2 configuration error, 3 numerical abort.
int run_cli(int argc, const char* const* argv);
int execute(const RunConfig& cfg);

}  // namespace smolcircle

#endif
