#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bkt/inference.hpp"
#include "bkt/synthdata.hpp"
#include "bkt/types.hpp"

namespace bkt::io {

inline constexpr int kFormatVersion = 1;

// --- CSV ----------------------------------------------------------------------

// Paired CSV with header x1..xD,y1..yD and a numeric body of >= 2 rows.
// NaN/Inf cells and ragged rows are parse errors carrying the line number.
PairedDataset read_paired_csv(const std::string& path);

void write_paired_csv(const std::string& path, const PairedDataset& data);

// Full-precision (17 significant digits) decimal formatting.
std::string format_double(double v);

// "lo:hi:count" -> count linearly spaced values from lo to hi inclusive.
std::vector<double> parse_theta_grid(const std::string& text);

// Linear-interpolation quantile of a sample (q in [0, 1]).
double quantile(std::vector<double> sorted_or_not, double q);

// --- thread pool ----------------------------------------------------------------

// Worker count: BKT_THREADS when set (clamped to >= 1), else hardware.
unsigned worker_threads();

// Runs fn(0..count-1) on up to `threads` workers; rethrows the first task
// error by index.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  unsigned threads);

// --- run drivers -----------------------------------------------------------------

struct TestRunConfig {
  std::string input_path;
  Eigen::Index s = 40;
  std::uint64_t seed = 0;
  infer::ChainConfig chain;
  infer::RunOptions options;
  std::string out_dir = ".";
};

struct ResultSummary {
  double p_h1 = 0.0;
  double theta_quantiles[5] = {0, 0, 0, 0, 0};  // 5/25/50/75/95%
  double acceptance_rate = 0.0;
  double theta0 = 0.0;
  infer::ChainDiagnostics diag;
  double wall_clock_sec = 0.0;
};

// Full Gibbs run; writes summary.json and samples.csv under out_dir.
ResultSummary run_test(const TestRunConfig& cfg);

struct BfRunConfig {
  std::string input_path;
  Eigen::Index s = 40;
  std::uint64_t seed = 0;
  double theta = 0.0;            // fixed theta; 0 means use the median heuristic
  std::string theta_grid;        // "lo:hi:count"; overrides theta when set
  infer::RunOptions options;
  std::string out_dir = ".";
};

struct BfSummary {
  double theta = 0.0;
  double log_bf = 0.0;
  double log10_bf = 0.0;
  double p_h0 = 0.0;
  double p_h1 = 0.0;
  bool from_grid = false;
};

// Fixed-theta or grid-search Bayes factor; writes bf_summary.json.
BfSummary run_bf(const BfRunConfig& cfg);

struct ExperimentConfig {
  synth::ScenarioSpec scenario;    // seed acts as the base seed
  std::vector<Eigen::Index> ns;    // sample sizes to sweep
  int replicates = 1;
  Eigen::Index s = 40;
  infer::ChainConfig chain;
  infer::RunOptions options;
  std::string out_dir = ".";
};

struct ExperimentRow {
  std::string family;
  Eigen::Index n = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  double p_h1 = 0.0;
  double acceptance_rate = 0.0;
};

// One chain per (n, replicate) on a worker pool; writes grid.csv and
// experiment.json under out_dir and returns the rows.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg);

// Oracle and identity self-checks behind `bkt check`. Returns 0 on success.
// `perturb_efficient` shifts the efficient-path values before comparison;
// any nonzero value must make the suite fail (used to test the harness).
int run_check(std::ostream& os, double perturb_efficient = 0.0);

}  // namespace bkt::io
