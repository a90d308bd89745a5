#include "bkt/io.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bkt/kernel.hpp"
#include "bkt/rng.hpp"

namespace bkt::io {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// --- CSV ----------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t line_no) {
  const std::string cell = strip(raw);
  double v = 0.0;
  const auto* begin = cell.data();
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end || cell.empty()) {
    throw InputError("line " + std::to_string(line_no) +
                     ": cell '" + cell + "' is not numeric");
  }
  if (!std::isfinite(v)) {
    throw InputError("line " + std::to_string(line_no) +
                     ": non-finite value '" + cell + "'");
  }
  return v;
}

}  // namespace

PairedDataset read_paired_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open input file: " + path);
  }

  std::string line;
  if (!std::getline(in, line)) {
    throw InputError(path + ": empty file");
  }
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.size() % 2 != 0) {
    throw InputError("line 1: header must be x1..xD,y1..yD");
  }
  const std::size_t d = header.size() / 2;
  for (std::size_t k = 0; k < d; ++k) {
    const std::string ex = "x" + std::to_string(k + 1);
    const std::string ey = "y" + std::to_string(k + 1);
    if (strip(header[k]) != ex || strip(header[d + k]) != ey) {
      throw InputError("line 1: header must be x1..xD,y1..yD, got '" +
                       strip(header[k]) + "' where " + ex + "/" + ey +
                       " expected");
    }
  }

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) {
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != 2 * d) {
      throw InputError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(2 * d) + " cells, got " +
                       std::to_string(cells.size()));
    }
    for (const auto& c : cells) {
      values.push_back(parse_cell(c, line_no));
    }
    ++rows;
  }
  if (rows < 2) {
    throw InputError(path + ": need at least 2 data rows, got " +
                     std::to_string(rows));
  }

  Eigen::MatrixXd x(rows, d), y(rows, d);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          values[i * 2 * d + k];
      y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          values[i * 2 * d + d + k];
    }
  }
  return PairedDataset::make(std::move(x), std::move(y));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_paired_csv(const std::string& path, const PairedDataset& data) {
  std::ofstream out(path);
  if (!out) {
    throw InputError("cannot open output file: " + path);
  }
  const Eigen::Index d = data.dim();
  for (Eigen::Index k = 0; k < d; ++k) {
    out << "x" << (k + 1) << ",";
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    out << "y" << (k + 1) << (k + 1 < d ? "," : "\n");
  }
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      out << format_double(data.x(i, k)) << ",";
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      out << format_double(data.y(i, k)) << (k + 1 < d ? "," : "\n");
    }
  }
}

std::vector<double> parse_theta_grid(const std::string& text) {
  double lo = 0.0, hi = 0.0;
  long count = 0;
  char c1 = 0, c2 = 0;
  std::stringstream ss(text);
  if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' ||
      !(ss >> std::ws).eof()) {
    throw ConfigError("theta grid must be lo:hi:count, got '" + text + "'");
  }
  if (!(lo > 0.0) || hi < lo || count < 1) {
    throw ConfigError("theta grid needs 0 < lo <= hi and count >= 1");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (long k = 0; k < count; ++k) {
    grid[static_cast<std::size_t>(k)] = lo + static_cast<double>(k) * step;
  }
  grid.back() = hi;
  return grid;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) {
    throw InputError("quantile of an empty sample");
  }
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

// --- thread pool -----------------------------------------------------------------

unsigned worker_threads() {
  if (const char* env = std::getenv("BKT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) {
      return static_cast<unsigned>(v);
    }
    return 1;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  unsigned threads) {
  if (count == 0) {
    return;
  }
  threads = std::max(1u, std::min<unsigned>(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) {
          return;
        }
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

// --- run drivers -----------------------------------------------------------------

namespace {

ordered_json chain_config_json(const infer::ChainConfig& c) {
  return ordered_json{{"m_tilde", c.m_tilde},
                      {"n_tilde", c.n_tilde},
                      {"warmup_inner", c.warmup_inner},
                      {"burnin", c.burnin},
                      {"thin", c.thin},
                      {"seed", c.seed},
                      {"prior_shape", c.prior_shape},
                      {"prior_rate", c.prior_rate},
                      {"leapfrog_steps", c.leapfrog_steps},
                      {"init_step_size", c.init_step_size}};
}

ordered_json options_json(const infer::RunOptions& o) {
  return ordered_json{
      {"sigma_method", o.sigma_method == cov::SigmaMethod::Method1 ? 1 : 2},
      {"clamp_jacobian", o.jacobian_policy == jac::DegeneratePolicy::Clamp},
      {"prior_odds", o.prior_odds},
      {"prior_only", o.prior_only}};
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) {
    throw InputError("cannot open output file: " + path);
  }
  out << j.dump(2) << "\n";
}

void write_samples_csv(const std::string& path,
                       const infer::ChainOutput& chain) {
  std::ofstream out(path);
  if (!out) {
    throw InputError("cannot open output file: " + path);
  }
  out << "iter,theta,m,log_bf\n";
  for (std::size_t k = 0; k < chain.theta_samples.size(); ++k) {
    out << chain.iters[k] << "," << format_double(chain.theta_samples[k])
        << "," << (chain.m_samples[k] == Hypothesis::H1 ? 1 : 0) << ","
        << format_double(chain.log_bf_trace[k]) << "\n";
  }
}

}  // namespace

ResultSummary run_test(const TestRunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const PairedDataset data = read_paired_csv(cfg.input_path);
  const EvalPoints z =
      kernel::subsample_eval_points(data, cfg.s, derive_seed(cfg.seed, 0));

  infer::ChainConfig chain_cfg = cfg.chain;
  chain_cfg.seed = derive_seed(cfg.seed, 1);
  const infer::ChainOutput chain =
      infer::gibbs_run(data, z, chain_cfg, cfg.options);

  ResultSummary summary;
  summary.p_h1 = chain.p_h1;
  const double qs[5] = {0.05, 0.25, 0.50, 0.75, 0.95};
  for (int k = 0; k < 5; ++k) {
    summary.theta_quantiles[k] = quantile(chain.theta_samples, qs[k]);
  }
  summary.acceptance_rate = chain.acceptance_rate;
  summary.theta0 = chain.theta0;
  summary.diag = chain.diag;
  summary.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  fs::create_directories(cfg.out_dir);
  write_samples_csv((fs::path(cfg.out_dir) / "samples.csv").string(), chain);

  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["config"] = ordered_json{{"verb", "test"},
                             {"input", cfg.input_path},
                             {"s", cfg.s},
                             {"seed", cfg.seed},
                             {"chain", chain_config_json(chain_cfg)},
                             {"options", options_json(cfg.options)}};
  j["p_h1"] = summary.p_h1;
  j["theta_quantiles"] = ordered_json{{"q05", summary.theta_quantiles[0]},
                                      {"q25", summary.theta_quantiles[1]},
                                      {"q50", summary.theta_quantiles[2]},
                                      {"q75", summary.theta_quantiles[3]},
                                      {"q95", summary.theta_quantiles[4]}};
  j["acceptance_rate"] = summary.acceptance_rate;
  j["theta0"] = summary.theta0;
  j["step_size"] = chain.step_size;
  j["ridge"] = ordered_json{{"max_sigma_ridge", chain.diag.max_sigma_ridge},
                            {"max_r_ridge", chain.diag.max_r_ridge}};
  j["retained_samples"] = chain.theta_samples.size();
  j["wall_clock_sec"] = summary.wall_clock_sec;
  write_json((fs::path(cfg.out_dir) / "summary.json").string(), j);
  return summary;
}

BfSummary run_bf(const BfRunConfig& cfg) {
  const PairedDataset data = read_paired_csv(cfg.input_path);
  const EvalPoints z =
      kernel::subsample_eval_points(data, cfg.s, derive_seed(cfg.seed, 0));

  BfSummary out;
  if (!cfg.theta_grid.empty()) {
    const auto grid = parse_theta_grid(cfg.theta_grid);
    const auto [param, bf] = infer::grid_search_theta(data, z, grid, cfg.options);
    out.theta = param.theta();
    out.log_bf = bf.log_bf;
    out.from_grid = true;
  } else {
    const double theta =
        cfg.theta > 0.0 ? cfg.theta : kernel::median_heuristic(data).theta();
    const KernelParam p(theta);
    const WitnessState state = kernel::witness_state(data, z, p);
    const cov::CovEstimate sigma =
        cov::estimate_sigma(state, data.n(), cfg.options.sigma_method);
    const lik::RMatrix r = lik::r_matrix(z, p);
    const infer::BayesFactor bf =
        infer::bayes_factor_fixed_theta(state, sigma, r, data.n(), p);
    out.theta = theta;
    out.log_bf = bf.log_bf;
  }
  out.log10_bf = out.log_bf / std::log(10.0);
  out.p_h1 = infer::posterior_h1(out.log_bf, cfg.options.prior_odds);
  out.p_h0 = 1.0 - out.p_h1;

  fs::create_directories(cfg.out_dir);
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["config"] = ordered_json{{"verb", "bf"},
                             {"input", cfg.input_path},
                             {"s", cfg.s},
                             {"seed", cfg.seed},
                             {"theta", cfg.theta},
                             {"theta_grid", cfg.theta_grid},
                             {"options", options_json(cfg.options)}};
  j["theta"] = out.theta;
  j["from_grid"] = out.from_grid;
  j["log_bf"] = out.log_bf;
  j["log10_bf"] = out.log10_bf;
  j["p_h0"] = out.p_h0;
  j["p_h1"] = out.p_h1;
  write_json((fs::path(cfg.out_dir) / "bf_summary.json").string(), j);
  return out;
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) {
    throw ConfigError("replicates must be >= 1");
  }
  if (cfg.ns.empty()) {
    throw ConfigError("experiment needs at least one sample size");
  }

  struct Task {
    Eigen::Index n;
    int replicate;
    std::uint64_t task_index;
  };
  std::vector<Task> tasks;
  for (std::size_t ni = 0; ni < cfg.ns.size(); ++ni) {
    for (int r = 0; r < cfg.replicates; ++r) {
      tasks.push_back({cfg.ns[ni],
                       r,
                       static_cast<std::uint64_t>(ni) *
                               static_cast<std::uint64_t>(cfg.replicates) +
                           static_cast<std::uint64_t>(r)});
    }
  }

  std::vector<ExperimentRow> rows(tasks.size());
  parallel_for(
      tasks.size(),
      [&](std::size_t i) {
        const Task& t = tasks[i];
        synth::ScenarioSpec spec = cfg.scenario;
        spec.n = t.n;
        spec.seed = derive_seed(cfg.scenario.seed, 3 * t.task_index);
        const PairedDataset data = synth::gen(spec);
        const EvalPoints z = kernel::subsample_eval_points(
            data, cfg.s, derive_seed(cfg.scenario.seed, 3 * t.task_index + 1));
        infer::ChainConfig chain_cfg = cfg.chain;
        chain_cfg.seed = derive_seed(cfg.scenario.seed, 3 * t.task_index + 2);
        const infer::ChainOutput chain =
            infer::gibbs_run(data, z, chain_cfg, cfg.options);

        ExperimentRow row;
        row.family = synth::to_string(cfg.scenario.family);
        row.n = t.n;
        row.replicate = t.replicate;
        row.seed = spec.seed;
        row.p_h1 = chain.p_h1;
        row.acceptance_rate = chain.acceptance_rate;
        rows[i] = row;
      },
      worker_threads());

  fs::create_directories(cfg.out_dir);
  std::ofstream grid((fs::path(cfg.out_dir) / "grid.csv").string());
  if (!grid) {
    throw InputError("cannot open grid.csv for writing");
  }
  grid << "family,n,replicate,seed,p_h1,acceptance_rate\n";
  for (const auto& row : rows) {
    grid << row.family << "," << row.n << "," << row.replicate << ","
         << row.seed << "," << format_double(row.p_h1) << ","
         << format_double(row.acceptance_rate) << "\n";
  }

  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["config"] =
      ordered_json{{"verb", "experiment"},
                   {"family", synth::to_string(cfg.scenario.family)},
                   {"base_seed", cfg.scenario.seed},
                   {"ns", cfg.ns},
                   {"replicates", cfg.replicates},
                   {"s", cfg.s},
                   {"chain", chain_config_json(cfg.chain)},
                   {"options", options_json(cfg.options)}};
  j["rows"] = rows.size();
  write_json((fs::path(cfg.out_dir) / "experiment.json").string(), j);
  return rows;
}

}  // namespace bkt::io
