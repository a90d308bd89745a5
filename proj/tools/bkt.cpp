#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bkt/io.hpp"
#include "bkt/synthdata.hpp"

namespace {

struct CommonFlags {
  std::string input;
  Eigen::Index s = 40;
  std::uint64_t seed = 0;
  int sigma_method = 2;
  double prior_odds = 1.0;
  bool clamp_jacobian = false;
  std::string out = ".";
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_input) {
  if (with_input) {
    cmd->add_option("--input", f.input, "paired CSV with header x1..xD,y1..yD")
        ->required();
  }
  cmd->add_option("--s", f.s, "number of evaluation points (even)");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--sigma-method", f.sigma_method,
                  "covariance estimator, 1 or 2")
      ->check(CLI::IsMember({1, 2}));
  cmd->add_option("--prior-odds", f.prior_odds, "prior odds P(H1)/P(H0)");
  cmd->add_flag("--clamp-jacobian", f.clamp_jacobian,
                "clamp near-singular Jacobian grams instead of failing");
  cmd->add_option("--out", f.out, "output directory");
}

bkt::infer::RunOptions make_options(const CommonFlags& f) {
  bkt::infer::RunOptions opt;
  opt.sigma_method = f.sigma_method == 1 ? bkt::cov::SigmaMethod::Method1
                                         : bkt::cov::SigmaMethod::Method2;
  opt.jacobian_policy = f.clamp_jacobian ? bkt::jac::DegeneratePolicy::Clamp
                                         : bkt::jac::DegeneratePolicy::Error;
  opt.prior_odds = f.prior_odds;
  return opt;
}

void add_chain_flags(CLI::App* cmd, bkt::infer::ChainConfig& c) {
  cmd->add_option("--iters", c.m_tilde, "outer Gibbs iterations");
  cmd->add_option("--burnin", c.burnin, "discarded outer iterations");
  cmd->add_option("--thin", c.thin, "thinning factor");
  cmd->add_option("--hmc-steps", c.n_tilde, "HMC updates per Gibbs sweep");
  cmd->add_option("--hmc-warmup", c.warmup_inner,
                  "step-size adaptation updates per burn-in sweep");
  cmd->add_option("--leapfrog", c.leapfrog_steps, "leapfrog steps per update");
  cmd->add_option("--step-size", c.init_step_size, "initial HMC step size");
}

struct ScenarioFlags {
  std::string family = "gauss1d";
  double x_mean = 0.0, x_sd = 1.0, y_mean = 0.0, y_sd = 1.0;
  double y_loc = 0.0, y_scale = 1.0, rho = 0.5;
  double eps = 1.0;
  std::vector<double> y_mean2 = {10.0, 10.0};
  Eigen::Index pad_dims = 0;
  std::string x_mix, y_mix;
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& f) {
  cmd->add_option("--family", f.family,
                  "gauss1d|laplace1d|copula_corr|mixture1d|gauss2d_rot|"
                  "blobs2x2|padded")
      ->required();
  cmd->add_option("--x-mean", f.x_mean, "x normal mean");
  cmd->add_option("--x-sd", f.x_sd, "x normal sd");
  cmd->add_option("--y-mean", f.y_mean, "y normal mean (gauss1d)");
  cmd->add_option("--y-sd", f.y_sd, "y normal sd (gauss1d)");
  cmd->add_option("--y-loc", f.y_loc, "y Laplace location");
  cmd->add_option("--y-scale", f.y_scale, "y Laplace scale");
  cmd->add_option("--rho", f.rho, "copula correlation");
  cmd->add_option("--eps", f.eps, "rotated-covariance epsilon");
  cmd->add_option("--y-mean2", f.y_mean2, "y mean for gauss2d_rot (two values)")
      ->expected(2);
  cmd->add_option("--pad-dims", f.pad_dims, "extra N(0,1) dimensions (padded)");
  cmd->add_option("--x-mix", f.x_mix,
                  "x mixture as w:mu:sd[,w:mu:sd...] (mixture1d)");
  cmd->add_option("--y-mix", f.y_mix, "y mixture as w:mu:sd[,w:mu:sd...]");
}

std::vector<bkt::synth::MixtureComponent> parse_mixture(const std::string& text) {
  std::vector<bkt::synth::MixtureComponent> mix;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    bkt::synth::MixtureComponent c;
    char c1 = 0, c2 = 0;
    std::stringstream is(item);
    if (!(is >> c.weight >> c1 >> c.mean >> c2 >> c.sd) || c1 != ':' ||
        c2 != ':') {
      throw bkt::ConfigError("mixture component must be w:mu:sd, got '" +
                             item + "'");
    }
    mix.push_back(c);
  }
  return mix;
}

bkt::synth::ScenarioSpec make_scenario(const ScenarioFlags& f, Eigen::Index n,
                                       std::uint64_t seed) {
  bkt::synth::ScenarioSpec spec;
  spec.family = bkt::synth::family_from_string(f.family);
  spec.n = n;
  spec.seed = seed;
  auto& p = spec.params;
  p.x_mean = f.x_mean;
  p.x_sd = f.x_sd;
  p.y_mean = f.y_mean;
  p.y_sd = f.y_sd;
  p.y_loc = f.y_loc;
  p.y_scale = f.y_scale;
  p.rho = f.rho;
  p.eps = f.eps;
  p.y_mean2 = Eigen::Vector2d(f.y_mean2[0], f.y_mean2[1]);
  p.pad_dims = f.pad_dims;
  if (!f.x_mix.empty()) {
    p.x_mix = parse_mixture(f.x_mix);
  }
  if (!f.y_mix.empty()) {
    p.y_mix = parse_mixture(f.y_mix);
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian kernel two-sample testing"};
  app.require_subcommand(1);

  // --- test -------------------------------------------------------------
  CommonFlags test_flags;
  bkt::infer::ChainConfig test_chain;
  auto* test = app.add_subcommand(
      "test", "joint posterior over the hypothesis and the kernel lengthscale");
  add_common(test, test_flags, true);
  add_chain_flags(test, test_chain);

  // --- bf ---------------------------------------------------------------
  CommonFlags bf_flags;
  double bf_theta = 0.0;
  std::string bf_grid;
  auto* bf = app.add_subcommand(
      "bf", "Bayes factor at a fixed lengthscale or over a grid");
  add_common(bf, bf_flags, true);
  bf->add_option("--theta", bf_theta,
                 "fixed theta (default: median heuristic)");
  bf->add_option("--theta-grid", bf_grid,
                 "lo:hi:count grid searched for the minimal Bayes factor");

  // --- synth ------------------------------------------------------------
  ScenarioFlags synth_flags;
  Eigen::Index synth_n = 100;
  std::uint64_t synth_seed = 0;
  std::string synth_out = "data.csv";
  auto* synth = app.add_subcommand("synth", "generate a synthetic paired CSV");
  add_scenario_flags(synth, synth_flags);
  synth->add_option("--n", synth_n, "number of paired observations");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--out", synth_out, "output CSV path");

  // --- experiment ---------------------------------------------------------
  CommonFlags exp_flags;
  ScenarioFlags exp_scenario;
  bkt::infer::ChainConfig exp_chain;
  std::vector<Eigen::Index> exp_ns;
  int exp_replicates = 1;
  auto* exp = app.add_subcommand(
      "experiment", "replicated chains over a synthetic scenario grid");
  add_scenario_flags(exp, exp_scenario);
  add_common(exp, exp_flags, false);
  add_chain_flags(exp, exp_chain);
  exp->add_option("--n", exp_ns, "sample sizes (repeatable or comma list)")
      ->required()
      ->delimiter(',');
  exp->add_option("--replicates", exp_replicates, "chains per sample size");

  // --- check --------------------------------------------------------------
  auto* check = app.add_subcommand(
      "check", "run the dense-oracle and identity self-checks");
  (void)check;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (test->parsed()) {
      bkt::io::TestRunConfig cfg;
      cfg.input_path = test_flags.input;
      cfg.s = test_flags.s;
      cfg.seed = test_flags.seed;
      cfg.chain = test_chain;
      cfg.options = make_options(test_flags);
      cfg.out_dir = test_flags.out;
      const auto summary = bkt::io::run_test(cfg);
      std::cout << "p_h1 = " << summary.p_h1
                << ", acceptance = " << summary.acceptance_rate
                << ", theta median = " << summary.theta_quantiles[2] << "\n";
    } else if (bf->parsed()) {
      bkt::io::BfRunConfig cfg;
      cfg.input_path = bf_flags.input;
      cfg.s = bf_flags.s;
      cfg.seed = bf_flags.seed;
      cfg.theta = bf_theta;
      cfg.theta_grid = bf_grid;
      cfg.options = make_options(bf_flags);
      cfg.out_dir = bf_flags.out;
      const auto out = bkt::io::run_bf(cfg);
      std::cout << "theta = " << out.theta << ", log10 BF = " << out.log10_bf
                << ", p_h1 = " << out.p_h1 << "\n";
    } else if (synth->parsed()) {
      const auto spec = make_scenario(synth_flags, synth_n, synth_seed);
      bkt::io::write_paired_csv(synth_out, bkt::synth::gen(spec));
      std::cout << "wrote " << synth_out << "\n";
    } else if (exp->parsed()) {
      bkt::io::ExperimentConfig cfg;
      cfg.scenario = make_scenario(exp_scenario, 0, exp_flags.seed);
      cfg.ns = exp_ns;
      cfg.replicates = exp_replicates;
      cfg.s = exp_flags.s;
      cfg.chain = exp_chain;
      cfg.options = make_options(exp_flags);
      cfg.out_dir = exp_flags.out;
      const auto rows = bkt::io::run_experiment(cfg);
      std::cout << "wrote " << rows.size() << " rows to " << cfg.out_dir
                << "/grid.csv\n";
    } else if (check->parsed()) {
      return bkt::io::run_check(std::cout);
    }
  } catch (const bkt::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const bkt::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const bkt::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
