#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "bkt/covariance.hpp"
#include "bkt/jacobian.hpp"
#include "bkt/likelihood.hpp"
#include "bkt/rng.hpp"
#include "bkt/types.hpp"

namespace bkt::infer {

// log BF_theta = log N(Delta; 0, Sigma/n) - log N(Delta; 0, R + Sigma/n).
// Values above zero favour H0.
struct BayesFactor {
  double log_bf = 0.0;
  double theta = 0.0;

  double p_h0() const { return 1.0 / (1.0 + std::exp(-log_bf)); }
};

struct ChainConfig {
  int m_tilde = 2000;      // outer Gibbs iterations
  int n_tilde = 9;         // HMC updates per sweep
  int warmup_inner = 3;    // adaptation updates per burn-in sweep
  int burnin = 500;        // discarded outer samples
  int thin = 2;
  std::uint64_t seed = 0;
  double prior_shape = 2.0;  // Gamma prior on theta
  double prior_rate = 2.0;
  int leapfrog_steps = 10;
  double init_step_size = 0.1;

  void validate() const;
};

// Which likelihood drives the theta updates inside the Gibbs sampler.
// Delta conditions on the witness vector (N(0, Sigma/n) vs N(0, R + Sigma/n));
// Full uses the whole-data pseudolikelihoods including the change-of-variable
// volume terms. The Bayes factor, and hence the label draws, are identical
// under both (the extra Full terms are model-independent), but only the Delta
// target keeps the theta marginal concentrated at data scale.
enum class ThetaTarget { Delta, Full };

// Knobs shared by everything that evaluates the model at a given theta.
struct RunOptions {
  cov::SigmaMethod sigma_method = cov::SigmaMethod::Method2;
  jac::DegeneratePolicy jacobian_policy = jac::DegeneratePolicy::Error;
  double prior_odds = 1.0;  // P(H1) / P(H0)
  ThetaTarget theta_target = ThetaTarget::Delta;
  bool prior_only = false;  // test hook: likelihood forced constant
};

struct ChainDiagnostics {
  double max_sigma_ridge = 0.0;
  double max_r_ridge = 0.0;
};

struct ChainOutput {
  std::vector<int> iters;             // outer iteration index of each sample
  std::vector<double> theta_samples;  // post burn-in, thinned
  std::vector<Hypothesis> m_samples;
  std::vector<double> log_bf_trace;   // aligned with the retained samples
  double p_h1 = 0.0;                  // H1 fraction among retained labels
  double acceptance_rate = 0.0;       // accepted HMC proposals after burn-in
  double theta0 = 0.0;                // median-heuristic initialization
  double step_size = 0.0;             // step size after adaptation
  ChainDiagnostics diag;
};

double gamma_logpdf(double x, double shape, double rate);

// --- fixed-theta quantities -------------------------------------------------

BayesFactor bayes_factor_fixed_theta(const WitnessState& state,
                                     const cov::CovEstimate& sigma,
                                     const lik::RMatrix& r, Eigen::Index n,
                                     KernelParam theta);

// Posterior probability of H1 given the Bayes factor and prior odds
// P(H1)/P(H0):  P(H1 | .) = 1 / (1 + BF / prior_odds).
double posterior_h1(const BayesFactor& bf, double prior_odds = 1.0);
double posterior_h1(double log_bf, double prior_odds = 1.0);

// Grid value minimizing log BF; ties break toward the smaller theta.
std::pair<KernelParam, BayesFactor> grid_search_theta(
    const PairedDataset& data, const EvalPoints& z,
    const std::vector<double>& grid, const RunOptions& opt = {});

// (theta, 1/(1 + BF_theta)) along a grid.
std::vector<std::pair<double, double>> conditional_h1_curve(
    const PairedDataset& data, const EvalPoints& z,
    const std::vector<double>& grid, const RunOptions& opt = {});

// --- model evaluation at one theta -------------------------------------------

// Binds (data, z, options) and evaluates log pseudolikelihoods, the Bayes
// factor and the sampler target at arbitrary theta, with a small cache keyed
// on bit-exact theta. Not thread-safe; use one per chain.
class Evaluator {
 public:
  Evaluator(const PairedDataset& data, const EvalPoints& z, RunOptions opt,
            double prior_shape = 2.0, double prior_rate = 2.0);

  struct ThetaEval {
    double theta = 0.0;
    double t_h0 = 0.0;   // model term of the theta target under H0
    double t_h1 = 0.0;   // and under H1; t_h0 - t_h1 == log_bf
    double log_bf = 0.0;
    double sigma_ridge = 0.0;
    double r_ridge = 0.0;
  };

  const ThetaEval& eval(double theta);

  // log p(D | theta, m) + log Gamma(theta; shape, rate); -inf off-support.
  double log_target(double theta, Hypothesis m);
  // Same in u = log theta, including the +u change-of-variable term.
  double log_target_u(double u, Hypothesis m);
  // d/du of log_target_u by central differences in theta plus chain rule.
  double grad_log_target_u(double u, Hypothesis m);

  const ChainDiagnostics& diagnostics() const { return diag_; }
  const PairedDataset& data() const { return data_; }

 private:
  const PairedDataset& data_;
  const EvalPoints& z_;
  RunOptions opt_;
  double prior_shape_;
  double prior_rate_;
  ChainDiagnostics diag_;

  // theta-independent squared distances, computed once
  Eigen::MatrixXd d2_zx_, d2_zy_, d2_zz_;

  static constexpr int kCacheSize = 8;
  std::vector<ThetaEval> cache_;
  int next_slot_ = 0;
};

// Marginal pseudolikelihood of the chosen model plus the log prior, at theta.
double log_target_theta(double theta, Hypothesis model,
                        const PairedDataset& data, const EvalPoints& z,
                        const RunOptions& opt = {}, double prior_shape = 2.0,
                        double prior_rate = 2.0);

// --- scalar HMC ---------------------------------------------------------------

struct Target1D {
  std::function<double(double)> logp;
  std::function<double(double)> grad;
};

struct HmcResult {
  double u = 0.0;
  double accept_prob = 0.0;
  bool accepted = false;
};

// One leapfrog trajectory; u and p are updated in place.
void leapfrog(const Target1D& target, double& u, double& p, double step_size,
              int steps);

// One Metropolis-adjusted HMC update with unit-mass momentum.
HmcResult hmc_step(const Target1D& target, double u, double step_size,
                   int leapfrog_steps, RandomStream& rng);

// Dual-averaging step size adaptation toward a target acceptance rate.
class DualAveraging {
 public:
  DualAveraging(double init_step_size, double target_accept = 0.8);

  void update(double accept_prob);
  double current() const;  // adaptation-phase step size
  double frozen() const;   // averaged step size for sampling

 private:
  double mu_;
  double log_eps_;
  double log_eps_bar_;
  double h_bar_ = 0.0;
  double m_ = 1.0;
  double delta_;
};

// Spec-shaped single update of u = log theta given the model label.
HmcResult hmc_update(double u, Hypothesis model, const PairedDataset& data,
                     const EvalPoints& z, const ChainConfig& cfg,
                     RandomStream& rng, const RunOptions& opt = {});

// --- the full sampler ----------------------------------------------------------

// Metropolis-Hastings-within-Gibbs over (theta, M): n_tilde HMC updates of
// log theta given M, then a Bernoulli draw of M from its conditional
// posterior, for m_tilde sweeps. theta starts at the median heuristic.
ChainOutput gibbs_run(const PairedDataset& data, const EvalPoints& z,
                      const ChainConfig& cfg, const RunOptions& opt = {});

}  // namespace bkt::infer
