#include "bkt/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bkt/kernel.hpp"
#include "bkt/linalg.hpp"

namespace bkt::infer {

void ChainConfig::validate() const {
  if (m_tilde < 1) throw ConfigError("m_tilde must be >= 1");
  if (n_tilde < 1) throw ConfigError("n_tilde must be >= 1");
  if (warmup_inner < 0) throw ConfigError("warmup_inner must be >= 0");
  if (burnin < 0 || burnin >= m_tilde) {
    throw ConfigError("burnin must be in [0, m_tilde)");
  }
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (leapfrog_steps < 1) throw ConfigError("leapfrog_steps must be >= 1");
  if (!(init_step_size > 0.0)) throw ConfigError("init_step_size must be > 0");
  if (!(prior_shape > 0.0) || !(prior_rate > 0.0)) {
    throw ConfigError("prior shape and rate must be > 0");
  }
}

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

// --- fixed-theta quantities -------------------------------------------------

namespace {

// log BF from Cholesky factors of Sigma and A = Sigma + nR:
//   Delta | H0 ~ N(0, Sigma/n), Delta | H1 ~ N(0, A/n).
double log_bf_from_factors(const la::Chol& cs, const la::Chol& ca,
                           const Eigen::VectorXd& delta, Eigen::Index n) {
  const double dn = static_cast<double>(n);
  const double q0 = dn * delta.dot(cs.llt.solve(delta));
  const double q1 = dn * delta.dot(ca.llt.solve(delta));
  return 0.5 * (ca.logdet - cs.logdet) - 0.5 * (q0 - q1);
}

la::Chol chol_with_repair(const Eigen::MatrixXd& m, const char* what) {
  if (auto c = la::try_cholesky(m)) {
    return std::move(*c);
  }
  if (auto c = la::try_cholesky(cov::psd_repair(m).sigma)) {
    return std::move(*c);
  }
  throw NumericalError(std::string(what) +
                       ": not positive definite even after ridge repair");
}

}  // namespace

BayesFactor bayes_factor_fixed_theta(const WitnessState& state,
                                     const cov::CovEstimate& sigma,
                                     const lik::RMatrix& r, Eigen::Index n,
                                     KernelParam theta) {
  const Eigen::Index s = state.s();
  if (sigma.sigma.rows() != s || r.m.rows() != s) {
    throw InputError("bayes_factor_fixed_theta: inconsistent dimensions");
  }
  const Eigen::MatrixXd a = sigma.sigma + static_cast<double>(n) * r.m;
  const la::Chol cs = chol_with_repair(sigma.sigma, "bayes factor: sigma");
  const la::Chol ca =
      la::chol_with_jitter(a, "bayes factor: sigma + n r").chol;
  BayesFactor bf;
  bf.log_bf = log_bf_from_factors(cs, ca, state.delta, n);
  bf.theta = theta.theta();
  if (!std::isfinite(bf.log_bf)) {
    throw NumericalError("bayes factor is not finite");
  }
  return bf;
}

double posterior_h1(double log_bf, double prior_odds) {
  if (!(prior_odds > 0.0)) {
    throw ConfigError("prior_odds must be > 0");
  }
  return 1.0 / (1.0 + std::exp(log_bf - std::log(prior_odds)));
}

double posterior_h1(const BayesFactor& bf, double prior_odds) {
  return posterior_h1(bf.log_bf, prior_odds);
}

// --- evaluator ---------------------------------------------------------------

Evaluator::Evaluator(const PairedDataset& data, const EvalPoints& z,
                     RunOptions opt, double prior_shape, double prior_rate)
    : data_(data),
      z_(z),
      opt_(opt),
      prior_shape_(prior_shape),
      prior_rate_(prior_rate) {
  if (data.dim() != z.dim()) {
    throw InputError("evaluation points dimension does not match data");
  }
  const auto sqdist = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd d2 = -2.0 * (a * b.transpose());
    d2.colwise() += a.rowwise().squaredNorm().eval();
    d2.rowwise() += b.rowwise().squaredNorm().transpose().eval();
    return d2.cwiseMax(0.0).eval();
  };
  d2_zx_ = sqdist(z.z, data.x);
  d2_zy_ = sqdist(z.z, data.y);
  d2_zz_ = sqdist(z.z, z.z);
  cache_.reserve(kCacheSize);
}

const Evaluator::ThetaEval& Evaluator::eval(double theta) {
  for (const auto& e : cache_) {
    if (e.theta == theta) {
      return e;
    }
  }

  ThetaEval e;
  e.theta = theta;
  if (opt_.prior_only) {
    // Test hook: likelihood forced constant.
    e.t_h0 = e.t_h1 = e.log_bf = 0.0;
  } else {
    const KernelParam p(theta);
    const Eigen::Index n = data_.n();
    const Eigen::Index s = z_.s();

    WitnessState state;
    state.k_zx = (-d2_zx_.array() / (2.0 * theta)).exp();
    state.k_zy = (-d2_zy_.array() / (2.0 * theta)).exp();
    state.g = state.k_zx - state.k_zy;
    state.delta = state.g.rowwise().mean();

    // H-centered outer product doubles as n * Sigma under method 2.
    const Eigen::MatrixXd gc = state.g.colwise() - state.delta;
    Eigen::MatrixXd ghgt = gc * gc.transpose();
    ghgt = 0.5 * (ghgt + ghgt.transpose()).eval();

    cov::CovEstimate sigma;
    if (opt_.sigma_method == cov::SigmaMethod::Method2) {
      sigma.sigma = ghgt / static_cast<double>(n);
      sigma.method = cov::SigmaMethod::Method2;
      if (!la::try_cholesky(sigma.sigma)) {
        sigma = cov::psd_repair(sigma.sigma, cov::SigmaMethod::Method2);
      }
    } else {
      sigma = cov::estimate_sigma(state, n, opt_.sigma_method);
    }
    lik::RMatrix r;
    r.m = std::pow(M_PI * theta, 0.5 * static_cast<double>(data_.dim())) *
          (-d2_zz_.array() / (4.0 * theta)).exp();

    const Eigen::MatrixXd a = sigma.sigma + static_cast<double>(n) * r.m;
    const la::Chol cs = chol_with_repair(sigma.sigma, "evaluator: sigma");
    const la::JitteredChol jca =
        la::chol_with_jitter(a, "evaluator: sigma + n r");
    const la::Chol& ca = jca.chol;

    e.sigma_ridge = sigma.ridge_added;
    e.r_ridge = r.ridge_added + jca.jitter;
    diag_.max_sigma_ridge = std::max(diag_.max_sigma_ridge, sigma.ridge_added);
    diag_.max_r_ridge = std::max(diag_.max_r_ridge, e.r_ridge);

    e.log_bf = log_bf_from_factors(cs, ca, state.delta, n);

    constexpr double kLog2Pi = 1.8378770664093454836;
    if (opt_.theta_target == ThetaTarget::Delta) {
      // Witness-vector marginal likelihoods:
      // Delta | H0 ~ N(0, Sigma/n), Delta | H1 ~ N(0, (Sigma + nR)/n).
      const double ds = static_cast<double>(s);
      const double dn = static_cast<double>(n);
      const double q0 = dn * state.delta.dot(cs.llt.solve(state.delta));
      const double q1 = dn * state.delta.dot(ca.llt.solve(state.delta));
      const double log_n = std::log(dn);
      e.t_h0 =
          -0.5 * ds * kLog2Pi - 0.5 * (cs.logdet - ds * log_n) - 0.5 * q0;
      e.t_h1 =
          -0.5 * ds * kLog2Pi - 0.5 * (ca.logdet - ds * log_n) - 0.5 * q1;
    } else {
      Eigen::MatrixXd ggt = state.g * state.g.transpose();
      ggt = 0.5 * (ggt + ggt.transpose()).eval();
      const double tlv =
          jac::total_log_vol(data_, z_, p, opt_.jacobian_policy);
      const double ns = static_cast<double>(n) * static_cast<double>(s);

      const double quad_null = la::trace_of_solve(cs, ggt);
      e.t_h0 = -0.5 * ns * kLog2Pi -
               0.5 * static_cast<double>(n) * cs.logdet - 0.5 * quad_null +
               tlv;

      double quad_alt = 0.0;
      try {
        quad_alt = la::trace_of_solve(ca, ggt) + la::trace_of_solve(cs, ghgt) -
                   la::trace_of_solve(ca, ghgt);
      } catch (const NumericalError&) {
        if (opt_.sigma_method != cov::SigmaMethod::Method2 || n < 2) {
          throw;
        }
        quad_alt = lik::remark_quadform(state.g, r.m, n);
      }
      e.t_h1 = -0.5 * ns * kLog2Pi -
               0.5 * (ca.logdet + static_cast<double>(n - 1) * cs.logdet) -
               0.5 * quad_alt + tlv;
    }
  }

  if (cache_.size() < kCacheSize) {
    cache_.push_back(e);
    return cache_.back();
  }
  cache_[static_cast<std::size_t>(next_slot_)] = e;
  const auto& slot = cache_[static_cast<std::size_t>(next_slot_)];
  next_slot_ = (next_slot_ + 1) % kCacheSize;
  return slot;
}

double Evaluator::log_target(double theta, Hypothesis m) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    return -std::numeric_limits<double>::infinity();
  }
  const double prior = gamma_logpdf(theta, prior_shape_, prior_rate_);
  if (opt_.prior_only) {
    return prior;
  }
  // The r-kernel prefactor (pi theta)^(D/2) overflows far outside the
  // prior's support; treat that region as zero posterior mass.
  if (0.5 * static_cast<double>(data_.dim()) * std::log(M_PI * theta) > 700.0) {
    return -std::numeric_limits<double>::infinity();
  }
  try {
    const ThetaEval& e = eval(theta);
    return (m == Hypothesis::H0 ? e.t_h0 : e.t_h1) + prior;
  } catch (const DegenerateGeometryError&) {
    throw;  // data-level degeneracy follows the configured Jacobian policy
  } catch (const NumericalError&) {
    // Unfactorable covariances at extreme theta: zero posterior mass, so a
    // trajectory that wanders here is rejected rather than fatal.
    return -std::numeric_limits<double>::infinity();
  }
}

double Evaluator::log_target_u(double u, Hypothesis m) {
  const double theta = std::exp(u);
  return log_target(theta, m) + u;
}

double Evaluator::grad_log_target_u(double u, Hypothesis m) {
  const double theta = std::exp(u);
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  // Central differences in theta, then the chain rule; the +1 is the exact
  // derivative of the log|d theta/d u| term.
  double h = 1e-5 * std::max(1.0, theta);
  h = std::min(h, 0.5 * theta);
  const double fp = log_target(theta + h, m);
  const double fm = log_target(theta - h, m);
  return theta * (fp - fm) / (2.0 * h) + 1.0;
}

double log_target_theta(double theta, Hypothesis model,
                        const PairedDataset& data, const EvalPoints& z,
                        const RunOptions& opt, double prior_shape,
                        double prior_rate) {
  if (!(theta > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  Evaluator ev(data, z, opt, prior_shape, prior_rate);
  return ev.log_target(theta, model);
}

// --- grid and curve ----------------------------------------------------------

namespace {

BayesFactor bf_at_theta(const PairedDataset& data, const EvalPoints& z,
                        double theta, const RunOptions& opt) {
  const KernelParam p(theta);
  const WitnessState state = kernel::witness_state(data, z, p);
  const cov::CovEstimate sigma =
      cov::estimate_sigma(state, data.n(), opt.sigma_method);
  const lik::RMatrix r = lik::r_matrix(z, p);
  return bayes_factor_fixed_theta(state, sigma, r, data.n(), p);
}

}  // namespace

std::pair<KernelParam, BayesFactor> grid_search_theta(
    const PairedDataset& data, const EvalPoints& z,
    const std::vector<double>& grid, const RunOptions& opt) {
  if (grid.empty()) {
    throw ConfigError("grid_search_theta requires a nonempty grid");
  }
  bool have_best = false;
  BayesFactor best;
  for (const double theta : grid) {
    const BayesFactor bf = bf_at_theta(data, z, theta, opt);
    if (!have_best || bf.log_bf < best.log_bf ||
        (bf.log_bf == best.log_bf && bf.theta < best.theta)) {
      best = bf;
      have_best = true;
    }
  }
  return {KernelParam(best.theta), best};
}

std::vector<std::pair<double, double>> conditional_h1_curve(
    const PairedDataset& data, const EvalPoints& z,
    const std::vector<double>& grid, const RunOptions& opt) {
  std::vector<std::pair<double, double>> curve;
  curve.reserve(grid.size());
  for (const double theta : grid) {
    const BayesFactor bf = bf_at_theta(data, z, theta, opt);
    curve.emplace_back(theta, posterior_h1(bf, 1.0));
  }
  return curve;
}

// --- scalar HMC ---------------------------------------------------------------

void leapfrog(const Target1D& target, double& u, double& p, double step_size,
              int steps) {
  p += 0.5 * step_size * target.grad(u);
  for (int l = 0; l < steps; ++l) {
    u += step_size * p;
    if (l + 1 < steps) {
      p += step_size * target.grad(u);
    }
  }
  p += 0.5 * step_size * target.grad(u);
}

HmcResult hmc_step(const Target1D& target, double u, double step_size,
                   int leapfrog_steps, RandomStream& rng) {
  if (leapfrog_steps < 1) {
    throw ConfigError("hmc_step requires leapfrog_steps >= 1");
  }
  const double p0 = rng.normal();
  const double h0 = -target.logp(u) + 0.5 * p0 * p0;

  double u_new = u;
  double p_new = p0;
  leapfrog(target, u_new, p_new, step_size, leapfrog_steps);
  const double h1 = -target.logp(u_new) + 0.5 * p_new * p_new;

  HmcResult res;
  const double log_alpha = h0 - h1;
  res.accept_prob =
      std::isfinite(h1) ? std::min(1.0, std::exp(log_alpha)) : 0.0;
  res.accepted = rng.uniform() < res.accept_prob;
  res.u = res.accepted ? u_new : u;
  return res;
}

DualAveraging::DualAveraging(double init_step_size, double target_accept)
    : mu_(std::log(10.0 * init_step_size)),
      log_eps_(std::log(init_step_size)),
      log_eps_bar_(std::log(init_step_size)),
      delta_(target_accept) {
  if (!(init_step_size > 0.0)) {
    throw ConfigError("init_step_size must be > 0");
  }
}

void DualAveraging::update(double accept_prob) {
  constexpr double kGamma = 0.05;
  constexpr double kT0 = 10.0;
  constexpr double kKappa = 0.75;
  const double frac = 1.0 / (m_ + kT0);
  h_bar_ = (1.0 - frac) * h_bar_ + frac * (delta_ - accept_prob);
  log_eps_ = mu_ - std::sqrt(m_) / kGamma * h_bar_;
  log_eps_ = std::clamp(log_eps_, std::log(1e-10), std::log(1e4));
  const double w = std::pow(m_, -kKappa);
  log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
  m_ += 1.0;
}

double DualAveraging::current() const { return std::exp(log_eps_); }

double DualAveraging::frozen() const { return std::exp(log_eps_bar_); }

namespace {

Target1D make_target(Evaluator& ev, Hypothesis m) {
  return Target1D{
      [&ev, m](double u) { return ev.log_target_u(u, m); },
      [&ev, m](double u) { return ev.grad_log_target_u(u, m); },
  };
}

}  // namespace

HmcResult hmc_update(double u, Hypothesis model, const PairedDataset& data,
                     const EvalPoints& z, const ChainConfig& cfg,
                     RandomStream& rng, const RunOptions& opt) {
  cfg.validate();
  Evaluator ev(data, z, opt, cfg.prior_shape, cfg.prior_rate);
  const Target1D target = make_target(ev, model);
  return hmc_step(target, u, cfg.init_step_size, cfg.leapfrog_steps, rng);
}

// --- the full sampler ----------------------------------------------------------

ChainOutput gibbs_run(const PairedDataset& data, const EvalPoints& z,
                      const ChainConfig& cfg, const RunOptions& opt) {
  cfg.validate();

  Evaluator ev(data, z, opt, cfg.prior_shape, cfg.prior_rate);
  RandomStream rng(cfg.seed);

  ChainOutput out;
  out.theta0 = opt.prior_only ? 1.0 : kernel::median_heuristic(data).theta();
  double u = std::log(out.theta0);

  // Initial label from the conditional model posterior at theta0:
  // P(H0 | theta, D) = BF / (prior_odds + BF).
  double log_bf = ev.eval(out.theta0).log_bf;
  double p_h1_cond = posterior_h1(log_bf, opt.prior_odds);
  Hypothesis m = rng.uniform() < 1.0 - p_h1_cond ? Hypothesis::H0
                                                 : Hypothesis::H1;

  DualAveraging da(cfg.init_step_size);
  long accepted = 0;
  long attempted = 0;
  long n_h1 = 0;

  const int retained =
      (cfg.m_tilde - cfg.burnin + cfg.thin - 1) / cfg.thin;
  out.iters.reserve(retained);
  out.theta_samples.reserve(retained);
  out.m_samples.reserve(retained);
  out.log_bf_trace.reserve(retained);

  for (int i = 1; i <= cfg.m_tilde; ++i) {
    const bool adapting = i <= cfg.burnin;
    const Target1D target = make_target(ev, m);
    for (int j = 0; j < cfg.n_tilde; ++j) {
      const double eps = adapting ? da.current() : da.frozen();
      const HmcResult res =
          hmc_step(target, u, eps, cfg.leapfrog_steps, rng);
      u = res.u;
      if (adapting && j < cfg.warmup_inner) {
        da.update(res.accept_prob);
      }
      if (!adapting) {
        accepted += res.accepted ? 1 : 0;
        ++attempted;
      }
    }

    const double theta = std::exp(u);
    log_bf = ev.eval(theta).log_bf;
    p_h1_cond = posterior_h1(log_bf, opt.prior_odds);
    m = rng.uniform() < 1.0 - p_h1_cond ? Hypothesis::H0 : Hypothesis::H1;

    if (i > cfg.burnin && (i - cfg.burnin - 1) % cfg.thin == 0) {
      out.iters.push_back(i);
      out.theta_samples.push_back(theta);
      out.m_samples.push_back(m);
      out.log_bf_trace.push_back(log_bf);
      if (m == Hypothesis::H1) {
        ++n_h1;
      }
    }
  }

  out.p_h1 = out.m_samples.empty()
                 ? 0.0
                 : static_cast<double>(n_h1) /
                       static_cast<double>(out.m_samples.size());
  out.acceptance_rate =
      attempted == 0 ? 0.0
                     : static_cast<double>(accepted) /
                           static_cast<double>(attempted);
  out.step_size = da.frozen();
  out.diag = ev.diagnostics();
  return out;
}

}  // namespace bkt::infer
