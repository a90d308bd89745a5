#include "bkt/likelihood.hpp"

#include <cmath>

#include "bkt/kernel.hpp"
#include "bkt/linalg.hpp"

namespace bkt::lik {

namespace {

// Cholesky with one repair attempt, then hard error.
la::Chol chol_with_repair(const Eigen::MatrixXd& m, const char* what) {
  if (auto c = la::try_cholesky(m)) {
    return std::move(*c);
  }
  const Eigen::MatrixXd repaired = cov::psd_repair(m).sigma;
  if (auto c = la::try_cholesky(repaired)) {
    return std::move(*c);
  }
  throw NumericalError(std::string(what) +
                       ": not positive definite even after ridge repair");
}

Eigen::MatrixXd centered_outer(const Eigen::MatrixXd& g) {
  const Eigen::MatrixXd gc = g.colwise() - g.rowwise().mean();
  Eigen::MatrixXd c = gc * gc.transpose();
  return 0.5 * (c + c.transpose());
}

Eigen::MatrixXd outer(const Eigen::MatrixXd& g) {
  Eigen::MatrixXd c = g * g.transpose();
  return 0.5 * (c + c.transpose());
}

void check_square(const Eigen::MatrixXd& m, Eigen::Index s, const char* name) {
  if (m.rows() != s || m.cols() != s) {
    throw InputError(std::string(name) + " must be " + std::to_string(s) + "x" +
                     std::to_string(s));
  }
}

constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

RMatrix r_matrix(const EvalPoints& z, KernelParam p) {
  // Kept raw: a gram of the convolution kernel is PSD up to rounding, and R
  // is only ever factored inside Sigma + nR (or GHG^T + n^2 R), which
  // inherit Sigma's noise floor. A standalone ridge on R would sit far above
  // that floor and fabricate a log-determinant gap between the two models in
  // the kernel's numerically null directions.
  RMatrix out;
  out.m = kernel::gram(z.z, z.z, p, kernel::GramKind::Convolution);
  out.m = 0.5 * (out.m + out.m.transpose()).eval();
  return out;
}

double kron_logdet(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& r,
                   Eigen::Index n) {
  check_square(r, sigma.rows(), "r");
  const Eigen::MatrixXd a = sigma + static_cast<double>(n) * r;
  const la::Chol cs = chol_with_repair(sigma, "kron_logdet: sigma");
  const la::Chol ca =
      la::chol_with_jitter(a, "kron_logdet: sigma + n r").chol;
  return ca.logdet + static_cast<double>(n - 1) * cs.logdet;
}

double kron_quadform(const Eigen::MatrixXd& g, const Eigen::MatrixXd& sigma,
                     const Eigen::MatrixXd& r, Eigen::Index n) {
  check_square(sigma, g.rows(), "sigma");
  check_square(r, g.rows(), "r");
  if (g.cols() != n) {
    throw InputError("kron_quadform: g must have n columns");
  }
  const Eigen::MatrixXd a = sigma + static_cast<double>(n) * r;
  const la::Chol cs = chol_with_repair(sigma, "kron_quadform: sigma");
  const la::Chol ca =
      la::chol_with_jitter(a, "kron_quadform: sigma + n r").chol;

  const Eigen::MatrixXd ggt = outer(g);
  const Eigen::MatrixXd ghgt = centered_outer(g);
  // ((1/n) Sigma R^{-1} Sigma + Sigma)^{-1} = Sigma^{-1} - (Sigma + nR)^{-1}
  return la::trace_of_solve(ca, ggt) + la::trace_of_solve(cs, ghgt) -
         la::trace_of_solve(ca, ghgt);
}

double remark_quadform(const Eigen::MatrixXd& g, const Eigen::MatrixXd& r,
                       Eigen::Index n) {
  if (n < 2) {
    throw InputError("remark_quadform requires n >= 2 (the empirical "
                     "covariance of one column is zero)");
  }
  check_square(r, g.rows(), "r");
  if (g.cols() != n) {
    throw InputError("remark_quadform: g must have n columns");
  }
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  const Eigen::MatrixXd m = centered_outer(g) + nn * r;
  const la::Chol cm =
      la::chol_with_jitter(m, "remark_quadform: GHG^T + n^2 R").chol;
  return static_cast<double>(n) *
         la::trace_of_solve(cm, Eigen::MatrixXd(outer(g) + nn * r));
}

double loglik_null_core(const WitnessState& state, const cov::CovEstimate& sigma,
                        double total_log_vol, Eigen::Index n) {
  const Eigen::Index s = state.s();
  check_square(sigma.sigma, s, "sigma");
  const la::Chol cs = chol_with_repair(sigma.sigma, "loglik_null: sigma");
  const double quad = la::trace_of_solve(cs, outer(state.g));
  const double ns = static_cast<double>(n) * static_cast<double>(s);
  return -0.5 * ns * kLog2Pi - 0.5 * static_cast<double>(n) * cs.logdet -
         0.5 * quad + total_log_vol;
}

double loglik_alt_core(const WitnessState& state, const cov::CovEstimate& sigma,
                       const RMatrix& r, double total_log_vol, Eigen::Index n,
                       LikPath* path_used, std::optional<LikPath> force) {
  const Eigen::Index s = state.s();
  check_square(sigma.sigma, s, "sigma");
  check_square(r.m, s, "r");

  const Eigen::MatrixXd a = sigma.sigma + static_cast<double>(n) * r.m;
  const la::Chol cs = chol_with_repair(sigma.sigma, "loglik_alt: sigma");
  const la::Chol ca = la::chol_with_jitter(a, "loglik_alt: sigma + n r").chol;
  const double logdet = ca.logdet + static_cast<double>(n - 1) * cs.logdet;

  double quad = 0.0;
  LikPath path = LikPath::Efficient;
  if (force == LikPath::Remark) {
    quad = remark_quadform(state.g, r.m, n);
    path = LikPath::Remark;
  } else {
    try {
      const Eigen::MatrixXd ggt = outer(state.g);
      const Eigen::MatrixXd ghgt = centered_outer(state.g);
      quad = la::trace_of_solve(ca, ggt) + la::trace_of_solve(cs, ghgt) -
             la::trace_of_solve(ca, ghgt);
    } catch (const NumericalError&) {
      if (sigma.method != cov::SigmaMethod::Method2 || n < 2) {
        throw;
      }
      quad = remark_quadform(state.g, r.m, n);
      path = LikPath::Remark;
    }
  }
  if (path_used != nullptr) {
    *path_used = path;
  }

  const double ns = static_cast<double>(n) * static_cast<double>(s);
  return -0.5 * ns * kLog2Pi - 0.5 * logdet - 0.5 * quad + total_log_vol;
}

LogLik loglik_null(const PairedDataset& data, const EvalPoints& z, KernelParam p,
                   const cov::CovEstimate& sigma, jac::DegeneratePolicy policy) {
  const WitnessState state = kernel::witness_state(data, z, p);
  const double tlv = jac::total_log_vol(data, z, p, policy);
  return LogLik{loglik_null_core(state, sigma, tlv, data.n()), Hypothesis::H0,
                LikPath::Efficient};
}

LogLik loglik_alt(const PairedDataset& data, const EvalPoints& z, KernelParam p,
                  const cov::CovEstimate& sigma, const RMatrix& r,
                  jac::DegeneratePolicy policy, std::optional<LikPath> force) {
  const WitnessState state = kernel::witness_state(data, z, p);
  const double tlv = jac::total_log_vol(data, z, p, policy);
  LikPath used = LikPath::Efficient;
  const double v = loglik_alt_core(state, sigma, r, tlv, data.n(), &used, force);
  return LogLik{v, Hypothesis::H1, used};
}

}  // namespace bkt::lik
