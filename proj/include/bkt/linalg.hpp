#pragma once

#include <Eigen/Dense>

#include <optional>

#include "bkt/types.hpp"

namespace bkt::la {

// Cholesky factor plus the log determinant of the factored matrix.
struct Chol {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double logdet = 0.0;

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt.solve(b); }
};

inline std::optional<Chol> try_cholesky(const Eigen::MatrixXd& m) {
  Chol c;
  c.llt.compute(m);
  if (c.llt.info() != Eigen::Success) {
    return std::nullopt;
  }
  c.logdet = 2.0 * c.llt.matrixLLT().diagonal().array().log().sum();
  if (!std::isfinite(c.logdet)) {
    return std::nullopt;
  }
  return c;
}

inline Chol cholesky(const Eigen::MatrixXd& m, const char* what) {
  auto c = try_cholesky(m);
  if (!c) {
    throw NumericalError(std::string(what) +
                         ": matrix is not positive definite");
  }
  return std::move(*c);
}

// tr(M^{-1} B) for a factored M.
inline double trace_of_solve(const Chol& c, const Eigen::MatrixXd& b) {
  return c.solve(b).trace();
}

struct JitteredChol {
  Chol chol;
  double jitter = 0.0;
};

// Cholesky of a PSD-up-to-rounding matrix. On failure escalates a jitter
// from 1e-14 * trace/s by factors of 10; the jitter stays at rounding scale
// so it cannot fabricate log-determinant gaps between paired covariances.
inline JitteredChol chol_with_jitter(const Eigen::MatrixXd& m,
                                     const char* what,
                                     double max_rel = 1e-4) {
  if (auto c = try_cholesky(m)) {
    return {std::move(*c), 0.0};
  }
  const double scale = m.trace() / static_cast<double>(m.rows());
  double rel = 1e-14;
  while (rel <= max_rel) {
    const double jitter = rel * (scale > 0.0 ? scale : 1.0);
    Eigen::MatrixXd shifted = m;
    shifted.diagonal().array() += jitter;
    if (auto c = try_cholesky(shifted)) {
      return {std::move(*c), jitter};
    }
    rel *= 10.0;
  }
  throw NumericalError(std::string(what) +
                       ": not positive definite even after jitter escalation");
}

// log N(v; 0, M) for a factored covariance M.
inline double gauss_logpdf_centered(const Chol& c, const Eigen::VectorXd& v) {
  const double quad = v.dot(c.llt.solve(v));
  const double d = static_cast<double>(v.size());
  return -0.5 * (d * std::log(2.0 * M_PI) + c.logdet + quad);
}

}  // namespace bkt::la
