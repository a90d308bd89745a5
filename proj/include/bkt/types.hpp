#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bkt {

// Error taxonomy. The CLI maps these onto exit codes:
//   ConfigError -> 1 (usage), InputError -> 2 (data), NumericalError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Raised when a change-of-variable Jacobian gram J^T J is numerically
// singular. Carries the offending eigenvalue and, when known, the index of
// the observation pair that produced it.
class DegenerateGeometryError : public NumericalError {
 public:
  DegenerateGeometryError(const std::string& msg, double lambda_min,
                          std::ptrdiff_t pair_index = -1)
      : NumericalError(msg), lambda_min_(lambda_min), pair_index_(pair_index) {}

  double lambda_min() const { return lambda_min_; }
  std::ptrdiff_t pair_index() const { return pair_index_; }

 private:
  double lambda_min_;
  std::ptrdiff_t pair_index_;
};

// Squared lengthscale theta of the Gaussian RBF kernel
// k(a, b) = exp(-|a - b|^2 / (2 theta)).
class KernelParam {
 public:
  explicit KernelParam(double theta) : theta_(theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) {
      throw ConfigError("kernel parameter theta must be positive and finite, got " +
                        std::to_string(theta));
    }
  }

  double theta() const { return theta_; }

 private:
  double theta_;
};

// n paired D-dimensional observations (x_i, y_i). Construct through make()
// which validates shape, sample count and finiteness.
struct PairedDataset {
  Eigen::MatrixXd x;  // n x D
  Eigen::MatrixXd y;  // n x D

  static PairedDataset make(Eigen::MatrixXd x, Eigen::MatrixXd y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
      throw InputError("paired dataset requires x and y of identical shape");
    }
    if (x.rows() < 2) {
      throw InputError("paired dataset requires at least 2 observations");
    }
    if (x.cols() < 1) {
      throw InputError("paired dataset requires at least 1 dimension");
    }
    if (!x.allFinite() || !y.allFinite()) {
      throw InputError("paired dataset contains non-finite entries");
    }
    return PairedDataset{std::move(x), std::move(y)};
  }

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
};

// s inducing points at which mean-embedding differences are evaluated.
// source_indices records provenance when the points were subsampled from a
// dataset (x rows as 0..n-1, y rows as n..2n-1); empty for external points.
struct EvalPoints {
  Eigen::MatrixXd z;  // s x D
  std::vector<Eigen::Index> source_indices;

  Eigen::Index s() const { return z.rows(); }
  Eigen::Index dim() const { return z.cols(); }
};

// Per-theta feature state: witness vector and the gram blocks it came from.
// Invariants: g = k_zx - k_zy entrywise and delta is the row mean of g.
struct WitnessState {
  Eigen::VectorXd delta;  // s
  Eigen::MatrixXd g;      // s x n, column i = g(x_i, y_i)
  Eigen::MatrixXd k_zx;   // s x n
  Eigen::MatrixXd k_zy;   // s x n

  Eigen::Index s() const { return g.rows(); }
  Eigen::Index n() const { return g.cols(); }
};

enum class Hypothesis { H0, H1 };

inline const char* to_string(Hypothesis h) {
  return h == Hypothesis::H0 ? "H0" : "H1";
}

}  // namespace bkt
