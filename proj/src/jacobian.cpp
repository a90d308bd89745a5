#include "bkt/jacobian.hpp"

#include <cmath>

namespace bkt::jac {

namespace {

constexpr double kDegenerateRel = 1e-12;

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace

JacobianBlocks jacobian_gram(const Eigen::Ref<const Eigen::VectorXd>& xi,
                             const Eigen::Ref<const Eigen::VectorXd>& yi,
                             const EvalPoints& z, KernelParam p) {
  const Eigen::Index d = z.dim();
  if (xi.size() != d || yi.size() != d) {
    throw InputError("jacobian_gram: observation dimension does not match "
                     "evaluation points");
  }
  const double theta = p.theta();

  // dx_j = x - z_j as row j; kernel vectors over the s evaluation points.
  Eigen::MatrixXd dx = (-z.z).rowwise() + xi.transpose();
  Eigen::MatrixXd dy = (-z.z).rowwise() + yi.transpose();
  const Eigen::ArrayXd kx = (-dx.rowwise().squaredNorm().array() / (2.0 * theta)).exp();
  const Eigen::ArrayXd ky = (-dy.rowwise().squaredNorm().array() / (2.0 * theta)).exp();

  const double inv_t2 = 1.0 / (theta * theta);
  JacobianBlocks b;
  b.jxtjx = symmetrized(inv_t2 * dx.transpose() *
                        (dx.array().colwise() * (kx * kx)).matrix());
  b.jytjy = symmetrized(inv_t2 * dy.transpose() *
                        (dy.array().colwise() * (ky * ky)).matrix());
  b.jxtjy = -inv_t2 * dx.transpose() *
            (dy.array().colwise() * (kx * ky)).matrix();
  return b;
}

Eigen::MatrixXd assemble(const JacobianBlocks& blocks) {
  const Eigen::Index d = blocks.dim();
  Eigen::MatrixXd m(2 * d, 2 * d);
  m.topLeftCorner(d, d) = blocks.jxtjx;
  m.topRightCorner(d, d) = blocks.jxtjy;
  m.bottomLeftCorner(d, d) = blocks.jxtjy.transpose();
  m.bottomRightCorner(d, d) = blocks.jytjy;
  return m;
}

double log_vol(const JacobianBlocks& blocks, DegeneratePolicy policy) {
  const Eigen::MatrixXd m = assemble(blocks);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  if (m.rows() <= 3) {
    es.computeDirect(m, Eigen::EigenvaluesOnly);
  } else {
    es.compute(m, Eigen::EigenvaluesOnly);
  }
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed in log_vol");
  }

  const Eigen::ArrayXd lambda = es.eigenvalues().array();
  const double floor = kDegenerateRel * m.trace();
  const double lambda_min = lambda.minCoeff();
  if (!(lambda_min > floor)) {
    if (policy == DegeneratePolicy::Error || !(floor > 0.0)) {
      throw DegenerateGeometryError(
          "J^T J numerically singular (lambda_min = " +
              std::to_string(lambda_min) + ")",
          lambda_min);
    }
    return 0.5 * lambda.max(floor).log().sum();
  }
  return 0.5 * lambda.log().sum();
}

double total_log_vol(const Eigen::Ref<const Eigen::MatrixXd>& x,
                     const Eigen::Ref<const Eigen::MatrixXd>& y,
                     const EvalPoints& z, KernelParam p,
                     DegeneratePolicy policy) {
  const Eigen::Index d = x.cols();
  if (z.s() < 2 * d) {
    throw DegenerateGeometryError(
        "J^T J is rank deficient: need s >= 2D, got s = " +
            std::to_string(z.s()) + ", D = " + std::to_string(d),
        0.0);
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    try {
      total += log_vol(jacobian_gram(x.row(i), y.row(i), z, p), policy);
    } catch (const DegenerateGeometryError& e) {
      throw DegenerateGeometryError(
          "pair " + std::to_string(i) + ": " + e.what(), e.lambda_min(), i);
    }
  }
  return total;
}

double total_log_vol(const PairedDataset& data, const EvalPoints& z,
                     KernelParam p, DegeneratePolicy policy) {
  return total_log_vol(data.x, data.y, z, p, policy);
}

}  // namespace bkt::jac
