#include <doctest.h>

#include <cmath>

#include "bkt/kernel.hpp"
#include "bkt/oracle.hpp"
#include "bkt/rng.hpp"

using namespace bkt;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              RandomStream& rs, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = scale * rs.normal();
    }
  }
  return m;
}

}  // namespace

TEST_CASE("dense W assembly") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);

  SUBCASE("n = 1 is just R + Sigma") {
    RandomStream rs(51);
    const Eigen::MatrixXd sigma = random_matrix(2, 2, rs);
    const Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
    const auto w = oracle::dense_w(sym, eye, 1);
    CHECK(w.w == (sym + eye).eval());
  }

  SUBCASE("hand Kronecker assembly for Sigma = R = I_2, n = 2") {
    const auto w = oracle::dense_w(eye, eye, 2);
    Eigen::MatrixXd want(4, 4);
    want << 2, 0, 1, 0,
            0, 2, 0, 1,
            1, 0, 2, 0,
            0, 1, 0, 2;
    CHECK(w.w == want);
    CHECK(w.w.determinant() == doctest::Approx(9.0).epsilon(1e-12));
  }

  SUBCASE("n = 3, s = 1 pattern") {
    Eigen::MatrixXd sigma(1, 1), r(1, 1);
    sigma << 2.0;
    r << 1.0;
    const auto w = oracle::dense_w(sigma, r, 3);
    Eigen::MatrixXd want(3, 3);
    want << 3, 1, 1, 1, 3, 1, 1, 1, 3;
    CHECK(w.w == want);
  }

  SUBCASE("agrees with an explicit index-loop assembly") {
    RandomStream rs(53);
    const Eigen::Index s = 3;
    const Eigen::Index n = 4;
    Eigen::MatrixXd sigma = random_matrix(s, s, rs);
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    Eigen::MatrixXd r = random_matrix(s, s, rs);
    r = 0.5 * (r + r.transpose()).eval();
    const auto w = oracle::dense_w(sigma, r, n);
    CHECK(w.w.isApprox(w.w.transpose(), 1e-14));
    for (Eigen::Index a = 0; a < n * s; ++a) {
      for (Eigen::Index b = 0; b < n * s; ++b) {
        const double want =
            r(a % s, b % s) + (a / s == b / s ? sigma(a % s, b % s) : 0.0);
        CHECK(w.w(a, b) == want);
      }
    }
  }

  SUBCASE("size guard") {
    const Eigen::MatrixXd big = Eigen::MatrixXd::Identity(64, 64);
    CHECK_THROWS_AS(oracle::dense_w(big, big, 65), InputError);
  }
}

TEST_CASE("dense gaussian logpdf") {
  Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
  const Eigen::MatrixXd eye1 = Eigen::MatrixXd::Identity(1, 1);

  CHECK(oracle::dense_gauss_logpdf(zero1, zero1, eye1) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));

  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK(oracle::dense_gauss_logpdf(one, zero1, eye1) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI) - 0.5).epsilon(1e-14));

  CHECK_THROWS_AS(
      oracle::dense_gauss_logpdf(zero1, zero1, Eigen::MatrixXd::Zero(1, 1)),
      NumericalError);
}

TEST_CASE("vec stacks columns") {
  Eigen::MatrixXd g(2, 2);
  g << 1, 3, 2, 4;
  const Eigen::VectorXd v = oracle::vec(g);
  CHECK(v(0) == 1);
  CHECK(v(1) == 2);
  CHECK(v(2) == 3);
  CHECK(v(3) == 4);
}

TEST_CASE("convolution quadrature equals the closed form") {
  RandomStream rs(55);
  for (int it = 0; it < 25; ++it) {
    const double a = 3.0 * rs.normal();
    const double b = 3.0 * rs.normal();
    const KernelParam p(0.1 + 4.0 * rs.uniform());
    Eigen::VectorXd va(1), vb(1);
    va << a;
    vb << b;
    const double exact = kernel::r_kernel(va, vb, p);
    const double quad = oracle::convolution_quadrature(a, b, p);
    CHECK(std::fabs(quad - exact) / exact < 1e-6);
  }
}
