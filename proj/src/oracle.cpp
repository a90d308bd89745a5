#include "bkt/oracle.hpp"

#include <cmath>
#include <functional>

#include "bkt/jacobian.hpp"
#include "bkt/kernel.hpp"
#include "bkt/linalg.hpp"

namespace bkt::oracle {

DenseW dense_w(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& r,
               Eigen::Index n) {
  const Eigen::Index s = sigma.rows();
  if (sigma.cols() != s || r.rows() != s || r.cols() != s) {
    throw InputError("dense_w: sigma and r must be square of equal size");
  }
  if (n < 1) {
    throw InputError("dense_w: n must be positive");
  }
  if (n * s > kMaxDenseSize) {
    throw InputError("dense_w refuses n*s = " + std::to_string(n * s) +
                     " > " + std::to_string(kMaxDenseSize));
  }

  DenseW out;
  out.w.setZero(n * s, n * s);
  for (Eigen::Index bi = 0; bi < n; ++bi) {
    for (Eigen::Index bj = 0; bj < n; ++bj) {
      out.w.block(bi * s, bj * s, s, s) = r;
      if (bi == bj) {
        out.w.block(bi * s, bj * s, s, s) += sigma;
      }
    }
  }
  return out;
}

double dense_gauss_logpdf(const Eigen::VectorXd& v, const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& cov) {
  if (v.size() != mean.size() || cov.rows() != v.size() ||
      cov.cols() != v.size()) {
    throw InputError("dense_gauss_logpdf: inconsistent dimensions");
  }
  // Pivoted LDLT survives the near-singular covariances that plain LLT
  // rejects; genuine non-positive-definiteness is still an error.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
    throw NumericalError("dense_gauss_logpdf: covariance is singular");
  }
  const double logdet = ldlt.vectorD().array().log().sum();
  const Eigen::VectorXd centered = v - mean;
  const double quad = centered.dot(ldlt.solve(centered));
  const double d = static_cast<double>(v.size());
  return -0.5 * (d * std::log(2.0 * M_PI) + logdet + quad);
}

Eigen::VectorXd vec(const Eigen::MatrixXd& g) {
  return Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
}

Eigen::MatrixXd dense_jacobian(const Eigen::Ref<const Eigen::VectorXd>& xi,
                               const Eigen::Ref<const Eigen::VectorXd>& yi,
                               const EvalPoints& z, KernelParam p) {
  const Eigen::Index s = z.s();
  const Eigen::Index d = z.dim();
  const double theta = p.theta();
  Eigen::MatrixXd j(s, 2 * d);
  for (Eigen::Index l = 0; l < s; ++l) {
    const double kx = kernel::gaussian_kernel(xi, z.z.row(l).transpose(), p);
    const double ky = kernel::gaussian_kernel(yi, z.z.row(l).transpose(), p);
    for (Eigen::Index m = 0; m < d; ++m) {
      j(l, m) = -kx * (xi(m) - z.z(l, m)) / theta;
      j(l, d + m) = ky * (yi(m) - z.z(l, m)) / theta;
    }
  }
  return j;
}

Eigen::MatrixXd fd_jacobian(const Eigen::Ref<const Eigen::VectorXd>& xi,
                            const Eigen::Ref<const Eigen::VectorXd>& yi,
                            const EvalPoints& z, KernelParam p, double h) {
  const Eigen::Index s = z.s();
  const Eigen::Index d = z.dim();
  Eigen::MatrixXd j(s, 2 * d);
  const auto g_at = [&](const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y) -> Eigen::VectorXd {
    Eigen::VectorXd g(s);
    for (Eigen::Index l = 0; l < s; ++l) {
      g(l) = kernel::gaussian_kernel(x, z.z.row(l).transpose(), p) -
             kernel::gaussian_kernel(y, z.z.row(l).transpose(), p);
    }
    return g;
  };
  for (Eigen::Index m = 0; m < d; ++m) {
    Eigen::VectorXd xp = xi, xm = xi;
    xp(m) += h;
    xm(m) -= h;
    j.col(m) = (g_at(xp, yi) - g_at(xm, yi)) / (2.0 * h);
    Eigen::VectorXd yp = yi, ym = yi;
    yp(m) += h;
    ym(m) -= h;
    j.col(d + m) = (g_at(xi, yp) - g_at(xi, ym)) / (2.0 * h);
  }
  return j;
}

double dense_total_log_vol(const PairedDataset& data, const EvalPoints& z,
                           KernelParam p) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::MatrixXd j =
        dense_jacobian(data.x.row(i), data.y.row(i), z, p);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jtj,
                                                      Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmin > 0.0)) {
      throw DegenerateGeometryError("dense_total_log_vol: singular J^T J",
                                    lmin, i);
    }
    total += 0.5 * es.eigenvalues().array().log().sum();
  }
  return total;
}

double naive_loglik_null(const PairedDataset& data, const EvalPoints& z,
                         KernelParam p, const cov::CovEstimate& sigma) {
  const WitnessState state = kernel::witness_state(data, z, p);
  const Eigen::Index n = data.n();
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(state.s(), state.s());
  const DenseW w = dense_w(sigma.sigma, zero, n);
  const Eigen::VectorXd v = vec(state.g);
  return dense_gauss_logpdf(v, Eigen::VectorXd::Zero(v.size()), w.w) +
         dense_total_log_vol(data, z, p);
}

double naive_loglik_alt(const PairedDataset& data, const EvalPoints& z,
                        KernelParam p, const cov::CovEstimate& sigma,
                        const lik::RMatrix& r) {
  const WitnessState state = kernel::witness_state(data, z, p);
  const Eigen::Index n = data.n();
  const DenseW w = dense_w(sigma.sigma, r.m, n);
  const Eigen::VectorXd v = vec(state.g);
  return dense_gauss_logpdf(v, Eigen::VectorXd::Zero(v.size()), w.w) +
         dense_total_log_vol(data, z, p);
}

namespace {

double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double whole,
                        double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double convolution_quadrature(double a, double b, KernelParam p,
                              double rel_tol) {
  const double theta = p.theta();
  const auto f = [&](double u) {
    return std::exp(-(a - u) * (a - u) / (2.0 * theta)) *
           std::exp(-(u - b) * (u - b) / (2.0 * theta));
  };
  // The integrand is negligible more than ~10 lengthscales from both points.
  const double pad = 10.0 * std::sqrt(theta);
  const double lo = std::min(a, b) - pad;
  const double hi = std::max(a, b) + pad;
  const double mid = 0.5 * (lo + hi);
  const double fa = f(lo), fm = f(mid), fb = f(hi);
  const double whole = simpson(fa, fm, fb, hi - lo);
  // The integrand peaks at the midpoint, so sqrt(pi theta) * f(mid) is the
  // magnitude of the integral; the tolerance is relative to that.
  const double scale = std::sqrt(M_PI * theta) * fm;
  return adaptive_simpson(f, lo, hi, fa, fm, fb, whole, rel_tol * scale, 48);
}

}  // namespace bkt::oracle
