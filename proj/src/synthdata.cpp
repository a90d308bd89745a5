#include "bkt/synthdata.hpp"

#include <cmath>

#include "bkt/rng.hpp"

namespace bkt::synth {

Family family_from_string(const std::string& name) {
  if (name == "gauss1d") return Family::Gauss1d;
  if (name == "laplace1d") return Family::Laplace1d;
  if (name == "copula_corr") return Family::CopulaCorr;
  if (name == "mixture1d") return Family::Mixture1d;
  if (name == "gauss2d_rot") return Family::Gauss2dRot;
  if (name == "blobs2x2") return Family::Blobs2x2;
  if (name == "padded") return Family::Padded;
  throw ConfigError("unknown scenario family: " + name);
}

const char* to_string(Family f) {
  switch (f) {
    case Family::Gauss1d: return "gauss1d";
    case Family::Laplace1d: return "laplace1d";
    case Family::CopulaCorr: return "copula_corr";
    case Family::Mixture1d: return "mixture1d";
    case Family::Gauss2dRot: return "gauss2d_rot";
    case Family::Blobs2x2: return "blobs2x2";
    case Family::Padded: return "padded";
  }
  return "?";
}

Eigen::Matrix2d rotated_covariance(double eps, double angle) {
  Eigen::Matrix2d q;
  q << std::cos(angle), std::sin(angle), -std::sin(angle), std::cos(angle);
  return q * Eigen::Vector2d(eps, 1.0).asDiagonal() * q.transpose();
}

namespace {

void validate(const ScenarioSpec& spec) {
  const auto& p = spec.params;
  if (spec.n < 2) {
    throw ConfigError("scenario requires n >= 2");
  }
  switch (spec.family) {
    case Family::Gauss1d:
      if (!(p.x_sd > 0.0) || !(p.y_sd > 0.0)) {
        throw ConfigError("gauss1d requires positive standard deviations");
      }
      break;
    case Family::Laplace1d:
      if (!(p.x_sd > 0.0) || !(p.y_scale > 0.0)) {
        throw ConfigError("laplace1d requires positive scales");
      }
      break;
    case Family::CopulaCorr:
      if (!(p.y_scale > 0.0)) {
        throw ConfigError("copula_corr requires a positive Laplace scale");
      }
      if (!(p.rho > -1.0 && p.rho < 1.0)) {
        throw ConfigError("copula correlation must lie in (-1, 1)");
      }
      break;
    case Family::Mixture1d:
      for (const auto& mix : {p.x_mix, p.y_mix}) {
        if (mix.empty()) {
          throw ConfigError("mixture1d requires at least one component");
        }
        double total = 0.0;
        for (const auto& c : mix) {
          if (!(c.weight > 0.0) || !(c.sd > 0.0)) {
            throw ConfigError("mixture components need positive weight and sd");
          }
          total += c.weight;
        }
        if (std::fabs(total - 1.0) > 1e-9) {
          throw ConfigError("mixture weights must sum to 1");
        }
      }
      break;
    case Family::Gauss2dRot:
    case Family::Blobs2x2:
    case Family::Padded:
      if (!(p.eps >= 1.0)) {
        throw ConfigError("epsilon must be >= 1");
      }
      if (spec.family != Family::Gauss2dRot && spec.n % 4 != 0) {
        throw ConfigError("blob scenarios require n divisible by 4");
      }
      if (spec.family == Family::Padded && p.pad_dims < 0) {
        throw ConfigError("pad_dims must be >= 0");
      }
      break;
  }
}

double draw_mixture(const std::vector<MixtureComponent>& mix,
                    RandomStream& rs) {
  const double u = rs.uniform();
  double acc = 0.0;
  for (const auto& c : mix) {
    acc += c.weight;
    if (u < acc) {
      return rs.normal(c.mean, c.sd);
    }
  }
  const auto& last = mix.back();
  return rs.normal(last.mean, last.sd);
}

// Sample y = mean + Q diag(sqrt(eps), 1) w with w standard normal, so that
// Cov(y) = Q S_eps Q^T.
Eigen::Vector2d draw_rotated(const Eigen::Vector2d& mean, double eps,
                             double angle, RandomStream& rs) {
  Eigen::Matrix2d q;
  q << std::cos(angle), std::sin(angle), -std::sin(angle), std::cos(angle);
  const Eigen::Vector2d w(rs.normal(), rs.normal());
  return mean + q * Eigen::Vector2d(std::sqrt(eps) * w(0), w(1));
}

const Eigen::Vector2d kBlobCenters[4] = {
    {10.0, 10.0}, {10.0, 30.0}, {30.0, 10.0}, {30.0, 30.0}};

// Blob part shared by blobs2x2 and padded; fills the first two columns.
void fill_blobs(Eigen::MatrixXd& x, Eigen::MatrixXd& y,
                const ScenarioParams& p, RandomStream& rs) {
  const Eigen::Index n = x.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& cx = kBlobCenters[i % 4];
    const Eigen::Vector2d cy = cx + Eigen::Vector2d(-1.0, -1.0);
    x.row(i).head<2>() =
        (cx + Eigen::Vector2d(rs.normal(), rs.normal())).transpose();
    y.row(i).head<2>() = draw_rotated(cy, p.eps, p.angle, rs).transpose();
  }
}

std::vector<MixtureComponent> default_mixture() {
  return {{0.5, 0.0, 1.0}, {0.5, 4.0, 1.0}};
}

}  // namespace

PairedDataset gen(const ScenarioSpec& spec) {
  validate(spec);
  const auto& p = spec.params;
  const Eigen::Index n = spec.n;
  RandomStream rs(spec.seed);

  Eigen::MatrixXd x, y;
  switch (spec.family) {
    case Family::Gauss1d: {
      x.resize(n, 1);
      y.resize(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = rs.normal(p.x_mean, p.x_sd);
        y(i, 0) = rs.normal(p.y_mean, p.y_sd);
      }
      break;
    }
    case Family::Laplace1d: {
      x.resize(n, 1);
      y.resize(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = rs.normal(p.x_mean, p.x_sd);
        y(i, 0) = rs.laplace(p.y_loc, p.y_scale);
      }
      break;
    }
    case Family::CopulaCorr: {
      // Gaussian copula: correlated normals mapped through the normal CDF,
      // then through the target quantile functions (normal for x, Laplace
      // for y; the x side is the identity map).
      x.resize(n, 1);
      y.resize(n, 1);
      const double rho = p.rho;
      const double comp = std::sqrt(1.0 - rho * rho);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double g1 = rs.normal();
        const double g2 = rho * g1 + comp * rs.normal();
        x(i, 0) = g1;
        const double u = normal_cdf(g2);
        const double v = u - 0.5;
        y(i, 0) = p.y_loc - p.y_scale * (v < 0 ? -1.0 : 1.0) *
                               std::log1p(-2.0 * std::fabs(v));
      }
      break;
    }
    case Family::Mixture1d: {
      const auto xm = p.x_mix.empty() ? default_mixture() : p.x_mix;
      const auto ym = p.y_mix.empty() ? default_mixture() : p.y_mix;
      x.resize(n, 1);
      y.resize(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = draw_mixture(xm, rs);
        y(i, 0) = draw_mixture(ym, rs);
      }
      break;
    }
    case Family::Gauss2dRot: {
      x.resize(n, 2);
      y.resize(n, 2);
      const Eigen::Vector2d mx(10.0, 10.0);
      for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i) = (mx + Eigen::Vector2d(rs.normal(), rs.normal())).transpose();
        y.row(i) = draw_rotated(p.y_mean2, p.eps, p.angle, rs).transpose();
      }
      break;
    }
    case Family::Blobs2x2: {
      x.resize(n, 2);
      y.resize(n, 2);
      fill_blobs(x, y, p, rs);
      break;
    }
    case Family::Padded: {
      const Eigen::Index d = 2 + p.pad_dims;
      x.resize(n, d);
      y.resize(n, d);
      fill_blobs(x, y, p, rs);
      // Pads are drawn after the whole blob block so that pad_dims = 0
      // reproduces the blobs2x2 dataset bit for bit.
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 2; k < d; ++k) {
          x(i, k) = rs.normal();
        }
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 2; k < d; ++k) {
          y(i, k) = rs.normal();
        }
      }
      break;
    }
  }
  return PairedDataset::make(std::move(x), std::move(y));
}

namespace {

void column_moments(const Eigen::MatrixXd& m, Eigen::VectorXd& mean,
                    Eigen::VectorXd& var) {
  const double n = static_cast<double>(m.rows());
  mean = m.colwise().mean().transpose();
  var = ((m.rowwise() - mean.transpose()).colwise().squaredNorm() / (n - 1.0))
            .transpose();
}

}  // namespace

Moments empirical_moments(const PairedDataset& data) {
  Moments mo;
  column_moments(data.x, mo.x_mean, mo.x_var);
  column_moments(data.y, mo.y_mean, mo.y_var);
  return mo;
}

double mixture_cdf(double t, const std::vector<MixtureComponent>& mix) {
  double acc = 0.0;
  for (const auto& c : mix) {
    acc += c.weight * normal_cdf(t, c.mean, c.sd);
  }
  return acc;
}

}  // namespace bkt::synth
