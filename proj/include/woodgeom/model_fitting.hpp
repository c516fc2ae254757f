#pragma once

// Model-to-model fitting: given a reference fourth-order polynomial lens,
// find the parameters of another projection model that best reproduce its
// r(theta) curve (unweighted least squares on the radius in pixels over a
// uniform angle grid).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "woodgeom/errors.hpp"
#include "woodgeom/radial_model.hpp"

namespace woodgeom {

struct FitResult {
  RadialModel fitted;
  std::vector<double> theta_grid;  // radians
  std::vector<double> deviation;   // fitted r - reference r, px
  double max_abs_dev = 0.0;
  double mean_abs_dev = 0.0;
  double sum_sq = 0.0;
};

/// Uniform grid of n angles covering [lo, hi] inclusive.
inline std::vector<double> angle_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

namespace detail {

// Evaluates r(theta) and its gradient with respect to the coefficient vector
// of a non-polynomial target model.
struct TargetModel {
  ModelKind kind;

  int dims() const { return static_cast<int>(coefficient_count(kind)); }

  RadialParams params(const Eigen::VectorXd& p) const {
    return params_from_coefficients(kind, std::span<const double>(p.data(), p.size()));
  }

  bool admissible(const Eigen::VectorXd& p, double hi) const {
    const RadialParams m = params(p);
    return !parameter_problem(m) && !first_invalid_angle(m, hi);
  }

  // Shape function g with r = f * g, used for the closed-form focal.
  double shape(const Eigen::VectorXd& p, double t) const {
    Eigen::VectorXd q = p;
    q[0] = 1.0;
    return std::visit([t](const auto& m) { return m.radius(t); }, params(q));
  }

  double radius(const Eigen::VectorXd& p, double t) const {
    return std::visit([t](const auto& m) { return m.radius(t); }, params(p));
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& p, double t) const {
    Eigen::VectorXd g(dims());
    const double s = std::sin(t), c = std::cos(t);
    switch (kind) {
      case ModelKind::Rectilinear: g[0] = std::tan(t); break;
      case ModelKind::Stereographic: g[0] = 2.0 * std::tan(0.5 * t); break;
      case ModelKind::Ucm: {
        const double den = p[1] + c;
        g[0] = s / den;
        g[1] = -p[0] * s / (den * den);
        break;
      }
      case ModelKind::Eucm: {
        const double d = std::sqrt(p[2] * s * s + c * c);
        const double den = p[1] * d + (1.0 - p[1]) * c;
        g[0] = s / den;
        g[1] = -p[0] * s * (d - c) / (den * den);
        g[2] = -p[0] * s * p[1] * (s * s / (2.0 * d)) / (den * den);
        break;
      }
      case ModelKind::Poly4: break;
    }
    return g;
  }
};

inline double sum_squares(const TargetModel& m, const Eigen::VectorXd& p,
                          const std::vector<double>& grid, const std::vector<double>& ref) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double e = m.radius(p, grid[i]) - ref[i];
    s += e * e;
  }
  return s;
}

// Least-squares focal for fixed shape parameters: r = f * g is linear in f.
inline void set_best_focal(const TargetModel& m, Eigen::VectorXd& p,
                           const std::vector<double>& grid, const std::vector<double>& ref) {
  double gg = 0.0, gr = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g = m.shape(p, grid[i]);
    gg += g * g;
    gr += g * ref[i];
  }
  p[0] = gg > 0.0 ? gr / gg : 1.0;
}

inline std::vector<Eigen::VectorXd> coarse_candidates(ModelKind kind) {
  std::vector<Eigen::VectorXd> out;
  switch (kind) {
    case ModelKind::Rectilinear:
    case ModelKind::Stereographic:
      out.push_back(Eigen::VectorXd::Ones(1));
      break;
    case ModelKind::Ucm:
      for (int i = 0; i <= 200; ++i) out.push_back(Eigen::Vector2d(1.0, 0.02 * i));
      break;
    case ModelKind::Eucm:
      for (int i = 0; i <= 50; ++i) {
        for (int j = 0; j <= 60; ++j) {
          // beta on a log grid over [0.05, 20]
          const double beta = 0.05 * std::pow(400.0, j / 60.0);
          out.push_back(Eigen::Vector3d(1.0, 0.02 * i, beta));
        }
      }
      break;
    case ModelKind::Poly4: break;
  }
  return out;
}

// Damped Gauss-Newton: full step, halved until the cost decreases inside
// the admissible region.
inline Eigen::VectorXd gauss_newton(const TargetModel& m, Eigen::VectorXd p,
                                    const std::vector<double>& grid,
                                    const std::vector<double>& ref, double hi) {
  const int n = static_cast<int>(grid.size());
  double cost = sum_squares(m, p, grid, ref);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::MatrixXd jac(n, m.dims());
    Eigen::VectorXd res(n);
    for (int i = 0; i < n; ++i) {
      jac.row(i) = m.gradient(p, grid[i]).transpose();
      res[i] = m.radius(p, grid[i]) - ref[i];
    }
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-res);
    bool improved = false;
    double scale = 1.0;
    for (int k = 0; k < 40; ++k, scale *= 0.5) {
      const Eigen::VectorXd trial = p + scale * step;
      if (!m.admissible(trial, hi)) continue;
      const double c = sum_squares(m, trial, grid, ref);
      if (c < cost) {
        p = trial;
        improved = cost - c > 1e-15 * cost;
        cost = c;
        break;
      }
    }
    if (!improved) break;
  }
  return p;
}

}  // namespace detail

/// Fits `target` to the reference polynomial over [lo, hi] using `n_samples`
/// uniformly spaced angles. The reference is evaluated as a polynomial over
/// the whole range, independently of its stored theta_max, and must be
/// strictly increasing there. Throws DomainError when the range exceeds what
/// the target model can represent (e.g. rectilinear at 90 degrees).
inline FitResult fit_model(const RadialModel& reference, ModelKind target, double lo, double hi,
                           int n_samples) {
  const auto* poly = std::get_if<Poly4>(&reference.params());
  if (!poly) throw std::invalid_argument("fit reference must be a poly4 model");
  if (n_samples < 10) throw std::invalid_argument("n_samples must be >= 10");
  if (!(lo >= 0.0 && hi > lo)) throw std::invalid_argument("theta range must satisfy 0 <= lo < hi");
  if (auto bad = poly->first_non_increasing(hi)) {
    std::ostringstream os;
    os << "reference polynomial not increasing on the fit range (theta = " << *bad << " rad)";
    throw DomainError(os.str(), *bad);
  }

  const std::vector<double> grid = angle_grid(lo, hi, n_samples);
  std::vector<double> ref(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) ref[i] = poly->radius(grid[i]);

  std::optional<RadialParams> best;
  if (target == ModelKind::Poly4) {
    Eigen::MatrixXd a(n_samples, 4);
    Eigen::VectorXd b(n_samples);
    for (int i = 0; i < n_samples; ++i) {
      for (int k = 0; k < 4; ++k) a(i, k) = std::pow(grid[i], k + 1);
      b[i] = ref[i];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    best = Poly4{{c[0], c[1], c[2], c[3]}};
    if (first_invalid_angle(*best, hi)) throw DomainError("fitted polynomial not monotone", hi);
  } else {
    const detail::TargetModel m{target};
    std::optional<Eigen::VectorXd> seed;
    double seed_cost = std::numeric_limits<double>::infinity();
    for (Eigen::VectorXd p : detail::coarse_candidates(target)) {
      detail::set_best_focal(m, p, grid, ref);
      if (!m.admissible(p, hi)) continue;
      const double c = detail::sum_squares(m, p, grid, ref);
      if (c < seed_cost) {
        seed_cost = c;
        seed = p;
      }
    }
    if (!seed) {
      std::ostringstream os;
      os << to_string(target) << " cannot represent incident angles up to " << hi << " rad";
      throw DomainError(os.str(), hi);
    }
    best = m.params(detail::gauss_newton(m, *seed, grid, ref, hi));
  }

  FitResult out{RadialModel(*best, hi), grid, {}, 0.0, 0.0, 0.0};
  out.deviation.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = out.fitted.radius_unchecked(grid[i]) - ref[i];
    out.deviation[i] = d;
    out.max_abs_dev = std::max(out.max_abs_dev, std::abs(d));
    out.mean_abs_dev += std::abs(d);
    out.sum_sq += d * d;
  }
  out.mean_abs_dev /= static_cast<double>(grid.size());
  return out;
}

/// r(theta) of several models sampled on a common grid. Entries are absent
/// where theta exceeds a model's theta_max (e.g. rectilinear past its
/// truncation angle).
struct CurveTable {
  std::vector<std::string> model_names;
  std::vector<double> theta_deg;
  std::vector<std::vector<std::optional<double>>> radius_px;  // [row][model]

  std::size_t rows() const { return theta_deg.size(); }
  std::size_t columns() const { return model_names.size() + 1; }
};

struct NamedModel {
  std::string name;
  RadialModel model;
};

inline CurveTable export_curves(const std::vector<NamedModel>& models, double lo, double hi,
                                int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("n_samples must be >= 2");
  CurveTable t;
  for (const auto& m : models) t.model_names.push_back(m.name);
  for (double theta : angle_grid(lo, hi, n_samples)) {
    t.theta_deg.push_back(theta * 180.0 / detail::kPi);
    auto& row = t.radius_px.emplace_back();
    for (const auto& m : models) {
      if (theta <= m.model.theta_max() * (1.0 + 1e-12)) {
        row.emplace_back(m.model.radius_unchecked(std::min(theta, m.model.theta_max())));
      } else {
        row.emplace_back(std::nullopt);
      }
    }
  }
  return t;
}

/// CSV with a header row; absent entries are written as "NA".
inline void write_csv(std::ostream& os, const CurveTable& t) {
  os << "theta_deg";
  for (const auto& n : t.model_names) os << ',' << n;
  os << '\n';
  os.precision(10);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    os << t.theta_deg[i];
    for (const auto& v : t.radius_px[i]) {
      os << ',';
      if (v) os << *v;
      else os << "NA";
    }
    os << '\n';
  }
}

}  // namespace woodgeom
