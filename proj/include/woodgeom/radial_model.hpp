#pragma once

// Radial fisheye mappings r(theta): incident angle (radians, measured against
// the optical axis) to image radius (pixels, measured from the principal
// point).
//
//   Poly4          r = a1*t + a2*t^2 + a3*t^3 + a4*t^4
//   Rectilinear    r = f * tan(t)
//   Stereographic  r = 2f * tan(t/2)
//   UCM            r = f * sin(t) / (xi + cos(t))
//   eUCM           r = f * sin(t) / (alpha*d + (1-alpha)*cos(t)),
//                  d = sqrt(beta*sin(t)^2 + cos(t)^2)
//
// UCM and eUCM are written in their angle form; the pixel scale f absorbs
// the usual (1+xi) / gamma factors of the sphere-projection form.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "woodgeom/errors.hpp"

namespace woodgeom {

enum class ModelKind { Poly4, Rectilinear, Stereographic, Ucm, Eucm };

inline constexpr std::array<ModelKind, 5> kAllModelKinds = {
    ModelKind::Poly4, ModelKind::Rectilinear, ModelKind::Stereographic,
    ModelKind::Ucm, ModelKind::Eucm};

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Poly4: return "poly4";
    case ModelKind::Rectilinear: return "rectilinear";
    case ModelKind::Stereographic: return "stereographic";
    case ModelKind::Ucm: return "ucm";
    case ModelKind::Eucm: return "eucm";
  }
  return "unknown";
}

inline std::optional<ModelKind> model_kind_from_string(std::string_view name) {
  for (ModelKind k : kAllModelKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

namespace detail {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// First angle in [lo, hi] at which `bad` holds, assuming bad is false at lo
// and true at hi. Plain bisection to ~1e-15 rad.
template <class Pred>
double bisect_boundary(double lo, double hi, Pred bad) {
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (bad(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace detail

struct Poly4 {
  std::array<double, 4> a{};  // px/rad^k, k = 1..4

  double radius(double t) const {
    return t * (a[0] + t * (a[1] + t * (a[2] + t * a[3])));
  }
  double slope(double t) const {
    return a[0] + t * (2.0 * a[1] + t * (3.0 * a[2] + t * 4.0 * a[3]));
  }

  /// First angle in [0, hi] where dr/dtheta <= 0, located exactly: the slope
  /// is a cubic whose extrema come from a quadratic, so it is monotone
  /// between consecutive critical points and each piece holds at most one
  /// sign change.
  std::optional<double> first_non_increasing(double hi) const {
    std::vector<double> knots{0.0};
    const double qa = 12.0 * a[3], qb = 6.0 * a[2], qc = 2.0 * a[1];
    if (qa != 0.0) {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        knots.push_back((-qb - sq) / (2.0 * qa));
        knots.push_back((-qb + sq) / (2.0 * qa));
      }
    } else if (qb != 0.0) {
      knots.push_back(-qc / qb);
    }
    knots.push_back(hi);
    std::erase_if(knots, [&](double k) { return !(k >= 0.0 && k <= hi); });
    std::sort(knots.begin(), knots.end());

    const auto bad = [this](double t) { return !(slope(t) > 0.0); };
    if (bad(0.0)) return 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (bad(knots[i])) return detail::bisect_boundary(knots[i - 1], knots[i], bad);
    }
    return std::nullopt;
  }

  double natural_limit() const { return detail::kInf; }
};

struct Rectilinear {
  double f = 0.0;

  double radius(double t) const { return f * std::tan(t); }
  double slope(double t) const {
    const double c = std::cos(t);
    return f / (c * c);
  }
  double natural_limit() const { return 0.5 * detail::kPi; }
};

struct Stereographic {
  double f = 0.0;

  double radius(double t) const { return 2.0 * f * std::tan(0.5 * t); }
  double slope(double t) const {
    const double c = std::cos(0.5 * t);
    return f / (c * c);
  }
  double natural_limit() const { return detail::kPi; }
};

struct Ucm {
  double f = 0.0;
  double xi = 0.0;

  double radius(double t) const { return f * std::sin(t) / (xi + std::cos(t)); }
  double slope(double t) const {
    const double den = xi + std::cos(t);
    return f * (xi * std::cos(t) + 1.0) / (den * den);
  }
  // Denominator vanishes at cos(t) = -xi; the slope at cos(t) = -1/xi.
  double natural_limit() const {
    const double k = std::min(xi, xi > 0.0 ? 1.0 / xi : detail::kInf);
    return std::acos(-std::min(k, 1.0));
  }
};

struct Eucm {
  double f = 0.0;
  double alpha = 0.0;
  double beta = 1.0;

  double denominator(double t) const {
    const double s = std::sin(t), c = std::cos(t);
    return alpha * std::sqrt(beta * s * s + c * c) + (1.0 - alpha) * c;
  }
  double radius(double t) const { return f * std::sin(t) / denominator(t); }
  double slope(double t) const {
    const double s = std::sin(t), c = std::cos(t);
    const double d = std::sqrt(beta * s * s + c * c);
    const double den = alpha * d + (1.0 - alpha) * c;
    const double dden = alpha * s * c * (beta - 1.0) / d - (1.0 - alpha) * s;
    return f * (c * den - s * dden) / (den * den);
  }
  // No closed form in general: scan (0, pi] for the first angle where the
  // denominator or the slope stops being positive.
  double natural_limit() const {
    const auto bad = [this](double t) {
      return !(denominator(t) > 0.0) || !(slope(t) > 0.0);
    };
    constexpr int kSteps = 4096;
    double prev = 0.0;
    for (int i = 1; i <= kSteps; ++i) {
      const double t = detail::kPi * i / kSteps;
      if (bad(t)) return detail::bisect_boundary(prev, t, bad);
      prev = t;
    }
    return detail::kInf;
  }
};

using RadialParams = std::variant<Poly4, Rectilinear, Stereographic, Ucm, Eucm>;

inline ModelKind kind_of(const RadialParams& p) {
  return static_cast<ModelKind>(p.index());
}

/// Coefficients in file order: poly4 (a1..a4), rectilinear/stereographic (f),
/// ucm (f, xi), eucm (f, alpha, beta).
inline std::vector<double> coefficients_of(const RadialParams& p) {
  return std::visit(
      [](const auto& m) -> std::vector<double> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Poly4>) return {m.a.begin(), m.a.end()};
        else if constexpr (std::is_same_v<M, Ucm>) return {m.f, m.xi};
        else if constexpr (std::is_same_v<M, Eucm>) return {m.f, m.alpha, m.beta};
        else return {m.f};
      },
      p);
}

inline std::size_t coefficient_count(ModelKind kind) {
  switch (kind) {
    case ModelKind::Poly4: return 4;
    case ModelKind::Ucm: return 2;
    case ModelKind::Eucm: return 3;
    default: return 1;
  }
}

inline RadialParams params_from_coefficients(ModelKind kind, std::span<const double> c) {
  if (c.size() != coefficient_count(kind)) {
    std::ostringstream os;
    os << to_string(kind) << " expects " << coefficient_count(kind)
       << " coefficients, got " << c.size();
    throw std::invalid_argument(os.str());
  }
  switch (kind) {
    case ModelKind::Poly4: return Poly4{{c[0], c[1], c[2], c[3]}};
    case ModelKind::Rectilinear: return Rectilinear{c[0]};
    case ModelKind::Stereographic: return Stereographic{c[0]};
    case ModelKind::Ucm: return Ucm{c[0], c[1]};
    case ModelKind::Eucm: return Eucm{c[0], c[1], c[2]};
  }
  throw std::invalid_argument("unknown model kind");
}

/// Parameter-range checks that do not depend on the angular domain.
inline std::optional<std::string> parameter_problem(const RadialParams& p) {
  return std::visit(
      [](const auto& m) -> std::optional<std::string> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Poly4>) {
          for (double a : m.a)
            if (!std::isfinite(a)) return "non-finite polynomial coefficient";
          return std::nullopt;
        } else {
          if (!(m.f > 0.0) || !std::isfinite(m.f)) return "focal must be positive";
          if constexpr (std::is_same_v<M, Ucm>) {
            if (!(m.xi >= 0.0) || !std::isfinite(m.xi)) return "ucm xi must be >= 0";
          }
          if constexpr (std::is_same_v<M, Eucm>) {
            if (!(m.alpha >= 0.0 && m.alpha <= 1.0)) return "eucm alpha must lie in [0,1]";
            if (!(m.beta > 0.0) || !std::isfinite(m.beta)) return "eucm beta must be > 0";
          }
          return std::nullopt;
        }
      },
      p);
}

/// First angle in [0, hi] at which the mapping is undefined or stops
/// increasing; nullopt when it is valid and strictly increasing on [0, hi].
inline std::optional<double> first_invalid_angle(const RadialParams& p, double hi) {
  if (const auto* poly = std::get_if<Poly4>(&p)) return poly->first_non_increasing(hi);
  const double limit = std::visit([](const auto& m) { return m.natural_limit(); }, p);
  if (hi >= limit) return limit;
  return std::nullopt;
}

/// A radial mapping together with its validated angular domain [0, theta_max].
/// Immutable once constructed.
class RadialModel {
 public:
  RadialModel(RadialParams params, double theta_max)
      : params_(std::move(params)), theta_max_(theta_max) {
    if (auto problem = parameter_problem(params_)) {
      throw std::invalid_argument(std::string(to_string(kind())) + ": " + *problem);
    }
    if (!(theta_max_ > 0.0) || theta_max_ > detail::kPi) {
      throw DomainError("theta_max must lie in (0, pi]", detail::kPi);
    }
    if (auto bad = first_invalid_angle(params_, theta_max_)) {
      std::ostringstream os;
      os.precision(10);
      os << to_string(kind()) << " mapping is not strictly increasing on [0, "
         << theta_max_ << "] rad: dr/dtheta <= 0 or undefined at theta = " << *bad
         << " rad";
      throw DomainError(os.str(), *bad);
    }
    max_radius_ = radius_unchecked(theta_max_);
  }

  ModelKind kind() const { return kind_of(params_); }
  const RadialParams& params() const { return params_; }
  std::vector<double> coefficients() const { return coefficients_of(params_); }
  double theta_max() const { return theta_max_; }
  double max_radius() const { return max_radius_; }

  double radius_unchecked(double theta) const {
    return std::visit([theta](const auto& m) { return m.radius(theta); }, params_);
  }
  double slope_unchecked(double theta) const {
    return std::visit([theta](const auto& m) { return m.slope(theta); }, params_);
  }

 private:
  RadialParams params_;
  double theta_max_;
  double max_radius_ = 0.0;
};

/// r(theta) in pixels; throws DomainError (carrying theta_max) outside
/// [0, theta_max].
inline double eval_radius(const RadialModel& model, double theta) {
  if (!(theta >= 0.0 && theta <= model.theta_max())) {
    std::ostringstream os;
    os << "incident angle " << theta << " rad outside [0, " << model.theta_max() << "]";
    throw DomainError(os.str(), model.theta_max());
  }
  return model.radius_unchecked(theta);
}

/// Inverse of eval_radius: bracketing bisection on the monotone domain,
/// then at most three residual-reducing Newton steps.
inline double theta_from_radius(const RadialModel& model, double radius) {
  const double r_max = model.max_radius();
  if (!(radius >= 0.0) || radius > r_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "radius " << radius << " px beyond r(theta_max) = " << r_max << " px";
    throw OutOfImageError(os.str());
  }
  if (radius == 0.0) return 0.0;
  if (radius >= r_max) return model.theta_max();

  double lo = 0.0, hi = model.theta_max();
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (model.radius_unchecked(mid) < radius ? lo : hi) = mid;
  }
  double t = 0.5 * (lo + hi);
  double err = model.radius_unchecked(t) - radius;
  for (int i = 0; i < 3 && err != 0.0; ++i) {
    const double next = std::clamp(t - err / model.slope_unchecked(t), 0.0, model.theta_max());
    const double next_err = model.radius_unchecked(next) - radius;
    if (!(std::abs(next_err) < std::abs(err))) break;
    t = next;
    err = next_err;
  }
  return t;
}

}  // namespace woodgeom
