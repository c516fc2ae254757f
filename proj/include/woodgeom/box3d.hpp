#pragma once

// Oriented 3D boxes and the two pairwise similarity measures used for 3D
// detection: the scaling-rotation-translation score and exact rotated 3D IoU.
//
// Boxes live in a z-up frame: center (x, y, z), size (l, w, h) along the
// box's own (heading, lateral, vertical) axes, yaw about +z.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "woodgeom/radial_model.hpp"

namespace woodgeom {

/// Wraps an angle to (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * detail::kPi);
  if (r <= -detail::kPi) r += 2.0 * detail::kPi;
  return r;
}

/// |a - b| wrapped to [0, pi].
inline double yaw_difference(double a, double b) {
  double d = std::abs(a - b);
  if (d > 2.0 * detail::kPi) d = std::fmod(d, 2.0 * detail::kPi);
  return std::min(d, 2.0 * detail::kPi - d);
}

struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  double yaw = 0.0;
  std::string label;
  std::optional<double> confidence;  // predictions only

  Box3D() = default;
  Box3D(const Eigen::Vector3d& c, const Eigen::Vector3d& s, double yaw_rad, std::string cls = {},
        std::optional<double> conf = std::nullopt)
      : center(c), size(s), yaw(normalize_angle(yaw_rad)), label(std::move(cls)), confidence(conf) {
    if (!(s.minCoeff() > 0.0) || !s.allFinite()) throw std::invalid_argument("box sizes must be positive");
    if (!c.allFinite() || !std::isfinite(yaw_rad)) throw std::invalid_argument("box pose must be finite");
    if (conf && !(*conf >= 0.0 && *conf <= 1.0)) throw std::invalid_argument("confidence must lie in [0,1]");
  }

  double volume() const { return size.prod(); }
  double diagonal() const { return size.norm(); }
};

struct SrtWeights {
  double w_s = 0.3;
  double w_t = 1.0;
  double w_r = 0.5;
  double alpha = 0.3;
  double beta = 0.3;
  double gamma = 0.4;

  bool valid() const {
    const auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
    return unit(w_s) && unit(w_t) && unit(w_r) && alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0 &&
           std::abs(alpha + beta + gamma - 1.0) <= 1e-12;
  }

  void validate() const {
    if (!valid())
      throw std::invalid_argument("srt weights: w_s, w_t, w_r must lie in (0,1]; alpha, beta, gamma >= 0 summing to 1");
  }
};

struct SrtScore {
  double score = 0.0;
  double scaling = 0.0;      // S_s
  double translation = 0.0;  // S_t
  double rotation = 0.0;     // S_r
  double gate = 0.0;         // p_t
};

/// srt_score with the weights validated once, for scoring many pairs.
class SrtScorer {
 public:
  explicit SrtScorer(const SrtWeights& w = {})
      : w_(w), inv_ws_((w.validate(), 1.0 / w.w_s)), inv_wr_pi_(1.0 / (w.w_r * detail::kPi)) {}

  const SrtWeights& weights() const { return w_; }

  SrtScore operator()(const Box3D& pred, const Box3D& gt) const {
    SrtScore s;
    const double size_err = std::abs(1.0 - pred.size.x() / gt.size.x()) +
                            std::abs(1.0 - pred.size.y() / gt.size.y()) +
                            std::abs(1.0 - pred.size.z() / gt.size.z());
    s.scaling = 1.0 - std::min(size_err * inv_ws_, 1.0);
    s.rotation = std::max(0.0, 1.0 - yaw_difference(pred.yaw, gt.yaw) * inv_wr_pi_);

    const double reach = 0.5 * w_.w_t * (pred.diagonal() + gt.diagonal());
    const double t = (pred.center - gt.center).norm();
    s.translation = std::max(0.0, (reach - t) / reach);
    s.gate = reach < t ? 0.0 : 1.0;

    s.score = s.gate * (w_.alpha * s.scaling + w_.beta * s.translation + w_.gamma * s.rotation);
    return s;
  }

 private:
  SrtWeights w_;
  double inv_ws_, inv_wr_pi_;
};

/// Scaling-rotation-translation similarity. Size ratios are taken as
/// prediction / ground truth, so the scaling term is not symmetric; the
/// translation, rotation and gate terms are.
inline SrtScore srt_score(const Box3D& pred, const Box3D& gt, const SrtWeights& w) { return SrtScorer(w)(pred, gt); }

namespace detail {

struct Vec2 {
  double x, y;
};

inline double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Counter-clockwise bird's-eye-view corners.
inline std::array<Vec2, 4> footprint(const Box3D& b) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double hl = 0.5 * b.size.x(), hw = 0.5 * b.size.y();
  const std::array<Vec2, 4> local = {{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = {b.center.x() + c * local[i].x - s * local[i].y, b.center.y() + s * local[i].x + c * local[i].y};
  }
  return out;
}

// Sutherland-Hodgman clipping of a convex polygon by a convex CCW clip
// polygon; returns the area of the intersection.
inline double convex_intersection_area(const std::array<Vec2, 4>& subject, const std::array<Vec2, 4>& clip) {
  std::array<Vec2, 16> buf_a, buf_b;
  int n = 4;
  std::copy(subject.begin(), subject.end(), buf_a.begin());
  Vec2* in = buf_a.data();
  Vec2* out = buf_b.data();
  for (int e = 0; e < 4 && n > 0; ++e) {
    const Vec2& p0 = clip[e];
    const Vec2& p1 = clip[(e + 1) % 4];
    int m = 0;
    for (int i = 0; i < n; ++i) {
      const Vec2& cur = in[i];
      const Vec2& nxt = in[(i + 1) % n];
      const double dc = cross(p0, p1, cur);
      const double dn = cross(p0, p1, nxt);
      if (dc >= 0.0) out[m++] = cur;
      if ((dc >= 0.0) != (dn >= 0.0)) {
        const double k = dc / (dc - dn);
        out[m++] = {cur.x + k * (nxt.x - cur.x), cur.y + k * (nxt.y - cur.y)};
      }
    }
    std::swap(in, out);
    n = m;
  }
  double area = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec2& a = in[i];
    const Vec2& b = in[(i + 1) % n];
    area += a.x * b.y - b.x * a.y;
  }
  return n >= 3 ? 0.5 * std::abs(area) : 0.0;
}

}  // namespace detail

/// Exact IoU of two yaw-rotated boxes: convex footprint intersection times
/// vertical overlap.
inline double iou_3d(const Box3D& a, const Box3D& b) {
  const double za0 = a.center.z() - 0.5 * a.size.z(), za1 = a.center.z() + 0.5 * a.size.z();
  const double zb0 = b.center.z() - 0.5 * b.size.z(), zb1 = b.center.z() + 0.5 * b.size.z();
  const double dz = std::min(za1, zb1) - std::max(za0, zb0);
  if (dz <= 0.0) return 0.0;
  const double area = detail::convex_intersection_area(detail::footprint(a), detail::footprint(b));
  const double inter = area * dz;
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

}  // namespace woodgeom
