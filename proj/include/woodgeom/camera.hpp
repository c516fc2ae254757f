#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

#include "woodgeom/errors.hpp"
#include "woodgeom/radial_model.hpp"

namespace woodgeom {

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Unit viewing direction in the camera frame (x right, y down, z forward).
class Ray {
 public:
  explicit Ray(const Eigen::Vector3d& direction) {
    const double n = direction.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("ray direction must be non-zero");
    dir_ = direction / n;
  }

  const Eigen::Vector3d& direction() const { return dir_; }
  /// Incident angle against the optical axis.
  double theta() const { return std::atan2(dir_.head<2>().norm(), dir_.z()); }

 private:
  Eigen::Vector3d dir_;
};

/// Purely radial fisheye intrinsics: unit aspect ratio, no tangential terms.
class IntrinsicCalibration {
 public:
  IntrinsicCalibration(RadialModel model, double cx, double cy, int width, int height,
                       double fov_deg)
      : model_(std::move(model)), cx_(cx), cy_(cy), width_(width), height_(height),
        fov_deg_(fov_deg) {
    if (width_ <= 0 || height_ <= 0) throw ValidationError("image size must be positive");
    if (!(cx_ >= 0.0 && cx_ < width_) || !(cy_ >= 0.0 && cy_ < height_)) {
      std::ostringstream os;
      os << "principal point (" << cx_ << ", " << cy_ << ") outside " << width_ << "x"
         << height_ << " image";
      throw ValidationError(os.str());
    }
    if (!(fov_deg_ > 0.0 && fov_deg_ <= 360.0)) throw ValidationError("fov_deg must lie in (0, 360]");
    const double half_fov = 0.5 * fov_deg_ * detail::kPi / 180.0;
    if (model_.theta_max() < half_fov * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "model theta_max " << model_.theta_max() << " rad smaller than half fov "
         << half_fov << " rad";
      throw ValidationError(os.str());
    }
  }

  /// theta_max defaults to fov/2; throws DomainError when the mapping is not
  /// strictly increasing up to there.
  static IntrinsicCalibration from_fov(RadialParams params, double cx, double cy, int width,
                                       int height, double fov_deg) {
    const double half_fov = 0.5 * fov_deg * detail::kPi / 180.0;
    return IntrinsicCalibration(RadialModel(std::move(params), half_fov), cx, cy, width, height,
                                fov_deg);
  }

  const RadialModel& model() const { return model_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double fov_deg() const { return fov_deg_; }

  bool in_image(const Pixel& p) const {
    return p.u >= 0.0 && p.v >= 0.0 && p.u <= width_ - 1.0 && p.v <= height_ - 1.0;
  }

 private:
  RadialModel model_;
  double cx_, cy_;
  int width_, height_;
  double fov_deg_;
};

/// Projects a camera-frame point. nullopt when its incident angle exceeds
/// theta_max; the pixel may still fall outside the sensor.
inline std::optional<Pixel> project(const IntrinsicCalibration& cal, const Eigen::Vector3d& point) {
  const double rho = point.head<2>().norm();
  if (rho == 0.0 && point.z() == 0.0) throw std::invalid_argument("cannot project the camera origin");
  const double theta = std::atan2(rho, point.z());
  if (theta > cal.model().theta_max()) return std::nullopt;
  if (rho == 0.0) return Pixel{cal.cx(), cal.cy()};
  const double r = cal.model().radius_unchecked(theta);
  return Pixel{cal.cx() + r * point.x() / rho, cal.cy() + r * point.y() / rho};
}

/// Back-projects a pixel to its unit viewing ray; throws OutOfImageError
/// when the pixel lies beyond r(theta_max).
inline Ray unproject(const IntrinsicCalibration& cal, const Pixel& px) {
  const double dx = px.u - cal.cx(), dy = px.v - cal.cy();
  const double r = std::hypot(dx, dy);
  if (r == 0.0) return Ray(Eigen::Vector3d::UnitZ());
  const double theta = theta_from_radius(cal.model(), r);
  const double s = std::sin(theta);
  return Ray(Eigen::Vector3d(s * dx / r, s * dy / r, std::cos(theta)));
}

}  // namespace woodgeom
