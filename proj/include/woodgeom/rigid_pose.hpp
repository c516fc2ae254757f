#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace woodgeom {

/// Rigid transform p' = R p + t with R stored as a unit quaternion.
class RigidPose {
 public:
  RigidPose() = default;
  RigidPose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {
    if (std::abs(rotation_.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("pose quaternion must have unit norm");
  }

  /// Normalizes the quaternion first; for inputs read from text files.
  static RigidPose normalized(Eigen::Quaterniond q, const Eigen::Vector3d& t) {
    if (!(q.norm() > 0.0)) throw std::invalid_argument("zero quaternion");
    q.normalize();
    return RigidPose(q, t);
  }

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }
  RigidPose operator*(const RigidPose& o) const {
    return normalized(rotation_ * o.rotation_, rotation_ * o.translation_ + translation_);
  }
  RigidPose inverse() const {
    const Eigen::Quaterniond qi = rotation_.conjugate();
    return RigidPose(qi, -(qi * translation_));
  }

  /// Rotation angle in radians, in [0, pi].
  double angle() const {
    const double w = std::min(1.0, std::abs(rotation_.w()));
    return 2.0 * std::atan2(rotation_.vec().norm(), w);
  }

 private:
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

}  // namespace woodgeom
