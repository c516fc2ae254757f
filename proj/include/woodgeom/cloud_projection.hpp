#pragma once

// Projection of LiDAR / SLAM point clouds into a fisheye camera, occlusion
// correction for the LiDAR-camera parallax, and rasterization into sparse
// depth ground truth. Depth is the Euclidean range in the camera frame, which
// stays well defined past 90 degrees of incidence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "woodgeom/camera.hpp"
#include "woodgeom/image.hpp"
#include "woodgeom/rigid_pose.hpp"

namespace woodgeom {

struct PointProjection {
  Pixel pixel;
  double depth = 0.0;          // meters, camera-frame range
  Eigen::Vector3d ray;         // unit camera-frame direction
  std::size_t source_index = 0;
};

/// Transforms world points into the camera and projects them. Points that
/// are non-finite, at the camera centre, beyond theta_max, or that land
/// outside the sensor are dropped.
inline std::vector<PointProjection> project_cloud(std::span<const Eigen::Vector3d> points,
                                                  const RigidPose& camera_from_world,
                                                  const IntrinsicCalibration& cal) {
  std::vector<PointProjection> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) continue;
    const Eigen::Vector3d p = camera_from_world * points[i];
    const double range = p.norm();
    if (!(range > 0.0)) continue;
    const auto px = project(cal, p);
    if (!px || !cal.in_image(*px)) continue;
    out.push_back({*px, range, p / range, i});
  }
  return out;
}

struct OcclusionParams {
  double cell_deg = 0.5;
  double tau = 0.1;  // relative depth tolerance
};

namespace detail {

inline std::int64_t angular_cell(const Eigen::Vector3d& ray, double cell_rad) {
  const double azimuth = std::atan2(ray.x(), ray.z());
  const double elevation = std::asin(std::clamp(ray.y(), -1.0, 1.0));
  const auto a = static_cast<std::int64_t>(std::floor(azimuth / cell_rad));
  const auto e = static_cast<std::int64_t>(std::floor(elevation / cell_rad));
  return (a << 32) ^ (e & 0xffffffff);
}

}  // namespace detail

/// Angular-cell z-buffer: projections are bucketed by the azimuth/elevation
/// of their camera rays and, per cell, only points with depth <= min * (1 +
/// tau) survive. Order of the survivors is preserved.
inline std::vector<PointProjection> occlusion_filter(const std::vector<PointProjection>& in,
                                                     const OcclusionParams& params = {}) {
  if (!(params.cell_deg > 0.0)) throw std::invalid_argument("cell_deg must be positive");
  if (!(params.tau >= 0.0)) throw std::invalid_argument("tau must be non-negative");
  const double cell = params.cell_deg * detail::kPi / 180.0;

  std::unordered_map<std::int64_t, double> nearest;
  std::vector<std::int64_t> keys(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    keys[i] = detail::angular_cell(in[i].ray, cell);
    auto [it, fresh] = nearest.try_emplace(keys[i], in[i].depth);
    if (!fresh) it->second = std::min(it->second, in[i].depth);
  }
  std::vector<PointProjection> out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i].depth <= nearest[keys[i]] * (1.0 + params.tau)) out.push_back(in[i]);
  }
  return out;
}

/// Per-pixel depth in meters; NaN where no point landed.
struct SparseDepthMap {
  Image<double> depth;
  std::size_t valid_count = 0;

  SparseDepthMap() = default;
  SparseDepthMap(int w, int h) : depth(w, h, 1, std::numeric_limits<double>::quiet_NaN()) {}

  int width() const { return depth.width; }
  int height() const { return depth.height; }
  bool valid(int x, int y) const { return std::isfinite(depth.at(x, y)); }
};

/// Nearest depth wins per integer (rounded) pixel.
inline SparseDepthMap rasterize_depth(const std::vector<PointProjection>& projections,
                                      const IntrinsicCalibration& cal) {
  SparseDepthMap map(cal.width(), cal.height());
  for (const auto& p : projections) {
    const long x = std::lround(p.pixel.u), y = std::lround(p.pixel.v);
    if (x < 0 || y < 0 || x >= cal.width() || y >= cal.height()) continue;
    double& d = map.depth.at(static_cast<int>(x), static_cast<int>(y));
    if (!std::isfinite(d)) {
      d = p.depth;
      ++map.valid_count;
    } else if (p.depth < d) {
      d = p.depth;
    }
  }
  return map;
}

/// Float depth image with 0 at invalid pixels, the layout written to PFM.
inline Image<float> depth_image(const SparseDepthMap& m) {
  Image<float> img(m.width(), m.height(), 1, 0.0f);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (std::isfinite(m.depth.data[i])) img.data[i] = static_cast<float>(m.depth.data[i]);
  }
  return img;
}

/// 255 where valid, 0 elsewhere.
inline Image<float> validity_mask(const SparseDepthMap& m) {
  Image<float> img(m.width(), m.height(), 1, 0.0f);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (std::isfinite(m.depth.data[i])) img.data[i] = 255.0f;
  }
  return img;
}

/// Inverse of depth_image (+ optional mask): pixels with a zero mask or a
/// non-positive / non-finite depth are invalid.
inline SparseDepthMap depth_map_from_image(const Image<float>& depth, const Image<float>* mask = nullptr) {
  if (mask && (mask->width != depth.width || mask->height != depth.height))
    throw std::invalid_argument("depth mask size mismatch");
  SparseDepthMap m(depth.width, depth.height);
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    const float d = depth.data[i];
    if ((mask && mask->data[i] == 0.0f) || !std::isfinite(d) || !(d > 0.0f)) continue;
    m.depth.data[i] = d;
    ++m.valid_count;
  }
  return m;
}

}  // namespace woodgeom
