#pragma once

// Undistortion viewports (rectilinear plane, piecewise-linear multi-plane
// strip, cylinder), remap-table construction/application and the local
// resampling scale of a warp.
//
// Viewport pixel (u, v) has its principal point at ((W-1)/2, (H-1)/2); the
// viewport frame shares the camera convention (x right, y down, z forward)
// and `orientation` rotates viewport-frame rays into the camera frame.

#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "woodgeom/camera.hpp"
#include "woodgeom/errors.hpp"
#include "woodgeom/image.hpp"
#include "woodgeom/parallel.hpp"

namespace woodgeom {

enum class ViewportKind { Rectilinear, PiecewiseLinear, Cylindrical };

/// One plane of a piecewise-linear viewport: yawed by `yaw` about the
/// viewport's vertical axis, responsible for azimuths [azimuth_lo,
/// azimuth_hi). All angles in radians, positive towards +x.
struct ViewportPlane {
  double yaw = 0.0;
  double azimuth_lo = 0.0;
  double azimuth_hi = 0.0;
};

inline double deg2rad(double d) { return d * detail::kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / detail::kPi; }

/// Three planes at -55/0/+55 degrees yaw with seams halfway between them,
/// covering azimuths [-95, 95] degrees.
inline std::vector<ViewportPlane> default_viewport_planes() {
  return {{deg2rad(-55.0), deg2rad(-95.0), deg2rad(-27.5)},
          {0.0, deg2rad(-27.5), deg2rad(27.5)},
          {deg2rad(55.0), deg2rad(27.5), deg2rad(95.0)}};
}

class ViewportSpec {
 public:
  ViewportSpec(ViewportKind kind, int out_width, int out_height, double focal,
               Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity(),
               std::vector<ViewportPlane> planes = {})
      : kind_(kind), width_(out_width), height_(out_height), focal_(focal),
        orientation_(orientation), planes_(std::move(planes)) {
    if (width_ <= 0 || height_ <= 0) throw std::invalid_argument("viewport size must be positive");
    if (!(focal_ > 0.0)) throw std::invalid_argument("viewport focal must be positive");
    if (!orientation_.isUnitary(1e-9) || orientation_.determinant() < 0.0)
      throw std::invalid_argument("viewport orientation must be a rotation");
    if (kind_ == ViewportKind::PiecewiseLinear) {
      if (planes_.empty()) planes_ = default_viewport_planes();
      init_strip();
    }
  }

  ViewportKind kind() const { return kind_; }
  int out_width() const { return width_; }
  int out_height() const { return height_; }
  double focal() const { return focal_; }
  const Eigen::Matrix3d& orientation() const { return orientation_; }
  const std::vector<ViewportPlane>& planes() const { return planes_; }
  double principal_u() const { return 0.5 * (width_ - 1); }
  double principal_v() const { return 0.5 * (height_ - 1); }

  /// Camera-frame ray (not normalized) seen by output pixel (u, v); nullopt
  /// where the viewport surface does not exist.
  std::optional<Eigen::Vector3d> ray(double u, double v) const {
    const double x = u - principal_u();
    const double y = v - principal_v();
    Eigen::Vector3d local;
    switch (kind_) {
      case ViewportKind::Rectilinear:
        local = {x, y, focal_};
        break;
      case ViewportKind::Cylindrical: {
        const double azimuth = x / focal_;
        if (std::abs(azimuth) > detail::kPi) return std::nullopt;
        local = {std::sin(azimuth), y / focal_, std::cos(azimuth)};
        break;
      }
      case ViewportKind::PiecewiseLinear: {
        const double s = x + strip_origin_;
        if (s < 0.0 || s > strip_offset_.back()) return std::nullopt;
        std::size_t k = 0;
        while (k + 1 < planes_.size() && s >= strip_offset_[k + 1]) ++k;
        const ViewportPlane& p = planes_[k];
        const double plane_x = focal_ * std::tan(p.azimuth_lo - p.yaw) + (s - strip_offset_[k]);
        local = Eigen::AngleAxisd(p.yaw, Eigen::Vector3d::UnitY()) * Eigen::Vector3d(plane_x, y, focal_);
        break;
      }
    }
    return orientation_ * local;
  }

 private:
  // Unfolds the planes into one horizontal strip: strip_offset_[k] is where
  // plane k starts, the last entry the total strip length in pixels.
  void init_strip() {
    for (std::size_t k = 0; k < planes_.size(); ++k) {
      const ViewportPlane& p = planes_[k];
      if (!(p.azimuth_hi > p.azimuth_lo))
        throw std::invalid_argument("viewport plane needs azimuth_lo < azimuth_hi");
      if (k > 0 && std::abs(planes_[k - 1].azimuth_hi - p.azimuth_lo) > 1e-12)
        throw std::invalid_argument("viewport planes must cover contiguous azimuth ranges");
      if (std::abs(p.azimuth_lo - p.yaw) >= 0.5 * detail::kPi ||
          std::abs(p.azimuth_hi - p.yaw) >= 0.5 * detail::kPi)
        throw std::invalid_argument("viewport plane cannot see azimuths 90 degrees off its axis");
    }
    strip_offset_.assign(1, 0.0);
    for (const ViewportPlane& p : planes_) {
      strip_offset_.push_back(strip_offset_.back() + focal_ * (std::tan(p.azimuth_hi - p.yaw) -
                                                               std::tan(p.azimuth_lo - p.yaw)));
    }
    strip_origin_ = 0.5 * strip_offset_.back();
    for (std::size_t k = 0; k < planes_.size(); ++k) {
      const ViewportPlane& p = planes_[k];
      if (p.azimuth_lo <= 0.0 && 0.0 < p.azimuth_hi) {
        strip_origin_ = strip_offset_[k] + focal_ * (std::tan(-p.yaw) - std::tan(p.azimuth_lo - p.yaw));
      }
    }
  }

  ViewportKind kind_;
  int width_, height_;
  double focal_;
  Eigen::Matrix3d orientation_;
  std::vector<ViewportPlane> planes_;
  std::vector<double> strip_offset_;
  double strip_origin_ = 0.0;
};

/// Per-output-pixel source coordinates; NaN marks pixels with no source.
/// Finite entries lie in [0, src_width-1] x [0, src_height-1] whenever the
/// source size is known (non-zero).
struct RemapTable {
  int out_width = 0;
  int out_height = 0;
  int src_width = 0;
  int src_height = 0;
  std::vector<double> sx;
  std::vector<double> sy;

  RemapTable() = default;
  RemapTable(int w, int h, int src_w = 0, int src_h = 0)
      : out_width(w), out_height(h), src_width(src_w), src_height(src_h),
        sx(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::quiet_NaN()),
        sy(sx) {}

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * out_width + u; }
  bool valid(int u, int v) const {
    const std::size_t i = index(u, v);
    return std::isfinite(sx[i]) && std::isfinite(sy[i]);
  }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < sx.size(); ++i) n += std::isfinite(sx[i]) && std::isfinite(sy[i]);
    return n;
  }
};

inline RemapTable build_remap(const IntrinsicCalibration& cal, const ViewportSpec& vp, int threads = 1) {
  RemapTable table(vp.out_width(), vp.out_height(), cal.width(), cal.height());
  parallel_for(vp.out_height(), threads, [&](int v) {
    for (int u = 0; u < vp.out_width(); ++u) {
      const auto ray = vp.ray(u, v);
      if (!ray) continue;
      const auto px = project(cal, *ray);
      if (!px || !cal.in_image(*px)) continue;
      table.sx[table.index(u, v)] = px->u;
      table.sy[table.index(u, v)] = px->v;
    }
  });
  return table;
}

/// Bilinear resampling through the table; invalid pixels get `fill`.
inline Image<float> apply_remap(const RemapTable& table, const Image<float>& src, float fill = 0.0f,
                                int threads = 1) {
  if ((table.src_width != 0 && table.src_width != src.width) ||
      (table.src_height != 0 && table.src_height != src.height)) {
    throw std::invalid_argument("image size does not match the remap table's source size");
  }
  Image<float> out(table.out_width, table.out_height, src.channels, fill);
  parallel_for(table.out_height, threads, [&](int v) {
    for (int u = 0; u < table.out_width; ++u) {
      if (!table.valid(u, v)) continue;
      const double x = table.sx[table.index(u, v)], y = table.sy[table.index(u, v)];
      if (x < 0.0 || y < 0.0 || x > src.width - 1.0 || y > src.height - 1.0) continue;
      const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
      const int x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
      const double fx = x - x0, fy = y - y0;
      for (int c = 0; c < src.channels; ++c) {
        const double top = (1.0 - fx) * src.at(x0, y0, c) + fx * src.at(x1, y0, c);
        const double bot = (1.0 - fx) * src.at(x0, y1, c) + fx * src.at(x1, y1, c);
        out.at(u, v, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
      }
    }
  });
  return out;
}

/// Output area covered by one unit of source area at each output pixel,
/// 1 / |det J| where J is the central-difference Jacobian of the source
/// coordinates. Values > 1 mean the warp magnifies (stretches) the source
/// there. NaN where the pixel or one of its four neighbours is invalid,
/// including the border.
inline Image<double> resampling_distortion_map(const RemapTable& t) {
  Image<double> m(t.out_width, t.out_height, 1, std::numeric_limits<double>::quiet_NaN());
  for (int v = 1; v + 1 < t.out_height; ++v) {
    for (int u = 1; u + 1 < t.out_width; ++u) {
      if (!t.valid(u, v) || !t.valid(u - 1, v) || !t.valid(u + 1, v) || !t.valid(u, v - 1) ||
          !t.valid(u, v + 1))
        continue;
      const double dxu = 0.5 * (t.sx[t.index(u + 1, v)] - t.sx[t.index(u - 1, v)]);
      const double dyu = 0.5 * (t.sy[t.index(u + 1, v)] - t.sy[t.index(u - 1, v)]);
      const double dxv = 0.5 * (t.sx[t.index(u, v + 1)] - t.sx[t.index(u, v - 1)]);
      const double dyv = 0.5 * (t.sy[t.index(u, v + 1)] - t.sy[t.index(u, v - 1)]);
      const double det = std::abs(dxu * dyv - dxv * dyu);
      if (det > 0.0) m.at(u, v) = 1.0 / det;
    }
  }
  return m;
}

struct DistortionSummary {
  double center_mean = std::numeric_limits<double>::quiet_NaN();
  double periphery_mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t center_count = 0;
  std::size_t periphery_count = 0;
};

/// Mean local scale inside the central disk (radius <= 10 % of the inscribed
/// circle) and on the outer ring (90-100 % of it), over valid pixels.
inline DistortionSummary summarize_distortion(const Image<double>& m) {
  DistortionSummary s;
  const double cx = 0.5 * (m.width - 1), cy = 0.5 * (m.height - 1);
  const double radius = 0.5 * std::min(m.width, m.height);
  double c_sum = 0.0, p_sum = 0.0;
  for (int v = 0; v < m.height; ++v) {
    for (int u = 0; u < m.width; ++u) {
      const double val = m.at(u, v);
      if (!std::isfinite(val)) continue;
      const double rho = std::hypot(u - cx, v - cy) / radius;
      if (rho <= 0.1) {
        c_sum += val;
        ++s.center_count;
      } else if (rho >= 0.9 && rho <= 1.0) {
        p_sum += val;
        ++s.periphery_count;
      }
    }
  }
  if (s.center_count) s.center_mean = c_sum / static_cast<double>(s.center_count);
  if (s.periphery_count) s.periphery_mean = p_sum / static_cast<double>(s.periphery_count);
  return s;
}

// Binary form: "WSRM", u32 width, u32 height, u32 flags (0), then row-major
// little-endian f32 (sx, sy) pairs. NaN pairs mark invalid pixels. The
// source size is not part of the format.

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  os.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("truncated remap file");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void write_remap(std::ostream& os, const RemapTable& t) {
  os.write("WSRM", 4);
  detail::put_u32(os, static_cast<std::uint32_t>(t.out_width));
  detail::put_u32(os, static_cast<std::uint32_t>(t.out_height));
  detail::put_u32(os, 0);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  for (std::size_t i = 0; i < t.sx.size(); ++i) {
    const bool ok = std::isfinite(t.sx[i]) && std::isfinite(t.sy[i]);
    detail::put_u32(os, std::bit_cast<std::uint32_t>(ok ? static_cast<float>(t.sx[i]) : nan));
    detail::put_u32(os, std::bit_cast<std::uint32_t>(ok ? static_cast<float>(t.sy[i]) : nan));
  }
}

inline RemapTable read_remap(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "WSRM") throw ValidationError("not a WSRM remap file");
  const std::uint32_t w = detail::get_u32(is), h = detail::get_u32(is), flags = detail::get_u32(is);
  if (flags != 0) throw ValidationError("unsupported remap flags");
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) throw ValidationError("implausible remap size");
  RemapTable t(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < t.sx.size(); ++i) {
    const float x = std::bit_cast<float>(detail::get_u32(is));
    const float y = std::bit_cast<float>(detail::get_u32(is));
    if (std::isfinite(x) && std::isfinite(y)) {
      t.sx[i] = x;
      t.sy[i] = y;
    }
  }
  return t;
}

}  // namespace woodgeom
