#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "woodgeom/io.hpp"
#include "woodgeom/undistortion.hpp"

namespace wg = woodgeom;
using std::numbers::pi;

namespace {

wg::IntrinsicCalibration fixture() {
  return wg::validate_calibration(std::string(WOODGEOM_DATA_DIR) + "/fisheye_190_poly4.json");
}

wg::RemapTable synthetic_table(int w, int h, double scale) {
  wg::RemapTable t;
  t.out_width = w;
  t.out_height = h;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      t.sx.push_back(u * scale);
      t.sy.push_back(v * scale);
    }
  return t;
}

wg::Image<float> ramp(int w, int h) {
  wg::Image<float> img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<float>(3 * x + 7 * y);
  return img;
}

}  // namespace

TEST(BuildRemap, RectilinearCenterMapsToPrincipalPoint) {
  const auto cal = fixture();
  const wg::ViewportSpec vp(wg::ViewportKind::Rectilinear, 641, 481, 300.0);
  const auto t = wg::build_remap(cal, vp);
  ASSERT_TRUE(t.valid(320, 240));
  EXPECT_NEAR(t.sx[t.index(320, 240)], cal.cx(), 1e-9);
  EXPECT_NEAR(t.sy[t.index(320, 240)], cal.cy(), 1e-9);
}

TEST(BuildRemap, RectilinearLosesFieldOfView) {
  const auto cal = fixture();
  // Wide enough to run off the clipped image circle.
  const wg::ViewportSpec vp(wg::ViewportKind::Rectilinear, 1280, 966, 100.0);
  const auto t = wg::build_remap(cal, vp);
  EXPECT_GT(t.valid_count(), 0u);
  EXPECT_LT(t.valid_count(), t.sx.size());

  // Turned sideways, part of the plane looks past theta_max.
  const Eigen::Matrix3d side = Eigen::AngleAxisd(70.0 * pi / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const auto lateral = wg::build_remap(cal, wg::ViewportSpec(wg::ViewportKind::Rectilinear, 800, 600, 300.0, side));
  EXPECT_GT(lateral.valid_count(), 0u);
  EXPECT_FALSE(lateral.valid(799, 300));
  // A pinhole plane never reaches 90 degrees off axis; the lens sees 95.
  const double widest = std::atan(0.5 * (vp.out_width() - 1) / vp.focal());
  EXPECT_LT(widest, cal.model().theta_max());
}

TEST(BuildRemap, FiniteEntriesInsideSource) {
  const auto cal = fixture();
  for (auto kind : {wg::ViewportKind::Rectilinear, wg::ViewportKind::PiecewiseLinear, wg::ViewportKind::Cylindrical}) {
    const auto t = wg::build_remap(cal, wg::ViewportSpec(kind, 800, 400, 200.0));
    for (std::size_t i = 0; i < t.sx.size(); ++i) {
      if (!std::isfinite(t.sx[i])) continue;
      ASSERT_GE(t.sx[i], 0.0);
      ASSERT_GE(t.sy[i], 0.0);
      ASSERT_LE(t.sx[i], cal.width() - 1.0);
      ASSERT_LE(t.sy[i], cal.height() - 1.0);
    }
  }
}

TEST(BuildRemap, ReprojectionConsistency) {
  const auto cal = fixture();
  const wg::ViewportSpec vp(wg::ViewportKind::Cylindrical, 400, 200, 120.0,
                            Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitX()).toRotationMatrix());
  const auto t = wg::build_remap(cal, vp);
  double worst = 0.0;
  for (int v = 0; v < vp.out_height(); ++v)
    for (int u = 0; u < vp.out_width(); ++u) {
      if (!t.valid(u, v)) continue;
      const auto px = wg::project(cal, *vp.ray(u, v));
      ASSERT_TRUE(px);
      worst = std::max(worst, std::hypot(px->u - t.sx[t.index(u, v)], px->v - t.sy[t.index(u, v)]));
    }
  EXPECT_LT(worst, 1e-6);
}

TEST(BuildRemap, ThreadCountDoesNotChangeTable) {
  const auto cal = fixture();
  const wg::ViewportSpec vp(wg::ViewportKind::PiecewiseLinear, 600, 300, 200.0);
  const auto a = wg::build_remap(cal, vp, 1);
  const auto b = wg::build_remap(cal, vp, 4);
  ASSERT_EQ(a.sx.size(), b.sx.size());
  EXPECT_EQ(0, std::memcmp(a.sx.data(), b.sx.data(), a.sx.size() * sizeof(double)));
  EXPECT_EQ(0, std::memcmp(a.sy.data(), b.sy.data(), a.sy.size() * sizeof(double)));
}

TEST(BuildRemap, PiecewiseContinuousAcrossSeams) {
  const auto cal = fixture();
  const wg::ViewportSpec vp(wg::ViewportKind::PiecewiseLinear, 1400, 400, 250.0);
  const auto t = wg::build_remap(cal, vp);
  double worst = 0.0;
  for (int v = 0; v < vp.out_height(); ++v)
    for (int u = 0; u + 1 < vp.out_width(); ++u) {
      if (!t.valid(u, v) || !t.valid(u + 1, v)) continue;
      worst = std::max(worst, std::hypot(t.sx[t.index(u + 1, v)] - t.sx[t.index(u, v)],
                                         t.sy[t.index(u + 1, v)] - t.sy[t.index(u, v)]));
    }
  EXPECT_LT(worst, 2.0);
}

TEST(BuildRemap, PiecewiseSeesBehindLateralDirections) {
  const auto cal = fixture();
  // The unfolded strip is about 940 px long at this focal length.
  const wg::ViewportSpec vp(wg::ViewportKind::PiecewiseLinear, 900, 400, 250.0);
  const auto ray = vp.ray(vp.out_width() - 1, vp.principal_v());
  ASSERT_TRUE(ray);
  EXPECT_GT(std::atan2(ray->x(), ray->z()), 80.0 * pi / 180.0);
}

TEST(BuildRemap, CylindricalKeepsVerticalLinesStraight) {
  const auto cal = fixture();
  const wg::ViewportSpec vp(wg::ViewportKind::Cylindrical, 900, 500, 220.0);
  const auto t = wg::build_remap(cal, vp);
  for (double azimuth_deg : {-60.0, -20.0, 35.0, 70.0}) {
    const double a = azimuth_deg * pi / 180.0;
    std::vector<double> columns;
    for (double y = -1.5; y <= 1.5; y += 0.25) {
      const Eigen::Vector3d p(4.0 * std::sin(a), y, 4.0 * std::cos(a));
      const auto s = wg::project(cal, p);
      ASSERT_TRUE(s);
      const auto x = oracle::table_inverse(t, {s->u, s->v});
      if (x) columns.push_back(x->x());
    }
    ASSERT_GE(columns.size(), 8u) << azimuth_deg;
    const auto [lo, hi] = std::minmax_element(columns.begin(), columns.end());
    EXPECT_LT(*hi - *lo, 0.1) << azimuth_deg;
  }
}

TEST(ViewportSpec, RejectsBadPlanes) {
  const std::vector<wg::ViewportPlane> gap = {{0.0, -0.5, 0.1}, {0.6, 0.2, 1.0}};
  EXPECT_THROW(wg::ViewportSpec(wg::ViewportKind::PiecewiseLinear, 100, 100, 50.0, Eigen::Matrix3d::Identity(), gap),
               std::invalid_argument);
  EXPECT_THROW(wg::ViewportSpec(wg::ViewportKind::Rectilinear, 100, 100, 0.0), std::invalid_argument);
}

TEST(ApplyRemap, IdentityTableReproducesInput) {
  const auto img = ramp(20, 10);
  const auto out = wg::apply_remap(synthetic_table(20, 10, 1.0), img);
  EXPECT_EQ(out.data, img.data);
}

TEST(ApplyRemap, AllInvalidGivesFill) {
  auto t = synthetic_table(6, 4, 1.0);
  std::fill(t.sx.begin(), t.sx.end(), std::nan(""));
  const auto out = wg::apply_remap(t, ramp(6, 4), 9.0f);
  for (float v : out.data) EXPECT_EQ(v, 9.0f);
}

TEST(ApplyRemap, ConstantImageStaysConstant) {
  const auto cal = fixture();
  const auto t = wg::build_remap(cal, wg::ViewportSpec(wg::ViewportKind::Rectilinear, 300, 200, 90.0));
  const wg::Image<float> grey(cal.width(), cal.height(), 1, 77.0f);
  const auto out = wg::apply_remap(t, grey, 0.0f, 2);
  for (int v = 0; v < 200; ++v)
    for (int u = 0; u < 300; ++u) {
      if (t.valid(u, v)) {
        EXPECT_NEAR(out.at(u, v), 77.0f, 1e-4);
      } else {
        EXPECT_EQ(out.at(u, v), 0.0f);
      }
    }
}

TEST(ApplyRemap, BilinearMidpoint) {
  auto t = synthetic_table(1, 1, 1.0);
  t.sx[0] = 0.5;
  t.sy[0] = 0.25;
  wg::Image<float> img(2, 2);
  img.data = {0.0f, 10.0f, 20.0f, 30.0f};
  EXPECT_NEAR(wg::apply_remap(t, img).data[0], 0.75 * 5.0 + 0.25 * 25.0, 1e-6);
}

TEST(ApplyRemap, SizeMismatchRejected) {
  const auto cal = fixture();
  const auto t = wg::build_remap(cal, wg::ViewportSpec(wg::ViewportKind::Rectilinear, 30, 20, 20.0));
  EXPECT_THROW(wg::apply_remap(t, ramp(100, 100)), std::invalid_argument);
}

TEST(ResamplingDistortion, IdentityIsOne) {
  const auto m = wg::resampling_distortion_map(synthetic_table(12, 9, 1.0));
  for (int v = 1; v < 8; ++v)
    for (int u = 1; u < 11; ++u) EXPECT_NEAR(m.at(u, v), 1.0, 1e-12);
  EXPECT_TRUE(std::isnan(m.at(0, 0)));
}

TEST(ResamplingDistortion, TwoFoldScaleIsFour) {
  const auto m = wg::resampling_distortion_map(synthetic_table(12, 9, 0.5));
  for (int v = 1; v < 8; ++v)
    for (int u = 1; u < 11; ++u) EXPECT_NEAR(m.at(u, v), 4.0, 1e-12);
}

TEST(ResamplingDistortion, PeripheryExceedsCenterOnFixture) {
  const auto cal = fixture();
  const auto t = wg::build_remap(cal, wg::ViewportSpec(wg::ViewportKind::Rectilinear, 800, 800, 250.0));
  const auto s = wg::summarize_distortion(wg::resampling_distortion_map(t));
  ASSERT_GT(s.center_count, 0u);
  ASSERT_GT(s.periphery_count, 0u);
  EXPECT_GT(s.periphery_mean, s.center_mean);
}

TEST(RemapFile, HeaderAndRoundtrip) {
  const auto cal = fixture();
  const auto t = wg::build_remap(cal, wg::ViewportSpec(wg::ViewportKind::Rectilinear, 64, 48, 5.0));
  std::stringstream ss;
  wg::write_remap(ss, t);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 16u + 8u * 64u * 48u);
  EXPECT_EQ(bytes.substr(0, 4), "WSRM");
  std::uint32_t w, h, flags;
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  std::memcpy(&flags, bytes.data() + 12, 4);
  EXPECT_EQ(w, 64u);
  EXPECT_EQ(h, 48u);
  EXPECT_EQ(flags, 0u);

  const auto back = wg::read_remap(ss);
  ASSERT_EQ(back.sx.size(), t.sx.size());
  std::size_t invalid = 0;
  for (std::size_t i = 0; i < t.sx.size(); ++i) {
    ASSERT_EQ(std::isfinite(back.sx[i]), std::isfinite(t.sx[i]));
    if (!std::isfinite(t.sx[i])) {
      ++invalid;
      EXPECT_TRUE(std::isnan(back.sy[i]));
      continue;
    }
    EXPECT_NEAR(back.sx[i], t.sx[i], 1e-4);
    EXPECT_NEAR(back.sy[i], t.sy[i], 1e-4);
  }
  EXPECT_GT(invalid, 0u);
}

TEST(RemapFile, RejectsBadMagic) {
  std::stringstream ss("XXXX0000000000000000");
  EXPECT_THROW(wg::read_remap(ss), std::exception);
}
