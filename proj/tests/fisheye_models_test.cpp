#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "woodgeom/camera.hpp"
#include "woodgeom/io.hpp"
#include "woodgeom/radial_model.hpp"

namespace wg = woodgeom;
using std::numbers::pi;

namespace {

wg::RadialModel poly(double a1, double a2, double a3, double a4, double theta_max) {
  return wg::RadialModel(wg::Poly4{{a1, a2, a3, a4}}, theta_max);
}

wg::IntrinsicCalibration fixture() {
  return wg::validate_calibration(std::string(WOODGEOM_DATA_DIR) + "/fisheye_190_poly4.json");
}

// One valid instance of every variant, with its domain.
std::vector<wg::RadialModel> all_variants() {
  return {poly(339.749, -31.988, 48.275, -7.201, 95.0 * pi / 180.0),
          wg::RadialModel(wg::Rectilinear{300.0}, 80.0 * pi / 180.0),
          wg::RadialModel(wg::Stereographic{300.0}, 110.0 * pi / 180.0),
          wg::RadialModel(wg::Ucm{700.0, 1.2}, 120.0 * pi / 180.0),
          wg::RadialModel(wg::Eucm{330.0, 0.55, 1.0}, 120.0 * pi / 180.0)};
}

}  // namespace

TEST(EvalRadius, WorkedValues) {
  EXPECT_DOUBLE_EQ(wg::eval_radius(poly(500, 0, 0, 0, 1.5), 0.5), 250.0);
  EXPECT_NEAR(wg::eval_radius(wg::RadialModel(wg::Rectilinear{100.0}, 1.2), pi / 4), 100.0, 1e-12);
  EXPECT_NEAR(wg::eval_radius(wg::RadialModel(wg::Stereographic{100.0}, pi / 2), pi / 2), 200.0, 1e-12);
  EXPECT_DOUBLE_EQ(wg::eval_radius(poly(500, 0, -20, 0, 1.0), 0.5), 247.5);
}

TEST(EvalRadius, ZeroAtAxisForEveryVariant) {
  for (const auto& m : all_variants()) EXPECT_EQ(wg::eval_radius(m, 0.0), 0.0) << wg::to_string(m.kind());
}

TEST(EvalRadius, OutsideDomainReportsLimit) {
  const auto m = poly(500, 0, 0, 0, 1.0);
  try {
    wg::eval_radius(m, 1.2);
    FAIL() << "expected DomainError";
  } catch (const wg::DomainError& e) {
    EXPECT_DOUBLE_EQ(e.limit(), 1.0);
  }
  EXPECT_THROW(wg::eval_radius(m, -0.1), wg::DomainError);
}

TEST(ThetaFromRadius, WorkedValues) {
  EXPECT_NEAR(wg::theta_from_radius(poly(500, 0, 0, 0, 1.5), 250.0), 0.5, 1e-12);
  EXPECT_NEAR(wg::theta_from_radius(poly(500, 0, -20, 0, 1.0), 247.5), 0.5, 1e-9);
  for (const auto& m : all_variants()) EXPECT_EQ(wg::theta_from_radius(m, 0.0), 0.0);
}

TEST(ThetaFromRadius, BeyondMaxRadiusIsOutOfImage) {
  const auto m = poly(500, 0, 0, 0, 1.0);
  EXPECT_NEAR(wg::theta_from_radius(m, 500.0), 1.0, 1e-12);
  EXPECT_THROW(wg::theta_from_radius(m, 500.1), wg::OutOfImageError);
}

TEST(ThetaFromRadius, RoundtripAllVariants) {
  for (const auto& m : all_variants()) {
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double t = m.theta_max() * i / 1000.0;
      worst = std::max(worst, std::abs(wg::theta_from_radius(m, wg::eval_radius(m, t)) - t));
    }
    EXPECT_LT(worst, 1e-9) << wg::to_string(m.kind());
  }
}

TEST(RadialModel, StrictlyIncreasing) {
  for (const auto& m : all_variants()) {
    double prev = -1.0;
    for (int i = 0; i <= 500; ++i) {
      const double r = wg::eval_radius(m, m.theta_max() * i / 500.0);
      ASSERT_GT(r, prev) << wg::to_string(m.kind());
      prev = r;
    }
  }
}

TEST(RadialModel, RejectsNonMonotonePolynomialAtDerivativeRoot) {
  // dr/dtheta = 1 - 4 theta^3 vanishes at theta = (1/4)^(1/3).
  try {
    poly(1, 0, 0, -1, 2.0);
    FAIL() << "expected DomainError";
  } catch (const wg::DomainError& e) {
    EXPECT_NEAR(e.limit(), std::cbrt(0.25), 1e-9);
  }
  EXPECT_NO_THROW(poly(1, 0, 0, -1, 0.6));
}

TEST(RadialModel, RejectsRectilinearAtRightAngle) {
  EXPECT_THROW(wg::RadialModel(wg::Rectilinear{100.0}, pi / 2), wg::DomainError);
}

TEST(RadialModel, RejectsBadParameters) {
  EXPECT_THROW(wg::RadialModel(wg::Eucm{300.0, 1.5, 1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(wg::RadialModel(wg::Eucm{300.0, 0.5, 0.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(wg::RadialModel(wg::Stereographic{-1.0}, 1.0), std::invalid_argument);
}

TEST(RadialModel, UcmLimitedByDenominator) {
  // xi = 0.5: denominator xi + cos(theta) vanishes at 120 deg, slope earlier.
  EXPECT_THROW(wg::RadialModel(wg::Ucm{300.0, 0.5}, 2.2), wg::DomainError);
  EXPECT_NO_THROW(wg::RadialModel(wg::Ucm{300.0, 0.5}, 1.5));
}

TEST(Project, OpticalAxisAndSide) {
  const wg::IntrinsicCalibration cal(poly(500, 0, 0, 0, 1.7), 640, 480, 1280, 960, 190);
  const auto c = wg::project(cal, {0, 0, 1});
  ASSERT_TRUE(c);
  EXPECT_EQ(c->u, 640.0);
  EXPECT_EQ(c->v, 480.0);
  const auto s = wg::project(cal, {1, 0, 0});
  ASSERT_TRUE(s);
  EXPECT_NEAR(s->u, 640.0 + 500.0 * pi / 2, 1e-9);
  EXPECT_NEAR(s->v, 480.0, 1e-12);
  EXPECT_THROW(wg::project(cal, {0, 0, 0}), std::invalid_argument);
}

TEST(Project, FovGate) {
  const auto cal = fixture();
  // 170 deg full cone (85 deg off axis) is inside, 120 deg off axis is not.
  const double in = 85.0 * pi / 180.0, out = 120.0 * pi / 180.0;
  EXPECT_TRUE(wg::project(cal, {std::sin(in), 0, std::cos(in)}));
  EXPECT_FALSE(wg::project(cal, {std::sin(out), 0, std::cos(out)}));
}

TEST(Project, RaysFromBehindImagePlane) {
  const auto cal = fixture();
  const double t = 93.0 * pi / 180.0;
  const Eigen::Vector3d p(std::sin(t), 0.0, std::cos(t));
  ASSERT_LT(p.z(), 0.0);
  const auto px = wg::project(cal, p);
  ASSERT_TRUE(px);
  EXPECT_TRUE(cal.in_image(*px));
}

TEST(Project, RotationalSymmetry) {
  const auto cal = fixture();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ang(0.0, 2 * pi);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng) + 0.2);
    const Eigen::Vector3d q = Eigen::AngleAxisd(ang(rng), Eigen::Vector3d::UnitZ()) * p;
    const auto a = wg::project(cal, p), b = wg::project(cal, q);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (!a) continue;
    EXPECT_NEAR(std::hypot(a->u - cal.cx(), a->v - cal.cy()), std::hypot(b->u - cal.cx(), b->v - cal.cy()), 1e-9);
  }
}

TEST(Unproject, CenterAndBoundary) {
  const auto cal = fixture();
  const wg::Ray axis = wg::unproject(cal, {cal.cx(), cal.cy()});
  EXPECT_EQ(axis.direction(), Eigen::Vector3d(0, 0, 1));
  const double rmax = cal.model().max_radius();
  const wg::Ray edge = wg::unproject(cal, {cal.cx() + rmax, cal.cy()});
  EXPECT_NEAR(edge.theta(), cal.model().theta_max(), 1e-12);
  EXPECT_NEAR(edge.direction().norm(), 1.0, 1e-12);
  EXPECT_THROW(wg::unproject(cal, {cal.cx() + rmax + 1.0, cal.cy()}), wg::OutOfImageError);
}

TEST(Unproject, RoundtripPixelGrid) {
  const auto cal = fixture();
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const wg::Pixel p{cal.cx() + (i - 4.5) * 60.0, cal.cy() + (j - 4.5) * 60.0};
      const auto q = wg::project(cal, wg::unproject(cal, p).direction());
      ASSERT_TRUE(q);
      worst = std::max(worst, std::hypot(q->u - p.u, q->v - p.v));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Calibration, FixtureLoads) {
  const auto cal = fixture();
  EXPECT_EQ(cal.model().kind(), wg::ModelKind::Poly4);
  EXPECT_NEAR(cal.model().theta_max(), 95.0 * pi / 180.0, 1e-15);
  EXPECT_EQ(cal.width(), 1280);
}

TEST(Calibration, RejectsPrincipalPointOutsideImage) {
  EXPECT_THROW(wg::IntrinsicCalibration(poly(500, 0, 0, 0, 1.7), 1300, 480, 1280, 960, 190), wg::ValidationError);
  EXPECT_THROW(wg::IntrinsicCalibration(poly(500, 0, 0, 0, 1.7), 640, -1, 1280, 960, 190), wg::ValidationError);
}

TEST(Calibration, RejectsThetaMaxBelowHalfFov) {
  EXPECT_THROW(wg::IntrinsicCalibration(poly(500, 0, 0, 0, 1.0), 640, 480, 1280, 960, 190), wg::ValidationError);
}

TEST(Calibration, JsonRoundtrip) {
  const auto cal = fixture();
  const auto back = wg::calibration_from_json(wg::calibration_to_json(cal));
  EXPECT_EQ(back.model().coefficients(), cal.model().coefficients());
  EXPECT_EQ(back.cx(), cal.cx());
  EXPECT_EQ(back.fov_deg(), cal.fov_deg());
}

TEST(Calibration, JsonRejectsNonMonotoneWithAngle) {
  const nlohmann::json j = {{"model", "poly4"}, {"coeffs", {1, 0, 0, -1}}, {"cx", 10},
                            {"cy", 10},         {"width", 20},           {"height", 20},
                            {"fov_deg", 2 * 2.0 * 180.0 / pi}};
  try {
    wg::calibration_from_json(j);
    FAIL() << "expected ValidationError";
  } catch (const wg::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("0.6299605"), std::string::npos) << e.what();
  }
}
