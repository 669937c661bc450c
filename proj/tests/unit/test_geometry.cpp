#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"
#include "virtview/geometry.hpp"

using namespace virtview;
using virtview::testing::simple_camera;

namespace {

constexpr double kPi = std::numbers::pi;

TEST(Project, PrincipalAxisHitsPrincipalPoint) {
  const Pixel p = project(simple_camera(), {0, 0, 10});
  EXPECT_DOUBLE_EQ(p.u, 620.0);
  EXPECT_DOUBLE_EQ(p.v, 190.0);
}

TEST(Project, LateralOffsetScalesWithFocalLength) {
  EXPECT_DOUBLE_EQ(project(simple_camera(), {1, 0, 10}).u, 690.0);
}

TEST(Project, RejectsNonPositiveDepth) {
  EXPECT_THROW(project(simple_camera(), {0, 0, 0}), GeometryError);
  EXPECT_THROW(project(simple_camera(), {1, 1, -2}), GeometryError);
  EXPECT_THROW(backproject(simple_camera(), {0, 0}, 0.0), GeometryError);
}

TEST(Backproject, InvertsKnownPixels) {
  const Point3 a = backproject(simple_camera(), {620, 190}, 10);
  EXPECT_DOUBLE_EQ(a.x, 0.0);
  EXPECT_DOUBLE_EQ(a.y, 0.0);
  EXPECT_DOUBLE_EQ(a.z, 10.0);
  const Point3 b = backproject(simple_camera(), {690, 190}, 10);
  EXPECT_DOUBLE_EQ(b.x, 1.0);
}

TEST(Backproject, RoundTripsWithProjection) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> xy(-20, 20), z(0.1, 100);
  CameraIntrinsics k = simple_camera();
  k.baseline = {0.06, -0.0003, 0.0027};
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Point3 p{xy(rng), xy(rng) * 0.2, z(rng)};
    const Point3 q = backproject(k, project(k, p), p.z);
    worst = std::max({worst, std::abs(q.x - p.x), std::abs(q.y - p.y), std::abs(q.z - p.z)});
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Corners, UnitCubeAtOriginIsAxisAligned) {
  Box3D b;
  b.size = {1, 1, 1};
  for (const Point3& c : box3d_corners(b)) {
    EXPECT_DOUBLE_EQ(std::abs(c.x), 0.5);
    EXPECT_DOUBLE_EQ(std::abs(c.y), 0.5);
    EXPECT_DOUBLE_EQ(std::abs(c.z), 0.5);
  }
}

TEST(Corners, BottomFaceFirstCounterClockwiseFromAbove) {
  Box3D b;
  b.size = {2, 1, 4};
  const auto c = box3d_corners(b);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(c[i].y, 0.5);
  for (int i = 4; i < 8; ++i) EXPECT_DOUBLE_EQ(c[i].y, -0.5);
  EXPECT_DOUBLE_EQ(c[0].x, 2.0);
  EXPECT_DOUBLE_EQ(c[0].z, 1.0);
  // Fixed winding: negative signed area in the (x, z) plane.
  double area = 0.0;
  for (int i = 0; i < 4; ++i) area += c[i].x * c[(i + 1) % 4].z - c[(i + 1) % 4].x * c[i].z;
  EXPECT_LT(area, 0.0);
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(c[i + 4].x, c[i].x);
    EXPECT_DOUBLE_EQ(c[i + 4].z, c[i].z);
  }
}

TEST(Corners, QuarterTurnSwapsExtents) {
  Box3D b;
  b.size = {1.0, 1.5, 4.0};
  b.yaw = kPi / 2;
  double max_x = 0, max_z = 0;
  for (const Point3& c : box3d_corners(b)) {
    max_x = std::max(max_x, std::abs(c.x));
    max_z = std::max(max_z, std::abs(c.z));
  }
  EXPECT_NEAR(max_x, 0.5, 1e-12);
  EXPECT_NEAR(max_z, 2.0, 1e-12);
}

TEST(Corners, MatchRotationMatrixOracle) {
  Box3D b;
  b.center = {2, 1, 20};
  b.size = {1.63, 1.53, 3.84};
  b.yaw = 0.3;
  // R_y(yaw) applied to local (x, y, z) = (+-L/2, +-H/2, +-W/2).
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  std::vector<std::array<double, 3>> expected;
  for (double sy : {1.0, -1.0}) {
    for (auto [sx, sz] : {std::pair{1.0, 1.0}, {1.0, -1.0}, {-1.0, -1.0}, {-1.0, 1.0}}) {
      const double lx = sx * b.size.length / 2, ly = sy * b.size.height / 2,
                   lz = sz * b.size.width / 2;
      expected.push_back({b.center.x + c * lx + s * lz, b.center.y + ly, b.center.z - s * lx + c * lz});
    }
  }
  const auto got = box3d_corners(b);
  for (int i = 0; i < 8; ++i) {
    EXPECT_NEAR(got[i].x, expected[i][0], 1e-12);
    EXPECT_NEAR(got[i].y, expected[i][1], 1e-12);
    EXPECT_NEAR(got[i].z, expected[i][2], 1e-12);
  }
}

TEST(Corners, CentroidAndEdgeLengths) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 1000; ++t) {
    const Box3D b = virtview::testing::random_box(rng);
    const auto c = box3d_corners(b);
    Point3 m{};
    for (const Point3& p : c) m = m + 0.125 * p;
    EXPECT_NEAR(m.x, b.center.x, 1e-12);
    EXPECT_NEAR(m.y, b.center.y, 1e-12);
    EXPECT_NEAR(m.z, b.center.z, 1e-12);
    // Each of L, W, H appears as exactly four of the twelve edges.
    const std::array<std::pair<int, int>, 12> edges{{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}}};
    int nl = 0, nw = 0, nh = 0;
    for (auto [i, j] : edges) {
      const Point3 d = c[i] - c[j];
      const double len = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
      nl += std::abs(len - b.size.length) < 1e-9;
      nw += std::abs(len - b.size.width) < 1e-9;
      nh += std::abs(len - b.size.height) < 1e-9;
    }
    EXPECT_GE(nl, 4);
    EXPECT_GE(nw, 4);
    EXPECT_GE(nh, 4);
  }
}

TEST(Allocentric, OnAxisEqualsYaw) {
  EXPECT_DOUBLE_EQ(egocentric_to_allocentric(0.7, {0, 1, 15}), 0.7);
}

TEST(Allocentric, DiagonalRayGivesMinusQuarterPi) {
  EXPECT_NEAR(egocentric_to_allocentric(0.0, {12, 0, 12}), -kPi / 4, 1e-15);
}

TEST(Allocentric, RoundTripAfterWrapping) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> yaw(-kPi, kPi), x(-30, 30), z(0.5, 80);
  for (int i = 0; i < 10000; ++i) {
    const double y0 = wrap_angle(yaw(rng));
    const Point3 c{x(rng), 1.0, z(rng)};
    const double back = allocentric_to_egocentric(egocentric_to_allocentric(y0, c), c);
    EXPECT_NEAR(wrap_angle(back - y0), 0.0, 1e-12);
  }
}

TEST(Allocentric, ContinuousAwayFromWrap) {
  const double yaw = 0.4;
  double prev = egocentric_to_allocentric(yaw, {-20, 0, 5});
  for (int i = 1; i <= 400; ++i) {
    const double a = egocentric_to_allocentric(yaw, {-20 + 0.1 * i, 0, 5});
    EXPECT_LT(std::abs(a - prev), 0.05);
    prev = a;
  }
}

TEST(WrapAngle, CanonicalInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(-0.5 - 4 * kPi), -0.5, 1e-12);
  for (double a = -20; a < 20; a += 0.37) {
    const double w = wrap_angle(a);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::remainder(w - a, 2 * kPi), 0.0, 1e-12);
  }
}

TEST(ProjectBox, OnAxisBoxIsSymmetric) {
  const CameraIntrinsics k = simple_camera();
  Box3D b;
  b.center = {0, 0, 12};
  b.size = {1.6, 1.5, 3.9};
  const Box2D r = project_box_to_2d(k, b);
  EXPECT_NEAR(r.u_min + r.u_max, 2 * k.c_u, 1e-9);
  EXPECT_NEAR(r.v_min + r.v_max, 2 * k.c_v, 1e-9);
  const Pixel c = project(k, b.center);
  EXPECT_LE(r.u_min, c.u);
  EXPECT_GE(r.u_max, c.u);
}

TEST(ProjectBox, DoublingDepthHalvesExtent) {
  const CameraIntrinsics k = simple_camera();
  Box3D near_box;
  near_box.center = {0, 0, 10};
  near_box.size = {0.0001, 1.0, 1.0};  // thin along z
  Box3D far_box = near_box;
  far_box.center.z = 20;
  const Box2D a = project_box_to_2d(k, near_box);
  const Box2D b = project_box_to_2d(k, far_box);
  EXPECT_NEAR(a.width() / b.width(), 2.0, 1e-3);
  EXPECT_NEAR(a.height() / b.height(), 2.0, 1e-3);
}

TEST(ProjectBox, EqualsCornerProjectionBounds) {
  std::mt19937_64 rng(11);
  const CameraIntrinsics k = simple_camera();
  for (int t = 0; t < 500; ++t) {
    const Box3D b = virtview::testing::random_box(rng);
    double u0 = 1e300, v0 = 1e300, u1 = -1e300, v1 = -1e300;
    for (const Point3& p : box3d_corners(b)) {
      const double u = k.c_u + k.f_x * p.x / p.z;
      const double v = k.c_v + k.f_y * p.y / p.z;
      u0 = std::min(u0, u);
      u1 = std::max(u1, u);
      v0 = std::min(v0, v);
      v1 = std::max(v1, v);
    }
    const Box2D r = project_box_to_2d(k, b);
    EXPECT_NEAR(r.u_min, u0, 1e-9);
    EXPECT_NEAR(r.u_max, u1, 1e-9);
    EXPECT_NEAR(r.v_min, v0, 1e-9);
    EXPECT_NEAR(r.v_max, v1, 1e-9);
  }
}

TEST(ProjectBox, ClampOnlyWhenRequested) {
  const CameraIntrinsics k = simple_camera();
  Box3D b;
  b.center = {-6, 0, 6};
  b.size = {2, 2, 4};
  const Box2D raw = project_box_to_2d(k, b);
  const Box2D clamped = project_box_to_2d(k, b, true);
  EXPECT_LT(raw.u_min, 0.0);
  EXPECT_DOUBLE_EQ(clamped.u_min, 0.0);
}

TEST(ProjectBox, CornerBehindCameraThrows) {
  Box3D b;
  b.center = {0, 0, 1};
  b.size = {4, 1, 1};  // spans z in [-1, 3]
  EXPECT_THROW(project_box_to_2d(simple_camera(), b), GeometryError);
}

TEST(Validation, RejectsBadIntrinsicsAndBoxes) {
  CameraIntrinsics k = simple_camera();
  k.f_x = 0;
  EXPECT_THROW(k.validate(), GeometryError);
  Box3D b;
  b.size = {1, 0, 1};
  EXPECT_THROW(b.validate(), GeometryError);
  b.size = {1, 1, 1};
  b.score = 1.5;
  EXPECT_THROW(b.validate(), GeometryError);
}

TEST(ClassNames, RoundTripAndUnknown) {
  for (ClassId c : {ClassId::kCar, ClassId::kPedestrian, ClassId::kCyclist}) {
    EXPECT_EQ(class_from_name(class_name(c)), c);
  }
  EXPECT_EQ(class_from_name("Tram"), ClassId::kOther);
}

}  // namespace
