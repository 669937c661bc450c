#include "virtview/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace virtview {

void CameraIntrinsics::validate() const {
  if (!(f_x > 0.0) || !(f_y > 0.0)) {
    throw GeometryError("camera intrinsics: focal lengths must be positive");
  }
  if (image_width <= 0 || image_height <= 0) {
    throw GeometryError("camera intrinsics: image size must be positive");
  }
}

const char* class_name(ClassId id) {
  switch (id) {
    case ClassId::kCar: return "Car";
    case ClassId::kPedestrian: return "Pedestrian";
    case ClassId::kCyclist: return "Cyclist";
    case ClassId::kOther: break;
  }
  return "Other";
}

ClassId class_from_name(const std::string& name) {
  if (name == "Car") return ClassId::kCar;
  if (name == "Pedestrian") return ClassId::kPedestrian;
  if (name == "Cyclist") return ClassId::kCyclist;
  return ClassId::kOther;
}

void Box3D::validate() const {
  if (!(size.width > 0.0) || !(size.height > 0.0) || !(size.length > 0.0)) {
    throw GeometryError("box3d: extents must be positive");
  }
  if (score && (*score < 0.0 || *score > 1.0)) {
    throw GeometryError("box3d: score outside [0, 1]");
  }
}

Box2D Box2D::from_center(Pixel c, double w, double h) {
  Box2D b;
  b.u_min = c.u - 0.5 * w;
  b.u_max = c.u + 0.5 * w;
  b.v_min = c.v - 0.5 * h;
  b.v_max = c.v + 0.5 * h;
  return b;
}

double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (a > -kPi && a <= kPi) return a;
  double r = std::fmod(a + kPi, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - kPi;
}

Pixel project(const CameraIntrinsics& k, const Point3& p) {
  const Point3 q = p + k.baseline;
  if (!(q.z > 0.0)) throw GeometryError("project: point at or behind the camera plane");
  return {k.c_u + k.f_x * q.x / q.z, k.c_v + k.f_y * q.y / q.z};
}

Point3 backproject(const CameraIntrinsics& k, Pixel px, double z) {
  const double zc = z + k.baseline.z;
  if (!(zc > 0.0)) throw GeometryError("backproject: non-positive depth");
  return Point3{(px.u - k.c_u) * zc / k.f_x, (px.v - k.c_v) * zc / k.f_y, zc} - k.baseline;
}

std::array<Point3, 8> box3d_corners(const Box3D& b) {
  const double hl = 0.5 * b.size.length;
  const double hw = 0.5 * b.size.width;
  const double hh = 0.5 * b.size.height;
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  static constexpr std::array<std::array<double, 2>, 4> kFace{{{1, 1}, {1, -1}, {-1, -1}, {-1, 1}}};
  std::array<Point3, 8> out{};
  for (int i = 0; i < 8; ++i) {
    const double lx = kFace[i % 4][0] * hl;
    const double lz = kFace[i % 4][1] * hw;
    const double ly = i < 4 ? hh : -hh;
    out[i] = {b.center.x + c * lx + s * lz, b.center.y + ly, b.center.z - s * lx + c * lz};
  }
  return out;
}

double egocentric_to_allocentric(double yaw, const Point3& center) {
  return wrap_angle(yaw - std::atan2(center.x, center.z));
}

double allocentric_to_egocentric(double alpha, const Point3& center) {
  return wrap_angle(alpha + std::atan2(center.x, center.z));
}

Box2D project_box_to_2d(const CameraIntrinsics& k, const Box3D& b, bool clamp_to_image) {
  Box2D out;
  out.u_min = out.v_min = std::numeric_limits<double>::infinity();
  out.u_max = out.v_max = -std::numeric_limits<double>::infinity();
  for (const Point3& p : box3d_corners(b)) {
    if (!(p.z + k.baseline.z > 0.0)) throw GeometryError("project_box_to_2d: corner behind camera");
    const Pixel px = project(k, p);
    out.u_min = std::min(out.u_min, px.u);
    out.u_max = std::max(out.u_max, px.u);
    out.v_min = std::min(out.v_min, px.v);
    out.v_max = std::max(out.v_max, px.v);
  }
  if (clamp_to_image) {
    const double w = k.image_width;
    const double h = k.image_height;
    out.u_min = std::clamp(out.u_min, 0.0, w);
    out.u_max = std::clamp(out.u_max, 0.0, w);
    out.v_min = std::clamp(out.v_min, 0.0, h);
    out.v_max = std::clamp(out.v_max, 0.0, h);
  }
  out.class_id = b.class_id;
  out.score = b.score.value_or(0.0);
  return out;
}

double nearest_depth(const Box3D& b) {
  double z = std::numeric_limits<double>::infinity();
  for (const Point3& p : box3d_corners(b)) z = std::min(z, p.z);
  return z;
}

}  // namespace virtview
