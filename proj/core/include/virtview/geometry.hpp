#pragma once

#include <array>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace virtview {

// Camera frame follows the KITTI rectified convention: x right, y down,
// z forward. All distances are meters, image coordinates are pixels.

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Point3 operator+(Point3 a, Point3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Point3 operator-(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Point3 operator*(double s, Point3 p) { return {s * p.x, s * p.y, s * p.z}; }
  friend bool operator==(const Point3&, const Point3&) = default;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Pinhole intrinsics. `baseline` is the camera-center offset recovered from
/// the translation column of a KITTI projection matrix (P = K [I | baseline]);
/// it is zero for an ideal camera at the frame origin.
struct CameraIntrinsics {
  double f_x = 0.0;
  double f_y = 0.0;
  double c_u = 0.0;
  double c_v = 0.0;
  int image_width = 0;
  int image_height = 0;
  Point3 baseline{};

  /// Throws GeometryError when focal lengths or image size are non-positive.
  void validate() const;
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// Physical extents of a cuboid. `length` runs along the object's heading
/// (local x at yaw 0), `width` along local z, `height` along y.
struct Size3 {
  double width = 0.0;
  double height = 0.0;
  double length = 0.0;
  friend bool operator==(const Size3&, const Size3&) = default;
};

enum class ClassId : int { kCar = 0, kPedestrian = 1, kCyclist = 2, kOther = 3 };

inline constexpr int kNumClasses = 3;

const char* class_name(ClassId id);
/// Maps a KITTI type string onto a class id; unknown strings map to kOther.
ClassId class_from_name(const std::string& name);

struct Box3D {
  Point3 center{};  // geometric cuboid center
  Size3 size{};
  double yaw = 0.0;  // egocentric rotation about +y, in (-pi, pi]
  ClassId class_id = ClassId::kCar;
  std::optional<double> score;  // absent for ground truth
  double truncation = 0.0;
  int occlusion = 0;

  void validate() const;
};

struct Box2D {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;
  ClassId class_id = ClassId::kCar;
  double score = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const { return width() * height(); }
  Pixel center() const { return {0.5 * (u_min + u_max), 0.5 * (v_min + v_max)}; }
  static Box2D from_center(Pixel c, double w, double h);
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

Pixel project(const CameraIntrinsics& k, const Point3& p);
Point3 backproject(const CameraIntrinsics& k, Pixel px, double z);

/// Corner order: the four bottom corners (largest y) first, then the four top
/// corners in the same order. Within a face the order is counter-clockwise as
/// seen from +y, starting at the (+length/2, +width/2) local corner.
std::array<Point3, 8> box3d_corners(const Box3D& b);

double egocentric_to_allocentric(double yaw, const Point3& center);
double allocentric_to_egocentric(double alpha, const Point3& center);

/// Tight image-plane bounds of the projected cuboid. Throws GeometryError if
/// any corner lies at or behind the camera plane.
Box2D project_box_to_2d(const CameraIntrinsics& k, const Box3D& b, bool clamp_to_image = false);

/// Smallest corner depth of the box.
double nearest_depth(const Box3D& b);

}  // namespace virtview
