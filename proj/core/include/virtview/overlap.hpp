#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "virtview/geometry.hpp"

namespace virtview {

double iou_2d(const Box2D& a, const Box2D& b);
double intersection_area_2d(const Box2D& a, const Box2D& b);

/// Bird's-eye footprint of a Box3D on the (x, z) ground plane.
struct RotatedRect {
  double x = 0.0;
  double z = 0.0;
  double width = 0.0;   // local z extent
  double length = 0.0;  // local x extent
  double yaw = 0.0;

  static RotatedRect footprint(const Box3D& b);
  /// Corners in the same order as the bottom face of box3d_corners.
  std::array<std::array<double, 2>, 4> corners() const;
  double area() const { return width * length; }
};

/// Points closer than this to a clipping edge count as inside it.
inline constexpr double kClipTolerance = 1e-9;

/// Area of a convex quad intersection, via Sutherland-Hodgman clipping.
double bev_intersection_area(const RotatedRect& a, const RotatedRect& b);

/// Rotated IoU. Returns 0 and sets `*degenerate` when either rect has
/// (near-)zero area.
double bev_iou(const RotatedRect& a, const RotatedRect& b, bool* degenerate = nullptr);
double bev_iou(const Box3D& a, const Box3D& b);

double iou_3d(const Box3D& a, const Box3D& b);

using OverlapFn = std::function<double(std::size_t, std::size_t)>;

/// Greedy NMS. Candidates are visited by (score desc, index asc); a candidate
/// is dropped when its overlap with an already kept one exceeds `threshold`.
/// Returns kept indices in visiting order.
std::vector<std::size_t> nms(std::span<const double> scores, const OverlapFn& overlap,
                             double threshold);

}  // namespace virtview
