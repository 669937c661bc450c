#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "virtview/geometry.hpp"
#include "virtview/viewport.hpp"

namespace virtview {

struct GridCell {
  int x = 0;
  int y = 0;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct Anchor {
  double width = 0.0;   // px
  double height = 0.0;  // px
  GridCell cell{};
  int stride = 16;      // feature-level down-sampling factor

  Pixel cell_center() const { return {(cell.x + 0.5) * stride, (cell.y + 0.5) * stride}; }
  Box2D box() const { return Box2D::from_center(cell_center(), width, height); }
};

inline constexpr std::array<double, 6> kAnchorRatios{1.0 / 3.0, 0.5, 0.75, 1.0, 2.0, 3.0};
inline constexpr int kAnchorScales = 3;
inline constexpr int kAnchorsPerCell = 18;
inline constexpr std::array<int, 2> kLevelStrides{16, 32};

/// Per-class 3D reference size and depth statistics.
struct ClassPrior {
  ClassId class_id = ClassId::kCar;
  Size3 reference{};
  double depth_mean = 3.0;
  double depth_std = 1.0;
};

/// Car, Pedestrian and Cyclist reference sizes with shared depth statistics.
std::array<ClassPrior, kNumClasses> default_class_priors(double depth_mean = 3.0,
                                                         double depth_std = 1.0);

struct Theta2D {
  double du = 0.0, dv = 0.0, dw = 0.0, dh = 0.0;
};

/// (Δu, Δv, δz, δW, δH, δD, r_x, r_z).
struct Theta3D {
  std::array<double, 8> v{0, 0, 0, 0, 0, 0, 0, 1};
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
};

/// Head output for one anchor at one cell.
struct RawDetection {
  std::array<double, kNumClasses> zeta_2d{};
  Theta2D theta_2d{};
  std::array<Theta3D, kNumClasses> theta_3d{};
  std::array<double, kNumClasses> zeta_3d{};
};

std::vector<Anchor> generate_anchors(int stride, int grid_width, int grid_height);
/// Anchors for all levels covering a view of the given size.
std::vector<Anchor> generate_view_anchors(int view_width, int view_height);

Box2D decode_2d(const Anchor& anchor, const Theta2D& theta);
Theta2D encode_2d(const Anchor& anchor, const Box2D& box);

ViewDetection decode_3d(const Theta3D& theta, const ClassPrior& prior, Pixel box2d_center);

/// Ground truth expressed in a virtual view.
struct ViewTarget {
  ClassId class_id = ClassId::kCar;
  Box2D box2d{};      // virtual px
  Pixel center{};     // projected 3D center, virtual px
  double depth = 0.0; // relative to viewport depth
  Size3 size{};
  double alpha = 0.0;
};

/// Builds the target of `box` in `spec`. Throws GeometryError if the box is
/// not entirely in front of the camera.
ViewTarget make_view_target(const Box3D& box, const VirtualViewSpec& spec,
                            const CameraIntrinsics& k);

/// Exact inverse of decode_2d/decode_3d for the target's class. Logits are
/// left at zero.
RawDetection encode(const ViewTarget& target, const Anchor& anchor, const ClassPrior& prior);
Theta3D encode_3d(const ViewTarget& target, Pixel box2d_center, const ClassPrior& prior);

struct Confidences {
  double p_2d = 0.0;
  double p_3d_given_2d = 0.0;
  double p_3d = 0.0;
};

double sigmoid(double x);
Confidences confidences(const RawDetection& raw, ClassId c);

enum class AnchorState : std::uint8_t { kNegative, kPositive, kIgnore };

struct AnchorAssignment {
  AnchorState state = AnchorState::kNegative;
  int gt_index = -1;  // set for positives (and for ignores caused by a box)
  double iou = 0.0;
};

struct AssignmentThresholds {
  double positive = 0.5;  // strictly greater
  double negative = 0.4;  // strictly less
};

std::vector<AnchorAssignment> assign_ground_truth(std::span<const Anchor> anchors,
                                                  std::span<const Box2D> gt_2d,
                                                  std::span<const bool> ignore_flags,
                                                  AssignmentThresholds thr = {});

/// Flat binary layout for exchanging head outputs with external tooling.
///
/// Header: 4 bytes magic "VVRD", then uint32 version (1), uint32 class
/// count (3), uint32 record count; all integers little-endian. Each record
/// is kRawRecordFloats (40) little-endian float32 values:
///   view_index, stride, cell_x, cell_y, anchor_w, anchor_h,   (6)
///   zeta_2d[3], du, dv, dw, dh,                               (7)
///   per class: du3, dv3, dz, dW, dH, dD, r_x, r_z, zeta_3d    (3 x 9)
struct RawRecord {
  int view_index = 0;
  Anchor anchor{};
  RawDetection raw{};
};

inline constexpr std::size_t kRawRecordFloats = 6 + kNumClasses + 4 + kNumClasses * 9;

void write_raw_records(std::ostream& os, std::span<const RawRecord> records);
std::vector<RawRecord> read_raw_records(std::istream& is);

}  // namespace virtview
