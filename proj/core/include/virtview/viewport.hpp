#pragma once

#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "virtview/geometry.hpp"
#include "virtview/image.hpp"

namespace virtview {

using Rng = std::mt19937_64;

/// A rectangle parallel to the image plane at depth `z`.
///
/// `y_top` is the numerically smallest y (the scene-top edge under y-down);
/// the viewport spans [y_top, y_top + height] vertically and
/// [x_left, x_left + width] horizontally.
struct Viewport3D {
  double x_left = 0.0;
  double y_top = 0.0;
  double z = 0.0;
  double height = 0.0;
  double width = 0.0;
};

/// Virtual-view parameters. `viewport_height` = 2.28 m lets a 1.53 m car
/// fill roughly two thirds of the view height.
struct ViewConfig {
  int view_height_px = 100;
  int view_width_px = 331;
  double viewport_height = 2.28;
  double depth_resolution = 5.0;
  double z_min = 4.5;
  double z_max = 45.0;
  double depth_mean = 3.0;
  double depth_std = 1.0;
  int views_per_image = 8;
  double guided_probability = 0.7;
  double y_perturb_range = 0.3;
  int width_round_multiple = 32;
  double inference_y_offset = 0.0;

  void validate() const;
};

struct CropRect {
  double u0 = 0.0;
  double v0 = 0.0;
  double u1 = 0.0;
  double v1 = 0.0;
  double width() const { return u1 - u0; }
  double height() const { return v1 - v0; }
};

/// Crop-and-rescale transform induced by a viewport. Coordinates are
/// continuous: pixel i covers [i, i + 1).
struct VirtualViewSpec {
  Viewport3D viewport{};
  CropRect crop{};
  int out_width = 0;
  int out_height = 0;
  double scale_u = 1.0;  // virtual px per source px
  double scale_v = 1.0;

  /// Intrinsics of the virtual image viewed as a pinhole camera.
  CameraIntrinsics virtual_intrinsics(const CameraIntrinsics& k) const;
};

/// Detection decoded in the virtual frame, before lifting.
struct ViewDetection {
  ClassId class_id = ClassId::kCar;
  Pixel center{};         // projected 3D center, virtual px
  double depth = 0.0;     // relative to the viewport depth
  Size3 size{};
  double alpha = 0.0;     // allocentric
  Box2D box2d{};          // virtual px
  double score = 0.0;
};

double viewport_width(const ViewConfig& cfg, const CameraIntrinsics& k, int out_width_px);

VirtualViewSpec viewport_to_spec(const CameraIntrinsics& k, const Viewport3D& vp, int out_width,
                                 int out_height);

/// Bilinear crop-and-rescale; taps outside the source contribute zero.
Image resample(const Image& source, const VirtualViewSpec& spec);

Pixel virtual_to_source(const VirtualViewSpec& spec, Pixel virt);
Pixel source_to_virtual(const VirtualViewSpec& spec, Pixel src);
Box2D source_to_virtual(const VirtualViewSpec& spec, const Box2D& src);

/// Returns nullopt when the global depth is not positive.
std::optional<Box3D> lift_detection(const ViewDetection& det, const VirtualViewSpec& spec,
                                    const CameraIntrinsics& k);

struct ViewGroundTruth {
  Box3D box{};                 // camera frame
  double relative_depth = 0.0;  // center depth minus viewport depth
  bool ignore = false;
};

struct TrainingView {
  VirtualViewSpec spec{};
  std::vector<ViewGroundTruth> ground_truth;
  std::optional<std::size_t> target;  // index of the guiding object
};

/// True iff the nearest corner depth minus the viewport depth lies in
/// [0, depth_resolution].
bool in_depth_window(const Box3D& box, double viewport_z, double depth_resolution);

std::vector<TrainingView> sample_training_viewports(std::span<const Box3D> gt,
                                                    const CameraIntrinsics& k,
                                                    const ViewConfig& cfg, Rng& rng);

std::vector<VirtualViewSpec> inference_viewports(const CameraIntrinsics& k, const ViewConfig& cfg,
                                                 int image_width);

/// Sidecar record, one line per view:
/// index x_left y_top z height width u0 v0 u1 v1 out_width out_height
void write_view_records(std::ostream& os, std::span<const VirtualViewSpec> specs);
std::vector<VirtualViewSpec> read_view_records(std::istream& is);

}  // namespace virtview
