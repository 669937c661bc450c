#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "virtview/geometry.hpp"
#include "virtview/image.hpp"
#include "virtview/kitti_io.hpp"

namespace virtview {

enum class DepthDistribution { kUniform, kExponential };

struct SceneParams {
  int min_objects = 0;
  int max_objects = 10;
  std::array<double, kNumClasses> class_weights{0.6, 0.2, 0.2};
  DepthDistribution depth_distribution = DepthDistribution::kUniform;
  double z_lo = 5.0;   // center depth bounds, m
  double z_hi = 40.0;
  double exponential_scale = 15.0;  // m, for the truncated exponential
  /// Objects are placed at bearings within this fraction of the half field
  /// of view.
  double lateral_fraction = 0.8;
  double size_jitter = 0.05;      // std of the log-size multiplier
  double camera_height = 1.65;    // ground plane at y = camera_height
  /// Placements closer than this (nearest corner depth) are redrawn. The
  /// default matches the start of the inference depth sweep.
  double min_nearest_depth = 4.5;
  /// Placements whose projected box overlaps an earlier object's by more
  /// than this 2D IoU are redrawn; 1 disables the check.
  double max_pair_iou = 0.3;
  int max_attempts = 100;
  bool simulate_truncation = true;
  bool simulate_occlusion = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  CameraIntrinsics camera{};
  std::vector<Box3D> objects;
  /// Label of each object, quantized exactly as written to disk;
  /// kitti_to_box3d(labels[i]) reproduces objects[i].
  std::vector<KittiLabelRecord> labels;
  Image raster;  // empty unless rendered
};

/// Scene `index` of the stream defined by `params.seed`.
Scene generate_scene(const SceneParams& params, const CameraIntrinsics& k, std::uint64_t index = 0,
                     bool render = false);
std::vector<Scene> generate_scenes(const SceneParams& params, const CameraIntrinsics& k,
                                   std::size_t count, bool render = false, int jobs = 1);

/// Flat-shaded cuboids in painter's order over a sky/ground gradient.
Image render_scene(const CameraIntrinsics& k, std::span<const Box3D> objects,
                   std::uint64_t color_seed = 0);

/// A nominal KITTI-like camera (f = 721.5377, c = (609.5593, 172.854)).
CameraIntrinsics default_camera();

/// Writes image_2/<id>.png (if rendered), label_2/<id>.txt and calib/<id>.txt.
void export_scene(const std::filesystem::path& root, const std::string& id, const Scene& scene);

/// Half-open depth interval [lo, hi).
struct DepthInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Union of depth intervals, tested against an object's center depth.
struct DepthRange {
  std::vector<DepthInterval> parts;

  bool contains(double z) const;
  /// "0-10,20-40" style.
  static DepthRange parse(std::string_view text);
  std::string to_string() const;
};

struct RangeSplitDefinition {
  DepthRange train;
  DepthRange val;
};

/// "far/near", "near/far" or "near+far/middle".
RangeSplitDefinition named_range_split(std::string_view name);

/// Keeps DontCare regions and objects whose center depth lies in `range`.
std::vector<KittiLabelRecord> filter_labels(std::span<const KittiLabelRecord> labels,
                                            const DepthRange& range);
Scene filter_scene(const Scene& scene, const DepthRange& range);

struct RangeSplit {
  std::vector<Scene> train;
  std::vector<Scene> val;
};

/// Both sides derive from `scenes`; each keeps only its range's objects.
RangeSplit make_range_split(std::span<const Scene> scenes, const DepthRange& train_range,
                            const DepthRange& val_range);

}  // namespace virtview
