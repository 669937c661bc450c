#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "virtview/codec.hpp"
#include "virtview/geometry.hpp"
#include "virtview/image.hpp"
#include "virtview/losses.hpp"
#include "virtview/viewport.hpp"

namespace virtview {

/// What a detector sees for one virtual view. `raster` is null in
/// geometry-only mode.
struct DetectorInput {
  const VirtualViewSpec& spec;
  const CameraIntrinsics& camera;  // source camera
  const Image* raster = nullptr;
  int view_index = 0;
};

/// Stand-in for the network head. Implementations must be safe to call
/// concurrently for different views.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<RawRecord> detect(const DetectorInput& input) const = 0;
};

struct OracleDetectorConfig {
  double noise_2d = 0.0;        // std of the 2D box offsets (anchor units)
  double noise_center = 0.0;    // std of the projected-center offset, virtual px
  double noise_depth = 0.0;     // std of the depth error, m
  double noise_size = 0.0;      // std of the log-size offsets
  double noise_rotation = 0.0;  // std of the allocentric angle error, rad
  double drop_probability = 0.0;
  double clutter_rate = 0.0;    // Poisson mean of false positives per view
  double temperature = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Emits the encoded ground truth of every object whose nearest depth falls
/// in the view's depth window. The 3D confidence logit is set so that
/// sigmoid(zeta_3d) = exp(-lifting loss / T), i.e. it drops with the size of
/// the injected perturbation. Randomness is keyed on (seed, view index), so
/// output does not depend on call order.
class OracleDetector : public Detector {
 public:
  OracleDetector(std::vector<Box3D> ground_truth, const ViewConfig& views,
                 std::array<ClassPrior, kNumClasses> priors, OracleDetectorConfig cfg = {});

  std::vector<RawRecord> detect(const DetectorInput& input) const override;

 private:
  std::vector<Box3D> gt_;
  ViewConfig views_;
  std::array<ClassPrior, kNumClasses> priors_;
  OracleDetectorConfig cfg_;
};

/// Replays pre-computed head outputs, selecting records by view index.
class RecordDetector : public Detector {
 public:
  explicit RecordDetector(std::vector<RawRecord> records) : records_(std::move(records)) {}
  std::vector<RawRecord> detect(const DetectorInput& input) const override;

 private:
  std::vector<RawRecord> records_;
};

struct InferenceConfig {
  ViewConfig views{};
  std::array<ClassPrior, kNumClasses> priors = default_class_priors();
  double score_threshold = 0.05;  // on p_3d
  double view_nms_iou = 0.5;      // 2D IoU, per view and class
  bool global_nms = false;
  double global_nms_iou = 0.5;    // BEV IoU, per class, across views
  int jobs = 1;

  void validate() const;
};

struct InferenceDiagnostics {
  int views = 0;
  int failed_views = 0;
  int raw_records = 0;
  int above_threshold = 0;
  int after_view_nms = 0;
  int nonpositive_depth = 0;
  int global_suppressed = 0;
  /// Same-class output pairs from different views with BEV IoU above the
  /// global NMS threshold.
  int duplicate_pairs = 0;
  int reference_objects = 0;
  /// Reference objects whose nearest depth lies in no view's window.
  std::vector<std::size_t> uncovered;
  std::vector<std::string> errors;

  /// "key=value" lines.
  std::string to_text() const;
};

struct InferenceResult {
  std::vector<Box3D> boxes;  // ordered by (view index, detection index)
  InferenceDiagnostics diagnostics;
};

/// Inference over all distance-specific views. Pass `image` = nullptr for
/// geometry-only mode. `reference` (optional ground truth) only feeds the
/// coverage diagnostic.
InferenceResult run_inference(const CameraIntrinsics& k, const Image* image,
                              const Detector& detector, const InferenceConfig& cfg,
                              std::span<const Box3D> reference = {});

/// One sampled training view with everything a loss needs.
struct TrainingSample {
  VirtualViewSpec spec{};
  CameraIntrinsics view_camera{};
  Image image;  // empty unless a source raster was supplied
  std::optional<std::size_t> target;
  std::vector<std::size_t> gt_index;  // source index of each view target
  std::vector<ViewTarget> view_targets;
  std::vector<bool> ignore;
  std::vector<ClassId> gt_classes;
  std::vector<Anchor> anchors;
  std::vector<AnchorAssignment> assignment;
  std::vector<RawDetection> targets;  // per anchor; meaningful for positives

  /// Loss input using `predictions` (one per anchor).
  ViewLossInput loss_input(std::span<const RawDetection> predictions) const;
};

/// Objects behind the camera are left out of a view; objects outside the
/// depth window or of an unsupported class become ignore regions.
std::vector<TrainingSample> build_training_batch(std::span<const Box3D> gt,
                                                 const CameraIntrinsics& k, const Image* image,
                                                 const ViewConfig& cfg,
                                                 const std::array<ClassPrior, kNumClasses>& priors,
                                                 Rng& rng, AssignmentThresholds thr = {});

}  // namespace virtview
