#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "virtview/geometry.hpp"
#include "virtview/kitti_io.hpp"

namespace virtview {

/// A ground-truth or detected object as seen by the evaluator.
struct EvalObject {
  Box3D box{};
  Box2D box2d{};
  std::string type;  // raw KITTI type; drives neighbor-class and DontCare handling

  static EvalObject from_record(const KittiLabelRecord& rec);
};

enum class Metric : int { k3D = 0, kBEV = 1 };
const char* metric_name(Metric m);

std::vector<double> recall_samples_r40();
std::vector<double> recall_samples_r11();

struct EvalConfig {
  /// IoU thresholds indexed by class id; a match needs IoU strictly above.
  std::array<double, kNumClasses> threshold_3d{0.7, 0.5, 0.5};
  std::array<double, kNumClasses> threshold_bev{0.7, 0.5, 0.5};
  std::vector<ClassId> classes{ClassId::kCar, ClassId::kPedestrian, ClassId::kCyclist};
  std::vector<Metric> metrics{Metric::k3D, Metric::kBEV};
  /// Unmatched detections covering a DontCare region by more than this
  /// fraction of their own 2D area are not counted.
  double dont_care_overlap = 0.5;
  int jobs = 1;

  double threshold(Metric m, ClassId c) const;
  void validate() const;
};

enum class Outcome : int { kTruePositive, kFalsePositive, kIgnored };

struct ScoredOutcome {
  double score = 0.0;
  Outcome outcome = Outcome::kFalsePositive;
};

struct FrameMatch {
  std::vector<ScoredOutcome> detections;  // in visiting order (score desc, index asc)
  int n_gt = 0;                           // valid ground truth for this class/difficulty
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

using IouFn = std::function<double(const Box3D&, const Box3D&)>;

/// Greedy matching of one frame for one class and difficulty. Detections are
/// visited by (score desc, index asc); each takes the unmatched valid ground
/// truth with the highest IoU above `threshold`. Failing that, overlapping a
/// difficulty-excluded or neighbor-class ground truth, or a DontCare region,
/// makes the detection ignored; otherwise it is a false positive.
FrameMatch match(std::span<const EvalObject> dets, std::span<const EvalObject> gts,
                 const IouFn& iou, double threshold, ClassId cls, Difficulty difficulty,
                 double dont_care_overlap = 0.5);

/// Interpolated AP in percent: the mean over `recall_samples` of the best
/// precision achieved at recall >= r. `outcomes` must already be sorted by
/// descending score; ignored entries are skipped. nullopt when n_gt == 0.
std::optional<double> average_precision(std::span<const ScoredOutcome> outcomes, int n_gt,
                                        std::span<const double> recall_samples);

/// Interpolated precision at each recall sample (same definition as above).
std::vector<std::pair<double, double>> precision_at_recalls(std::span<const ScoredOutcome> outcomes,
                                                            int n_gt,
                                                            std::span<const double> recall_samples);

struct EvalCell {
  ClassId cls = ClassId::kCar;
  Difficulty difficulty = Difficulty::kEasy;
  Metric metric = Metric::k3D;
  std::optional<double> ap_r40;
  std::optional<double> ap_r11;
  int n_gt = 0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<std::pair<double, double>> pr_r40;
};

struct EvalReport {
  std::vector<EvalCell> cells;

  const EvalCell* find(ClassId cls, Difficulty d, Metric m) const;
  /// "class,difficulty,metric,AP,TP,FP,FN,AP_R11"; absent AP is written as "nan".
  std::string to_csv() const;
  /// One "Car/Moderate/3D AP=100.00" line per populated cell.
  std::string summary() const;
  /// "recall precision" lines for one cell.
  static std::string pr_curve_text(const EvalCell& cell);
};

using FrameObjects = std::map<std::string, std::vector<EvalObject>>;

/// Throws std::invalid_argument listing frame ids present on only one side.
EvalReport evaluate(const FrameObjects& dets, const FrameObjects& gts, const EvalConfig& cfg);

}  // namespace virtview
