#include "virtview/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "virtview/overlap.hpp"
#include "virtview/parallel.hpp"

namespace virtview {

EvalObject EvalObject::from_record(const KittiLabelRecord& rec) {
  EvalObject o;
  o.type = rec.type;
  o.box2d = {rec.bbox[0], rec.bbox[1], rec.bbox[2], rec.bbox[3]};
  if (rec.dont_care()) {
    o.box.class_id = ClassId::kOther;
    return o;
  }
  o.box = kitti_to_box3d(rec);
  o.box2d.class_id = o.box.class_id;
  o.box2d.score = rec.score.value_or(0.0);
  return o;
}

const char* metric_name(Metric m) { return m == Metric::k3D ? "3D" : "BEV"; }

std::vector<double> recall_samples_r40() {
  std::vector<double> r(40);
  for (int i = 0; i < 40; ++i) r[i] = (i + 1) / 40.0;
  return r;
}

std::vector<double> recall_samples_r11() {
  std::vector<double> r(11);
  for (int i = 0; i < 11; ++i) r[i] = i / 10.0;
  return r;
}

double EvalConfig::threshold(Metric m, ClassId c) const {
  const auto i = static_cast<std::size_t>(c);
  return m == Metric::k3D ? threshold_3d.at(i) : threshold_bev.at(i);
}

void EvalConfig::validate() const {
  for (const auto* arr : {&threshold_3d, &threshold_bev}) {
    for (double t : *arr) {
      if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("IoU thresholds must lie in (0, 1]");
    }
  }
  for (ClassId c : classes) {
    if (static_cast<int>(c) < 0 || static_cast<int>(c) >= kNumClasses) {
      throw std::invalid_argument("evaluation class must be Car, Pedestrian or Cyclist");
    }
  }
}

namespace {

enum class GtRole { kValid, kIgnored, kUnrelated };

GtRole gt_role(const EvalObject& gt, ClassId cls, Difficulty d) {
  const std::string& name = class_name(cls);
  const bool same = gt.type == name;
  const bool neighbor = (cls == ClassId::kCar && gt.type == "Van") ||
                        (cls == ClassId::kPedestrian && gt.type == "Person_sitting");
  if (same) {
    return meets_difficulty(gt.box2d.height(), gt.box.occlusion, gt.box.truncation, d)
               ? GtRole::kValid
               : GtRole::kIgnored;
  }
  return neighbor ? GtRole::kIgnored : GtRole::kUnrelated;
}

}  // namespace

FrameMatch match(std::span<const EvalObject> dets, std::span<const EvalObject> gts,
                 const IouFn& iou, double threshold, ClassId cls, Difficulty difficulty,
                 double dont_care_overlap) {
  FrameMatch out;
  std::vector<GtRole> roles(gts.size());
  std::vector<const EvalObject*> dont_care;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    roles[g] = gt_role(gts[g], cls, difficulty);
    if (roles[g] == GtRole::kValid) ++out.n_gt;
    if (gts[g].type == "DontCare") dont_care.push_back(&gts[g]);
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].box.class_id == cls) order.push_back(i);
  }
  auto score_of = [&](std::size_t i) { return dets[i].box.score.value_or(0.0); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score_of(a) > score_of(b); });

  std::vector<bool> taken(gts.size(), false);
  for (std::size_t i : order) {
    const EvalObject& det = dets[i];
    int best_valid = -1;
    int best_ignored = -1;
    double best_valid_iou = threshold;
    double best_ignored_iou = threshold;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || roles[g] == GtRole::kUnrelated) continue;
      const double o = iou(det.box, gts[g].box);
      if (roles[g] == GtRole::kValid && o > best_valid_iou) {
        best_valid_iou = o;
        best_valid = static_cast<int>(g);
      } else if (roles[g] == GtRole::kIgnored && o > best_ignored_iou) {
        best_ignored_iou = o;
        best_ignored = static_cast<int>(g);
      }
    }
    Outcome outcome = Outcome::kFalsePositive;
    if (best_valid >= 0) {
      taken[best_valid] = true;
      outcome = Outcome::kTruePositive;
      ++out.tp;
    } else if (best_ignored >= 0) {
      taken[best_ignored] = true;
      outcome = Outcome::kIgnored;
    } else {
      const double area = det.box2d.area();
      const bool in_dont_care =
          area > 0.0 && std::any_of(dont_care.begin(), dont_care.end(), [&](const EvalObject* dc) {
            return intersection_area_2d(det.box2d, dc->box2d) / area > dont_care_overlap;
          });
      if (in_dont_care) {
        outcome = Outcome::kIgnored;
      } else {
        ++out.fp;
      }
    }
    out.detections.push_back({score_of(i), outcome});
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (roles[g] == GtRole::kValid && !taken[g]) ++out.fn;
  }
  return out;
}

std::vector<std::pair<double, double>> precision_at_recalls(std::span<const ScoredOutcome> outcomes,
                                                            int n_gt,
                                                            std::span<const double> recall_samples) {
  std::vector<double> precision;
  std::vector<double> recall;
  int tp = 0;
  int seen = 0;
  for (const ScoredOutcome& o : outcomes) {
    if (o.outcome == Outcome::kIgnored) continue;
    ++seen;
    if (o.outcome == Outcome::kTruePositive) ++tp;
    precision.push_back(static_cast<double>(tp) / seen);
    recall.push_back(n_gt > 0 ? static_cast<double>(tp) / n_gt : 0.0);
  }
  // Suffix maximum of precision gives the interpolated envelope.
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(recall_samples.size());
  for (double r : recall_samples) {
    // Recall is non-decreasing, so the first point reaching r carries the max.
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    const double p = it == recall.end() ? 0.0 : precision[static_cast<std::size_t>(it - recall.begin())];
    out.emplace_back(r, p);
  }
  return out;
}

std::optional<double> average_precision(std::span<const ScoredOutcome> outcomes, int n_gt,
                                        std::span<const double> recall_samples) {
  if (n_gt <= 0 || recall_samples.empty()) return std::nullopt;
  const auto pr = precision_at_recalls(outcomes, n_gt, recall_samples);
  double sum = 0.0;
  for (const auto& [r, p] : pr) sum += p;
  return 100.0 * sum / static_cast<double>(recall_samples.size());
}

const EvalCell* EvalReport::find(ClassId cls, Difficulty d, Metric m) const {
  for (const EvalCell& c : cells) {
    if (c.cls == cls && c.difficulty == d && c.metric == m) return &c;
  }
  return nullptr;
}

namespace {

std::string fmt_ap(const std::optional<double>& ap) {
  if (!ap) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *ap);
  return buf;
}

}  // namespace

std::string EvalReport::to_csv() const {
  std::string out = "class,difficulty,metric,AP,TP,FP,FN,AP_R11\n";
  for (const EvalCell& c : cells) {
    out += std::string(class_name(c.cls)) + ',' + difficulty_name(c.difficulty) + ',' +
           metric_name(c.metric) + ',' + fmt_ap(c.ap_r40) + ',' + std::to_string(c.tp) + ',' +
           std::to_string(c.fp) + ',' + std::to_string(c.fn) + ',' + fmt_ap(c.ap_r11) + '\n';
  }
  return out;
}

std::string EvalReport::summary() const {
  std::string out;
  for (const EvalCell& c : cells) {
    if (!c.ap_r40) continue;
    out += std::string(class_name(c.cls)) + '/' + difficulty_name(c.difficulty) + '/' +
           metric_name(c.metric) + " AP=" + fmt_ap(c.ap_r40) + '\n';
  }
  return out;
}

std::string EvalReport::pr_curve_text(const EvalCell& cell) {
  std::string out;
  char buf[64];
  for (const auto& [r, p] : cell.pr_r40) {
    std::snprintf(buf, sizeof buf, "%.6f %.6f\n", r, p);
    out += buf;
  }
  return out;
}

EvalReport evaluate(const FrameObjects& dets, const FrameObjects& gts, const EvalConfig& cfg) {
  cfg.validate();
  std::string mismatch;
  for (const auto& [id, _] : dets) {
    if (!gts.count(id)) mismatch += " " + id + "(no ground truth)";
  }
  for (const auto& [id, _] : gts) {
    if (!dets.count(id)) mismatch += " " + id + "(no detections)";
  }
  if (!mismatch.empty()) throw std::invalid_argument("frame mismatch:" + mismatch);

  std::vector<const std::string*> frames;
  for (const auto& [id, _] : gts) frames.push_back(&id);

  struct CellKey {
    ClassId cls;
    Difficulty difficulty;
    Metric metric;
  };
  std::vector<CellKey> keys;
  for (ClassId cls : cfg.classes) {
    for (Metric m : cfg.metrics) {
      for (Difficulty d : kDifficulties) keys.push_back({cls, d, m});
    }
  }

  // matches[cell][frame], filled in parallel over frames.
  std::vector<std::vector<FrameMatch>> matches(keys.size(), std::vector<FrameMatch>(frames.size()));
  const IouFn iou3d = [](const Box3D& a, const Box3D& b) { return iou_3d(a, b); };
  const IouFn iou_bev = [](const Box3D& a, const Box3D& b) { return bev_iou(a, b); };
  parallel_for(frames.size(), cfg.jobs, [&](std::size_t f) {
    const auto& d = dets.at(*frames[f]);
    const auto& g = gts.at(*frames[f]);
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const CellKey& key = keys[k];
      matches[k][f] = match(d, g, key.metric == Metric::k3D ? iou3d : iou_bev,
                            cfg.threshold(key.metric, key.cls), key.cls, key.difficulty,
                            cfg.dont_care_overlap);
    }
  });

  const auto r40 = recall_samples_r40();
  const auto r11 = recall_samples_r11();
  EvalReport report;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    EvalCell cell;
    cell.cls = keys[k].cls;
    cell.difficulty = keys[k].difficulty;
    cell.metric = keys[k].metric;
    std::vector<ScoredOutcome> all;
    for (const FrameMatch& fm : matches[k]) {
      cell.n_gt += fm.n_gt;
      cell.tp += fm.tp;
      cell.fp += fm.fp;
      cell.fn += fm.fn;
      all.insert(all.end(), fm.detections.begin(), fm.detections.end());
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const ScoredOutcome& a, const ScoredOutcome& b) { return a.score > b.score; });
    cell.ap_r40 = average_precision(all, cell.n_gt, r40);
    cell.ap_r11 = average_precision(all, cell.n_gt, r11);
    if (cell.n_gt > 0) cell.pr_r40 = precision_at_recalls(all, cell.n_gt, r40);
    report.cells.push_back(std::move(cell));
  }
  return report;
}

}  // namespace virtview
