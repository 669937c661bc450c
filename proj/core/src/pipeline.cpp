#include "virtview/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>

#include "virtview/losses.hpp"
#include "virtview/overlap.hpp"
#include "virtview/parallel.hpp"

namespace virtview {

void OracleDetectorConfig::validate() const {
  for (double s : {noise_2d, noise_center, noise_depth, noise_size, noise_rotation}) {
    if (!(s >= 0.0)) throw std::invalid_argument("oracle noise std must be non-negative");
  }
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
    throw std::invalid_argument("oracle drop probability must lie in [0, 1]");
  }
  if (!(clutter_rate >= 0.0 && clutter_rate <= 1.0)) {
    throw std::invalid_argument("oracle clutter rate must lie in [0, 1]");
  }
  if (!(temperature > 0.0)) throw std::invalid_argument("oracle temperature must be positive");
}

OracleDetector::OracleDetector(std::vector<Box3D> ground_truth, const ViewConfig& views,
                               std::array<ClassPrior, kNumClasses> priors,
                               OracleDetectorConfig cfg)
    : gt_(std::move(ground_truth)), views_(views), priors_(priors), cfg_(cfg) {
  views_.validate();
  cfg_.validate();
}

namespace {

constexpr double kMaxConfidence = 1.0 - 1e-6;
constexpr double kOnLogit = 6.0;
constexpr double kOffLogit = -12.0;

double logit(double p) { return std::log(p / (1.0 - p)); }

Rng view_rng(std::uint64_t seed, int view_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(view_index), 0x5eedu};
  return Rng(seq);
}

// Best-IoU anchor among those whose cell contains the box center (clamped to
// the grid) on every level.
Anchor pick_anchor(const Box2D& box, int view_w, int view_h) {
  const Pixel c = box.center();
  Anchor best{};
  double best_iou = -1.0;
  for (int stride : kLevelStrides) {
    const int gw = (view_w + stride - 1) / stride;
    const int gh = (view_h + stride - 1) / stride;
    const int gx = std::clamp(static_cast<int>(std::floor(c.u / stride)), 0, gw - 1);
    const int gy = std::clamp(static_cast<int>(std::floor(c.v / stride)), 0, gh - 1);
    for (const Anchor& a : generate_anchors(stride, 1, 1)) {
      Anchor cand = a;
      cand.cell = {gx, gy};
      const double o = iou_2d(cand.box(), box);
      if (o > best_iou) {
        best_iou = o;
        best = cand;
      }
    }
  }
  return best;
}

bool overlaps_view(const Box2D& b, const VirtualViewSpec& spec) {
  return b.u_max > 0.0 && b.v_max > 0.0 && b.u_min < spec.out_width && b.v_min < spec.out_height;
}

}  // namespace

std::vector<RawRecord> OracleDetector::detect(const DetectorInput& in) const {
  const VirtualViewSpec& spec = in.spec;
  const CameraIntrinsics view_cam = spec.virtual_intrinsics(in.camera);
  Rng rng = view_rng(cfg_.seed, in.view_index);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<RawRecord> out;
  for (const Box3D& box : gt_) {
    const auto ci = static_cast<std::size_t>(box.class_id);
    if (ci >= kNumClasses || nearest_depth(box) <= 0.0) continue;
    if (!in_depth_window(box, spec.viewport.z, views_.depth_resolution)) continue;
    const ViewTarget target = make_view_target(box, spec, in.camera);
    if (!overlaps_view(target.box2d, spec)) continue;
    // Draw every random number unconditionally so that changing one rate does
    // not reshuffle the noise of later objects.
    const double drop = unit(rng);
    std::array<double, 9> z{};
    for (double& v : z) v = gauss(rng);
    if (drop < cfg_.drop_probability) continue;

    const ClassPrior& prior = priors_[ci];
    const Anchor anchor = pick_anchor(target.box2d, spec.out_width, spec.out_height);
    RawDetection raw;
    raw.theta_2d = encode_2d(anchor, target.box2d);
    raw.theta_2d.du += cfg_.noise_2d * z[0];
    raw.theta_2d.dv += cfg_.noise_2d * z[1];
    raw.theta_2d.dw += cfg_.noise_2d * z[2];
    raw.theta_2d.dh += cfg_.noise_2d * z[3];
    const Pixel c2d = decode_2d(anchor, raw.theta_2d).center();

    const Theta3D exact = encode_3d(target, c2d, prior);
    Theta3D noisy = exact;
    noisy[0] += cfg_.noise_center * z[4];
    noisy[1] += cfg_.noise_center * z[5];
    noisy[2] += cfg_.noise_depth * z[6] / prior.depth_std;
    for (int i = 3; i < 6; ++i) noisy[i] += cfg_.noise_size * z[7];
    const double alpha = target.alpha + cfg_.noise_rotation * z[8];
    noisy[6] = std::sin(alpha);
    noisy[7] = std::cos(alpha);

    LiftingContext ctx;
    ctx.view_camera = view_cam;
    ctx.viewport_z = spec.viewport.z;
    ctx.prior = prior;
    ctx.box2d_center = c2d;
    const double loss = lifting_disentangled_loss(noisy, exact, ctx).total;
    const double conf = std::clamp(std::exp(-loss / cfg_.temperature), 1e-6, kMaxConfidence);

    for (std::size_t c = 0; c < kNumClasses; ++c) {
      raw.zeta_2d[c] = c == ci ? kOnLogit : kOffLogit;
      raw.zeta_3d[c] = c == ci ? logit(conf) : kOffLogit;
    }
    raw.theta_3d[ci] = noisy;
    out.push_back({in.view_index, anchor, raw});
  }

  const int clutter = std::poisson_distribution<int>(cfg_.clutter_rate)(rng);
  for (int n = 0; n < clutter; ++n) {
    const auto ci = std::uniform_int_distribution<std::size_t>(0, kNumClasses - 1)(rng);
    const int stride = kLevelStrides[std::uniform_int_distribution<std::size_t>(0, 1)(rng)];
    const int gw = (spec.out_width + stride - 1) / stride;
    const int gh = (spec.out_height + stride - 1) / stride;
    const auto cell_anchors = generate_anchors(stride, 1, 1);
    Anchor anchor = cell_anchors[std::uniform_int_distribution<std::size_t>(
        0, cell_anchors.size() - 1)(rng)];
    anchor.cell = {std::uniform_int_distribution<int>(0, gw - 1)(rng),
                   std::uniform_int_distribution<int>(0, gh - 1)(rng)};
    RawDetection raw;
    const double alpha = unit(rng) * 2.0 * std::numbers::pi;
    Theta3D& t = raw.theta_3d[ci];
    t[2] = (unit(rng) * views_.depth_resolution - priors_[ci].depth_mean) / priors_[ci].depth_std;
    t[6] = std::sin(alpha);
    t[7] = std::cos(alpha);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      raw.zeta_2d[c] = c == ci ? 0.0 : kOffLogit;
      raw.zeta_3d[c] = c == ci ? gauss(rng) : kOffLogit;
    }
    out.push_back({in.view_index, anchor, raw});
  }
  return out;
}

std::vector<RawRecord> RecordDetector::detect(const DetectorInput& in) const {
  std::vector<RawRecord> out;
  for (const RawRecord& r : records_) {
    if (r.view_index == in.view_index) out.push_back(r);
  }
  return out;
}

void InferenceConfig::validate() const {
  views.validate();
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    throw std::invalid_argument("score threshold must lie in [0, 1]");
  }
  for (double t : {view_nms_iou, global_nms_iou}) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("NMS IoU threshold must lie in (0, 1]");
  }
  for (const ClassPrior& p : priors) {
    if (!(p.reference.width > 0.0 && p.reference.height > 0.0 && p.reference.length > 0.0 &&
          p.depth_std > 0.0)) {
      throw std::invalid_argument("class prior sizes and depth std must be positive");
    }
  }
}

std::string InferenceDiagnostics::to_text() const {
  std::string out;
  auto kv = [&](const char* key, long long v) {
    out += key;
    out += '=';
    out += std::to_string(v);
    out += '\n';
  };
  kv("views", views);
  kv("failed_views", failed_views);
  kv("raw_records", raw_records);
  kv("above_threshold", above_threshold);
  kv("after_view_nms", after_view_nms);
  kv("nonpositive_depth", nonpositive_depth);
  kv("global_suppressed", global_suppressed);
  kv("duplicate_pairs", duplicate_pairs);
  kv("reference_objects", reference_objects);
  kv("uncovered", static_cast<long long>(uncovered.size()));
  out += "uncovered_indices=";
  for (std::size_t i = 0; i < uncovered.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(uncovered[i]);
  }
  out += '\n';
  for (const std::string& e : errors) out += "error=" + e + '\n';
  return out;
}

namespace {

struct ViewOutput {
  std::vector<Box3D> boxes;
  int raw = 0;
  int above = 0;
  int kept = 0;
  int nonpositive = 0;
  std::optional<std::string> error;
};

ViewOutput process_view(const CameraIntrinsics& k, const Image* image, const Detector& detector,
                        const InferenceConfig& cfg, const VirtualViewSpec& spec, int index) {
  ViewOutput out;
  Image raster;
  if (image) raster = resample(*image, spec);
  const DetectorInput input{spec, k, image ? &raster : nullptr, index};
  const std::vector<RawRecord> records = detector.detect(input);
  out.raw = static_cast<int>(records.size());

  for (const RawRecord& r : records) {
    const Anchor& a = r.anchor;
    const bool known_stride =
        std::find(kLevelStrides.begin(), kLevelStrides.end(), a.stride) != kLevelStrides.end();
    if (!known_stride || a.cell.x < 0 || a.cell.y < 0 ||
        a.cell.x * a.stride >= spec.out_width || a.cell.y * a.stride >= spec.out_height) {
      throw std::out_of_range("detector referenced an anchor outside the view grid");
    }
  }

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto cls = static_cast<ClassId>(c);
    std::vector<ViewDetection> dets;
    for (const RawRecord& r : records) {
      const Confidences conf = confidences(r.raw, cls);
      if (!(conf.p_3d >= cfg.score_threshold)) continue;
      const Box2D box2d = decode_2d(r.anchor, r.raw.theta_2d);
      ViewDetection d = decode_3d(r.raw.theta_3d[c], cfg.priors[c], box2d.center());
      d.box2d = box2d;
      d.box2d.class_id = cls;
      d.box2d.score = conf.p_3d;
      d.score = conf.p_3d;
      dets.push_back(d);
    }
    out.above += static_cast<int>(dets.size());
    std::vector<double> scores;
    scores.reserve(dets.size());
    for (const ViewDetection& d : dets) scores.push_back(d.score);
    const auto keep = nms(
        scores, [&](std::size_t i, std::size_t j) { return iou_2d(dets[i].box2d, dets[j].box2d); },
        cfg.view_nms_iou);
    out.kept += static_cast<int>(keep.size());
    for (std::size_t i : keep) {
      if (auto box = lift_detection(dets[i], spec, k)) {
        out.boxes.push_back(*box);
      } else {
        ++out.nonpositive;
      }
    }
  }
  return out;
}

}  // namespace

InferenceResult run_inference(const CameraIntrinsics& k, const Image* image,
                              const Detector& detector, const InferenceConfig& cfg,
                              std::span<const Box3D> reference) {
  cfg.validate();
  k.validate();
  const int image_width = image ? image->width() : k.image_width;
  const std::vector<VirtualViewSpec> specs = inference_viewports(k, cfg.views, image_width);

  std::vector<ViewOutput> per_view(specs.size());
  parallel_for(specs.size(), cfg.jobs, [&](std::size_t v) {
    try {
      per_view[v] = process_view(k, image, detector, cfg, specs[v], static_cast<int>(v));
    } catch (const std::exception& e) {
      per_view[v] = {};
      per_view[v].error = "view " + std::to_string(v) + ": " + e.what();
    }
  });

  InferenceResult result;
  InferenceDiagnostics& diag = result.diagnostics;
  diag.views = static_cast<int>(specs.size());
  std::vector<int> origin;  // view index of each box
  for (std::size_t v = 0; v < per_view.size(); ++v) {
    const ViewOutput& o = per_view[v];
    if (o.error) {
      ++diag.failed_views;
      diag.errors.push_back(*o.error);
      continue;
    }
    diag.raw_records += o.raw;
    diag.above_threshold += o.above;
    diag.after_view_nms += o.kept;
    diag.nonpositive_depth += o.nonpositive;
    for (const Box3D& b : o.boxes) {
      result.boxes.push_back(b);
      origin.push_back(static_cast<int>(v));
    }
  }

  std::vector<Box3D>& boxes = result.boxes;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (origin[i] != origin[j] && boxes[i].class_id == boxes[j].class_id &&
          bev_iou(boxes[i], boxes[j]) > cfg.global_nms_iou) {
        ++diag.duplicate_pairs;
      }
    }
  }

  if (cfg.global_nms && !boxes.empty()) {
    std::vector<double> scores;
    for (const Box3D& b : boxes) scores.push_back(b.score.value_or(0.0));
    auto keep = nms(
        scores,
        [&](std::size_t i, std::size_t j) {
          return boxes[i].class_id == boxes[j].class_id ? bev_iou(boxes[i], boxes[j]) : 0.0;
        },
        cfg.global_nms_iou);
    // Restore (view, detection) order among survivors.
    std::sort(keep.begin(), keep.end());
    std::vector<Box3D> kept;
    kept.reserve(keep.size());
    for (std::size_t i : keep) kept.push_back(boxes[i]);
    diag.global_suppressed = static_cast<int>(boxes.size() - kept.size());
    boxes = std::move(kept);
  }

  diag.reference_objects = static_cast<int>(reference.size());
  for (std::size_t g = 0; g < reference.size(); ++g) {
    const bool covered = std::any_of(specs.begin(), specs.end(), [&](const VirtualViewSpec& s) {
      return in_depth_window(reference[g], s.viewport.z, cfg.views.depth_resolution);
    });
    if (!covered) diag.uncovered.push_back(g);
  }
  return result;
}

ViewLossInput TrainingSample::loss_input(std::span<const RawDetection> predictions) const {
  ViewLossInput in;
  in.anchors = anchors;
  in.assignment = assignment;
  in.predictions = predictions;
  in.targets = targets;
  in.gt_classes = gt_classes;
  in.view_camera = view_camera;
  in.viewport_z = spec.viewport.z;
  return in;
}

std::vector<TrainingSample> build_training_batch(std::span<const Box3D> gt,
                                                 const CameraIntrinsics& k, const Image* image,
                                                 const ViewConfig& cfg,
                                                 const std::array<ClassPrior, kNumClasses>& priors,
                                                 Rng& rng, AssignmentThresholds thr) {
  const std::vector<TrainingView> views = sample_training_viewports(gt, k, cfg, rng);
  std::vector<TrainingSample> batch;
  batch.reserve(views.size());
  for (const TrainingView& view : views) {
    TrainingSample s;
    s.spec = view.spec;
    s.view_camera = view.spec.virtual_intrinsics(k);
    s.target = view.target;
    if (image) s.image = resample(*image, view.spec);

    std::vector<Box2D> boxes;
    for (std::size_t g = 0; g < view.ground_truth.size(); ++g) {
      const ViewGroundTruth& vg = view.ground_truth[g];
      if (nearest_depth(vg.box) <= 0.0) continue;
      const ViewTarget t = make_view_target(vg.box, view.spec, k);
      s.gt_index.push_back(g);
      s.view_targets.push_back(t);
      s.gt_classes.push_back(t.class_id);
      s.ignore.push_back(vg.ignore || static_cast<int>(t.class_id) >= kNumClasses);
      boxes.push_back(t.box2d);
    }

    s.anchors = generate_view_anchors(view.spec.out_width, view.spec.out_height);
    const auto flags = std::make_unique<bool[]>(s.ignore.size());
    for (std::size_t g = 0; g < s.ignore.size(); ++g) flags[g] = s.ignore[g];
    s.assignment = assign_ground_truth(s.anchors, boxes,
                                       std::span<const bool>(flags.get(), s.ignore.size()), thr);

    s.targets.resize(s.anchors.size());
    for (std::size_t a = 0; a < s.anchors.size(); ++a) {
      const AnchorAssignment& as = s.assignment[a];
      if (as.state != AnchorState::kPositive) continue;
      const ViewTarget& t = s.view_targets[static_cast<std::size_t>(as.gt_index)];
      RawDetection& tgt = s.targets[a];
      tgt = encode(t, s.anchors[a], priors[static_cast<std::size_t>(t.class_id)]);
    }
    batch.push_back(std::move(s));
  }
  return batch;
}

}  // namespace virtview
