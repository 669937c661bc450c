// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Tolerances and time budgets are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "virtview/codec.hpp"
#include "virtview/evaluation.hpp"
#include "virtview/kitti_io.hpp"
#include "virtview/losses.hpp"
#include "virtview/overlap.hpp"
#include "virtview/pipeline.hpp"
#include "virtview/synthetic.hpp"
#include "virtview/viewport.hpp"

using namespace virtview;
using virtview::testing::SplitMix;

namespace {

constexpr double kScaleTolPx = 1e-6;
constexpr double kCodecTol = 1e-9;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradFloor = 1e-3;  // below this magnitude, compare absolutely
constexpr double kOverlapTol = 2e-3;
constexpr long kMonteCarloSamples = 10'000'000;
constexpr int kOverlapPairs = 100;
constexpr double kApTol = 1e-6;
constexpr double kViewBudgetMs = 100.0;

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1 ------------------------------------------------------------------------

Verdict scale_normalization() {
  const CameraIntrinsics k = default_camera();
  const ViewConfig cfg;
  const double w = viewport_width(cfg, k, cfg.view_width_px);
  double worst = 0.0;
  SplitMix rng(1);
  for (double z : {2.0, 5.0, 10.0, 20.0, 50.0, 100.0}) {
    const VirtualViewSpec s = viewport_to_spec(k, {-w / 2, -0.5, z, cfg.viewport_height, w},
                                               cfg.view_width_px, cfg.view_height_px);
    for (int i = 0; i < 100; ++i) {
      const double h_obj = rng.uniform(0.5, 2.2);
      const Point3 top{rng.uniform(-2, 2), rng.uniform(-0.5, 0.0), z};
      const double v0 = source_to_virtual(s, project(k, top)).v;
      const double v1 = source_to_virtual(s, project(k, {top.x, top.y + h_obj, z})).v;
      const double expected = cfg.view_height_px * h_obj / cfg.viewport_height;
      worst = std::max(worst, std::abs((v1 - v0) - expected));
    }
  }
  return {worst <= kScaleTolPx, "max_err_px=" + fmt("%.3g", worst)};
}

// 2 ------------------------------------------------------------------------

Verdict inference_coverage() {
  const CameraIntrinsics k = default_camera();
  const ViewConfig cfg;
  const auto specs = inference_viewports(k, cfg, k.image_width);
  SplitMix rng(2);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    Box3D b;
    b.size = {rng.uniform(0.5, 2.0), rng.uniform(1.2, 2.0), rng.uniform(0.5, 4.5)};
    b.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    b.center = {rng.uniform(-5, 5), 1.0, 0.0};
    const double target = i == 0 ? cfg.z_min : i == 1 ? cfg.z_max : rng.uniform(cfg.z_min, cfg.z_max);
    b.center.z = target + (b.center.z - nearest_depth(b));  // nearest depth = target
    const double zn = nearest_depth(b);
    const bool hit = std::any_of(specs.begin(), specs.end(), [&](const VirtualViewSpec& s) {
      return zn >= s.viewport.z && zn <= s.viewport.z + cfg.depth_resolution;
    });
    violations += hit ? 0 : 1;
  }
  const bool pass = specs.size() == 17 && violations == 0;
  return {pass, "views=" + std::to_string(specs.size()) + " violations=" + std::to_string(violations)};
}

// 3 ------------------------------------------------------------------------

Verdict codec_round_trip() {
  const CameraIntrinsics k = default_camera();
  const auto specs = inference_viewports(k, ViewConfig{}, k.image_width);
  const auto priors = default_class_priors();
  std::mt19937_64 rng(3);
  double worst = 0.0;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  for (int i = 0; i < 100000; ++i) {
    const ClassId cls = static_cast<ClassId>(i % 3);
    const Box3D box = virtview::testing::random_box(rng, cls);
    const VirtualViewSpec& spec = specs[static_cast<std::size_t>(i) % specs.size()];
    const ViewTarget t = make_view_target(box, spec, k);
    const std::vector<Anchor> cell = generate_anchors(i % 2 ? 32 : 16, 1, 1);
    const Anchor& a = cell[static_cast<std::size_t>(i) % cell.size()];
    const ClassPrior& prior = priors[static_cast<std::size_t>(cls)];
    const RawDetection raw = encode(t, a, prior);
    const Box2D b2 = decode_2d(a, raw.theta_2d);
    track(b2.u_min, t.box2d.u_min);
    track(b2.v_min, t.box2d.v_min);
    track(b2.u_max, t.box2d.u_max);
    track(b2.v_max, t.box2d.v_max);
    ViewDetection d = decode_3d(raw.theta_3d[static_cast<std::size_t>(cls)], prior, b2.center());
    track(d.center.u, t.center.u);
    track(d.center.v, t.center.v);
    track(d.depth, t.depth);
    track(d.size.width, t.size.width);
    track(d.size.height, t.size.height);
    track(d.size.length, t.size.length);
    track(std::remainder(d.alpha - t.alpha, 2 * std::numbers::pi), 0.0);
    const auto lifted = lift_detection(d, spec, k);
    if (!lifted) return {false, "lift failed"};
    track(lifted->center.x, box.center.x);
    track(lifted->center.y, box.center.y);
    track(lifted->center.z, box.center.z);
    track(std::remainder(lifted->yaw - box.yaw, 2 * std::numbers::pi), 0.0);
  }
  return {worst <= kCodecTol, "max_err=" + fmt("%.3g", worst)};
}

// 4 ------------------------------------------------------------------------

Verdict loss_correctness() {
  SplitMix rng(4);
  int fd_points = 0;
  double worst_rel = 0.0;
  double zero_violation = 0.0;
  int cross_violations = 0;
  auto compare = [&](double analytic, double fd) {
    const double denom = std::max({std::abs(analytic), std::abs(fd), kGradFloor});
    worst_rel = std::max(worst_rel, std::abs(analytic - fd) / denom);
    ++fd_points;
  };
  auto cdiff = [](const std::function<double(double)>& f, double x) {
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    return (f(x + h) - f(x - h)) / (2 * h);
  };

  // Zero at ground truth.
  zero_violation = std::max(zero_violation, focal_loss(1.0, 1, 2.0, 0.25));
  zero_violation = std::max(zero_violation, focal_loss(0.0, 0, 2.0, 0.25));
  zero_violation = std::max(zero_violation, huber(0.0, 3.0));
  zero_violation = std::max(zero_violation, confidence_target_loss(60.0, 0.0, 1.0));
  zero_violation = std::max(zero_violation, confidence_target_loss(-60.0, 1e9, 1.0));

  const CameraIntrinsics k = default_camera();
  const ViewConfig vcfg;
  const auto specs = inference_viewports(k, vcfg, k.image_width);
  const auto priors = default_class_priors();

  for (int i = 0; i < 250; ++i) {
    // Focal and Huber.
    const double p = rng.uniform(0.01, 0.99);
    const int y = i % 2;
    const double gamma = rng.uniform(0.0, 3.0), alpha = rng.uniform(0.05, 0.95);
    compare(focal_loss_grad(p, y, gamma, alpha),
            cdiff([&](double q) { return focal_loss(q, y, gamma, alpha); }, p));
    const double x = rng.uniform(-8, 8);
    compare(huber_grad(x, 3.0), cdiff([](double v) { return huber(v, 3.0); }, x));
    const double zeta = rng.uniform(-6, 6), l3 = rng.uniform(0, 5);
    compare(confidence_target_loss_grad(zeta, l3, 1.0),
            cdiff([&](double z) { return confidence_target_loss(z, l3, 1.0); }, zeta));

    // Lifting loss, one random view, target and perturbed prediction.
    const VirtualViewSpec& spec = specs[static_cast<std::size_t>(i) % specs.size()];
    LiftingContext ctx;
    ctx.view_camera = spec.virtual_intrinsics(k);
    ctx.viewport_z = spec.viewport.z;
    ctx.prior = priors[static_cast<std::size_t>(i % 3)];
    ctx.box2d_center = {rng.uniform(0, spec.out_width), rng.uniform(0, spec.out_height)};
    Theta3D target;
    const double a = rng.uniform(-3, 3);
    target.v = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-1.5, 1.5), rng.uniform(-0.2, 0.2),
                rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), std::sin(a), std::cos(a)};
    const LiftingLoss at_target = lifting_disentangled_loss(target, target, ctx);
    zero_violation = std::max(zero_violation, at_target.total);
    Theta3D pred = target;
    for (double& v : pred.v) v += rng.uniform(-0.3, 0.3);
    const LiftingLoss l = lifting_disentangled_loss(pred, target, ctx);
    for (int g = 0; g < kNumParamGroups; ++g) {
      const auto own = group_params(static_cast<ParamGroup>(g));
      for (int j = 0; j < 8; ++j) {
        const bool mine = std::find(own.begin(), own.end(), j) != own.end();
        if (!mine) {
          cross_violations += l.grad[g][j] != 0.0;
          continue;
        }
        compare(l.grad[g][j], cdiff([&](double v) {
                  Theta3D q = pred;
                  q[j] = v;
                  return lifting_disentangled_loss(q, target, ctx).group[g];
                }, pred[j]));
      }
    }
  }

  // Whole objective with perfect predictions and saturated logits.
  Box3D box;
  box.center = {1.0, 0.9, 20.0};
  box.size = {1.63, 1.53, 3.84};
  std::vector<Box3D> gt{box};
  Rng trng(4);
  ViewConfig guided = vcfg;
  guided.guided_probability = 1.0;
  for (const TrainingSample& s : build_training_batch(gt, k, nullptr, guided, priors, trng)) {
    std::vector<RawDetection> pred = s.targets;
    for (std::size_t a = 0; a < pred.size(); ++a) {
      const bool pos = s.assignment[a].state == AnchorState::kPositive;
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const bool on = pos && s.gt_classes[static_cast<std::size_t>(s.assignment[a].gt_index)] ==
                                   static_cast<ClassId>(c);
        pred[a].zeta_2d[c] = on ? 60.0 : -60.0;
        pred[a].zeta_3d[c] = 60.0;
      }
    }
    const ViewLossInput in = s.loss_input(pred);
    const LossBreakdown lb = total_loss(std::span<const ViewLossInput>(&in, 1), priors);
    zero_violation = std::max(zero_violation, lb.total);
  }

  const bool pass = zero_violation < 1e-12 && cross_violations == 0 && worst_rel < kGradRelTol &&
                    fd_points >= 1000;
  return {pass, "fd_points=" + std::to_string(fd_points) + " max_rel_err=" + fmt("%.3g", worst_rel) +
                    " cross_nonzero=" + std::to_string(cross_violations) +
                    " max_loss_at_gt=" + fmt("%.3g", zero_violation)};
}

// 5 ------------------------------------------------------------------------

// Footprint membership with the heading rotation precomputed.
struct Footprint {
  double x, z, half_len, half_wid, c, s;
  explicit Footprint(const Box3D& b)
      : x(b.center.x), z(b.center.z), half_len(b.size.length / 2), half_wid(b.size.width / 2),
        c(std::cos(b.yaw)), s(std::sin(b.yaw)) {}
  bool contains(double px, double pz) const {
    const double dx = px - x, dz = pz - z;
    return std::abs(c * dx - s * dz) <= half_len && std::abs(s * dx + c * dz) <= half_wid;
  }
};

struct Bounds {
  double lo[3], hi[3];
};

Bounds joint_bounds(const Box3D& a, const Box3D& b) {
  Bounds out{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
  for (const Box3D* box : {&a, &b}) {
    for (const Point3& p : box3d_corners(*box)) {
      const double v[3] = {p.x, p.y, p.z};
      for (int i = 0; i < 3; ++i) {
        out.lo[i] = std::min(out.lo[i], v[i]);
        out.hi[i] = std::max(out.hi[i], v[i]);
      }
    }
  }
  return out;
}

// Rasterized IoU by uniform sampling of the joint bounding box; areas and
// volumes come from the samples too, so no part of the production code is
// reused.
std::pair<double, double> monte_carlo_ious(const Box3D& a, const Box3D& b, SplitMix& rng) {
  const Bounds bb = joint_bounds(a, b);
  const Footprint ra(a), rb(b);
  long a2 = 0, b2 = 0, ab2 = 0, a3 = 0, b3 = 0, ab3 = 0;
  const double ya0 = a.center.y - a.size.height / 2, ya1 = a.center.y + a.size.height / 2;
  const double yb0 = b.center.y - b.size.height / 2, yb1 = b.center.y + b.size.height / 2;
  for (long i = 0; i < kMonteCarloSamples; ++i) {
    const double x = bb.lo[0] + (bb.hi[0] - bb.lo[0]) * rng.uniform();
    const double y = bb.lo[1] + (bb.hi[1] - bb.lo[1]) * rng.uniform();
    const double z = bb.lo[2] + (bb.hi[2] - bb.lo[2]) * rng.uniform();
    const bool ia = ra.contains(x, z), ib = rb.contains(x, z);
    a2 += ia;
    b2 += ib;
    ab2 += ia && ib;
    const bool va = ia && y >= ya0 && y <= ya1, vb = ib && y >= yb0 && y <= yb1;
    a3 += va;
    b3 += vb;
    ab3 += va && vb;
  }
  const auto ratio = [](long ab, long a_, long b_) {
    const long u = a_ + b_ - ab;
    return u > 0 ? static_cast<double>(ab) / u : 0.0;
  };
  return {ratio(ab2, a2, b2), ratio(ab3, a3, b3)};
}

Verdict overlap_oracles() {
  SplitMix rng(5);
  double worst_bev = 0.0, worst_3d = 0.0;
  int overlapping = 0;
  for (int pair = 0; pair < kOverlapPairs; ++pair) {
    Box3D a;
    a.size = {rng.uniform(0.5, 2.0), rng.uniform(1.2, 2.0), rng.uniform(0.6, 4.5)};
    a.center = {rng.uniform(-5, 5), rng.uniform(0.5, 1.5), rng.uniform(8, 40)};
    a.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    Box3D b = a;
    b.size = {rng.uniform(0.5, 2.0), rng.uniform(1.2, 2.0), rng.uniform(0.6, 4.5)};
    b.center.x += rng.uniform(-1.5, 1.5);
    b.center.y += rng.uniform(-0.6, 0.6);
    b.center.z += rng.uniform(-1.5, 1.5);
    b.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const auto [mc_bev, mc_3d] = monte_carlo_ious(a, b, rng);
    const double bev = bev_iou(a, b), v3 = iou_3d(a, b);
    overlapping += bev > 0.0;
    worst_bev = std::max(worst_bev, std::abs(bev - mc_bev));
    worst_3d = std::max(worst_3d, std::abs(v3 - mc_3d));
  }
  const bool pass = worst_bev <= kOverlapTol && worst_3d <= kOverlapTol;
  return {pass, "pairs=" + std::to_string(kOverlapPairs) + " overlapping=" +
                    std::to_string(overlapping) + " max_err_bev=" + fmt("%.3g", worst_bev) +
                    " max_err_3d=" + fmt("%.3g", worst_3d)};
}

// 6 ------------------------------------------------------------------------

struct OracleRun {
  FrameObjects dets;
  FrameObjects gts;
};

OracleRun oracle_run(const std::vector<Scene>& scenes, double depth_noise) {
  const CameraIntrinsics k = default_camera();
  InferenceConfig icfg;
  icfg.global_nms = true;
  OracleRun run;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::string id = frame_id(static_cast<int>(i));
    OracleDetectorConfig ocfg;
    ocfg.noise_depth = depth_noise;
    ocfg.seed = 600 + i;
    const OracleDetector det(scenes[i].objects, icfg.views, icfg.priors, ocfg);
    auto& d = run.dets[id];
    for (const Box3D& b : run_inference(k, nullptr, det, icfg).boxes) {
      EvalObject o;
      o.box = b;
      o.type = class_name(b.class_id);
      o.box2d = project_box_to_2d(k, b, true);
      d.push_back(o);
    }
    auto& g = run.gts[id];
    for (const auto& rec : scenes[i].labels) g.push_back(EvalObject::from_record(rec));
  }
  return run;
}

double car_moderate(const EvalReport& r, Metric m) {
  const EvalCell* c = r.find(ClassId::kCar, Difficulty::kModerate, m);
  return c && c->ap_r40 ? *c->ap_r40 : -1.0;
}

Verdict oracle_ap() {
  SceneParams params;
  params.seed = 6;
  params.max_objects = 10;
  params.z_lo = 5.0;
  params.z_hi = 40.0;
  const std::vector<Scene> scenes = generate_scenes(params, default_camera(), 50);

  const OracleRun clean = oracle_run(scenes, 0.0);
  const EvalReport clean_report = evaluate(clean.dets, clean.gts, EvalConfig{});
  int populated = 0;
  double worst = 0.0;
  for (const EvalCell& c : clean_report.cells) {
    if (!c.ap_r40) continue;
    ++populated;
    worst = std::max(worst, std::abs(*c.ap_r40 - 100.0));
  }

  const OracleRun noisy = oracle_run(scenes, 0.5);
  const double clean3d = car_moderate(clean_report, Metric::k3D);
  const double noisy3d = car_moderate(evaluate(noisy.dets, noisy.gts, EvalConfig{}), Metric::k3D);
  EvalConfig loose;
  loose.threshold_bev = {0.5, 0.5, 0.5};
  const double noisy_bev = car_moderate(evaluate(noisy.dets, noisy.gts, loose), Metric::kBEV);

  const bool pass = populated > 0 && worst <= kApTol && noisy3d >= 0.0 && noisy3d < clean3d &&
                    noisy_bev > noisy3d;
  return {pass, "populated_cells=" + std::to_string(populated) + " max_dev=" + fmt("%.3g", worst) +
                    " noisy_car_mod_3d@0.7=" + fmt("%.2f", noisy3d) +
                    " noisy_car_mod_bev@0.5=" + fmt("%.2f", noisy_bev)};
}

// 7 ------------------------------------------------------------------------

double direct_ap(const std::vector<int>& tp_flags, int n_gt, const std::vector<double>& samples) {
  double sum = 0.0;
  for (double r : samples) {
    double best = 0.0;
    int tp = 0;
    for (std::size_t k = 0; k < tp_flags.size(); ++k) {
      tp += tp_flags[k];
      if (static_cast<double>(tp) / n_gt >= r) {
        best = std::max(best, static_cast<double>(tp) / static_cast<double>(k + 1));
      }
    }
    sum += best;
  }
  return 100.0 * sum / static_cast<double>(samples.size());
}

Verdict metric_bias() {
  // Two ground truth objects, one confident true positive.
  const std::vector<ScoredOutcome> outcomes{{0.9, virtview::Outcome::kTruePositive}};
  const int n_gt = 2;
  const auto r11 = recall_samples_r11(), r40 = recall_samples_r40();
  const double a11 = *average_precision(outcomes, n_gt, r11);
  const double a40 = *average_precision(outcomes, n_gt, r40);
  const double d11 = direct_ap({1}, n_gt, r11), d40 = direct_ap({1}, n_gt, r40);
  const bool pass = a11 > a40 && std::abs(a11 - d11) < 1e-12 && std::abs(a40 - d40) < 1e-12;
  return {pass, "AP_R11=" + fmt("%.4f", a11) + " AP_R40=" + fmt("%.4f", a40)};
}

// 8 ------------------------------------------------------------------------

Verdict range_splits() {
  struct Named {
    const char* name;
    std::function<bool(double)> train, val;
  };
  const std::vector<Named> expected{
      {"far/near", [](double z) { return z >= 0 && z < 20; }, [](double z) { return z >= 20 && z < 50; }},
      {"near/far", [](double z) { return z >= 20 && z < 50; }, [](double z) { return z >= 0 && z < 20; }},
      {"near+far/middle", [](double z) { return (z >= 0 && z < 10) || (z >= 20 && z < 40); },
       [](double z) { return z >= 10 && z < 20; }},
  };
  SceneParams params;
  params.seed = 8;
  params.z_lo = 2.0;
  params.z_hi = 49.0;
  params.min_nearest_depth = 0.5;
  std::vector<Scene> scenes = generate_scenes(params, default_camera(), 300);
  // Boundary values are part of the corpus.
  for (double z : {0.0, 10.0, 20.0, 40.0, 50.0}) {
    KittiLabelRecord r;
    r.type = "Car";
    r.location = {0, 1.65, z};
    scenes[0].labels.push_back(r);
  }
  KittiLabelRecord dc;
  dc.type = "DontCare";
  scenes[0].labels.push_back(dc);

  long checked = 0, errors = 0;
  for (const Named& n : expected) {
    const RangeSplitDefinition def = named_range_split(n.name);
    const RangeSplit split = make_range_split(scenes, def.train, def.val);
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      for (const auto& [side, pred] :
           {std::pair{&split.train[s], &n.train}, std::pair{&split.val[s], &n.val}}) {
        std::size_t next = 0;
        for (const KittiLabelRecord& r : scenes[s].labels) {
          const bool want = r.dont_care() || (*pred)(r.location.z);
          const bool got = next < side->labels.size() && side->labels[next] == r;
          if (got) ++next;
          errors += want != got;
          ++checked;
        }
        errors += next != side->labels.size();
      }
    }
  }
  return {errors == 0, "membership_checks=" + std::to_string(checked) + " errors=" + std::to_string(errors)};
}

// 9 ------------------------------------------------------------------------

Verdict view_performance() {
  const CameraIntrinsics k = default_camera();
  SceneParams params;
  params.seed = 9;
  const Image image = generate_scene(params, k, 0, true).raster;
  const ViewConfig cfg;
  std::vector<double> ms;
  std::size_t pixels = 0;
  for (int rep = 0; rep < 7; ++rep) {
    const auto t0 = Clock::now();
    const auto specs = inference_viewports(k, cfg, image.width());
    pixels = 0;
    for (const VirtualViewSpec& s : specs) {
      const Image v = resample(image, s);
      pixels += static_cast<std::size_t>(v.width()) * v.height();
    }
    ms.push_back(1000.0 * seconds_since(t0));
  }
  std::sort(ms.begin(), ms.end());
  const double median = ms[ms.size() / 2];
  return {median < kViewBudgetMs,
          "median_ms=" + fmt("%.2f", median) + " output_pixels=" + std::to_string(pixels)};
}

// 10 -----------------------------------------------------------------------

Verdict io_fidelity() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "virtview_acceptance_io";
  fs::remove_all(root);
  SceneParams params;
  params.seed = 10;
  const CameraIntrinsics k = default_camera();
  long files = 0, mismatches = 0;
  const KittiDataset ds{root};
  InferenceConfig icfg;
  for (int i = 0; i < 100; ++i) {
    const std::string id = frame_id(i);
    const Scene s = generate_scene(params, k, static_cast<std::uint64_t>(i));
    export_scene(root, id, s);

    const std::string label_text = read_text_file(ds.label_path(id));
    const auto labels = parse_label_file(label_text);
    mismatches += format_label_file(labels) != label_text;
    mismatches += labels != s.labels;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const Box3D b = kitti_to_box3d(labels[j]);
      mismatches += !(b.center == s.objects[j].center && b.size == s.objects[j].size &&
                      b.yaw == s.objects[j].yaw);
    }

    const std::string calib_text = read_text_file(ds.calib_path(id));
    const Calibration calib = parse_calib(calib_text);
    mismatches += format_calib(calib) != calib_text;
    mismatches += parse_calib(format_calib(calib)).entries != calib.entries;

    const OracleDetector det(s.objects, icfg.views, icfg.priors);
    std::vector<KittiLabelRecord> results;
    for (const Box3D& b : run_inference(calib.camera, nullptr, det, icfg).boxes) {
      results.push_back(box3d_to_kitti(b, project_box_to_2d(calib.camera, b, true)));
    }
    write_results(root / "results", id, results);
    const std::string result_text = read_text_file(root / "results" / (id + ".txt"));
    const auto parsed = parse_label_file(result_text);
    mismatches += format_label_file(parsed) != result_text;
    write_results(root / "results2", id, parsed);
    mismatches += read_text_file(root / "results2" / (id + ".txt")) != result_text;
    files += 3;
  }
  fs::remove_all(root);
  return {mismatches == 0, "files=" + std::to_string(files) + " mismatches=" + std::to_string(mismatches)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "scale_normalization", 1.0, scale_normalization},
      {2, "inference_coverage", 1.0, inference_coverage},
      {3, "codec_round_trip", 5.0, codec_round_trip},
      {4, "loss_correctness", 30.0, loss_correctness},
      {5, "overlap_oracles", 120.0, overlap_oracles},
      {6, "oracle_end_to_end_ap", 60.0, oracle_ap},
      {7, "r11_vs_r40_bias", 1.0, metric_bias},
      {8, "range_split_harness", 0.0, range_splits},
      {9, "view_generation_speed", 0.0, view_performance},
      {10, "io_fidelity", 1.0, io_fidelity},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    Verdict o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double t = seconds_since(t0);
    const bool in_time = c.budget_s <= 0.0 || t < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s [%d] %s: %s time=%.3fs%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), t, in_time ? "" : " (over budget)");
    std::fflush(stdout);
  }
  std::printf("acceptance passed=%d failed=%d\n", static_cast<int>(criteria.size()) - failed, failed);
  return failed == 0 ? 0 : 1;
}
