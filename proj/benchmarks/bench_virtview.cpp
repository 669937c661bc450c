#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "virtview/evaluation.hpp"
#include "virtview/overlap.hpp"
#include "virtview/pipeline.hpp"
#include "virtview/synthetic.hpp"
#include "virtview/viewport.hpp"

namespace {

using namespace virtview;

const Image& scene_raster() {
  static const Image image = [] {
    SceneParams p;
    p.seed = 1;
    return generate_scene(p, default_camera(), 0, true).raster;
  }();
  return image;
}

void BM_InferenceViews(benchmark::State& state) {
  const CameraIntrinsics k = default_camera();
  const ViewConfig cfg;
  const Image& image = scene_raster();
  for (auto _ : state) {
    for (const VirtualViewSpec& s : inference_viewports(k, cfg, image.width())) {
      benchmark::DoNotOptimize(resample(image, s));
    }
  }
}
BENCHMARK(BM_InferenceViews)->Unit(benchmark::kMillisecond);

std::vector<Box3D> random_boxes(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Box3D> out(n);
  for (Box3D& b : out) {
    b.center = {-2 + 4 * u(rng), 1.0 + 0.4 * u(rng), 20 + 4 * u(rng)};
    b.size = {1.6, 1.5, 3.9};
    b.yaw = wrap_angle(6.3 * u(rng));
  }
  return out;
}

void BM_BevIou(benchmark::State& state) {
  const auto boxes = random_boxes(256);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bev_iou(boxes[i % 256], boxes[(i * 7 + 3) % 256]));
    ++i;
  }
}
BENCHMARK(BM_BevIou);

void BM_Iou3d(benchmark::State& state) {
  const auto boxes = random_boxes(256);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou_3d(boxes[i % 256], boxes[(i * 7 + 3) % 256]));
    ++i;
  }
}
BENCHMARK(BM_Iou3d);

void BM_OracleInference(benchmark::State& state) {
  SceneParams p;
  p.seed = 2;
  const CameraIntrinsics k = default_camera();
  const Scene scene = generate_scene(p, k);
  InferenceConfig cfg;
  OracleDetectorConfig ocfg;
  ocfg.noise_depth = 0.3;
  ocfg.clutter_rate = 0.5;
  const OracleDetector det(scene.objects, cfg.views, cfg.priors, ocfg);
  for (auto _ : state) benchmark::DoNotOptimize(run_inference(k, nullptr, det, cfg));
}
BENCHMARK(BM_OracleInference)->Unit(benchmark::kMicrosecond);

void BM_Evaluate(benchmark::State& state) {
  const auto frames = static_cast<std::size_t>(state.range(0));
  SceneParams p;
  p.seed = 3;
  const CameraIntrinsics k = default_camera();
  const auto scenes = generate_scenes(p, k, frames);
  InferenceConfig cfg;
  OracleDetectorConfig ocfg;
  ocfg.noise_depth = 0.5;
  ocfg.clutter_rate = 0.3;
  FrameObjects dets, gts;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::string id = frame_id(static_cast<int>(i));
    ocfg.seed = i;
    const OracleDetector det(scenes[i].objects, cfg.views, cfg.priors, ocfg);
    auto& d = dets[id];
    for (const Box3D& b : run_inference(k, nullptr, det, cfg).boxes) {
      EvalObject o;
      o.box = b;
      o.type = class_name(b.class_id);
      o.box2d = project_box_to_2d(k, b, true);
      d.push_back(o);
    }
    auto& g = gts[id];
    for (const auto& r : scenes[i].labels) g.push_back(EvalObject::from_record(r));
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(dets, gts, EvalConfig{}));
}
BENCHMARK(BM_Evaluate)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
