#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "virtview/codec.hpp"
#include "virtview/config.hpp"
#include "virtview/errors.hpp"
#include "virtview/evaluation.hpp"
#include "virtview/image.hpp"
#include "virtview/kitti_io.hpp"
#include "virtview/parallel.hpp"
#include "virtview/pipeline.hpp"
#include "virtview/synthetic.hpp"
#include "virtview/viewport.hpp"

namespace fs = std::filesystem;

namespace virtview::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "Key = value configuration file");
  cmd->add_option("--set", o.sets, "Override one configuration key (key=value)");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

/// Defaults < config file < --set < dedicated flags.
RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg;
  try {
    if (!o.config_file.empty()) cfg.apply_file(o.config_file);
    for (const std::string& s : o.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.jobs) cfg.jobs = *o.jobs;
    cfg.validate();
  } catch (const IoError& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const ParseError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return cfg;
}

fs::path data_root(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.data_root.empty()) return cfg.data_root;
  if (const char* env = std::getenv(kDataRootEnv); env && *env) return env;
  throw UsageError(std::string("no dataset root: pass --data or set ") + kDataRootEnv);
}

void require_dir(const fs::path& p) {
  if (!fs::is_directory(p)) throw IoError("missing directory " + p.string());
}

std::vector<std::string> frame_list(const KittiDataset& ds, const std::string& split,
                                    const std::string& frame) {
  if (!frame.empty()) return {frame};
  if (!split.empty()) return load_split(split);
  auto ids = ds.frames();
  if (ids.empty()) throw IoError("no frames found under " + ds.root.string());
  return ids;
}

// FNV-1a, so per-frame seeds do not depend on the standard library.
std::uint64_t hash_id(const std::string& id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t frame_seed(std::uint64_t seed, const std::string& id) {
  return seed * 0x9e3779b97f4a7c15ULL ^ hash_id(id);
}

/// Calibration plus image size taken from the image when present.
Calibration load_calib(const KittiDataset& ds, const std::string& id, const Image* image) {
  Calibration c = ds.calib(id);
  if (image) {
    c.camera.image_width = image->width();
    c.camera.image_height = image->height();
  }
  return c;
}

std::optional<Image> load_image(const KittiDataset& ds, const std::string& id) {
  const fs::path p = ds.image_path(id);
  if (!fs::exists(p)) return std::nullopt;
  return read_png(p);
}

std::string two_digits(std::size_t i) {
  const std::string s = std::to_string(i);
  return s.size() < 2 ? "0" + s : s;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  CommonOptions common;
  std::string out;
  int count = 10;
  bool no_images = false;
  std::optional<int> min_objects, max_objects;
  std::optional<double> z_lo, z_hi;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o.common);
  SceneParams params;
  params.seed = cfg.seed;
  if (o.min_objects) params.min_objects = *o.min_objects;
  if (o.max_objects) params.max_objects = *o.max_objects;
  if (o.z_lo) params.z_lo = *o.z_lo;
  if (o.z_hi) params.z_hi = *o.z_hi;
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const CameraIntrinsics k = default_camera();
  const fs::path root = o.out;
  std::vector<std::string> ids(static_cast<std::size_t>(o.count));
  std::vector<int> objects(ids.size());
  parallel_for(ids.size(), cfg.jobs, [&](std::size_t i) {
    ids[i] = frame_id(static_cast<int>(i));
    const Scene scene = generate_scene(params, k, i, !o.no_images);
    export_scene(root, ids[i], scene);
    objects[i] = static_cast<int>(scene.objects.size());
  });
  std::vector<std::string> train, val;
  for (std::size_t i = 0; i < ids.size(); ++i) (i % 2 == 0 ? train : val).push_back(ids[i]);
  write_split(root / "ImageSets" / "train.txt", train);
  write_split(root / "ImageSets" / "val.txt", val);
  write_split(root / "ImageSets" / "trainval.txt", ids);
  int total = 0;
  for (int n : objects) total += n;
  out << "synth frames=" << ids.size() << " objects=" << total << " out=" << root.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- views

struct ViewsOptions {
  CommonOptions common;
  std::string data, frame, split, out, mode = "inference";
  bool no_images = false;
};

int cmd_views(const ViewsOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o.common);
  const KittiDataset ds{data_root(o.data, cfg)};
  require_dir(ds.root / "calib");
  const auto ids = frame_list(ds, o.split, o.frame);
  const fs::path root = o.out;
  std::vector<std::size_t> counts(ids.size());
  parallel_for(ids.size(), cfg.jobs, [&](std::size_t f) {
    const std::string& id = ids[f];
    std::optional<Image> image = o.no_images ? std::nullopt : load_image(ds, id);
    const Calibration calib = load_calib(ds, id, image ? &*image : nullptr);
    const CameraIntrinsics& k = calib.camera;
    std::vector<VirtualViewSpec> specs;
    if (o.mode == "inference") {
      specs = inference_viewports(k, cfg.views, k.image_width);
    } else {
      std::vector<Box3D> gt;
      if (fs::exists(ds.label_path(id))) {
        for (const auto& r : ds.labels(id)) {
          if (!r.dont_care()) gt.push_back(kitti_to_box3d(r));
        }
      }
      Rng rng(frame_seed(cfg.seed, id));
      for (const TrainingView& v : sample_training_viewports(gt, k, cfg.views, rng)) {
        specs.push_back(v.spec);
      }
    }
    const fs::path dir = root / id;
    fs::create_directories(dir);
    std::ostringstream records;
    write_view_records(records, specs);
    write_text_file(dir / "views.txt", records.str());
    if (image) {
      for (std::size_t v = 0; v < specs.size(); ++v) {
        write_png(dir / ("view_" + two_digits(v) + ".png"), resample(*image, specs[v]));
      }
    }
    counts[f] = specs.size();
  });
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  out << "views frames=" << ids.size() << " views=" << total << " mode=" << o.mode << "\n";
  return kOk;
}

// ---------------------------------------------------------------- infer

struct InferOptions {
  CommonOptions common;
  std::string data, split, out, detector = "oracle", stub_dir;
  bool geometry_only = false;
  bool global_nms = false;
};

KittiLabelRecord result_record(const Box3D& box, const CameraIntrinsics& k) {
  Box2D bbox{};
  if (nearest_depth(box) + k.baseline.z > 0.0) {
    try {
      bbox = project_box_to_2d(k, box, true);
    } catch (const GeometryError&) {
    }
  }
  Box3D b = box;
  b.truncation = -1.0;
  b.occlusion = -1;
  return box3d_to_kitti(b, bbox);
}

int cmd_infer(const InferOptions& o, std::ostream& out) {
  RunConfig cfg = resolve_config(o.common);
  if (o.global_nms) cfg.global_nms = true;
  if (o.detector != "oracle" && o.detector != "stub") {
    throw UsageError("--detector must be oracle or stub");
  }
  if (o.detector == "stub" && o.stub_dir.empty()) throw UsageError("--detector stub needs --stub-dir");
  const KittiDataset ds{data_root(o.data, cfg)};
  require_dir(ds.root / "calib");
  if (o.detector == "oracle") require_dir(ds.root / "label_2");
  const auto ids = frame_list(ds, o.split, "");
  const fs::path results = fs::path(o.out) / "data";
  fs::create_directories(results);
  const InferenceConfig icfg = [&] {
    InferenceConfig c = cfg.inference();
    c.jobs = 1;  // frames are the parallel unit here
    return c;
  }();

  std::vector<InferenceDiagnostics> diags(ids.size());
  std::vector<std::size_t> counts(ids.size());
  parallel_for(ids.size(), cfg.jobs, [&](std::size_t f) {
    const std::string& id = ids[f];
    std::optional<Image> image = o.geometry_only ? std::nullopt : load_image(ds, id);
    const Calibration calib = load_calib(ds, id, image ? &*image : nullptr);
    std::vector<Box3D> gt;
    if (fs::exists(ds.label_path(id))) {
      for (const auto& r : ds.labels(id)) {
        if (!r.dont_care()) gt.push_back(kitti_to_box3d(r));
      }
    }
    std::unique_ptr<Detector> detector;
    if (o.detector == "oracle") {
      OracleDetectorConfig oc = cfg.oracle;
      oc.seed = frame_seed(cfg.seed, id);
      detector = std::make_unique<OracleDetector>(gt, cfg.views, icfg.priors, oc);
    } else {
      const fs::path p = fs::path(o.stub_dir) / (id + ".bin");
      std::ifstream in(p, std::ios::binary);
      if (!in) throw IoError("cannot read " + p.string());
      detector = std::make_unique<RecordDetector>(read_raw_records(in));
    }
    const InferenceResult r =
        run_inference(calib.camera, image ? &*image : nullptr, *detector, icfg, gt);
    std::vector<KittiLabelRecord> records;
    for (const Box3D& b : r.boxes) records.push_back(result_record(b, calib.camera));
    write_results(results, id, records);
    diags[f] = r.diagnostics;
    counts[f] = records.size();
  });

  std::string report;
  std::size_t detections = 0;
  int failed = 0, uncovered = 0, duplicates = 0;
  for (std::size_t f = 0; f < ids.size(); ++f) {
    report += "[" + ids[f] + "]\n" + diags[f].to_text();
    detections += counts[f];
    failed += diags[f].failed_views;
    uncovered += static_cast<int>(diags[f].uncovered.size());
    duplicates += diags[f].duplicate_pairs;
  }
  write_text_file(fs::path(o.out) / "diagnostics.txt", report);
  out << "infer frames=" << ids.size() << " detections=" << detections
      << " failed_views=" << failed << " uncovered=" << uncovered
      << " duplicate_pairs=" << duplicates << "\n";
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  CommonOptions common;
  std::string results, gt, split, out;
};

fs::path label_dir(const fs::path& p) {
  if (fs::is_directory(p / "label_2")) return p / "label_2";
  return p;
}

fs::path result_dir(const fs::path& p) {
  if (fs::is_directory(p / "data")) return p / "data";
  return p;
}

std::vector<std::string> txt_stems(const fs::path& dir) {
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".txt") ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<EvalObject> load_objects(const fs::path& path) {
  std::vector<KittiLabelRecord> recs;
  try {
    recs = parse_label_file(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  std::vector<EvalObject> objs;
  objs.reserve(recs.size());
  for (const auto& r : recs) objs.push_back(EvalObject::from_record(r));
  return objs;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o.common);
  const fs::path gdir = label_dir(o.gt.empty() ? data_root("", cfg) : fs::path(o.gt));
  const fs::path rdir = result_dir(o.results);
  require_dir(gdir);
  require_dir(rdir);
  const std::vector<std::string> gt_ids = o.split.empty() ? txt_stems(gdir) : load_split(o.split);
  std::vector<std::string> det_ids;
  if (o.split.empty()) {
    det_ids = txt_stems(rdir);
  } else {
    for (const auto& id : gt_ids) {
      if (fs::exists(rdir / (id + ".txt"))) det_ids.push_back(id);
    }
  }
  FrameObjects gts, dets;
  for (const auto& id : gt_ids) gts[id] = load_objects(gdir / (id + ".txt"));
  for (const auto& id : det_ids) dets[id] = load_objects(rdir / (id + ".txt"));

  EvalReport report;
  try {
    report = evaluate(dets, gts, cfg.evaluation());
  } catch (const std::invalid_argument& e) {
    throw IoError(e.what());
  }
  if (!o.out.empty()) {
    const fs::path dir = o.out;
    write_text_file(dir / "report.csv", report.to_csv());
    for (const EvalCell& c : report.cells) {
      if (c.pr_r40.empty()) continue;
      const std::string name = std::string(class_name(c.cls)) + "_" + difficulty_name(c.difficulty) +
                               "_" + metric_name(c.metric) + ".txt";
      write_text_file(dir / "pr" / name, EvalReport::pr_curve_text(c));
    }
  }
  out << report.summary();
  out << "eval frames=" << gt_ids.size() << " cells=" << report.cells.size() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- split

struct SplitOptions {
  CommonOptions common;
  std::string data, name, train_range, val_range, out;
};

int cmd_split(const SplitOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o.common);
  RangeSplitDefinition def;
  try {
    if (!o.name.empty()) {
      if (!o.train_range.empty() || !o.val_range.empty()) {
        throw std::invalid_argument("--name excludes --train-range/--val-range");
      }
      def = named_range_split(o.name);
    } else {
      if (o.train_range.empty() || o.val_range.empty()) {
        throw std::invalid_argument("pass --name or both --train-range and --val-range");
      }
      def = {DepthRange::parse(o.train_range), DepthRange::parse(o.val_range)};
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const KittiDataset ds{data_root(o.data, cfg)};
  require_dir(ds.root / "label_2");
  const fs::path sets = ds.root / "ImageSets";
  const bool has_sets = fs::exists(sets / "train.txt") && fs::exists(sets / "val.txt");
  const auto all = ds.frames();
  const std::vector<std::string> train_ids = has_sets ? load_split(sets / "train.txt") : all;
  const std::vector<std::string> val_ids = has_sets ? load_split(sets / "val.txt") : all;

  auto emit = [&](const std::vector<std::string>& ids, const DepthRange& range,
                  const std::string& side) {
    std::size_t kept = 0;
    for (const auto& id : ids) {
      const auto labels = filter_labels(ds.labels(id), range);
      for (const auto& r : labels) kept += r.dont_care() ? 0 : 1;
      write_text_file(fs::path(o.out) / side / "label_2" / (id + ".txt"), format_label_file(labels));
    }
    write_split(fs::path(o.out) / "ImageSets" / (side + ".txt"), ids);
    return kept;
  };
  const std::size_t train_objects = emit(train_ids, def.train, "train");
  const std::size_t val_objects = emit(val_ids, def.val, "val");
  out << "split train_range=" << def.train.to_string() << " val_range=" << def.val.to_string()
      << " train_frames=" << train_ids.size() << " train_objects=" << train_objects
      << " val_frames=" << val_ids.size() << " val_objects=" << val_objects << "\n";
  return kOk;
}

// ---------------------------------------------------------------- selftest

struct Check {
  std::string name;
  std::function<std::string()> run;  // empty string = pass, else reason
};

std::vector<Check> selftest_checks(const RunConfig& cfg) {
  std::vector<Check> checks;
  checks.push_back({"codec_round_trip", [cfg] {
    Rng rng(cfg.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const CameraIntrinsics k = default_camera();
    const auto specs = inference_viewports(k, cfg.views, k.image_width);
    const auto priors = cfg.inference().priors;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto& prior = priors[static_cast<std::size_t>(i % kNumClasses)];
      Box3D b;
      b.class_id = prior.class_id;
      b.center = {4.0 * u(rng), 1.0 + 0.3 * u(rng), 20.0 + 10.0 * u(rng)};
      b.size = {prior.reference.width * (1.0 + 0.2 * u(rng)), prior.reference.height,
                prior.reference.length};
      b.yaw = 3.0 * u(rng);
      const auto& spec = specs[static_cast<std::size_t>(i) % specs.size()];
      const ViewTarget t = make_view_target(b, spec, k);
      const Anchor a{64.0, 48.0, {2, 2}, 16};
      const RawDetection raw = encode(t, a, prior);
      const Box2D box = decode_2d(a, raw.theta_2d);
      const ViewDetection d = decode_3d(raw.theta_3d[static_cast<std::size_t>(b.class_id)], prior,
                                        box.center());
      worst = std::max({worst, std::abs(d.depth - t.depth), std::abs(d.size.width - t.size.width),
                        std::abs(wrap_angle(d.alpha - t.alpha)), std::abs(d.center.u - t.center.u)});
    }
    return worst <= 1e-9 ? std::string() : "max error " + std::to_string(worst);
  }});
  checks.push_back({"inference_coverage", [cfg] {
    const CameraIntrinsics k = default_camera();
    const auto specs = inference_viewports(k, cfg.views, k.image_width);
    for (int i = 0; i <= 1000; ++i) {
      const double z = cfg.views.z_min + (cfg.views.z_max - cfg.views.z_min) * i / 1000.0;
      const bool hit = std::any_of(specs.begin(), specs.end(), [&](const VirtualViewSpec& s) {
        return z - s.viewport.z >= 0.0 && z - s.viewport.z <= cfg.views.depth_resolution;
      });
      if (!hit) return "depth " + std::to_string(z) + " not covered";
    }
    return std::string();
  }});
  checks.push_back({"io_round_trip", [cfg] {
    SceneParams p;
    p.seed = cfg.seed;
    for (std::uint64_t i = 0; i < 20; ++i) {
      const Scene s = generate_scene(p, default_camera(), i);
      const std::string text = format_label_file(s.labels);
      if (format_label_file(parse_label_file(text)) != text) return std::string("label text differs");
      const std::string calib = format_calib(make_calibration(s.camera));
      if (format_calib(parse_calib(calib)) != calib) return std::string("calib text differs");
    }
    return std::string();
  }});
  checks.push_back({"oracle_ap", [cfg] {
    SceneParams p;
    p.seed = cfg.seed;
    p.max_objects = 6;
    p.min_nearest_depth = cfg.views.z_min;
    InferenceConfig icfg = cfg.inference();
    icfg.global_nms = true;
    const CameraIntrinsics k = default_camera();
    FrameObjects dets, gts;
    for (std::uint64_t i = 0; i < 10; ++i) {
      const Scene s = generate_scene(p, k, i);
      const OracleDetector det(s.objects, icfg.views, icfg.priors);
      const auto r = run_inference(k, nullptr, det, icfg);
      const std::string id = frame_id(static_cast<int>(i));
      auto& g = gts[id];
      for (const auto& rec : s.labels) g.push_back(EvalObject::from_record(rec));
      auto& d = dets[id];
      for (const Box3D& b : r.boxes) {
        EvalObject o;
        o.box = b;
        o.box2d = project_box_to_2d(k, b, true);
        o.type = class_name(b.class_id);
        d.push_back(o);
      }
    }
    const EvalReport report = evaluate(dets, gts, cfg.evaluation());
    for (const EvalCell& c : report.cells) {
      if (c.ap_r40 && std::abs(*c.ap_r40 - 100.0) > 1e-6) {
        return std::string(class_name(c.cls)) + "/" + difficulty_name(c.difficulty) + "/" +
               metric_name(c.metric) + " AP=" + std::to_string(*c.ap_r40);
      }
    }
    return std::string();
  }});
  return checks;
}

int cmd_selftest(const CommonOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  int passed = 0, failed = 0;
  for (const Check& c : selftest_checks(cfg)) {
    std::string reason;
    try {
      reason = c.run();
    } catch (const std::exception& e) {
      reason = std::string("exception: ") + e.what();
    }
    if (reason.empty()) {
      ++passed;
      out << "PASS " << c.name << "\n";
    } else {
      ++failed;
      out << "FAIL " << c.name << ": " << reason << "\n";
    }
  }
  out << "selftest passed=" << passed << " failed=" << failed << "\n";
  return failed == 0 ? kOk : kInternal;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Virtual-view monocular 3D detection toolkit", "virtview"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic KITTI-layout dataset");
  add_common(s, synth.common);
  s->add_option("--out", synth.out, "Output dataset root")->required();
  s->add_option("--count", synth.count, "Number of frames")->check(CLI::NonNegativeNumber);
  s->add_flag("--no-images", synth.no_images, "Skip rendering image_2/");
  s->add_option("--min-objects", synth.min_objects);
  s->add_option("--max-objects", synth.max_objects);
  s->add_option("--z-lo", synth.z_lo, "Smallest object center depth, m");
  s->add_option("--z-hi", synth.z_hi, "Largest object center depth, m");

  ViewsOptions views;
  auto* v = app.add_subcommand("views", "Write virtual views and sidecar records");
  add_common(v, views.common);
  v->add_option("--data", views.data, "Dataset root (default: $VIRTVIEW_DATA_ROOT)");
  auto* vf = v->add_option("--frame", views.frame, "Single frame id");
  v->add_option("--split", views.split, "File of frame ids")->excludes(vf);
  v->add_option("--out", views.out, "Output directory")->required();
  v->add_option("--mode", views.mode, "inference or training")
      ->check(CLI::IsMember({"inference", "training"}));
  v->add_flag("--no-images", views.no_images, "Only write sidecar records");

  InferOptions infer;
  auto* i = app.add_subcommand("infer", "Run the view pipeline and write KITTI results");
  add_common(i, infer.common);
  i->add_option("--data", infer.data, "Dataset root (default: $VIRTVIEW_DATA_ROOT)");
  i->add_option("--split", infer.split, "File of frame ids");
  i->add_option("--out", infer.out, "Output directory (results in <out>/data)")->required();
  i->add_option("--detector", infer.detector, "oracle or stub")
      ->check(CLI::IsMember({"oracle", "stub"}));
  i->add_option("--stub-dir", infer.stub_dir, "Directory of <frame>.bin raw head outputs");
  i->add_flag("--geometry-only", infer.geometry_only, "Skip image resampling");
  i->add_flag("--global-nms", infer.global_nms, "Merge duplicates across views");

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Evaluate KITTI result files");
  add_common(e, eval.common);
  e->add_option("--results", eval.results, "Result directory")->required();
  e->add_option("--gt", eval.gt, "Dataset root or label directory (default: $VIRTVIEW_DATA_ROOT)");
  e->add_option("--split", eval.split, "File of frame ids");
  e->add_option("--out", eval.out, "Directory for report.csv and pr/ curves");

  SplitOptions split;
  auto* sp = app.add_subcommand("split", "Depth-range train/val label splits");
  add_common(sp, split.common);
  sp->add_option("--data", split.data, "Dataset root (default: $VIRTVIEW_DATA_ROOT)");
  sp->add_option("--name", split.name, "far/near, near/far or near+far/middle");
  sp->add_option("--train-range", split.train_range, "e.g. 0-10,20-40");
  sp->add_option("--val-range", split.val_range, "e.g. 10-20");
  sp->add_option("--out", split.out, "Output directory")->required();

  CommonOptions selftest;
  auto* st = app.add_subcommand("selftest", "Run built-in property checks");
  add_common(st, selftest);

  std::vector<std::string> argv_store{"virtview"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (v->parsed()) return cmd_views(views, out);
    if (i->parsed()) return cmd_infer(infer, out);
    if (e->parsed()) return cmd_eval(eval, out);
    if (sp->parsed()) return cmd_split(split, out);
    if (st->parsed()) return cmd_selftest(selftest, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsage;
  } catch (const IoError& ex) {
    err << "error: " << ex.what() << "\n";
    return kDataError;
  } catch (const ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kDataError;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace virtview::cli
