#include "virtview/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "virtview/codec.hpp"
#include "virtview/overlap.hpp"
#include "virtview/parallel.hpp"

namespace virtview {

void SceneParams::validate() const {
  if (min_objects < 0 || max_objects < min_objects) {
    throw std::invalid_argument("object count bounds must satisfy 0 <= min <= max");
  }
  double total = 0.0;
  for (double w : class_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("class weights must be non-negative");
    total += w;
  }
  if (max_objects > 0 && !(total > 0.0)) throw std::invalid_argument("class weights sum to zero");
  if (!(z_lo > 0.0) || !(z_hi > z_lo)) throw std::invalid_argument("depth bounds need 0 < z_lo < z_hi");
  if (!(exponential_scale > 0.0)) throw std::invalid_argument("exponential scale must be positive");
  if (!(lateral_fraction >= 0.0 && lateral_fraction <= 1.0)) {
    throw std::invalid_argument("lateral fraction must lie in [0, 1]");
  }
  if (!(size_jitter >= 0.0)) throw std::invalid_argument("size jitter must be non-negative");
  if (!(max_pair_iou >= 0.0 && max_pair_iou <= 1.0)) {
    throw std::invalid_argument("max pair IoU must lie in [0, 1]");
  }
  if (max_attempts < 1) throw std::invalid_argument("max attempts must be at least 1");
}

CameraIntrinsics default_camera() {
  CameraIntrinsics k;
  k.f_x = 721.5377;
  k.f_y = 721.5377;
  k.c_u = 609.5593;
  k.c_v = 172.854;
  k.image_width = kKittiImageWidth;
  k.image_height = kKittiImageHeight;
  // Translation column of the reference left color camera.
  const double t_z = 2.745884e-03;
  k.baseline = {(44.85728 - k.c_u * t_z) / k.f_x, (0.2163791 - k.c_v * t_z) / k.f_y, t_z};
  return k;
}

namespace {

double quantize(double x) { return std::round(x * 100.0) / 100.0; }

Rng scene_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

double sample_depth(const SceneParams& p, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (p.depth_distribution == DepthDistribution::kUniform) return p.z_lo + u * (p.z_hi - p.z_lo);
  const double s = p.exponential_scale;
  return p.z_lo - s * std::log1p(-u * -std::expm1(-(p.z_hi - p.z_lo) / s));
}

Box2D clamp_box(const Box2D& b, const CameraIntrinsics& k) {
  Box2D c = b;
  c.u_min = std::clamp(b.u_min, 0.0, static_cast<double>(k.image_width));
  c.u_max = std::clamp(b.u_max, 0.0, static_cast<double>(k.image_width));
  c.v_min = std::clamp(b.v_min, 0.0, static_cast<double>(k.image_height));
  c.v_max = std::clamp(b.v_max, 0.0, static_cast<double>(k.image_height));
  return c;
}

int occlusion_level(double covered) {
  if (covered <= 0.05) return 0;
  return covered < 0.5 ? 1 : 2;
}

// Fraction of `box` covered by the union of `others`, on a sample grid.
double covered_fraction(const Box2D& box, std::span<const Box2D> others) {
  constexpr int kGrid = 16;
  if (others.empty() || !(box.area() > 0.0)) return 0.0;
  int hits = 0;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double u = box.u_min + (i + 0.5) / kGrid * box.width();
      const double v = box.v_min + (j + 0.5) / kGrid * box.height();
      for (const Box2D& o : others) {
        if (u >= o.u_min && u < o.u_max && v >= o.v_min && v < o.v_max) {
          ++hits;
          break;
        }
      }
    }
  }
  return static_cast<double>(hits) / (kGrid * kGrid);
}

}  // namespace

Scene generate_scene(const SceneParams& params, const CameraIntrinsics& k, std::uint64_t index,
                     bool render) {
  params.validate();
  k.validate();
  Rng rng(scene_rng(params.seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::discrete_distribution<int> pick_class(params.class_weights.begin(),
                                             params.class_weights.end());
  const auto priors = default_class_priors();
  const double bearing_lo = params.lateral_fraction * std::atan2(-k.c_u, k.f_x);
  const double bearing_hi = params.lateral_fraction * std::atan2(k.image_width - k.c_u, k.f_x);

  Scene scene;
  scene.camera = k;
  std::vector<Box2D> full_boxes;
  const int n = std::uniform_int_distribution<int>(params.min_objects, params.max_objects)(rng);
  for (int obj = 0; obj < n; ++obj) {
    for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
      const ClassId cls = static_cast<ClassId>(pick_class(rng));
      const Size3& ref = priors[static_cast<std::size_t>(cls)].reference;
      const double jw = std::exp(params.size_jitter * gauss(rng));
      const double jh = std::exp(params.size_jitter * gauss(rng));
      const double jl = std::exp(params.size_jitter * gauss(rng));
      const double z = sample_depth(params, rng);
      const double bearing = bearing_lo + unit(rng) * (bearing_hi - bearing_lo);
      const double yaw = wrap_angle((2.0 * unit(rng) - 1.0) * std::numbers::pi);

      KittiLabelRecord rec;
      rec.type = class_name(cls);
      rec.height = quantize(ref.height * jh);
      rec.width = quantize(ref.width * jw);
      rec.length = quantize(ref.length * jl);
      rec.location = {quantize(z * std::tan(bearing)), quantize(params.camera_height), quantize(z)};
      rec.rotation_y = quantize(yaw);
      Box3D box = kitti_to_box3d(rec);
      if (nearest_depth(box) < params.min_nearest_depth) continue;

      const Box2D full = project_box_to_2d(k, box);
      const Box2D clamped = clamp_box(full, k);
      if (!(clamped.area() > 0.0)) continue;
      bool clash = false;
      for (std::size_t i = 0; i < scene.objects.size() && !clash; ++i) {
        clash = bev_iou(box, scene.objects[i]) > 0.0 ||
                iou_2d(full, full_boxes[i]) > params.max_pair_iou;
      }
      if (clash) continue;

      rec.truncated = params.simulate_truncation ? quantize(1.0 - clamped.area() / full.area()) : 0.0;
      rec.bbox = {quantize(clamped.u_min), quantize(clamped.v_min), quantize(clamped.u_max),
                  quantize(clamped.v_max)};
      rec.alpha = quantize(egocentric_to_allocentric(rec.rotation_y, box.center));
      scene.labels.push_back(rec);
      scene.objects.push_back(box);
      full_boxes.push_back(full);
      break;
    }
  }

  if (params.simulate_occlusion) {
    for (std::size_t i = 0; i < scene.labels.size(); ++i) {
      const auto& bi = scene.labels[i].bbox;
      const Box2D mine{bi[0], bi[1], bi[2], bi[3]};
      std::vector<Box2D> nearer;
      for (std::size_t j = 0; j < scene.labels.size(); ++j) {
        if (j == i || scene.objects[j].center.z >= scene.objects[i].center.z) continue;
        const auto& bj = scene.labels[j].bbox;
        nearer.push_back({bj[0], bj[1], bj[2], bj[3]});
      }
      scene.labels[i].occluded = occlusion_level(covered_fraction(mine, nearer));
    }
  }
  for (std::size_t i = 0; i < scene.labels.size(); ++i) {
    scene.objects[i] = kitti_to_box3d(scene.labels[i]);
  }
  if (render) scene.raster = render_scene(k, scene.objects, params.seed ^ (index * 0x9e3779b97f4a7c15ULL));
  return scene;
}

std::vector<Scene> generate_scenes(const SceneParams& params, const CameraIntrinsics& k,
                                   std::size_t count, bool render, int jobs) {
  std::vector<Scene> scenes(count);
  parallel_for(count, jobs, [&](std::size_t i) { scenes[i] = generate_scene(params, k, i, render); });
  return scenes;
}

Image render_scene(const CameraIntrinsics& k, std::span<const Box3D> objects,
                   std::uint64_t color_seed) {
  Image img(k.image_width, k.image_height, 3);
  for (int v = 0; v < img.height(); ++v) {
    const double t = std::clamp((v - k.c_v) / std::max(1.0, img.height() - k.c_v), -1.0, 1.0);
    const std::array<float, 3> color =
        t < 0.0 ? std::array<float, 3>{static_cast<float>(150 - 60 * t), static_cast<float>(190 - 40 * t), 235.0F}
                : std::array<float, 3>{static_cast<float>(90 + 60 * t), static_cast<float>(90 + 55 * t),
                                       static_cast<float>(85 + 45 * t)};
    float* row = img.row(v);
    for (int u = 0; u < img.width(); ++u) {
      for (int c = 0; c < 3; ++c) row[u * 3 + c] = color[static_cast<std::size_t>(c)];
    }
  }

  std::vector<std::size_t> order(objects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return objects[a].center.z > objects[b].center.z;
  });

  static constexpr std::array<std::array<int, 4>, 6> kFaces{{{0, 1, 2, 3},
                                                             {4, 5, 6, 7},
                                                             {0, 1, 5, 4},
                                                             {1, 2, 6, 5},
                                                             {2, 3, 7, 6},
                                                             {3, 0, 4, 7}}};
  static constexpr std::array<float, 6> kShade{0.45F, 1.0F, 0.85F, 0.7F, 0.6F, 0.75F};

  for (std::size_t oi : order) {
    const Box3D& box = objects[oi];
    if (nearest_depth(box) <= 0.0) continue;
    Rng rng(color_seed + oi);
    std::uniform_real_distribution<float> channel(40.0F, 230.0F);
    const std::array<float, 3> base{channel(rng), channel(rng), channel(rng)};
    const auto corners = box3d_corners(box);
    std::array<Pixel, 8> px;
    for (int i = 0; i < 8; ++i) px[i] = project(k, corners[i]);

    std::array<int, 6> face_order{0, 1, 2, 3, 4, 5};
    auto face_depth = [&](int f) {
      double s = 0.0;
      for (int c : kFaces[f]) s += corners[c].z;
      return s;
    };
    std::sort(face_order.begin(), face_order.end(),
              [&](int a, int b) { return face_depth(a) > face_depth(b); });

    for (int f : face_order) {
      std::array<Pixel, 4> poly;
      for (int i = 0; i < 4; ++i) poly[i] = px[kFaces[f][i]];
      double area2 = 0.0;
      for (int i = 0; i < 4; ++i) {
        const Pixel& a = poly[i];
        const Pixel& b = poly[(i + 1) % 4];
        area2 += a.u * b.v - b.u * a.v;
      }
      if (std::abs(area2) < 1e-9) continue;
      const double sign = area2 > 0.0 ? 1.0 : -1.0;
      double u0 = poly[0].u, u1 = poly[0].u, v0 = poly[0].v, v1 = poly[0].v;
      for (const Pixel& p : poly) {
        u0 = std::min(u0, p.u);
        u1 = std::max(u1, p.u);
        v0 = std::min(v0, p.v);
        v1 = std::max(v1, p.v);
      }
      const int x0 = std::max(0, static_cast<int>(std::floor(u0)));
      const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(u1)));
      const int y0 = std::max(0, static_cast<int>(std::floor(v0)));
      const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(v1)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double pu = x + 0.5;
          const double pv = y + 0.5;
          bool inside = true;
          for (int i = 0; i < 4 && inside; ++i) {
            const Pixel& a = poly[i];
            const Pixel& b = poly[(i + 1) % 4];
            inside = sign * ((b.u - a.u) * (pv - a.v) - (b.v - a.v) * (pu - a.u)) >= 0.0;
          }
          if (!inside) continue;
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = base[static_cast<std::size_t>(c)] * kShade[f];
        }
      }
    }
  }
  return img;
}

void export_scene(const std::filesystem::path& root, const std::string& id, const Scene& scene) {
  write_text_file(root / "label_2" / (id + ".txt"), format_label_file(scene.labels));
  write_text_file(root / "calib" / (id + ".txt"), format_calib(make_calibration(scene.camera)));
  if (!scene.raster.empty()) {
    std::filesystem::create_directories(root / "image_2");
    write_png(root / "image_2" / (id + ".png"), scene.raster);
  }
}

bool DepthRange::contains(double z) const {
  return std::any_of(parts.begin(), parts.end(),
                     [z](const DepthInterval& p) { return z >= p.lo && z < p.hi; });
}

DepthRange DepthRange::parse(std::string_view text) {
  DepthRange range;
  auto number = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw std::invalid_argument("bad depth range '" + std::string(text) + "'");
    }
    return v;
  };
  if (text.empty()) return range;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view part = text.substr(pos, comma - pos);
    const std::size_t dash = part.find('-');
    if (dash == std::string_view::npos) {
      throw std::invalid_argument("depth range part '" + std::string(part) + "' needs lo-hi");
    }
    DepthInterval iv{number(part.substr(0, dash)), number(part.substr(dash + 1))};
    if (!(iv.lo >= 0.0) || iv.hi < iv.lo) {
      throw std::invalid_argument("depth range part '" + std::string(part) + "' needs 0 <= lo <= hi");
    }
    range.parts.push_back(iv);
    pos = comma + 1;
  }
  return range;
}

std::string DepthRange::to_string() const {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%g-%g", i ? "," : "", parts[i].lo, parts[i].hi);
    out += buf;
  }
  return out;
}

RangeSplitDefinition named_range_split(std::string_view name) {
  if (name == "far/near") return {{{{0.0, 20.0}}}, {{{20.0, 50.0}}}};
  if (name == "near/far") return {{{{20.0, 50.0}}}, {{{0.0, 20.0}}}};
  if (name == "near+far/middle") return {{{{0.0, 10.0}, {20.0, 40.0}}}, {{{10.0, 20.0}}}};
  throw std::invalid_argument("unknown range split '" + std::string(name) +
                              "' (expected far/near, near/far or near+far/middle)");
}

std::vector<KittiLabelRecord> filter_labels(std::span<const KittiLabelRecord> labels,
                                            const DepthRange& range) {
  std::vector<KittiLabelRecord> out;
  for (const KittiLabelRecord& r : labels) {
    if (r.dont_care() || range.contains(r.location.z)) out.push_back(r);
  }
  return out;
}

Scene filter_scene(const Scene& scene, const DepthRange& range) {
  Scene out;
  out.camera = scene.camera;
  out.raster = scene.raster;
  for (std::size_t i = 0; i < scene.labels.size(); ++i) {
    const KittiLabelRecord& r = scene.labels[i];
    if (!r.dont_care() && !range.contains(r.location.z)) continue;
    out.labels.push_back(r);
    if (i < scene.objects.size()) out.objects.push_back(scene.objects[i]);
  }
  return out;
}

RangeSplit make_range_split(std::span<const Scene> scenes, const DepthRange& train_range,
                            const DepthRange& val_range) {
  RangeSplit split;
  split.train.reserve(scenes.size());
  split.val.reserve(scenes.size());
  for (const Scene& s : scenes) {
    split.train.push_back(filter_scene(s, train_range));
    split.val.push_back(filter_scene(s, val_range));
  }
  return split;
}

}  // namespace virtview
