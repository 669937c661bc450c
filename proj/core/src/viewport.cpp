#include "virtview/viewport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "virtview/errors.hpp"

namespace virtview {

void ViewConfig::validate() const {
  if (view_height_px <= 0 || view_width_px <= 0) throw std::invalid_argument("view size must be positive");
  if (!(viewport_height > 0.0)) throw std::invalid_argument("viewport_height must be positive");
  if (!(depth_resolution > 0.0)) throw std::invalid_argument("depth_resolution must be positive");
  if (!(z_min < z_max) || !(z_min > 0.0)) throw std::invalid_argument("need 0 < z_min < z_max");
  if (!(depth_std > 0.0)) throw std::invalid_argument("depth_std must be positive");
  if (views_per_image < 0) throw std::invalid_argument("views_per_image must be non-negative");
  if (!(guided_probability >= 0.0 && guided_probability <= 1.0)) {
    throw std::invalid_argument("guided_probability must lie in [0, 1]");
  }
  if (y_perturb_range < 0.0) throw std::invalid_argument("y_perturb_range must be non-negative");
  if (width_round_multiple <= 0) throw std::invalid_argument("width_round_multiple must be positive");
}

CameraIntrinsics VirtualViewSpec::virtual_intrinsics(const CameraIntrinsics& k) const {
  CameraIntrinsics v = k;
  v.f_x = k.f_x * scale_u;
  v.f_y = k.f_y * scale_v;
  v.c_u = (k.c_u - crop.u0) * scale_u;
  v.c_v = (k.c_v - crop.v0) * scale_v;
  v.image_width = out_width;
  v.image_height = out_height;
  return v;
}

double viewport_width(const ViewConfig& cfg, const CameraIntrinsics& k, int out_width_px) {
  return out_width_px * (cfg.viewport_height / cfg.view_height_px) * (k.f_y / k.f_x);
}

VirtualViewSpec viewport_to_spec(const CameraIntrinsics& k, const Viewport3D& vp, int out_width,
                                 int out_height) {
  if (!(vp.z + k.baseline.z > 0.0)) throw GeometryError("viewport behind the camera");
  if (out_width <= 0 || out_height <= 0) throw GeometryError("viewport output size must be positive");
  const Pixel tl = project(k, {vp.x_left, vp.y_top, vp.z});
  const Pixel br = project(k, {vp.x_left + vp.width, vp.y_top + vp.height, vp.z});
  VirtualViewSpec spec;
  spec.viewport = vp;
  spec.crop = {tl.u, tl.v, br.u, br.v};
  spec.out_width = out_width;
  spec.out_height = out_height;
  spec.scale_u = out_width / spec.crop.width();
  spec.scale_v = out_height / spec.crop.height();
  return spec;
}

namespace {

// Per-axis bilinear taps with out-of-range taps given zero weight and a
// clamped (always valid) index.
struct Taps {
  std::vector<int> i0, i1;
  std::vector<float> w0, w1;
};

Taps make_taps(int n_out, double origin, double scale, int n_src) {
  Taps t;
  t.i0.resize(n_out);
  t.i1.resize(n_out);
  t.w0.resize(n_out);
  t.w1.resize(n_out);
  for (int i = 0; i < n_out; ++i) {
    const double x = origin + (i + 0.5) / scale - 0.5;
    const double fl = std::floor(x);
    const int a = static_cast<int>(fl);
    const double f = x - fl;
    const bool a_ok = a >= 0 && a < n_src;
    const bool b_ok = a + 1 >= 0 && a + 1 < n_src;
    t.i0[i] = std::clamp(a, 0, n_src - 1);
    t.i1[i] = std::clamp(a + 1, 0, n_src - 1);
    t.w0[i] = a_ok ? static_cast<float>(1.0 - f) : 0.0F;
    t.w1[i] = b_ok ? static_cast<float>(f) : 0.0F;
  }
  return t;
}

}  // namespace

Image resample(const Image& source, const VirtualViewSpec& spec) {
  if (!(spec.crop.width() > 0.0) || !(spec.crop.height() > 0.0)) {
    throw GeometryError("resample: zero-area crop");
  }
  const int ch = source.channels();
  Image out(spec.out_width, spec.out_height, ch);
  if (source.width() == 0 || source.height() == 0) return out;

  const Taps cols = make_taps(spec.out_width, spec.crop.u0, spec.scale_u, source.width());
  const Taps rows = make_taps(spec.out_height, spec.crop.v0, spec.scale_v, source.height());

  std::vector<float> blended(static_cast<std::size_t>(source.width()) * ch);
  for (int y = 0; y < spec.out_height; ++y) {
    const float wa = rows.w0[y];
    const float wb = rows.w1[y];
    float* dst = out.row(y);
    if (wa == 0.0F && wb == 0.0F) continue;
    const float* ra = source.row(rows.i0[y]);
    const float* rb = source.row(rows.i1[y]);
    // Vertical pass into a scratch row, then horizontal taps.
    for (std::size_t i = 0; i < blended.size(); ++i) blended[i] = wa * ra[i] + wb * rb[i];
    const float* b = blended.data();
    if (ch == 3) {
      for (int x = 0; x < spec.out_width; ++x) {
        const float* p0 = b + cols.i0[x] * 3;
        const float* p1 = b + cols.i1[x] * 3;
        const float w0 = cols.w0[x];
        const float w1 = cols.w1[x];
        dst[3 * x + 0] = w0 * p0[0] + w1 * p1[0];
        dst[3 * x + 1] = w0 * p0[1] + w1 * p1[1];
        dst[3 * x + 2] = w0 * p0[2] + w1 * p1[2];
      }
    } else {
      for (int x = 0; x < spec.out_width; ++x) {
        const float* p0 = b + cols.i0[x] * ch;
        const float* p1 = b + cols.i1[x] * ch;
        for (int c = 0; c < ch; ++c) dst[ch * x + c] = cols.w0[x] * p0[c] + cols.w1[x] * p1[c];
      }
    }
  }
  return out;
}

Pixel virtual_to_source(const VirtualViewSpec& spec, Pixel virt) {
  return {spec.crop.u0 + virt.u / spec.scale_u, spec.crop.v0 + virt.v / spec.scale_v};
}

Pixel source_to_virtual(const VirtualViewSpec& spec, Pixel src) {
  return {(src.u - spec.crop.u0) * spec.scale_u, (src.v - spec.crop.v0) * spec.scale_v};
}

Box2D source_to_virtual(const VirtualViewSpec& spec, const Box2D& src) {
  Box2D out = src;
  const Pixel a = source_to_virtual(spec, Pixel{src.u_min, src.v_min});
  const Pixel b = source_to_virtual(spec, Pixel{src.u_max, src.v_max});
  out.u_min = a.u;
  out.v_min = a.v;
  out.u_max = b.u;
  out.v_max = b.v;
  return out;
}

std::optional<Box3D> lift_detection(const ViewDetection& det, const VirtualViewSpec& spec,
                                    const CameraIntrinsics& k) {
  const double z = det.depth + spec.viewport.z;
  if (!(z + k.baseline.z > 0.0)) return std::nullopt;
  Box3D box;
  box.center = backproject(k, virtual_to_source(spec, det.center), z);
  box.size = det.size;
  box.yaw = allocentric_to_egocentric(det.alpha, box.center);
  box.class_id = det.class_id;
  box.score = det.score;
  return box;
}

bool in_depth_window(const Box3D& box, double viewport_z, double depth_resolution) {
  const double rel = nearest_depth(box) - viewport_z;
  return rel >= 0.0 && rel <= depth_resolution;
}

namespace {

double uniform(Rng& rng, double lo, double hi) {
  if (!(hi > lo)) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Camera-frame x (resp. y) on the plane z whose projection hits column u (row v).
double x_at_column(const CameraIntrinsics& k, double u, double z) {
  return backproject(k, {u, k.c_v}, z).x;
}
double y_at_row(const CameraIntrinsics& k, double v, double z) {
  return backproject(k, {k.c_u, v}, z).y;
}

std::vector<ViewGroundTruth> adjust_ground_truth(std::span<const Box3D> gt, double viewport_z,
                                                 double depth_resolution) {
  std::vector<ViewGroundTruth> out;
  out.reserve(gt.size());
  for (const Box3D& b : gt) {
    ViewGroundTruth v;
    v.box = b;
    v.ignore = !in_depth_window(b, viewport_z, depth_resolution);
    v.relative_depth = b.center.z - viewport_z;
    out.push_back(v);
  }
  return out;
}

VirtualViewSpec random_view(const CameraIntrinsics& k, const ViewConfig& cfg, Rng& rng) {
  const double w_m = viewport_width(cfg, k, cfg.view_width_px);
  // Smallest depth at which the crop fits inside the source image.
  const double z_fit = std::max(k.f_y * cfg.viewport_height / k.image_height,
                                k.f_x * w_m / k.image_width) -
                       k.baseline.z;
  const double z_lo = std::max(cfg.z_min, z_fit);
  const double z = z_lo < cfg.z_max ? uniform(rng, z_lo, cfg.z_max) : z_lo;
  const double crop_w = k.f_x * w_m / (z + k.baseline.z);
  const double crop_h = k.f_y * cfg.viewport_height / (z + k.baseline.z);
  const double u0 = uniform(rng, 0.0, std::max(0.0, k.image_width - crop_w));
  const double v0 = uniform(rng, 0.0, std::max(0.0, k.image_height - crop_h));
  Viewport3D vp{x_at_column(k, u0, z), y_at_row(k, v0, z), z, cfg.viewport_height, w_m};
  return viewport_to_spec(k, vp, cfg.view_width_px, cfg.view_height_px);
}

VirtualViewSpec guided_view(const Box3D& target, const CameraIntrinsics& k, const ViewConfig& cfg,
                            Rng& rng) {
  const auto corners = box3d_corners(target);
  double z_near = corners[0].z;
  double y_top = corners[0].y;
  for (const Point3& p : corners) {
    z_near = std::min(z_near, p.z);
    y_top = std::min(y_top, p.y);
  }
  const double z_lo = std::max(z_near - 0.5 * cfg.depth_resolution, 0.5 * z_near);
  const double z = uniform(rng, z_lo, z_near);

  const Box2D box = project_box_to_2d(k, target);
  const double w_m = viewport_width(cfg, k, cfg.view_width_px);
  const double h_m = cfg.viewport_height;

  // Any y_top in [y_lo, y_hi] keeps the projected target vertically inside.
  const double y_hi = y_at_row(k, box.v_min, z);
  const double y_lo = y_at_row(k, box.v_max, z) - h_m;
  double y = uniform(rng, y_top - cfg.y_perturb_range, y_top + cfg.y_perturb_range);
  y = y_lo <= y_hi ? std::clamp(y, y_lo, y_hi) : 0.5 * (y_lo + y_hi);

  const double x_hi = x_at_column(k, box.u_min, z);
  const double x_lo = x_at_column(k, box.u_max, z) - w_m;
  const double x = x_lo <= x_hi ? uniform(rng, x_lo, x_hi) : 0.5 * (x_lo + x_hi);

  return viewport_to_spec(k, {x, y, z, h_m, w_m}, cfg.view_width_px, cfg.view_height_px);
}

}  // namespace

std::vector<TrainingView> sample_training_viewports(std::span<const Box3D> gt,
                                                    const CameraIntrinsics& k,
                                                    const ViewConfig& cfg, Rng& rng) {
  k.validate();
  cfg.validate();

  // Class-uniform draw, then objects without replacement within the class
  // (pools refill once exhausted).
  std::map<ClassId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (nearest_depth(gt[i]) > 0.0) by_class[gt[i].class_id].push_back(i);
  }
  std::vector<ClassId> classes;
  for (const auto& [c, _] : by_class) classes.push_back(c);
  std::map<ClassId, std::vector<std::size_t>> pools;

  std::bernoulli_distribution guided(cfg.guided_probability);
  std::vector<TrainingView> views;
  views.reserve(cfg.views_per_image);
  for (int i = 0; i < cfg.views_per_image; ++i) {
    TrainingView view;
    const bool use_gt = guided(rng);
    if (use_gt && !classes.empty()) {
      const ClassId c =
          classes[std::uniform_int_distribution<std::size_t>(0, classes.size() - 1)(rng)];
      auto& pool = pools[c];
      if (pool.empty()) pool = by_class[c];
      const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
      const std::size_t idx = pool[pick];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      view.spec = guided_view(gt[idx], k, cfg, rng);
      view.target = idx;
    } else {
      view.spec = random_view(k, cfg, rng);
    }
    view.ground_truth = adjust_ground_truth(gt, view.spec.viewport.z, cfg.depth_resolution);
    views.push_back(std::move(view));
  }
  return views;
}

std::vector<VirtualViewSpec> inference_viewports(const CameraIntrinsics& k, const ViewConfig& cfg,
                                                 int image_width) {
  k.validate();
  cfg.validate();
  const double step = 0.5 * cfg.depth_resolution;
  const int n = static_cast<int>(std::floor((cfg.z_max - cfg.z_min) / step + 1e-9)) + 1;
  std::vector<VirtualViewSpec> specs;
  specs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double z = cfg.z_min + i * step;
    const double exact = cfg.view_height_px / cfg.viewport_height * (z + k.baseline.z) / k.f_y *
                         image_width;
    const int m = cfg.width_round_multiple;
    const int w = std::max(m, static_cast<int>(std::ceil(exact / m - 1e-9)) * m);
    Viewport3D vp;
    vp.z = z;
    vp.height = cfg.viewport_height;
    vp.width = viewport_width(cfg, k, w);
    vp.x_left = x_at_column(k, 0.0, z);
    vp.y_top = cfg.inference_y_offset;
    specs.push_back(viewport_to_spec(k, vp, w, cfg.view_height_px));
  }
  return specs;
}

void write_view_records(std::ostream& os, std::span<const VirtualViewSpec> specs) {
  char line[512];
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    std::snprintf(line, sizeof line, "%zu %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %d %d\n", i,
                  s.viewport.x_left, s.viewport.y_top, s.viewport.z, s.viewport.height,
                  s.viewport.width, s.crop.u0, s.crop.v0, s.crop.u1, s.crop.v1, s.out_width,
                  s.out_height);
    os << line;
  }
}

std::vector<VirtualViewSpec> read_view_records(std::istream& is) {
  std::vector<VirtualViewSpec> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::size_t idx = 0;
    VirtualViewSpec s;
    if (!(ss >> idx >> s.viewport.x_left >> s.viewport.y_top >> s.viewport.z >> s.viewport.height >>
          s.viewport.width >> s.crop.u0 >> s.crop.v0 >> s.crop.u1 >> s.crop.v1 >> s.out_width >>
          s.out_height)) {
      throw ParseError("malformed view record", line_no);
    }
    s.scale_u = s.out_width / s.crop.width();
    s.scale_v = s.out_height / s.crop.height();
    out.push_back(s);
  }
  return out;
}

}  // namespace virtview
