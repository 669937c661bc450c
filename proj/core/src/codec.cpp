#include "virtview/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "virtview/errors.hpp"
#include "virtview/overlap.hpp"

namespace virtview {

std::array<ClassPrior, kNumClasses> default_class_priors(double depth_mean, double depth_std) {
  return {{
      {ClassId::kCar, {1.63, 1.53, 3.84}, depth_mean, depth_std},
      {ClassId::kPedestrian, {0.63, 1.77, 0.83}, depth_mean, depth_std},
      {ClassId::kCyclist, {0.57, 1.73, 1.78}, depth_mean, depth_std},
  }};
}

std::vector<Anchor> generate_anchors(int stride, int grid_width, int grid_height) {
  if (stride != 16 && stride != 32) throw std::invalid_argument("anchor stride must be 16 or 32");
  std::vector<Anchor> out;
  out.reserve(static_cast<std::size_t>(std::max(0, grid_width * grid_height)) * kAnchorsPerCell);
  for (int gy = 0; gy < grid_height; ++gy) {
    for (int gx = 0; gx < grid_width; ++gx) {
      for (int j = 0; j < kAnchorScales; ++j) {
        const double scale = 2.0 * stride * std::exp2(j / 3.0);
        for (double ratio : kAnchorRatios) {
          const double r = std::sqrt(ratio);
          out.push_back({scale / r, scale * r, {gx, gy}, stride});
        }
      }
    }
  }
  return out;
}

std::vector<Anchor> generate_view_anchors(int view_width, int view_height) {
  std::vector<Anchor> out;
  for (int stride : kLevelStrides) {
    auto level = generate_anchors(stride, (view_width + stride - 1) / stride,
                                  (view_height + stride - 1) / stride);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

Box2D decode_2d(const Anchor& anchor, const Theta2D& t) {
  const Pixel g = anchor.cell_center();
  return Box2D::from_center({g.u + t.du * anchor.width, g.v + t.dv * anchor.height},
                            anchor.width * std::exp(t.dw), anchor.height * std::exp(t.dh));
}

Theta2D encode_2d(const Anchor& anchor, const Box2D& box) {
  if (!(box.width() > 0.0) || !(box.height() > 0.0)) {
    throw GeometryError("encode_2d: box must have positive extent");
  }
  const Pixel g = anchor.cell_center();
  const Pixel c = box.center();
  return {(c.u - g.u) / anchor.width, (c.v - g.v) / anchor.height,
          std::log(box.width() / anchor.width), std::log(box.height() / anchor.height)};
}

ViewDetection decode_3d(const Theta3D& t, const ClassPrior& prior, Pixel box2d_center) {
  if (t[6] == 0.0 && t[7] == 0.0) throw GeometryError("decode_3d: zero rotation vector");
  ViewDetection d;
  d.class_id = prior.class_id;
  d.center = {box2d_center.u + t[0], box2d_center.v + t[1]};
  d.depth = prior.depth_mean + prior.depth_std * t[2];
  d.size = {prior.reference.width * std::exp(t[3]), prior.reference.height * std::exp(t[4]),
            prior.reference.length * std::exp(t[5])};
  d.alpha = wrap_angle(std::atan2(t[6], t[7]));
  return d;
}

ViewTarget make_view_target(const Box3D& box, const VirtualViewSpec& spec,
                            const CameraIntrinsics& k) {
  ViewTarget t;
  t.class_id = box.class_id;
  t.box2d = source_to_virtual(spec, project_box_to_2d(k, box));
  t.center = source_to_virtual(spec, project(k, box.center));
  t.depth = box.center.z - spec.viewport.z;
  t.size = box.size;
  t.alpha = egocentric_to_allocentric(box.yaw, box.center);
  return t;
}

Theta3D encode_3d(const ViewTarget& target, Pixel c, const ClassPrior& prior) {
  const Size3& s = target.size;
  if (!(s.width > 0.0) || !(s.height > 0.0) || !(s.length > 0.0)) {
    throw GeometryError("encode: sizes must be positive");
  }
  Theta3D t;
  t[0] = target.center.u - c.u;
  t[1] = target.center.v - c.v;
  t[2] = (target.depth - prior.depth_mean) / prior.depth_std;
  t[3] = std::log(s.width / prior.reference.width);
  t[4] = std::log(s.height / prior.reference.height);
  t[5] = std::log(s.length / prior.reference.length);
  t[6] = std::sin(target.alpha);
  t[7] = std::cos(target.alpha);
  return t;
}

RawDetection encode(const ViewTarget& target, const Anchor& anchor, const ClassPrior& prior) {
  RawDetection raw;
  raw.theta_2d = encode_2d(anchor, target.box2d);
  const Pixel c = decode_2d(anchor, raw.theta_2d).center();
  const auto ci = static_cast<std::size_t>(prior.class_id);
  if (ci >= kNumClasses) throw std::invalid_argument("encode: prior class has no head output");
  raw.theta_3d[ci] = encode_3d(target, c, prior);
  return raw;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Confidences confidences(const RawDetection& raw, ClassId c) {
  const auto i = static_cast<std::size_t>(c);
  Confidences out;
  out.p_2d = sigmoid(raw.zeta_2d.at(i));
  out.p_3d_given_2d = sigmoid(raw.zeta_3d.at(i));
  out.p_3d = out.p_2d * out.p_3d_given_2d;
  return out;
}

std::vector<AnchorAssignment> assign_ground_truth(std::span<const Anchor> anchors,
                                                  std::span<const Box2D> gt_2d,
                                                  std::span<const bool> ignore_flags,
                                                  AssignmentThresholds thr) {
  if (ignore_flags.size() != gt_2d.size()) {
    throw std::invalid_argument("assign_ground_truth: ignore flags must match ground truth");
  }
  std::vector<AnchorAssignment> out(anchors.size());
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const Box2D ab = anchors[a].box();
    double best = 0.0;
    int best_idx = -1;
    double best_ignored = 0.0;
    int best_ignored_idx = -1;
    for (std::size_t g = 0; g < gt_2d.size(); ++g) {
      const double iou = iou_2d(ab, gt_2d[g]);
      if (ignore_flags[g]) {
        if (iou > best_ignored) {
          best_ignored = iou;
          best_ignored_idx = static_cast<int>(g);
        }
      } else if (iou > best) {
        best = iou;
        best_idx = static_cast<int>(g);
      }
    }
    AnchorAssignment& s = out[a];
    if (best_idx >= 0 && best > thr.positive && best >= best_ignored) {
      s = {AnchorState::kPositive, best_idx, best};
    } else if (best_ignored_idx >= 0 && best_ignored >= thr.negative) {
      s = {AnchorState::kIgnore, best_ignored_idx, best_ignored};
    } else if (best >= thr.negative) {
      s = {AnchorState::kIgnore, best_idx, best};
    } else {
      s = {AnchorState::kNegative, -1, std::max(best, best_ignored)};
    }
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'V', 'V', 'R', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ParseError("raw records: truncated input");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, double v) {
  put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

}  // namespace

void write_raw_records(std::ostream& os, std::span<const RawRecord> records) {
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, kNumClasses);
  put_u32(os, static_cast<std::uint32_t>(records.size()));
  for (const RawRecord& r : records) {
    put_f32(os, r.view_index);
    put_f32(os, r.anchor.stride);
    put_f32(os, r.anchor.cell.x);
    put_f32(os, r.anchor.cell.y);
    put_f32(os, r.anchor.width);
    put_f32(os, r.anchor.height);
    for (double z : r.raw.zeta_2d) put_f32(os, z);
    put_f32(os, r.raw.theta_2d.du);
    put_f32(os, r.raw.theta_2d.dv);
    put_f32(os, r.raw.theta_2d.dw);
    put_f32(os, r.raw.theta_2d.dh);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      for (double v : r.raw.theta_3d[c].v) put_f32(os, v);
      put_f32(os, r.raw.zeta_3d[c]);
    }
  }
  if (!os) throw IoError("raw records: write failed");
}

std::vector<RawRecord> read_raw_records(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("raw records: bad magic");
  }
  if (get_u32(is) != kVersion) throw ParseError("raw records: unsupported version");
  if (get_u32(is) != kNumClasses) throw ParseError("raw records: class count mismatch");
  const std::uint32_t n = get_u32(is);
  std::vector<RawRecord> out;
  out.reserve(n);
  std::array<float, kRawRecordFloats> f{};
  for (std::uint32_t i = 0; i < n; ++i) {
    for (float& v : f) v = std::bit_cast<float>(get_u32(is));
    RawRecord r;
    std::size_t p = 0;
    r.view_index = static_cast<int>(f[p++]);
    r.anchor.stride = static_cast<int>(f[p++]);
    r.anchor.cell.x = static_cast<int>(f[p++]);
    r.anchor.cell.y = static_cast<int>(f[p++]);
    r.anchor.width = f[p++];
    r.anchor.height = f[p++];
    for (double& z : r.raw.zeta_2d) z = f[p++];
    r.raw.theta_2d = {f[p], f[p + 1], f[p + 2], f[p + 3]};
    p += 4;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      for (double& v : r.raw.theta_3d[c].v) v = f[p++];
      r.raw.zeta_3d[c] = f[p++];
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace virtview
