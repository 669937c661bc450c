#include "virtview/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace virtview {

double intersection_area_2d(const Box2D& a, const Box2D& b) {
  const double w = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double h = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double iou_2d(const Box2D& a, const Box2D& b) {
  const double inter = intersection_area_2d(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

RotatedRect RotatedRect::footprint(const Box3D& b) {
  return {b.center.x, b.center.z, b.size.width, b.size.length, b.yaw};
}

std::array<std::array<double, 2>, 4> RotatedRect::corners() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  static constexpr std::array<std::array<double, 2>, 4> kSigns{{{1, 1}, {1, -1}, {-1, -1}, {-1, 1}}};
  std::array<std::array<double, 2>, 4> out{};
  for (int i = 0; i < 4; ++i) {
    const double lx = kSigns[i][0] * hl;
    const double lz = kSigns[i][1] * hw;
    out[i] = {x + c * lx + s * lz, z - s * lx + c * lz};
  }
  return out;
}

namespace {

using Vec2 = std::array<double, 2>;
// Convex polygons here have at most 8 vertices (quad clipped by a quad).
using Poly = std::vector<Vec2>;

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double signed_area(const Poly& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % p.size()];
    s += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * s;
}

Poly ccw(const RotatedRect& r) {
  const auto c = r.corners();
  Poly p(c.begin(), c.end());
  if (signed_area(p) < 0.0) std::reverse(p.begin(), p.end());
  return p;
}

Vec2 line_hit(const Vec2& p, const Vec2& q, const Vec2& e0, const Vec2& e1) {
  const double dp = cross(e0, e1, p);
  const double dq = cross(e0, e1, q);
  const double t = dp / (dp - dq);
  return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
}

}  // namespace

double bev_intersection_area(const RotatedRect& a, const RotatedRect& b) {
  Poly subject = ccw(a);
  const Poly clip = ccw(b);
  Poly next;
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Vec2& e0 = clip[e];
    const Vec2& e1 = clip[(e + 1) % clip.size()];
    const double len = std::hypot(e1[0] - e0[0], e1[1] - e0[1]);
    const double tol = kClipTolerance * len;
    next.clear();
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Vec2& cur = subject[i];
      const Vec2& prev = subject[(i + subject.size() - 1) % subject.size()];
      const bool cur_in = cross(e0, e1, cur) >= -tol;
      const bool prev_in = cross(e0, e1, prev) >= -tol;
      if (cur_in) {
        if (!prev_in) next.push_back(line_hit(prev, cur, e0, e1));
        next.push_back(cur);
      } else if (prev_in) {
        next.push_back(line_hit(prev, cur, e0, e1));
      }
    }
    subject.swap(next);
  }
  return subject.size() < 3 ? 0.0 : std::abs(signed_area(subject));
}

double bev_iou(const RotatedRect& a, const RotatedRect& b, bool* degenerate) {
  constexpr double kMinArea = 1e-12;
  const bool bad = !(a.area() > kMinArea) || !(b.area() > kMinArea);
  if (degenerate) *degenerate = bad;
  if (bad) return 0.0;
  const double inter = bev_intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double bev_iou(const Box3D& a, const Box3D& b) {
  return bev_iou(RotatedRect::footprint(a), RotatedRect::footprint(b));
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double y_lo = std::max(a.center.y - 0.5 * a.size.height, b.center.y - 0.5 * b.size.height);
  const double y_hi = std::min(a.center.y + 0.5 * a.size.height, b.center.y + 0.5 * b.size.height);
  if (!(y_hi > y_lo)) return 0.0;
  const double inter =
      bev_intersection_area(RotatedRect::footprint(a), RotatedRect::footprint(b)) * (y_hi - y_lo);
  const double va = a.size.width * a.size.height * a.size.length;
  const double vb = b.size.width * b.size.height * b.size.length;
  const double uni = va + vb - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

std::vector<std::size_t> nms(std::span<const double> scores, const OverlapFn& overlap,
                             double threshold) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                        [&](std::size_t k) { return overlap(k, i) > threshold; });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

}  // namespace virtview
