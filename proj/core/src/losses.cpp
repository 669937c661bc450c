#include "virtview/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "detail/dual.hpp"

namespace virtview {

using detail::Dual;

double focal_loss(double p, int y, double gamma, double alpha) {
  if (y == 1) return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
  return -(1.0 - alpha) * std::pow(p, gamma) * std::log1p(-p);
}

double focal_loss_grad(double p, int y, double gamma, double alpha) {
  if (y == 1) {
    const double q = 1.0 - p;
    const double dpow = gamma == 0.0 ? 0.0 : -gamma * std::pow(q, gamma - 1.0);
    return -alpha * (dpow * std::log(p) + std::pow(q, gamma) / p);
  }
  const double dpow = gamma == 0.0 ? 0.0 : gamma * std::pow(p, gamma - 1.0);
  return -(1.0 - alpha) * (dpow * std::log1p(-p) - std::pow(p, gamma) / (1.0 - p));
}

namespace {

// Plain-double overloads so the templates below also instantiate for double.
using std::atan2;
using std::cos;
using std::exp;
using std::sin;

template <class T>
T huber_t(const T& x, double delta) {
  const double a = std::abs(detail::value(x));
  if (a <= delta) return 0.5 * x * x;
  const T ax = detail::value(x) < 0.0 ? -x : x;
  return delta * (ax - 0.5 * delta);
}

constexpr std::array<int, 2> kCenterIdx{0, 1};
constexpr std::array<int, 1> kDepthIdx{2};
constexpr std::array<int, 3> kSizeIdx{3, 4, 5};
constexpr std::array<int, 2> kRotationIdx{6, 7};

template <class T>
std::array<std::array<T, 3>, 8> lift_corners_t(const std::array<T, 8>& th,
                                               const LiftingContext& ctx) {
  const CameraIntrinsics& k = ctx.view_camera;
  const T cu = ctx.box2d_center.u + th[0];
  const T cv = ctx.box2d_center.v + th[1];
  const T z = ctx.viewport_z + ctx.prior.depth_mean + ctx.prior.depth_std * th[2];
  const T zc = z + k.baseline.z;
  const T x = (cu - k.c_u) * zc / k.f_x - k.baseline.x;
  const T y = (cv - k.c_v) * zc / k.f_y - k.baseline.y;
  const T hw = 0.5 * ctx.prior.reference.width * exp(th[3]);
  const T hh = 0.5 * ctx.prior.reference.height * exp(th[4]);
  const T hl = 0.5 * ctx.prior.reference.length * exp(th[5]);
  const T yaw = atan2(th[6], th[7]) + atan2(x, z);
  const T c = cos(yaw);
  const T s = sin(yaw);
  static constexpr std::array<std::array<double, 2>, 4> kFace{{{1, 1}, {1, -1}, {-1, -1}, {-1, 1}}};
  std::array<std::array<T, 3>, 8> out;
  for (int i = 0; i < 8; ++i) {
    const T lx = kFace[i % 4][0] * hl;
    const T lz = kFace[i % 4][1] * hw;
    out[i][0] = x + c * lx + s * lz;
    out[i][1] = i < 4 ? y + hh : y - hh;
    out[i][2] = z - s * lx + c * lz;
  }
  return out;
}

}  // namespace

std::span<const int> group_params(ParamGroup g) {
  switch (g) {
    case ParamGroup::kCenter: return kCenterIdx;
    case ParamGroup::kDepth: return kDepthIdx;
    case ParamGroup::kSize: return kSizeIdx;
    case ParamGroup::kRotation: return kRotationIdx;
  }
  throw std::invalid_argument("unknown parameter group");
}

double huber(double x, double delta) { return huber_t(x, delta); }

double huber_grad(double x, double delta) {
  if (std::abs(x) <= delta) return x;
  return x < 0.0 ? -delta : delta;
}

std::array<Point3, 8> lift_corners(const Theta3D& theta, const LiftingContext& ctx) {
  const auto c = lift_corners_t<double>(theta.v, ctx);
  std::array<Point3, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = {c[i][0], c[i][1], c[i][2]};
  return out;
}

LiftingLoss lifting_disentangled_loss(const Theta3D& pred, const Theta3D& target,
                                      const LiftingContext& ctx) {
  const auto gt = lift_corners_t<double>(target.v, ctx);
  LiftingLoss out;
  for (int g = 0; g < kNumParamGroups; ++g) {
    std::array<Dual<8>, 8> params;
    for (int i = 0; i < 8; ++i) params[i] = Dual<8>(target[i]);
    for (int i : group_params(static_cast<ParamGroup>(g))) {
      params[i] = Dual<8>::variable(pred[i], i);
    }
    const auto corners = lift_corners_t<Dual<8>>(params, ctx);
    Dual<8> loss(0.0);
    for (int c = 0; c < 8; ++c) {
      for (int a = 0; a < 3; ++a) loss = loss + huber_t(corners[c][a] - gt[c][a], ctx.huber_delta);
    }
    out.group[g] = loss.v;
    out.grad[g] = loss.d;
    out.total += loss.v;
  }
  return out;
}

LiftingLoss lifting_disentangled_loss(const Theta3D& pred, const ViewTarget& gt,
                                      const LiftingContext& ctx) {
  return lifting_disentangled_loss(pred, encode_3d(gt, ctx.box2d_center, ctx.prior), ctx);
}

namespace {

double confidence_target(double loss, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  return std::clamp(std::exp(-loss / temperature), 0.0, 1.0);
}

}  // namespace

double confidence_target_loss(double zeta, double detached_3d_loss, double temperature) {
  const double t = confidence_target(detached_3d_loss, temperature);
  // Stable BCE with logits: max(z, 0) - z t + log(1 + e^-|z|).
  return std::max(zeta, 0.0) - zeta * t + std::log1p(std::exp(-std::abs(zeta)));
}

double confidence_target_loss_grad(double zeta, double detached_3d_loss, double temperature) {
  return sigmoid(zeta) - confidence_target(detached_3d_loss, temperature);
}

LossBreakdown total_loss(std::span<const ViewLossInput> views,
                         std::span<const ClassPrior, kNumClasses> priors,
                         const LossWeights& weights, const LossConstants& constants) {
  if (weights.conf_2d < 0.0 || weights.reg_2d < 0.0 || weights.reg_3d < 0.0 ||
      weights.conf_3d < 0.0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  LossBreakdown out;
  auto smooth_l1 = [&](double d) {
    const double a = std::abs(d);
    const double b = constants.smooth_l1_beta;
    return a < b ? 0.5 * a * a / b : a - 0.5 * b;
  };
  for (const ViewLossInput& view : views) {
    const std::size_t n = view.anchors.size();
    if (view.assignment.size() != n || view.predictions.size() != n || view.targets.size() != n) {
      throw std::invalid_argument("total_loss: per-anchor spans must have equal length");
    }
    for (std::size_t a = 0; a < n; ++a) {
      const AnchorAssignment& as = view.assignment[a];
      if (as.state == AnchorState::kIgnore) continue;
      const RawDetection& pred = view.predictions[a];
      const bool positive = as.state == AnchorState::kPositive;
      const ClassId gt_class =
          positive ? view.gt_classes[static_cast<std::size_t>(as.gt_index)] : ClassId::kOther;
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const int y = positive && static_cast<std::size_t>(gt_class) == c ? 1 : 0;
        // Clamp keeps the log finite for saturated logits.
        const double p = std::clamp(sigmoid(pred.zeta_2d[c]), 1e-12, 1.0 - 1e-12);
        out.conf_2d += focal_loss(p, y, constants.focal_gamma, constants.focal_alpha);
      }
      if (!positive) continue;
      ++out.positives;
      const RawDetection& tgt = view.targets[a];
      out.reg_2d += smooth_l1(pred.theta_2d.du - tgt.theta_2d.du) +
                    smooth_l1(pred.theta_2d.dv - tgt.theta_2d.dv) +
                    smooth_l1(pred.theta_2d.dw - tgt.theta_2d.dw) +
                    smooth_l1(pred.theta_2d.dh - tgt.theta_2d.dh);
      const auto ci = static_cast<std::size_t>(gt_class);
      if (ci >= kNumClasses) continue;
      LiftingContext ctx;
      ctx.view_camera = view.view_camera;
      ctx.viewport_z = view.viewport_z;
      ctx.prior = priors[ci];
      ctx.box2d_center = decode_2d(view.anchors[a], tgt.theta_2d).center();
      ctx.huber_delta = constants.huber_delta;
      const LiftingLoss lifted = lifting_disentangled_loss(pred.theta_3d[ci], tgt.theta_3d[ci], ctx);
      out.reg_3d += lifted.total;
      out.conf_3d += confidence_target_loss(pred.zeta_3d[ci], lifted.total, constants.temperature);
    }
  }
  const double norm = std::max(1, out.positives);
  out.conf_2d /= norm;
  out.reg_2d /= norm;
  out.reg_3d /= norm;
  out.conf_3d /= norm;
  out.total = weights.conf_2d * out.conf_2d + weights.reg_2d * out.reg_2d +
              weights.reg_3d * out.reg_3d + weights.conf_3d * out.conf_3d;
  return out;
}

}  // namespace virtview
