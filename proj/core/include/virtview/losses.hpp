#pragma once

#include <array>
#include <span>

#include "virtview/codec.hpp"
#include "virtview/geometry.hpp"

namespace virtview {

// Scalar training losses with analytic gradients. No network is involved;
// these are the exact maps a training harness would differentiate.

/// Focal loss on a probability. y is 0 or 1; alpha weights the positive
/// class. gamma = 0 reduces to alpha-balanced cross entropy.
double focal_loss(double p, int y, double gamma, double alpha);
/// d focal_loss / d p.
double focal_loss_grad(double p, int y, double gamma, double alpha);

double huber(double x, double delta);
double huber_grad(double x, double delta);

enum class ParamGroup : int { kCenter = 0, kDepth = 1, kSize = 2, kRotation = 3 };
inline constexpr int kNumParamGroups = 4;

/// Indices into Theta3D owned by `g`.
std::span<const int> group_params(ParamGroup g);

/// Everything the lifting transform needs besides the regression values.
struct LiftingContext {
  CameraIntrinsics view_camera{};  // intrinsics of the virtual view
  double viewport_z = 0.0;
  ClassPrior prior{};
  Pixel box2d_center{};            // anchor-decoded 2D center, virtual px
  double huber_delta = 3.0;
};

/// Corners (box3d_corners order) of the box decoded from theta.
std::array<Point3, 8> lift_corners(const Theta3D& theta, const LiftingContext& ctx);

struct LiftingLoss {
  std::array<double, kNumParamGroups> group{};
  double total = 0.0;
  /// grad[g][i] = d group[g] / d pred[i].
  std::array<std::array<double, 8>, kNumParamGroups> grad{};
};

/// Disentangled corner loss: for each group, the box is decoded from the
/// predicted values of that group and target values for all others, and
/// compared corner-wise with the target box under a per-coordinate Huber
/// penalty.
LiftingLoss lifting_disentangled_loss(const Theta3D& pred, const Theta3D& target,
                                      const LiftingContext& ctx);
LiftingLoss lifting_disentangled_loss(const Theta3D& pred, const ViewTarget& gt,
                                      const LiftingContext& ctx);

/// Binary cross entropy between sigmoid(zeta_3d) and exp(-loss / temperature).
double confidence_target_loss(double zeta_3d, double detached_3d_loss, double temperature);
/// d confidence_target_loss / d zeta_3d.
double confidence_target_loss_grad(double zeta_3d, double detached_3d_loss, double temperature);

/// Order: 2D confidence, 2D regression, 3D regression, 3D confidence.
struct LossWeights {
  double conf_2d = 1.0;
  double reg_2d = 0.5;
  double reg_3d = 1.0;
  double conf_3d = 0.5;
};

struct LossConstants {
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  double huber_delta = 3.0;
  double temperature = 1.0;
  double smooth_l1_beta = 1.0 / 9.0;
};

/// Per-view inputs, all spans indexed by anchor except `gt_classes` which
/// is indexed by ground-truth index. `targets` is read only for positives.
struct ViewLossInput {
  std::span<const Anchor> anchors;
  std::span<const AnchorAssignment> assignment;
  std::span<const RawDetection> predictions;
  std::span<const RawDetection> targets;
  std::span<const ClassId> gt_classes;
  CameraIntrinsics view_camera{};
  double viewport_z = 0.0;
};

struct LossBreakdown {
  double conf_2d = 0.0;
  double reg_2d = 0.0;
  double reg_3d = 0.0;
  double conf_3d = 0.0;
  double total = 0.0;
  int positives = 0;
};

/// Components are normalized by max(1, number of positives); `total` is the
/// weighted sum.
LossBreakdown total_loss(std::span<const ViewLossInput> views,
                         std::span<const ClassPrior, kNumClasses> priors,
                         const LossWeights& weights = {}, const LossConstants& constants = {});

}  // namespace virtview
