#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "virtview/codec.hpp"
#include "virtview/evaluation.hpp"
#include "virtview/losses.hpp"
#include "virtview/pipeline.hpp"
#include "virtview/viewport.hpp"

namespace virtview {

/// Every tunable constant of a run. Loadable from "key = value" text where
/// '#' starts a comment; `keys()` lists the accepted names.
struct RunConfig {
  ViewConfig views{};
  std::array<ClassPrior, kNumClasses> priors = default_class_priors();
  LossWeights loss_weights{};
  LossConstants loss_constants{};
  double score_threshold = 0.05;
  double view_nms_iou = 0.5;
  bool global_nms = false;
  double global_nms_iou = 0.5;
  OracleDetectorConfig oracle{};
  std::array<double, kNumClasses> eval_threshold_3d{0.7, 0.5, 0.5};
  std::array<double, kNumClasses> eval_threshold_bev{0.7, 0.5, 0.5};
  std::string data_root;
  std::uint64_t seed = 0;
  int jobs = 1;

  /// Throws std::invalid_argument on an unknown key or malformed value.
  void set(std::string_view key, std::string_view value);
  /// Applies every assignment in `text`; errors carry the line number.
  void apply_text(std::string_view text);
  void apply_file(const std::filesystem::path& path);
  void validate() const;

  InferenceConfig inference() const;
  EvalConfig evaluation() const;
  /// All keys with their current values, in a form apply_text accepts.
  std::string to_text() const;
  static std::vector<std::string> keys();
};

}  // namespace virtview
