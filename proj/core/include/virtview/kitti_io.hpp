#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "virtview/errors.hpp"
#include "virtview/geometry.hpp"

namespace virtview {

/// One line of a KITTI object label (15 fields) or result file (16 fields).
/// `location` is the bottom-face center; dimensions are (h, w, l).
struct KittiLabelRecord {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox{};  // left, top, right, bottom
  double height = 0.0;
  double width = 0.0;
  double length = 0.0;
  Point3 location{};
  double rotation_y = 0.0;
  std::optional<double> score;

  bool dont_care() const { return type == "DontCare"; }
  friend bool operator==(const KittiLabelRecord&, const KittiLabelRecord&) = default;
};

std::vector<KittiLabelRecord> parse_label_file(std::string_view text);
/// Geometry in "%.2f", score in "%.4f"; one record per line.
std::string format_label_file(std::span<const KittiLabelRecord> records);

/// Calibration file: every "key: numbers" line in file order.
struct Calibration {
  std::vector<std::pair<std::string, std::vector<double>>> entries;
  CameraIntrinsics camera{};  // derived from P2
  std::array<double, 12> p2{};

  const std::vector<double>* find(std::string_view key) const;
};

inline constexpr int kKittiImageWidth = 1242;
inline constexpr int kKittiImageHeight = 375;

/// Requires a "P2:" line with exactly 12 numbers. Image size defaults to the
/// nominal KITTI resolution; callers with the image at hand should override.
Calibration parse_calib(std::string_view text, int image_width = kKittiImageWidth,
                        int image_height = kKittiImageHeight);
/// Numbers in "%.12e".
std::string format_calib(const Calibration& calib);
/// Calibration holding P0..P3 = P2 of `k` plus identity R0_rect and zero
/// velodyne/imu transforms.
Calibration make_calibration(const CameraIntrinsics& k);

Box3D kitti_to_box3d(const KittiLabelRecord& rec);
/// `bbox` is the image-plane box to record; `type` overrides the class name
/// (unknown types survive a round trip this way).
KittiLabelRecord box3d_to_kitti(const Box3D& box, const Box2D& bbox,
                                std::optional<std::string> type = std::nullopt);

enum class Difficulty : int { kEasy = 0, kModerate = 1, kHard = 2, kNone = 3 };
inline constexpr std::array<Difficulty, 3> kDifficulties{Difficulty::kEasy, Difficulty::kModerate,
                                                         Difficulty::kHard};
const char* difficulty_name(Difficulty d);

struct DifficultyLimits {
  double min_height_px;
  int max_occlusion;
  double max_truncation;
};
DifficultyLimits difficulty_limits(Difficulty d);

/// Most permissive tier whose constraints all hold, Easy first.
Difficulty difficulty(double box_height_px, int occlusion, double truncation);
/// True iff the object satisfies the tier's constraints.
bool meets_difficulty(double box_height_px, int occlusion, double truncation, Difficulty d);

/// Six-digit zero-padded frame ids, one per line.
std::vector<std::string> parse_split(std::string_view text);
std::vector<std::string> load_split(const std::filesystem::path& path);
void write_split(const std::filesystem::path& path, std::span<const std::string> ids);
std::string frame_id(int index);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename.
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Writes <dir>/<frame>.txt in result format; an empty set yields an empty
/// file.
void write_results(const std::filesystem::path& dir, const std::string& frame,
                   std::span<const KittiLabelRecord> detections);

/// KITTI object directory layout rooted at `root`.
struct KittiDataset {
  std::filesystem::path root;

  std::filesystem::path label_path(const std::string& id) const;
  std::filesystem::path calib_path(const std::string& id) const;
  std::filesystem::path image_path(const std::string& id) const;
  /// Frame ids present in label_2/ (falls back to calib/), sorted.
  std::vector<std::string> frames() const;
  std::vector<KittiLabelRecord> labels(const std::string& id) const;
  Calibration calib(const std::string& id) const;
};

}  // namespace virtview
