#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace virtview {

/// Interleaved floating-point raster; values are nominally in [0, 255].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0F);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  float& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  float at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::span<float> pixels() { return data_; }
  std::span<const float> pixels() const { return data_; }
  float* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_ * channels_; }
  const float* row(int y) const {
    return data_.data() + static_cast<std::size_t>(y) * width_ * channels_;
  }

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// 8-bit PNG I/O (gray or RGB). Values are rounded and clamped on write.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace virtview
