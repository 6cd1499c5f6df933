#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace gswm {

/// Row-major interleaved RGB image. Values are nominally in [0,1]; the
/// in-memory buffer may leave that range during intermediate math and is
/// clamped when written out.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }
  std::size_t size() const { return pixels_.size(); }

  double& at(int x, int y, int c) { return pixels_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return pixels_[index(x, y, c)]; }

  std::span<double> values() { return pixels_; }
  std::span<const double> values() const { return pixels_; }

  bool same_shape(const ImageBuffer& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  void fill(double v);
  void clamp01();

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Throws Error(kShapeMismatch) when the two images differ in size.
void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what);

/// 8-bit PNG. Writing clamps to [0,1] and rounds; writes go through a
/// temporary file and an atomic rename.
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

/// Quantizes to 8 bits and back, i.e. what a PNG round trip would produce.
ImageBuffer quantize8(const ImageBuffer& image);

}  // namespace gswm
