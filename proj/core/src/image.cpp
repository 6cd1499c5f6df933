#include "gswm/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "gswm/error.hpp"
#include "gswm/fileio.hpp"

namespace gswm {

ImageBuffer::ImageBuffer(int width, int height, double fill)
    : width_(width), height_(height) {
  require(width >= 0 && height >= 0, ErrorCode::kInvalidArgument, "negative image size");
  pixels_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
}

void ImageBuffer::fill(double v) { std::fill(pixels_.begin(), pixels_.end(), v); }

void ImageBuffer::clamp01() {
  for (double& v : pixels_) v = std::clamp(v, 0.0, 1.0);
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (!a.same_shape(b)) {
    fail(ErrorCode::kShapeMismatch,
         std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
             " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct PngWriteBuffer {
  std::string bytes;
};

void png_write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* buf = static_cast<PngWriteBuffer*>(png_get_io_ptr(png));
  buf->bytes.append(reinterpret_cast<const char*>(data), length);
}

void png_flush_callback(png_structp) {}

}  // namespace

ImageBuffer read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  const std::string data = read_file(path);
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size())) {
    fail(ErrorCode::kParse, path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::kParse, path.string() + ": " + image.message);
  }
  ImageBuffer out(static_cast<int>(image.width), static_cast<int>(image.height));
  auto values = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = raw[i] / 255.0;
  return out;
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image) {
  require(!image.empty(), ErrorCode::kInvalidArgument, "cannot write empty image");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "libpng initialisation failed");
  }
  PngWriteBuffer buffer;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width()) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "PNG encoding failed for " + path.string());
  }
  png_set_write_fn(png, &buffer, png_write_callback, png_flush_callback);
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) row[x * 3 + c] = to_byte(image.at(x, y, c));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  atomic_write_file(path, buffer.bytes);
}

ImageBuffer quantize8(const ImageBuffer& image) {
  ImageBuffer out = image;
  for (double& v : out.values()) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace gswm
