#include "gswm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gswm/error.hpp"

namespace gswm {

double mse(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "mse");
  require(!a.empty(), ErrorCode::kInvalidArgument, "mse of empty images");
  const auto va = a.values();
  const auto vb = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = 255.0 * (va[i] - vb[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(va.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  const double m = mse(a, b);
  if (m < 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / m));
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    w[i] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable valid-mode filtering of a single-channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h,
                                 const std::vector<double>& kx, const std::vector<double>& ky) {
  const int ox = w - static_cast<int>(kx.size()) + 1;
  const int oy = h - static_cast<int>(ky.size()) + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ox) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ox; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < kx.size(); ++k) s += kx[k] * plane[y * w + x + k];
      tmp[y * ox + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ox) * oy);
  for (int y = 0; y < oy; ++y) {
    for (int x = 0; x < ox; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < ky.size(); ++k) s += ky[k] * tmp[(y + k) * ox + x];
      out[y * ox + x] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "ssim");
  require(!a.empty(), ErrorCode::kInvalidArgument, "ssim of empty images");
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const int w = a.width();
  const int h = a.height();
  const auto kx = gaussian_window(std::min(11, w), 1.5);
  const auto ky = gaussian_window(std::min(11, h), 1.5);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * w + i;
        x[k] = a.at(i, j, c);
        y[k] = b.at(i, j, c);
        xx[k] = x[k] * x[k];
        yy[k] = y[k] * y[k];
        xy[k] = x[k] * y[k];
      }
    }
    const auto mx = filter_valid(x, w, h, kx, ky);
    const auto my = filter_valid(y, w, h, kx, ky);
    const auto sxx = filter_valid(xx, w, h, kx, ky);
    const auto syy = filter_valid(yy, w, h, kx, ky);
    const auto sxy = filter_valid(xy, w, h, kx, ky);
    double sum = 0.0;
    for (std::size_t k = 0; k < mx.size(); ++k) {
      const double vx = sxx[k] - mx[k] * mx[k];
      const double vy = syy[k] - my[k] * my[k];
      const double cxy = sxy[k] - mx[k] * my[k];
      sum += ((2 * mx[k] * my[k] + kC1) * (2 * cxy + kC2)) /
             ((mx[k] * mx[k] + my[k] * my[k] + kC1) * (vx + vy + kC2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / 3.0;
}

}  // namespace gswm
