#pragma once

#include "gswm/image.hpp"

namespace gswm {

/// Mean squared error on the 0-255 scale.
double mse(const ImageBuffer& a, const ImageBuffer& b);

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(255^2 / mse), capped at 99 dB when mse < 1e-10.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// SSIM with an 11x11 Gaussian window (sigma 1.5), k1 = 0.01, k2 = 0.03, data
/// range 1, over valid window positions, averaged over channels. Images
/// smaller than the window use a window clipped to the image.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace gswm
