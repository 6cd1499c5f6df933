#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gswm/codec.hpp"
#include "gswm/image.hpp"
#include "gswm/nn.hpp"

namespace gswm {

inline constexpr int kPyramidLevels = 3;
inline constexpr double kGradientEps = 1e-6;

struct ReconstructionLoss {
  double total = 0.0;     ///< mse + lambda_proxy * proxy
  double mse = 0.0;
  double proxy = 0.0;     ///< gradient_term + mean of the pyramid levels
  double gradient_term = 0.0;
  std::array<double, kPyramidLevels> pyramid{};  ///< MSE at 1/2, 1/4, 1/8 resolution
  ImageBuffer gradient;   ///< d total / d rendered
};

/// Pixel MSE (values in [0,1]) plus a perceptual proxy: the mean squared
/// difference of per-channel gradient-magnitude maps
/// sqrt(dx^2 + dy^2 + 1e-6), with forward differences, plus the MSE on a
/// pyramid of 2x2-averaged images.
ReconstructionLoss reconstruction_loss(const ImageBuffer& rendered, const ImageBuffer& reference,
                                       double lambda_proxy);

/// Image -> 1 score: three 3x3 stride-2 convs (16/32/64, leaky 0.2), mean pool, affine 64 -> 1.
nn::Architecture discriminator_architecture();

struct DiscriminatorModel : ConvModel {
  static DiscriminatorModel initialized(std::uint64_t seed);
};

inline constexpr double kPenaltyWeight = 0.1;

struct AdversarialLosses {
  double score_real = 0.0;
  double score_fake = 0.0;
  double gen_loss = 0.0;      ///< softplus(-(s_fake - s_real))
  double disc_loss = 0.0;     ///< softplus(-(s_real - s_fake)) + penalties
  double penalty_real = 0.0;  ///< 0.1 * |d s_real / d real|^2
  double penalty_fake = 0.0;  ///< 0.1 * |d s_fake / d fake|^2
  ImageBuffer d_fake;               ///< d gen_loss / d fake
  std::vector<double> d_params;     ///< d disc_loss / d discriminator parameters
};

/// Relativistic pairing losses with zero-centered gradient penalties on both
/// inputs. Parameter gradients of the penalties are exact for the piecewise
/// linear network (activation masks are locally constant).
AdversarialLosses adversarial_losses(const nn::Architecture& arch, std::span<const double> params,
                                     const ImageBuffer& real, const ImageBuffer& fake,
                                     bool want_param_gradients = true);

/// Score, squared input-gradient norm, and their parameter gradients for a
/// conv stack ending in one linear unit. `d_score` and `d_penalty` weight the
/// two terms in the accumulated gradient.
struct ScoreAndPenalty {
  double score = 0.0;
  double grad_norm2 = 0.0;
  nn::Tensor<double> input_gradient;  ///< d score / d input
};

ScoreAndPenalty score_with_penalty(const nn::Architecture& arch, std::span<const double> params,
                                   const nn::Tensor<double>& input, double d_score, double d_penalty,
                                   std::span<double> d_params);

/// Softplus in a form that does not overflow.
double softplus(double x);

}  // namespace gswm
