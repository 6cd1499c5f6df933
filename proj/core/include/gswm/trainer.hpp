#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gswm/attacks.hpp"
#include "gswm/camera.hpp"
#include "gswm/codec.hpp"
#include "gswm/message.hpp"
#include "gswm/rasterizer.hpp"
#include "gswm/scene.hpp"

namespace gswm {

struct LossWeights {
  double rec = 1.0;
  double wm = 1.5;
  double adv = 0.5;
};

struct TrainConfig {
  int iterations = 1000;
  double lr = 1e-4;
  double final_lr_fraction = 0.1;  ///< lr(iterations) = lr * final_lr_fraction
  LossWeights weights;
  double lambda_lpips_proxy = 0.2;
  double blur_sigma_min = 2.0;
  double blur_sigma_max = 4.0;
  int geometric_max_level = 3;     ///< geometric surrogate level drawn from 1..this
  bool adv_enabled = true;
  double disc_lr = 1e-4;
  int patch_size = 32;
  int log_every = 10;
  std::uint64_t seed = 0;
  RasterConfig raster;

  void validate() const;
  /// lr * final_lr_fraction^(step / iterations)
  double lr_at(int step) const;
};

struct StepLog {
  int step = 0;
  double lr = 0.0;
  double total = 0.0;
  double rec = 0.0;
  double wm = 0.0;
  double adv = 0.0;   ///< generator loss
  double disc = 0.0;  ///< discriminator loss, including penalties
};

struct TrainReport {
  std::vector<StepLog> steps;  ///< every log_every-th step, plus the last
  double final_clean_bit_accuracy = 0.0;
  std::vector<double> per_view_bit_accuracy;
  std::string message_hex;
  TrainConfig config;
  std::size_t trainable_primitives = 0;

  std::string to_json() const;
};

struct EmbedResult {
  GaussianScene scene;
  TrainReport report;
};

/// Number of optimized scalars per unfrozen primitive:
/// center 3, log_scale 3, rotation 4, opacity logit 1, color 3.
inline constexpr int kParamsPerPrimitive = 14;

/// Optimizes the unfrozen primitives so the frozen decoder reads `message`
/// from augmented renders while staying close to `references` (one per
/// camera, the renders before embedding).
EmbedResult embed(const GaussianScene& scene, const std::vector<Camera>& cameras,
                  const std::vector<ImageBuffer>& references, const DecoderModel& decoder,
                  const MessageBits& message, const TrainConfig& cfg,
                  const std::function<void(const StepLog&)>& progress = {});

/// The augmentation drawn at a training step: blur with sigma ~ U[min, max]
/// followed by one geometric attack at a random level.
AttackPipeline training_pipeline(const TrainConfig& cfg, std::uint64_t stream);

/// Mean clean bit accuracy of the decoded renders over the given cameras.
std::vector<double> clean_bit_accuracy(const GaussianScene& scene, const std::vector<Camera>& cameras,
                                       const DecoderModel& decoder, const MessageBits& message,
                                       const RasterConfig& raster = {});

}  // namespace gswm
