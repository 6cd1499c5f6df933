#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gswm/codec.hpp"
#include "gswm/image.hpp"

namespace gswm {

enum class CorpusKind { kGradient = 0, kValueNoise = 1, kCheckerboard = 2, kSceneRender = 3 };

/// Deterministic procedural image #index of the corpus: gradients, multi-octave
/// value noise, rotated checkerboards and renders of small synthetic scenes, in
/// rotation.
ImageBuffer corpus_image(std::uint64_t seed, std::uint64_t index, int resolution);
CorpusKind corpus_kind(std::uint64_t index);

struct PretrainConfig {
  int steps = 20000;
  int batch = 1;
  int resolution = 64;
  double lr = 1e-3;
  double weight_bce = 10.0;
  double weight_image = 1.0;
  double weight_adv = 0.01;
  int max_attack_level = 2;        ///< mild ladder levels for the in-loop augmentations
  double blur_sigma_max = 4.0;     ///< in-loop blur draws sigma from U[0.5, this]
  int clean_warmup_steps = 0;      ///< steps trained without augmentations first
  std::uint64_t corpus_size = 4096;
  int holdout = 64;                ///< held-out images, indices corpus_size ..
  int log_every = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PretrainLog {
  int step = 0;
  double bce = 0.0;
  double image = 0.0;
  double adv = 0.0;
  double bit_accuracy = 0.0;  ///< on the augmented training batch
};

struct PretrainResult {
  DecoderModel decoder;
  EncoderModel encoder;
  double holdout_bit_accuracy = 0.0;  ///< clean, encoder-marked held-out images
  double holdout_psnr = 0.0;          ///< marked vs cover
  std::vector<PretrainLog> log;

  std::string to_json() const;
};

PretrainResult pretrain_decoder(const PretrainConfig& cfg,
                                const std::function<void(const PretrainLog&)>& progress = {});

struct HoldoutStats {
  double bit_accuracy = 0.0;
  double psnr = 0.0;
};

/// Encodes held-out corpus images with seeded random messages and decodes the
/// clean marked images.
HoldoutStats evaluate_holdout(const EncoderModel& encoder, const DecoderModel& decoder, const PretrainConfig& cfg);

}  // namespace gswm
