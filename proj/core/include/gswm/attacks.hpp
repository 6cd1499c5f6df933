#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "gswm/image.hpp"

namespace gswm {

enum class AttackKind {
  kBlur,
  kBrightness,
  kContrast,
  kJpegProxy,
  kNoise,
  kErasing,
  kResizedCrop,
  kRotation,
  kElastic,
};

inline constexpr std::array<AttackKind, 9> kAllAttacks = {
    AttackKind::kBlur,    AttackKind::kBrightness,  AttackKind::kContrast,
    AttackKind::kJpegProxy, AttackKind::kNoise,     AttackKind::kErasing,
    AttackKind::kResizedCrop, AttackKind::kRotation, AttackKind::kElastic,
};

std::string_view attack_name(AttackKind kind);
/// Accepts the names produced by attack_name (blur, jpeg_proxy, resized_crop, ...).
AttackKind parse_attack_kind(std::string_view name);

/// Parameter at a ladder level (1..5):
///   blur            kernel radius r (sigma = r / 3)
///   brightness      multiplicative factor
///   contrast        factor around 0.5
///   jpeg_proxy      quality Q
///   noise           Gaussian std-dev
///   erasing         erased area fraction
///   resized_crop    kept area fraction
///   rotation        maximum absolute angle in degrees
///   elastic         displacement magnitude in pixels
double ladder(AttackKind kind, int level);

inline constexpr double kElasticSigma = 8.0;

struct AttackSpec {
  AttackKind kind = AttackKind::kBlur;
  int level = 3;
  std::optional<double> parameter;  ///< overrides the ladder when set
  std::uint64_t seed = 0;

  double resolved_parameter() const;
};

ImageBuffer apply(const AttackSpec& spec, const ImageBuffer& image);

/// An applied attack together with its vector-Jacobian product. Linear and
/// bilinear attacks return exact gradients, clamps and erasing mask them, and
/// jpeg_proxy and elastic pass the gradient through unchanged.
struct AttackResult {
  ImageBuffer image;
  std::function<ImageBuffer(const ImageBuffer&)> backward;
};

AttackResult apply_with_backward(const AttackSpec& spec, const ImageBuffer& image);

/// A = G o F: the frequency stage runs first, then the geometry stage.
struct AttackPipeline {
  std::vector<AttackSpec> frequency_stage;  ///< blur, jpeg_proxy, noise, brightness, contrast
  std::vector<AttackSpec> geometry_stage;   ///< elastic, erasing, rotation, resized_crop

  bool empty() const { return frequency_stage.empty() && geometry_stage.empty(); }
};

bool is_frequency_attack(AttackKind kind);

ImageBuffer apply_pipeline(const AttackPipeline& pipeline, const ImageBuffer& image);
AttackResult apply_pipeline_with_backward(const AttackPipeline& pipeline, const ImageBuffer& image);

/// Separable Gaussian blur with the given std-dev and kernel radius, reflect-101 borders.
ImageBuffer gaussian_blur(const ImageBuffer& image, double sigma, int radius);

/// Normalized 1D kernel used by the blur attack for radius r: sigma = r / 3,
/// taps at -ceil(r) .. ceil(r).
std::vector<double> blur_kernel(double radius);

/// Index of x in [0, n) under reflect-101 padding.
int reflect101(int x, int n);

}  // namespace gswm
