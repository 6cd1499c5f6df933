#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gswm/image.hpp"
#include "gswm/message.hpp"
#include "gswm/nn.hpp"

namespace gswm {

enum class ModelKind : std::uint32_t { kDecoder = 1, kEncoder = 2, kDiscriminator = 3 };

/// A fixed architecture plus its f32 parameters.
struct ConvModel {
  ModelKind kind = ModelKind::kDecoder;
  nn::Architecture arch;
  std::vector<float> params;

  friend bool operator==(const ConvModel&, const ConvModel&) = default;
};

/// Image -> 48 logits: four 3x3 stride-2 convs (16/32/64/64, leaky 0.2),
/// global mean pool, affine 64 -> 48.
nn::Architecture decoder_architecture();

/// (image, message broadcast to 48 planes) -> residual: three 3x3 stride-1
/// convs (64/64/3), leaky on all but the last.
nn::Architecture encoder_architecture();

struct DecoderModel : ConvModel {
  static DecoderModel initialized(std::uint64_t seed);
  static DecoderModel zeros();
};

struct EncoderModel : ConvModel {
  static EncoderModel initialized(std::uint64_t seed);
};

inline constexpr int kMinDecoderInput = 16;

/// 48 logits; bit i decodes as logits[i] > 0.
std::vector<double> decoder_forward(const DecoderModel& decoder, const ImageBuffer& image);

MessageBits decode_bits(std::span<const double> logits);

struct DecoderGradients {
  std::vector<double> d_params;  ///< empty in frozen mode
  ImageBuffer d_image;
};

/// Gradients of sum(d_logits * decoder_forward(image)). With `frozen` set,
/// only the image gradient is produced.
DecoderGradients decoder_backward(const DecoderModel& decoder, const ImageBuffer& image,
                                  std::span<const double> d_logits, bool frozen = false);

/// Decoder with parameters converted once, for repeated evaluation.
class DecoderRunner {
 public:
  explicit DecoderRunner(const DecoderModel& model);

  std::vector<double> logits(const ImageBuffer& image, nn::Tape<double>* tape = nullptr) const;
  ImageBuffer input_gradient(const nn::Tape<double>& tape, std::span<const double> d_logits) const;

 private:
  nn::Architecture arch_;
  std::vector<double> params_;
};

/// Encoder input: the image followed by 48 message planes. Plane b is the
/// b-th low-order cosine basis image, negated when bit b is 0.
template <typename T>
nn::Tensor<T> encoder_input(const nn::Tensor<T>& image, const MessageBits& message);

/// The last encoder layer's output z becomes the residual b * tanh(z).
inline constexpr double kResidualBound = 0.1;

/// Applies the residual bound in place; returns d residual / d z per entry.
std::vector<float> bound_residual(nn::Tensor<float>& raw);

/// Marked image = clamp(image + bounded encoder residual, 0, 1).
ImageBuffer encode(const EncoderModel& encoder, const ImageBuffer& image, const MessageBits& message);

/// Weight file: "GSWD" | u32 version | u32 model kind | u32 layer count |
/// per layer u32 {kind, in, out, kernel, stride, leaky} | f32 params, little-endian.
inline constexpr std::uint32_t kWeightFormatVersion = 1;

std::string serialize_model(const ConvModel& model);
ConvModel parse_model(std::string_view bytes);
void save_model(const std::filesystem::path& path, const ConvModel& model);
ConvModel load_model(const std::filesystem::path& path);
DecoderModel load_decoder(const std::filesystem::path& path);
EncoderModel load_encoder(const std::filesystem::path& path);

}  // namespace gswm
