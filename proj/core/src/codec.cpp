#include "gswm/codec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <utility>

#include "gswm/error.hpp"
#include "gswm/fileio.hpp"

namespace gswm {

using nn::LayerKind;
using nn::LayerSpec;

nn::Architecture decoder_architecture() {
  nn::Architecture a;
  a.layers = {
      {LayerKind::kConv, 3, 16, 3, 2, true},
      {LayerKind::kConv, 16, 32, 3, 2, true},
      {LayerKind::kConv, 32, 64, 3, 2, true},
      {LayerKind::kConv, 64, 64, 3, 2, true},
      {LayerKind::kLinear, 64, kMessageBits, 1, 1, false},
  };
  return a;
}

nn::Architecture encoder_architecture() {
  nn::Architecture a;
  a.layers = {
      {LayerKind::kConv, 3 + kMessageBits, 64, 3, 1, true},
      {LayerKind::kConv, 64, 64, 3, 1, true},
      {LayerKind::kConv, 64, 3, 3, 1, false},
  };
  return a;
}

DecoderModel DecoderModel::initialized(std::uint64_t seed) {
  DecoderModel m;
  m.kind = ModelKind::kDecoder;
  m.arch = decoder_architecture();
  m.params = nn::init_params(m.arch, seed);
  return m;
}

DecoderModel DecoderModel::zeros() {
  DecoderModel m;
  m.kind = ModelKind::kDecoder;
  m.arch = decoder_architecture();
  m.params.assign(m.arch.param_count(), 0.0f);
  return m;
}

EncoderModel EncoderModel::initialized(std::uint64_t seed) {
  EncoderModel m;
  m.kind = ModelKind::kEncoder;
  m.arch = encoder_architecture();
  m.params = nn::init_params(m.arch, seed);
  // Start close to the identity map: a small final layer keeps early residuals small.
  const std::size_t off = m.arch.offset(2);
  for (std::size_t i = 0; i < m.arch.layers[2].weight_count(); ++i) m.params[off + i] *= 0.1f;
  return m;
}

namespace {

void check_decoder_input(const ImageBuffer& image) {
  require(image.width() >= kMinDecoderInput && image.height() >= kMinDecoderInput,
          ErrorCode::kInvalidArgument,
          "decoder input must be at least 16x16, got " + std::to_string(image.width()) + "x" +
              std::to_string(image.height()));
}

}  // namespace

DecoderRunner::DecoderRunner(const DecoderModel& model)
    : arch_(model.arch), params_(model.params.begin(), model.params.end()) {}

std::vector<double> DecoderRunner::logits(const ImageBuffer& image, nn::Tape<double>* tape) const {
  check_decoder_input(image);
  const auto out = nn::forward<double>(arch_, params_, nn::from_image<double>(image), tape);
  return out.data;
}

ImageBuffer DecoderRunner::input_gradient(const nn::Tape<double>& tape,
                                          std::span<const double> d_logits) const {
  require(d_logits.size() == static_cast<std::size_t>(kMessageBits), ErrorCode::kShapeMismatch,
          "decoder gradient needs 48 logits");
  nn::Tensor<double> d(kMessageBits, 1, 1);
  std::copy(d_logits.begin(), d_logits.end(), d.data.begin());
  return nn::to_image(nn::backward<double>(arch_, params_, tape, d, {}));
}

std::vector<double> decoder_forward(const DecoderModel& decoder, const ImageBuffer& image) {
  return DecoderRunner(decoder).logits(image);
}

MessageBits decode_bits(std::span<const double> logits) {
  require(logits.size() == static_cast<std::size_t>(kMessageBits), ErrorCode::kShapeMismatch,
          "expected 48 logits");
  MessageBits m;
  for (int i = 0; i < kMessageBits; ++i) m.set(i, logits[i] > 0.0);
  return m;
}

DecoderGradients decoder_backward(const DecoderModel& decoder, const ImageBuffer& image,
                                  std::span<const double> d_logits, bool frozen) {
  check_decoder_input(image);
  require(d_logits.size() == static_cast<std::size_t>(kMessageBits), ErrorCode::kShapeMismatch,
          "decoder gradient needs 48 logits");
  const std::vector<double> params(decoder.params.begin(), decoder.params.end());
  nn::Tape<double> tape;
  nn::forward<double>(decoder.arch, params, nn::from_image<double>(image), &tape);
  nn::Tensor<double> d(kMessageBits, 1, 1);
  std::copy(d_logits.begin(), d_logits.end(), d.data.begin());
  DecoderGradients out;
  if (!frozen) out.d_params.assign(params.size(), 0.0);
  out.d_image = nn::to_image(nn::backward<double>(decoder.arch, params, tape, d, out.d_params));
  return out;
}

namespace {

// Low-order 2D cosine basis, ordered by total frequency; bit b is broadcast
// as +/- its basis plane so the encoder sees a spatial layout per bit.
std::array<std::pair<int, int>, kMessageBits> basis_orders() {
  std::array<std::pair<int, int>, kMessageBits> out{};
  int n = 0;
  for (int s = 0; n < kMessageBits; ++s) {
    for (int u = 0; u <= s && n < kMessageBits; ++u) out[n++] = {u, s - u};
  }
  return out;
}

}  // namespace

template <typename T>
nn::Tensor<T> encoder_input(const nn::Tensor<T>& image, const MessageBits& message) {
  static const auto orders = basis_orders();
  nn::Tensor<T> x(3 + kMessageBits, image.height, image.width);
  std::copy(image.data.begin(), image.data.end(), x.data.begin());
  for (int b = 0; b < kMessageBits; ++b) {
    const double sign = message[b] ? 1.0 : -1.0;
    const auto [u, v] = orders[b];
    T* plane = x.data.data() + (3 + b) * x.plane();
    for (int y = 0; y < image.height; ++y) {
      const double cy = std::cos(std::numbers::pi * v * (y + 0.5) / image.height);
      for (int i = 0; i < image.width; ++i) {
        plane[y * image.width + i] = static_cast<T>(sign * cy * std::cos(std::numbers::pi * u * (i + 0.5) / image.width));
      }
    }
  }
  return x;
}

template nn::Tensor<float> encoder_input<float>(const nn::Tensor<float>&, const MessageBits&);
template nn::Tensor<double> encoder_input<double>(const nn::Tensor<double>&, const MessageBits&);

std::vector<float> bound_residual(nn::Tensor<float>& raw) {
  std::vector<float> slope(raw.data.size());
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    const double t = std::tanh(raw.data[i]);
    raw.data[i] = static_cast<float>(kResidualBound * t);
    slope[i] = static_cast<float>(kResidualBound * (1.0 - t * t));
  }
  return slope;
}

ImageBuffer encode(const EncoderModel& encoder, const ImageBuffer& image, const MessageBits& message) {
  const auto x = nn::from_image<float>(image);
  auto residual = nn::forward<float>(encoder.arch, encoder.params, encoder_input(x, message));
  bound_residual(residual);
  ImageBuffer out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int xx = 0; xx < image.width(); ++xx) {
      for (int c = 0; c < 3; ++c) out.at(xx, y, c) += residual.at(c, y, xx);
    }
  }
  out.clamp01();
  return out;
}

namespace {

constexpr char kWeightMagic[4] = {'G', 'S', 'W', 'D'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t& pos) {
  require(pos + 4 <= bytes.size(), ErrorCode::kTruncated, "weight file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

std::string serialize_model(const ConvModel& model) {
  require(model.params.size() == model.arch.param_count(), ErrorCode::kShapeMismatch,
          "model parameters do not match architecture");
  std::string out(kWeightMagic, 4);
  put_u32(out, kWeightFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(model.kind));
  put_u32(out, static_cast<std::uint32_t>(model.arch.layers.size()));
  for (const auto& l : model.arch.layers) {
    put_u32(out, static_cast<std::uint32_t>(l.kind));
    put_u32(out, static_cast<std::uint32_t>(l.in));
    put_u32(out, static_cast<std::uint32_t>(l.out));
    put_u32(out, static_cast<std::uint32_t>(l.kernel));
    put_u32(out, static_cast<std::uint32_t>(l.stride));
    put_u32(out, l.leaky ? 1u : 0u);
  }
  for (float v : model.params) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

ConvModel parse_model(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, "weight file does not start with GSWD");
  }
  std::size_t pos = 4;
  const std::uint32_t version = get_u32(bytes, pos);
  require(version == kWeightFormatVersion, ErrorCode::kVersionMismatch,
          "unsupported weight file version " + std::to_string(version));
  ConvModel m;
  const std::uint32_t kind = get_u32(bytes, pos);
  require(kind >= 1 && kind <= 3, ErrorCode::kValidation, "unknown model kind");
  m.kind = static_cast<ModelKind>(kind);
  const std::uint32_t n_layers = get_u32(bytes, pos);
  require(n_layers <= 64, ErrorCode::kValidation, "implausible layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    const std::uint32_t lk = get_u32(bytes, pos);
    require(lk == 1 || lk == 2, ErrorCode::kValidation, "unknown layer kind");
    l.kind = static_cast<LayerKind>(lk);
    l.in = static_cast<int>(get_u32(bytes, pos));
    l.out = static_cast<int>(get_u32(bytes, pos));
    l.kernel = static_cast<int>(get_u32(bytes, pos));
    l.stride = static_cast<int>(get_u32(bytes, pos));
    l.leaky = get_u32(bytes, pos) != 0;
    m.arch.layers.push_back(l);
  }
  m.arch.validate();
  const std::size_t n = m.arch.param_count();
  require(bytes.size() >= pos + 4 * n, ErrorCode::kTruncated, "weight file truncated");
  m.params.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.params[i] = std::bit_cast<float>(get_u32(bytes, pos));
    require(std::isfinite(m.params[i]), ErrorCode::kValidation,
            "weight " + std::to_string(i) + " is not finite");
  }
  return m;
}

void save_model(const std::filesystem::path& path, const ConvModel& model) {
  atomic_write_file(path, serialize_model(model));
}

ConvModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

DecoderModel load_decoder(const std::filesystem::path& path) {
  ConvModel m = load_model(path);
  require(m.kind == ModelKind::kDecoder && m.arch == decoder_architecture(), ErrorCode::kValidation,
          path.string() + " is not a decoder weight file");
  DecoderModel d;
  static_cast<ConvModel&>(d) = std::move(m);
  return d;
}

EncoderModel load_encoder(const std::filesystem::path& path) {
  ConvModel m = load_model(path);
  require(m.kind == ModelKind::kEncoder && m.arch == encoder_architecture(), ErrorCode::kValidation,
          path.string() + " is not an encoder weight file");
  EncoderModel e;
  static_cast<ConvModel&>(e) = std::move(m);
  return e;
}

}  // namespace gswm
