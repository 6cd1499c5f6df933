#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gswm/image.hpp"

namespace gswm::nn {

/// Channel-major (C, H, W) activation.
template <typename T>
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c, int h, int w, T fill = T(0))
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  T& at(int c, int y, int x) { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  T at(int c, int y, int x) const { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
};

enum class LayerKind : std::uint32_t { kConv = 1, kLinear = 2 };

/// Conv layers are 3x3 (or `kernel`) with padding kernel/2. Linear layers
/// follow a global mean pool over the last conv output.
struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  int in = 0;
  int out = 0;
  int kernel = 3;
  int stride = 1;
  bool leaky = true;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out) * in * (kind == LayerKind::kConv ? kernel * kernel : 1);
  }
  std::size_t param_count() const { return weight_count() + out; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

inline constexpr double kLeakySlope = 0.2;

struct Architecture {
  std::vector<LayerSpec> layers;

  std::size_t param_count() const;
  /// Offset of layer i's weights in the flat parameter vector; bias follows.
  std::size_t offset(std::size_t layer) const;
  /// Validates layer chaining (conv layers first, then linear layers).
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Intermediate values kept by forward() for backward().
template <typename T>
struct Tape {
  std::vector<Tensor<T>> inputs;          ///< input of each layer (linear: pooled vector as C x 1 x 1)
  std::vector<Tensor<T>> pre_activation;  ///< output of each layer before the activation
};

/// Runs the network. Output of a conv-only network is the last conv tensor;
/// otherwise it is a (out, 1, 1) tensor.
template <typename T>
Tensor<T> forward(const Architecture& arch, std::span<const T> params, const Tensor<T>& input,
                  Tape<T>* tape = nullptr);

/// Back-propagates d_output. Weight gradients are accumulated into d_params
/// when it is non-empty (frozen-model mode passes an empty span). Returns the
/// gradient with respect to the input.
template <typename T>
Tensor<T> backward(const Architecture& arch, std::span<const T> params, const Tape<T>& tape,
                   const Tensor<T>& d_output, std::span<T> d_params);

// Single-layer building blocks, exposed for second-order terms.

/// Convolution without bias.
template <typename T>
Tensor<T> conv2d(const LayerSpec& layer, std::span<const T> weights, const Tensor<T>& x);

/// Adjoint of conv2d with respect to its input; `input_h`/`input_w` give the
/// forward input size.
template <typename T>
Tensor<T> conv2d_transpose(const LayerSpec& layer, std::span<const T> weights, const Tensor<T>& dy,
                           int input_h, int input_w);

/// Accumulates d(sum(dy * conv2d(x)))/d(weights) into d_weights.
template <typename T>
void conv2d_weight_grad(const LayerSpec& layer, const Tensor<T>& x, const Tensor<T>& dy,
                        std::span<T> d_weights);

template <typename T>
Tensor<T> from_image(const ImageBuffer& image);

template <typename T>
ImageBuffer to_image(const Tensor<T>& tensor);

template <typename To, typename From>
std::vector<To> convert(std::span<const From> values) {
  return std::vector<To>(values.begin(), values.end());
}

/// He-style initialization (uniform, bound sqrt(6 / fan_in)), zero biases.
std::vector<float> init_params(const Architecture& arch, std::uint64_t seed);

}  // namespace gswm::nn
