#include "gswm/nn.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "gswm/error.hpp"
#include "gswm/rng.hpp"

namespace gswm::nn {

std::size_t Architecture::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.param_count();
  return n;
}

std::size_t Architecture::offset(std::size_t layer) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < layer; ++i) n += layers[i].param_count();
  return n;
}

void Architecture::validate() const {
  require(!layers.empty(), ErrorCode::kInvalidArgument, "architecture has no layers");
  bool seen_linear = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    require(l.in > 0 && l.out > 0 && l.stride > 0 && l.kernel > 0 && l.kernel % 2 == 1,
            ErrorCode::kInvalidArgument, "bad layer " + std::to_string(i));
    if (l.kind == LayerKind::kLinear) seen_linear = true;
    require(!(seen_linear && l.kind == LayerKind::kConv), ErrorCode::kInvalidArgument,
            "conv layer after linear layer");
    if (i > 0) {
      require(layers[i - 1].out == l.in, ErrorCode::kInvalidArgument,
              "layer " + std::to_string(i) + " input width does not match previous output");
    }
  }
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

int out_size(int in, int kernel, int stride) { return (in + 2 * (kernel / 2) - kernel) / stride + 1; }

/// (Cin * k * k) x (Hout * Wout) patch matrix with zero padding.
template <typename T>
RowMat<T> im2col(const Tensor<T>& x, int kernel, int stride, int oh, int ow) {
  const int pad = kernel / 2;
  RowMat<T> cols(static_cast<Eigen::Index>(x.channels) * kernel * kernel,
                 static_cast<Eigen::Index>(oh) * ow);
  for (int c = 0; c < x.channels; ++c) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        T* row = cols.row((c * kernel + ky) * kernel + kx).data();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            row[oy * ow + ox] =
                (iy >= 0 && iy < x.height && ix >= 0 && ix < x.width) ? x.at(c, iy, ix) : T(0);
          }
        }
      }
    }
  }
  return cols;
}

template <typename T>
Tensor<T> col2im(const RowMat<T>& cols, int channels, int h, int w, int kernel, int stride, int oh,
                 int ow) {
  const int pad = kernel / 2;
  Tensor<T> x(channels, h, w);
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const T* row = cols.row((c * kernel + ky) * kernel + kx).data();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= w) continue;
            x.at(c, iy, ix) += row[oy * ow + ox];
          }
        }
      }
    }
  }
  return x;
}

template <typename T>
void leaky_inplace(Tensor<T>& t) {
  for (T& v : t.data) v = v > T(0) ? v : T(kLeakySlope) * v;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const LayerSpec& layer, std::span<const T> weights, const Tensor<T>& x) {
  require(x.channels == layer.in, ErrorCode::kShapeMismatch, "conv input channel mismatch");
  const int oh = out_size(x.height, layer.kernel, layer.stride);
  const int ow = out_size(x.width, layer.kernel, layer.stride);
  require(oh > 0 && ow > 0, ErrorCode::kShapeMismatch, "conv input too small");
  const RowMat<T> cols = im2col(x, layer.kernel, layer.stride, oh, ow);
  ConstMapMat<T> w(weights.data(), layer.out, static_cast<Eigen::Index>(layer.in) * layer.kernel * layer.kernel);
  Tensor<T> y(layer.out, oh, ow);
  MapMat<T> ym(y.data.data(), layer.out, static_cast<Eigen::Index>(oh) * ow);
  ym.noalias() = w * cols;
  return y;
}

template <typename T>
Tensor<T> conv2d_transpose(const LayerSpec& layer, std::span<const T> weights, const Tensor<T>& dy,
                           int input_h, int input_w) {
  const int oh = dy.height, ow = dy.width;
  ConstMapMat<T> w(weights.data(), layer.out, static_cast<Eigen::Index>(layer.in) * layer.kernel * layer.kernel);
  ConstMapMat<T> dym(dy.data.data(), layer.out, static_cast<Eigen::Index>(oh) * ow);
  const RowMat<T> dcols = w.transpose() * dym;
  return col2im<T>(dcols, layer.in, input_h, input_w, layer.kernel, layer.stride, oh, ow);
}

template <typename T>
void conv2d_weight_grad(const LayerSpec& layer, const Tensor<T>& x, const Tensor<T>& dy,
                        std::span<T> d_weights) {
  const RowMat<T> cols = im2col(x, layer.kernel, layer.stride, dy.height, dy.width);
  ConstMapMat<T> dym(dy.data.data(), layer.out, static_cast<Eigen::Index>(dy.height) * dy.width);
  MapMat<T> dw(d_weights.data(), layer.out, static_cast<Eigen::Index>(layer.in) * layer.kernel * layer.kernel);
  dw.noalias() += dym * cols.transpose();
}

template <typename T>
Tensor<T> forward(const Architecture& arch, std::span<const T> params, const Tensor<T>& input,
                  Tape<T>* tape) {
  require(params.size() == arch.param_count(), ErrorCode::kShapeMismatch,
          "parameter vector does not match architecture");
  if (tape) {
    tape->inputs.clear();
    tape->pre_activation.clear();
  }
  Tensor<T> x = input;
  std::size_t off = 0;
  for (const LayerSpec& layer : arch.layers) {
    const auto weights = params.subspan(off, layer.weight_count());
    const auto bias = params.subspan(off + layer.weight_count(), layer.out);
    off += layer.param_count();
    if (layer.kind == LayerKind::kLinear && x.height * x.width != 1) {
      // Global mean pool.
      Tensor<T> pooled(x.channels, 1, 1);
      const T inv = T(1) / static_cast<T>(x.plane());
      for (int c = 0; c < x.channels; ++c) {
        T s = 0;
        for (std::size_t i = 0; i < x.plane(); ++i) s += x.data[c * x.plane() + i];
        pooled.data[c] = s * inv;
      }
      x = std::move(pooled);
    }
    if (tape) tape->inputs.push_back(x);
    Tensor<T> y;
    if (layer.kind == LayerKind::kConv) {
      y = conv2d<T>(layer, weights, x);
      for (int c = 0; c < y.channels; ++c) {
        for (std::size_t i = 0; i < y.plane(); ++i) y.data[c * y.plane() + i] += bias[c];
      }
    } else {
      require(x.channels == layer.in, ErrorCode::kShapeMismatch, "linear input mismatch");
      y = Tensor<T>(layer.out, 1, 1);
      ConstMapMat<T> w(weights.data(), layer.out, layer.in);
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> xv(x.data.data(), layer.in);
      Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> yv(y.data.data(), layer.out);
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bv(bias.data(), layer.out);
      yv.noalias() = w * xv + bv;
    }
    if (tape) tape->pre_activation.push_back(y);
    if (layer.leaky) leaky_inplace(y);
    x = std::move(y);
  }
  return x;
}

template <typename T>
Tensor<T> backward(const Architecture& arch, std::span<const T> params, const Tape<T>& tape,
                   const Tensor<T>& d_output, std::span<T> d_params) {
  require(tape.inputs.size() == arch.layers.size(), ErrorCode::kInvalidArgument,
          "backward needs a tape from forward");
  const bool want_params = !d_params.empty();
  require(!want_params || d_params.size() == arch.param_count(), ErrorCode::kShapeMismatch,
          "gradient buffer does not match architecture");
  Tensor<T> d = d_output;
  for (std::size_t li = arch.layers.size(); li-- > 0;) {
    const LayerSpec& layer = arch.layers[li];
    const std::size_t off = arch.offset(li);
    const auto weights = params.subspan(off, layer.weight_count());
    const Tensor<T>& pre = tape.pre_activation[li];
    const Tensor<T>& in = tape.inputs[li];
    require(d.data.size() == pre.data.size(), ErrorCode::kShapeMismatch,
            "output gradient does not match layer output");
    if (layer.leaky) {
      for (std::size_t i = 0; i < d.data.size(); ++i) {
        if (!(pre.data[i] > T(0))) d.data[i] *= T(kLeakySlope);
      }
    }
    if (layer.kind == LayerKind::kConv) {
      if (want_params) {
        conv2d_weight_grad<T>(layer, in, d, d_params.subspan(off, layer.weight_count()));
        T* db = d_params.data() + off + layer.weight_count();
        for (int c = 0; c < d.channels; ++c) {
          T s = 0;
          for (std::size_t i = 0; i < d.plane(); ++i) s += d.data[c * d.plane() + i];
          db[c] += s;
        }
      }
      d = conv2d_transpose<T>(layer, weights, d, in.height, in.width);
    } else {
      ConstMapMat<T> w(weights.data(), layer.out, layer.in);
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> dv(d.data.data(), layer.out);
      if (want_params) {
        MapMat<T> dw(d_params.data() + off, layer.out, layer.in);
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> xv(in.data.data(), layer.in);
        dw.noalias() += dv * xv.transpose();
        T* db = d_params.data() + off + layer.weight_count();
        for (int o = 0; o < layer.out; ++o) db[o] += d.data[o];
      }
      Tensor<T> dx(layer.in, 1, 1);
      Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dxv(dx.data.data(), layer.in);
      dxv.noalias() = w.transpose() * dv;
      d = std::move(dx);
      // Undo the global mean pool when the previous layer is a conv layer.
      if (li > 0 && arch.layers[li - 1].kind == LayerKind::kConv) {
        const Tensor<T>& conv_out = tape.pre_activation[li - 1];
        Tensor<T> spread(conv_out.channels, conv_out.height, conv_out.width);
        const T inv = T(1) / static_cast<T>(spread.plane());
        for (int c = 0; c < spread.channels; ++c) {
          for (std::size_t i = 0; i < spread.plane(); ++i) spread.data[c * spread.plane() + i] = d.data[c] * inv;
        }
        d = std::move(spread);
      }
    }
  }
  return d;
}

template <typename T>
Tensor<T> from_image(const ImageBuffer& image) {
  Tensor<T> t(3, image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = static_cast<T>(image.at(x, y, c));
    }
  }
  return t;
}

template <typename T>
ImageBuffer to_image(const Tensor<T>& t) {
  require(t.channels == 3, ErrorCode::kShapeMismatch, "to_image needs 3 channels");
  ImageBuffer image(t.width, t.height);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      for (int c = 0; c < 3; ++c) image.at(x, y, c) = static_cast<double>(t.at(c, y, x));
    }
  }
  return image;
}

std::vector<float> init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  std::vector<float> params(arch.param_count(), 0.0f);
  std::size_t off = 0;
  for (std::size_t li = 0; li < arch.layers.size(); ++li) {
    const LayerSpec& l = arch.layers[li];
    const double fan_in = static_cast<double>(l.weight_count()) / l.out;
    const double bound = std::sqrt(6.0 / fan_in);
    CounterRng rng({seed, 0x1A7E5ull, li});
    for (std::size_t i = 0; i < l.weight_count(); ++i) {
      params[off + i] = static_cast<float>(rng.uniform(-bound, bound));
    }
    off += l.param_count();
  }
  return params;
}

#define GSWM_NN_INSTANTIATE(T)                                                                    \
  template Tensor<T> forward<T>(const Architecture&, std::span<const T>, const Tensor<T>&,        \
                                Tape<T>*);                                                        \
  template Tensor<T> backward<T>(const Architecture&, std::span<const T>, const Tape<T>&,         \
                                 const Tensor<T>&, std::span<T>);                                 \
  template Tensor<T> conv2d<T>(const LayerSpec&, std::span<const T>, const Tensor<T>&);           \
  template Tensor<T> conv2d_transpose<T>(const LayerSpec&, std::span<const T>, const Tensor<T>&,  \
                                         int, int);                                               \
  template void conv2d_weight_grad<T>(const LayerSpec&, const Tensor<T>&, const Tensor<T>&,       \
                                      std::span<T>);                                              \
  template Tensor<T> from_image<T>(const ImageBuffer&);                                           \
  template ImageBuffer to_image<T>(const Tensor<T>&);

GSWM_NN_INSTANTIATE(float)
GSWM_NN_INSTANTIATE(double)

#undef GSWM_NN_INSTANTIATE

}  // namespace gswm::nn
