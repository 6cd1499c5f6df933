#include "gswm/losses.hpp"

#include <cmath>

#include "gswm/error.hpp"

namespace gswm {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

namespace {

double sigmoid_stable(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// 2x2 box average with floor dimensions.
ImageBuffer downsample2(const ImageBuffer& in) {
  ImageBuffer out(in.width() / 2, in.height() / 2);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = 0.25 * (in.at(2 * x, 2 * y, c) + in.at(2 * x + 1, 2 * y, c) +
                                  in.at(2 * x, 2 * y + 1, c) + in.at(2 * x + 1, 2 * y + 1, c));
      }
    }
  }
  return out;
}

ImageBuffer downsample2_adjoint(const ImageBuffer& d, int w, int h) {
  ImageBuffer out(w, h);
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const double g = 0.25 * d.at(x, y, c);
        out.at(2 * x, 2 * y, c) += g;
        out.at(2 * x + 1, 2 * y, c) += g;
        out.at(2 * x, 2 * y + 1, c) += g;
        out.at(2 * x + 1, 2 * y + 1, c) += g;
      }
    }
  }
  return out;
}

// Forward differences, zero on the last column / row.
void differences(const ImageBuffer& img, int x, int y, int c, double& gx, double& gy) {
  gx = x + 1 < img.width() ? img.at(x + 1, y, c) - img.at(x, y, c) : 0.0;
  gy = y + 1 < img.height() ? img.at(x, y + 1, c) - img.at(x, y, c) : 0.0;
}

}  // namespace

ReconstructionLoss reconstruction_loss(const ImageBuffer& rendered, const ImageBuffer& reference,
                                       double lambda_proxy) {
  require_same_shape(rendered, reference, "reconstruction_loss");
  require(!rendered.empty(), ErrorCode::kInvalidArgument, "reconstruction_loss of empty images");
  const int w = rendered.width();
  const int h = rendered.height();
  const double n = static_cast<double>(rendered.size());
  ReconstructionLoss r;
  r.gradient = ImageBuffer(w, h);
  auto grad = r.gradient.values();
  const auto a = rendered.values();
  const auto b = reference.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    r.mse += d * d;
    grad[i] += 2.0 * d / n;
  }
  r.mse /= n;

  // Gradient-magnitude term.
  ImageBuffer d_rendered(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double ax, ay, bx, by;
        differences(rendered, x, y, c, ax, ay);
        differences(reference, x, y, c, bx, by);
        const double ga = std::sqrt(ax * ax + ay * ay + kGradientEps);
        const double gb = std::sqrt(bx * bx + by * by + kGradientEps);
        const double diff = ga - gb;
        r.gradient_term += diff * diff;
        const double s = lambda_proxy * 2.0 * diff / n / ga;
        if (x + 1 < w) {
          d_rendered.at(x + 1, y, c) += s * ax;
          d_rendered.at(x, y, c) -= s * ax;
        }
        if (y + 1 < h) {
          d_rendered.at(x, y + 1, c) += s * ay;
          d_rendered.at(x, y, c) -= s * ay;
        }
      }
    }
  }
  r.gradient_term /= n;

  // Pyramid term: the mean of the per-level MSEs.
  std::vector<ImageBuffer> pa{rendered};
  std::vector<ImageBuffer> pb{reference};
  int levels = 0;
  for (int l = 0; l < kPyramidLevels; ++l) {
    if (pa.back().width() < 2 || pa.back().height() < 2) break;
    pa.push_back(downsample2(pa.back()));
    pb.push_back(downsample2(pb.back()));
    ++levels;
  }
  double pyramid_mean = 0.0;
  if (levels > 0) {
    ImageBuffer d_level;
    for (int l = levels; l >= 1; --l) {
      const ImageBuffer& la = pa[l];
      const ImageBuffer& lb = pb[l];
      const double m = static_cast<double>(la.size());
      ImageBuffer d_this(la.width(), la.height());
      double level_mse = 0.0;
      for (std::size_t i = 0; i < la.size(); ++i) {
        const double d = la.values()[i] - lb.values()[i];
        level_mse += d * d;
        d_this.values()[i] = lambda_proxy * 2.0 * d / m / levels;
      }
      r.pyramid[l - 1] = level_mse / m;
      pyramid_mean += r.pyramid[l - 1] / levels;
      if (!d_level.empty()) {
        for (std::size_t i = 0; i < d_this.size(); ++i) d_this.values()[i] += d_level.values()[i];
      }
      d_level = downsample2_adjoint(d_this, pa[l - 1].width(), pa[l - 1].height());
    }
    for (std::size_t i = 0; i < d_level.size(); ++i) d_rendered.values()[i] += d_level.values()[i];
  }
  r.proxy = r.gradient_term + pyramid_mean;
  r.total = r.mse + lambda_proxy * r.proxy;
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += d_rendered.values()[i];
  return r;
}

nn::Architecture discriminator_architecture() {
  nn::Architecture a;
  a.layers = {
      {nn::LayerKind::kConv, 3, 16, 3, 2, true},
      {nn::LayerKind::kConv, 16, 32, 3, 2, true},
      {nn::LayerKind::kConv, 32, 64, 3, 2, true},
      {nn::LayerKind::kLinear, 64, 1, 1, 1, false},
  };
  return a;
}

DiscriminatorModel DiscriminatorModel::initialized(std::uint64_t seed) {
  DiscriminatorModel m;
  m.kind = ModelKind::kDiscriminator;
  m.arch = discriminator_architecture();
  m.params = nn::init_params(m.arch, seed);
  return m;
}

ScoreAndPenalty score_with_penalty(const nn::Architecture& arch, std::span<const double> params,
                                   const nn::Tensor<double>& input, double d_score, double d_penalty,
                                   std::span<double> d_params) {
  const std::size_t n_layers = arch.layers.size();
  require(n_layers >= 2 && arch.layers.back().kind == nn::LayerKind::kLinear && arch.layers.back().out == 1,
          ErrorCode::kInvalidArgument, "score network must end in a single linear unit");
  for (std::size_t l = 0; l + 1 < n_layers; ++l) {
    require(arch.layers[l].kind == nn::LayerKind::kConv, ErrorCode::kInvalidArgument,
            "score network must be a conv stack followed by one linear layer");
  }
  const bool want = !d_params.empty();
  const std::size_t n_conv = n_layers - 1;

  nn::Tape<double> tape;
  const auto out = nn::forward<double>(arch, params, input, &tape);
  ScoreAndPenalty r;
  r.score = out.data[0];

  if (want && d_score != 0.0) {
    nn::Tensor<double> d(1, 1, 1, d_score);
    nn::backward<double>(arch, params, tape, d, d_params);
  }

  auto weights = [&](std::size_t l) { return params.subspan(arch.offset(l), arch.layers[l].weight_count()); };
  auto mask = [&](std::size_t l, nn::Tensor<double>& t) {
    if (!arch.layers[l].leaky) return;
    const auto& pre = tape.pre_activation[l].data;
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      if (!(pre[i] > 0.0)) t.data[i] *= nn::kLeakySlope;
    }
  };

  // e[l]: d score / d (input of layer l); delta[l]: d score / d (pre-activation of layer l).
  const auto& last_conv = tape.pre_activation[n_conv - 1];
  const auto w_lin = weights(n_conv);
  const double inv_hw = 1.0 / static_cast<double>(last_conv.plane());
  std::vector<nn::Tensor<double>> e(n_conv + 1);
  std::vector<nn::Tensor<double>> delta(n_conv);
  e[n_conv] = nn::Tensor<double>(last_conv.channels, last_conv.height, last_conv.width);
  for (int c = 0; c < last_conv.channels; ++c) {
    for (std::size_t i = 0; i < last_conv.plane(); ++i) e[n_conv].data[c * last_conv.plane() + i] = w_lin[c] * inv_hw;
  }
  for (std::size_t l = n_conv; l-- > 0;) {
    delta[l] = e[l + 1];
    mask(l, delta[l]);
    const auto& in = tape.inputs[l];
    e[l] = nn::conv2d_transpose<double>(arch.layers[l], weights(l), delta[l], in.height, in.width);
  }
  r.input_gradient = e[0];
  for (double v : e[0].data) r.grad_norm2 += v * v;

  if (want && d_penalty != 0.0) {
    // Reverse pass through the (linear, for fixed masks) input-gradient chain.
    nn::Tensor<double> e_bar = e[0];
    for (double& v : e_bar.data) v *= 2.0 * d_penalty;
    for (std::size_t l = 0; l < n_conv; ++l) {
      const std::size_t off = arch.offset(l);
      nn::conv2d_weight_grad<double>(arch.layers[l], e_bar, delta[l],
                                     d_params.subspan(off, arch.layers[l].weight_count()));
      nn::Tensor<double> delta_bar = nn::conv2d<double>(arch.layers[l], weights(l), e_bar);
      mask(l, delta_bar);
      e_bar = std::move(delta_bar);
    }
    double* dw = d_params.data() + arch.offset(n_conv);
    for (int c = 0; c < e_bar.channels; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < e_bar.plane(); ++i) s += e_bar.data[c * e_bar.plane() + i];
      dw[c] += s * inv_hw;
    }
  }
  return r;
}

AdversarialLosses adversarial_losses(const nn::Architecture& arch, std::span<const double> params,
                                     const ImageBuffer& real, const ImageBuffer& fake,
                                     bool want_param_gradients) {
  require_same_shape(real, fake, "adversarial_losses");
  AdversarialLosses r;
  const auto x_real = nn::from_image<double>(real);
  const auto x_fake = nn::from_image<double>(fake);

  // First pass: scores only, to get the pairing-loss slopes.
  const double s_real = nn::forward<double>(arch, params, x_real).data[0];
  const double s_fake = nn::forward<double>(arch, params, x_fake).data[0];
  const double diff = s_real - s_fake;
  // d softplus(-diff) / d diff = -sigmoid(-diff)
  const double slope = -sigmoid_stable(-diff);

  if (want_param_gradients) r.d_params.assign(params.size(), 0.0);
  const auto real_terms = score_with_penalty(arch, params, x_real, slope, kPenaltyWeight, r.d_params);
  const auto fake_terms = score_with_penalty(arch, params, x_fake, -slope, kPenaltyWeight, r.d_params);

  r.score_real = real_terms.score;
  r.score_fake = fake_terms.score;
  r.penalty_real = kPenaltyWeight * real_terms.grad_norm2;
  r.penalty_fake = kPenaltyWeight * fake_terms.grad_norm2;
  r.disc_loss = softplus(-diff) + r.penalty_real + r.penalty_fake;
  r.gen_loss = softplus(diff);

  // Generator path: d softplus(s_real - s_fake) / d s_fake = -sigmoid(diff).
  const double g_fake = -sigmoid_stable(diff);
  nn::Tensor<double> d_fake = fake_terms.input_gradient;
  for (double& v : d_fake.data) v *= g_fake;
  r.d_fake = nn::to_image(d_fake);
  return r;
}

}  // namespace gswm
