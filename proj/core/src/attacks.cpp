#include "gswm/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gswm/error.hpp"
#include "gswm/rng.hpp"

namespace gswm {

namespace {

struct KindInfo {
  AttackKind kind;
  std::string_view name;
  std::array<double, 5> ladder;
};

constexpr std::array<KindInfo, 9> kKinds = {{
    {AttackKind::kBlur, "blur", {2, 6, 10, 14, 18}},
    {AttackKind::kBrightness, "brightness", {1.1, 1.3, 1.5, 1.7, 1.9}},
    {AttackKind::kContrast, "contrast", {1.1, 1.3, 1.5, 1.7, 1.9}},
    {AttackKind::kJpegProxy, "jpeg_proxy", {90, 70, 50, 30, 10}},
    {AttackKind::kNoise, "noise", {0.01, 0.03, 0.05, 0.07, 0.09}},
    {AttackKind::kErasing, "erasing", {0.025, 0.075, 0.125, 0.175, 0.225}},
    {AttackKind::kResizedCrop, "resized_crop", {0.95, 0.85, 0.75, 0.65, 0.55}},
    {AttackKind::kRotation, "rotation", {4.5, 13.5, 22.5, 31.5, 40.5}},
    {AttackKind::kElastic, "elastic", {2, 4, 6, 8, 10}},
}};

const KindInfo& info(AttackKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  fail(ErrorCode::kInvalidArgument, "unknown attack kind");
}

// One output pixel of a bilinear warp: up to four weighted source pixels.
struct Taps {
  std::array<int, 4> index{};  // pixel index y * w + x, -1 when outside
  std::array<double, 4> weight{};
};

enum class Border { kBlack, kClamp };

Taps bilinear_taps(double sx, double sy, int w, int h, Border border) {
  Taps t;
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  const double ax = sx - fx;
  const double ay = sy - fy;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
  const double ws[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
  for (int k = 0; k < 4; ++k) {
    int x = xs[k];
    int y = ys[k];
    if (border == Border::kClamp) {
      x = std::clamp(x, 0, w - 1);
      y = std::clamp(y, 0, h - 1);
    }
    const bool inside = x >= 0 && x < w && y >= 0 && y < h;
    t.index[k] = inside ? y * w + x : -1;
    t.weight[k] = inside ? ws[k] : 0.0;
  }
  return t;
}

ImageBuffer warp_forward(const ImageBuffer& in, const std::vector<Taps>& taps) {
  ImageBuffer out(in.width(), in.height());
  const auto src = in.values();
  auto dst = out.values();
  for (std::size_t p = 0; p < taps.size(); ++p) {
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) {
        if (taps[p].index[k] >= 0) v += taps[p].weight[k] * src[taps[p].index[k] * 3 + c];
      }
      dst[p * 3 + c] = v;
    }
  }
  return out;
}

ImageBuffer warp_backward(const ImageBuffer& d_out, const std::vector<Taps>& taps) {
  ImageBuffer d_in(d_out.width(), d_out.height());
  const auto g = d_out.values();
  auto dst = d_in.values();
  for (std::size_t p = 0; p < taps.size(); ++p) {
    for (int k = 0; k < 4; ++k) {
      if (taps[p].index[k] < 0) continue;
      for (int c = 0; c < 3; ++c) dst[taps[p].index[k] * 3 + c] += taps[p].weight[k] * g[p * 3 + c];
    }
  }
  return d_in;
}

// Separable blur along one axis. Transposed when `adjoint` is set.
void blur_axis(const ImageBuffer& in, ImageBuffer& out, const std::vector<double>& kernel, bool horizontal,
               bool adjoint) {
  const int w = in.width();
  const int h = in.height();
  const int r = static_cast<int>(kernel.size() / 2);
  out = ImageBuffer(w, h);
  const int n = horizontal ? w : h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int pos = horizontal ? x : y;
      for (int k = -r; k <= r; ++k) {
        const int q = reflect101(pos + k, n);
        const int sx = horizontal ? q : x;
        const int sy = horizontal ? y : q;
        const double wk = kernel[k + r];
        for (int c = 0; c < 3; ++c) {
          if (adjoint) {
            out.at(sx, sy, c) += wk * in.at(x, y, c);
          } else {
            out.at(x, y, c) += wk * in.at(sx, sy, c);
          }
        }
      }
    }
  }
}

ImageBuffer blur_with_kernel(const ImageBuffer& image, const std::vector<double>& kernel, bool adjoint) {
  ImageBuffer tmp;
  ImageBuffer out;
  if (adjoint) {
    blur_axis(image, tmp, kernel, false, true);
    blur_axis(tmp, out, kernel, true, true);
  } else {
    blur_axis(image, tmp, kernel, true, false);
    blur_axis(tmp, out, kernel, false, false);
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = sigma > 0 ? std::exp(-0.5 * i * i / (sigma * sigma)) : (i == 0 ? 1.0 : 0.0);
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Pointwise map followed by clamping to [0, 1]; the gradient is the local
// slope where the value was not clamped.
AttackResult clamped_pointwise(const ImageBuffer& image, double slope,
                               const std::function<double(std::size_t, double)>& f) {
  AttackResult r;
  r.image = ImageBuffer(image.width(), image.height());
  const auto src = image.values();
  auto dst = r.image.values();
  std::vector<char> mask(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = f(i, src[i]);
    mask[i] = v >= 0.0 && v <= 1.0;
    dst[i] = std::clamp(v, 0.0, 1.0);
  }
  r.backward = [mask = std::move(mask), slope](const ImageBuffer& d) {
    ImageBuffer out = d;
    auto v = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = mask[i] ? v[i] * slope : 0.0;
    return out;
  };
  return r;
}

ImageBuffer identity_backward(const ImageBuffer& d) { return d; }

// --- JPEG proxy ---------------------------------------------------------------

constexpr int kLumaTable[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr int kChromaTable[64] = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99,
    99, 99, 47, 66, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

std::array<double, 64> scaled_table(const int* base, double quality) {
  const double q = std::clamp(quality, 1.0, 100.0);
  const double scale = q < 50 ? 5000.0 / q : 200.0 - 2.0 * q;
  std::array<double, 64> t{};
  for (int i = 0; i < 64; ++i) t[i] = std::clamp(std::floor((base[i] * scale + 50.0) / 100.0), 1.0, 255.0);
  return t;
}

struct DctBasis {
  double m[8][8];
  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) m[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
  }
};

const DctBasis& dct_basis() {
  static const DctBasis basis;
  return basis;
}

void quantize_block(double block[8][8], const std::array<double, 64>& table) {
  const auto& b = dct_basis().m;
  double tmp[8][8];
  double coef[8][8];
  for (int u = 0; u < 8; ++u) {
    for (int x = 0; x < 8; ++x) {
      double s = 0;
      for (int y = 0; y < 8; ++y) s += b[u][y] * block[y][x];
      tmp[u][x] = s;
    }
  }
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      double s = 0;
      for (int x = 0; x < 8; ++x) s += tmp[u][x] * b[v][x];
      const double q = table[u * 8 + v];
      coef[u][v] = std::round(s / q) * q;
    }
  }
  for (int y = 0; y < 8; ++y) {
    for (int v = 0; v < 8; ++v) {
      double s = 0;
      for (int u = 0; u < 8; ++u) s += b[u][y] * coef[u][v];
      tmp[y][v] = s;
    }
  }
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double s = 0;
      for (int v = 0; v < 8; ++v) s += tmp[y][v] * b[v][x];
      block[y][x] = s;
    }
  }
}

ImageBuffer jpeg_proxy(const ImageBuffer& image, double quality) {
  const int w = image.width();
  const int h = image.height();
  const int pw = (w + 7) / 8 * 8;
  const int ph = (h + 7) / 8 * 8;
  // YCbCr planes on the 0..255 scale, level-shifted by 128, edge-padded to whole blocks.
  std::vector<double> planes[3];
  for (auto& p : planes) p.assign(static_cast<std::size_t>(pw) * ph, 0.0);
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      const int sx = std::min(x, w - 1);
      const int sy = std::min(y, h - 1);
      const double r = 255.0 * image.at(sx, sy, 0);
      const double g = 255.0 * image.at(sx, sy, 1);
      const double b = 255.0 * image.at(sx, sy, 2);
      const std::size_t i = static_cast<std::size_t>(y) * pw + x;
      planes[0][i] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
      planes[1][i] = -0.168736 * r - 0.331264 * g + 0.5 * b;
      planes[2][i] = 0.5 * r - 0.418688 * g - 0.081312 * b;
    }
  }
  const auto luma = scaled_table(kLumaTable, quality);
  const auto chroma = scaled_table(kChromaTable, quality);
  for (int c = 0; c < 3; ++c) {
    for (int by = 0; by < ph; by += 8) {
      for (int bx = 0; bx < pw; bx += 8) {
        double block[8][8];
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) block[y][x] = planes[c][static_cast<std::size_t>(by + y) * pw + bx + x];
        }
        quantize_block(block, c == 0 ? luma : chroma);
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) planes[c][static_cast<std::size_t>(by + y) * pw + bx + x] = block[y][x];
        }
      }
    }
  }
  ImageBuffer out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * pw + x;
      const double yy = planes[0][i] + 128.0;
      const double cb = planes[1][i];
      const double cr = planes[2][i];
      out.at(x, y, 0) = (yy + 1.402 * cr) / 255.0;
      out.at(x, y, 1) = (yy - 0.344136 * cb - 0.714136 * cr) / 255.0;
      out.at(x, y, 2) = (yy + 1.772 * cb) / 255.0;
    }
  }
  out.clamp01();
  return out;
}

// --- geometric attacks -------------------------------------------------------

std::vector<Taps> rotation_taps(int w, int h, double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  const double ca = std::cos(a);
  const double sa = std::sin(a);
  const double cx = w / 2.0;
  const double cy = h / 2.0;
  std::vector<Taps> taps(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Inverse-rotate the output pixel center into the source image.
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const double sx = ca * dx + sa * dy + cx - 0.5;
      const double sy = -sa * dx + ca * dy + cy - 0.5;
      taps[static_cast<std::size_t>(y) * w + x] = bilinear_taps(sx, sy, w, h, Border::kBlack);
    }
  }
  return taps;
}

std::vector<Taps> crop_taps(int w, int h, double area, CounterRng& rng) {
  const double log_lo = std::log(3.0 / 4.0);
  const double log_hi = std::log(4.0 / 3.0);
  const double aspect = std::exp(rng.uniform(log_lo, log_hi));
  const double target = area * w * h;
  const double cw = std::min<double>(w, std::sqrt(target * aspect));
  const double ch = std::min<double>(h, target / cw);
  const double x0 = rng.uniform() * (w - cw);
  const double y0 = rng.uniform() * (h - ch);
  std::vector<Taps> taps(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = x0 + (x + 0.5) * cw / w - 0.5;
      const double sy = y0 + (y + 0.5) * ch / h - 0.5;
      taps[static_cast<std::size_t>(y) * w + x] = bilinear_taps(sx, sy, w, h, Border::kClamp);
    }
  }
  return taps;
}

std::vector<Taps> elastic_taps(int w, int h, double magnitude, CounterRng& rng) {
  // Two noise planes smoothed by a wide Gaussian form the displacement field;
  // it is rescaled so its largest component equals `magnitude` pixels.
  ImageBuffer field(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      field.at(x, y, 0) = rng.normal();
      field.at(x, y, 1) = rng.normal();
    }
  }
  field = gaussian_blur(field, kElasticSigma, static_cast<int>(std::ceil(3 * kElasticSigma)));
  double max_abs = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      max_abs = std::max({max_abs, std::abs(field.at(x, y, 0)), std::abs(field.at(x, y, 1))});
    }
  }
  const double scale = max_abs > 0 ? magnitude / max_abs : 0.0;
  std::vector<Taps> taps(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = x + scale * field.at(x, y, 0);
      const double sy = y + scale * field.at(x, y, 1);
      taps[static_cast<std::size_t>(y) * w + x] = bilinear_taps(sx, sy, w, h, Border::kClamp);
    }
  }
  return taps;
}

AttackResult warp_result(const ImageBuffer& image, std::vector<Taps> taps, bool exact_gradient) {
  AttackResult r;
  r.image = warp_forward(image, taps);
  if (exact_gradient) {
    r.backward = [taps = std::move(taps)](const ImageBuffer& d) { return warp_backward(d, taps); };
  } else {
    r.backward = identity_backward;
  }
  return r;
}

std::uint64_t kind_tag(AttackKind kind) { return 0xA77AC0000ull + static_cast<std::uint64_t>(kind); }

}  // namespace

std::string_view attack_name(AttackKind kind) { return info(kind).name; }

AttackKind parse_attack_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  fail(ErrorCode::kInvalidArgument, "unknown attack kind '" + std::string(name) + "'");
}

double ladder(AttackKind kind, int level) {
  require(level >= 1 && level <= 5, ErrorCode::kInvalidArgument,
          "attack level must be in 1..5, got " + std::to_string(level));
  return info(kind).ladder[level - 1];
}

double AttackSpec::resolved_parameter() const { return parameter ? *parameter : ladder(kind, level); }

bool is_frequency_attack(AttackKind kind) {
  switch (kind) {
    case AttackKind::kBlur:
    case AttackKind::kBrightness:
    case AttackKind::kContrast:
    case AttackKind::kJpegProxy:
    case AttackKind::kNoise:
      return true;
    default:
      return false;
  }
}

int reflect101(int x, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  x %= period;
  if (x < 0) x += period;
  return x < n ? x : period - x;
}

std::vector<double> blur_kernel(double radius) {
  require(radius >= 0, ErrorCode::kInvalidArgument, "blur radius must be nonnegative");
  return gaussian_kernel(radius / 3.0, static_cast<int>(std::ceil(radius)));
}

ImageBuffer gaussian_blur(const ImageBuffer& image, double sigma, int radius) {
  return blur_with_kernel(image, gaussian_kernel(sigma, radius), false);
}

AttackResult apply_with_backward(const AttackSpec& spec, const ImageBuffer& image) {
  require(!image.empty(), ErrorCode::kInvalidArgument, "cannot attack an empty image");
  const double p = spec.resolved_parameter();
  const int w = image.width();
  const int h = image.height();
  CounterRng rng({spec.seed, kind_tag(spec.kind)});
  switch (spec.kind) {
    case AttackKind::kBlur: {
      auto kernel = blur_kernel(p);
      AttackResult r;
      r.image = blur_with_kernel(image, kernel, false);
      r.backward = [kernel = std::move(kernel)](const ImageBuffer& d) { return blur_with_kernel(d, kernel, true); };
      return r;
    }
    case AttackKind::kBrightness:
      return clamped_pointwise(image, p, [p](std::size_t, double v) { return v * p; });
    case AttackKind::kContrast:
      return clamped_pointwise(image, p, [p](std::size_t, double v) { return (v - 0.5) * p + 0.5; });
    case AttackKind::kNoise: {
      std::vector<double> noise(image.size());
      for (double& n : noise) n = p * rng.normal();
      return clamped_pointwise(image, 1.0, [&noise](std::size_t i, double v) { return v + noise[i]; });
    }
    case AttackKind::kJpegProxy: {
      AttackResult r;
      r.image = jpeg_proxy(image, p);
      r.backward = identity_backward;
      return r;
    }
    case AttackKind::kErasing: {
      require(p >= 0.0 && p <= 1.0, ErrorCode::kInvalidArgument, "erasing fraction must be in [0, 1]");
      const double aspect = std::exp(rng.uniform(std::log(3.0 / 4.0), std::log(4.0 / 3.0)));
      const double target = p * w * h;
      const int ew = std::clamp(static_cast<int>(std::lround(std::sqrt(target * aspect))), 0, w);
      const int eh = ew > 0 ? std::clamp(static_cast<int>(std::lround(target / ew)), 0, h) : 0;
      const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - ew + 1)));
      const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - eh + 1)));
      auto inside = [=](int x, int y) { return x >= x0 && x < x0 + ew && y >= y0 && y < y0 + eh; };
      AttackResult r;
      r.image = image;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (inside(x, y)) {
            for (int c = 0; c < 3; ++c) r.image.at(x, y, c) = 0.0;
          }
        }
      }
      r.backward = [inside](const ImageBuffer& d) {
        ImageBuffer out = d;
        for (int y = 0; y < d.height(); ++y) {
          for (int x = 0; x < d.width(); ++x) {
            if (inside(x, y)) {
              for (int c = 0; c < 3; ++c) out.at(x, y, c) = 0.0;
            }
          }
        }
        return out;
      };
      return r;
    }
    case AttackKind::kResizedCrop:
      require(p > 0.0 && p <= 1.0, ErrorCode::kInvalidArgument, "crop area must be in (0, 1]");
      return warp_result(image, crop_taps(w, h, p, rng), true);
    case AttackKind::kRotation:
      return warp_result(image, rotation_taps(w, h, rng.uniform(-p, p)), true);
    case AttackKind::kElastic:
      return warp_result(image, elastic_taps(w, h, p, rng), false);
  }
  fail(ErrorCode::kInvalidArgument, "unknown attack kind");
}

ImageBuffer apply(const AttackSpec& spec, const ImageBuffer& image) {
  return apply_with_backward(spec, image).image;
}

AttackResult apply_pipeline_with_backward(const AttackPipeline& pipeline, const ImageBuffer& image) {
  std::vector<std::function<ImageBuffer(const ImageBuffer&)>> chain;
  ImageBuffer current = image;
  for (const auto* stage : {&pipeline.frequency_stage, &pipeline.geometry_stage}) {
    for (const auto& spec : *stage) {
      AttackResult r = apply_with_backward(spec, current);
      current = std::move(r.image);
      chain.push_back(std::move(r.backward));
    }
  }
  AttackResult out;
  out.image = std::move(current);
  out.backward = [chain = std::move(chain)](const ImageBuffer& d) {
    ImageBuffer g = d;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) g = (*it)(g);
    return g;
  };
  return out;
}

ImageBuffer apply_pipeline(const AttackPipeline& pipeline, const ImageBuffer& image) {
  ImageBuffer current = image;
  for (const auto& spec : pipeline.frequency_stage) current = apply(spec, current);
  for (const auto& spec : pipeline.geometry_stage) current = apply(spec, current);
  return current;
}

}  // namespace gswm
