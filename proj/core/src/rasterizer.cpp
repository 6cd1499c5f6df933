#include "gswm/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/LU>

#include "gswm/error.hpp"
#include "gswm/parallel.hpp"

namespace gswm {

void RasterConfig::validate() const {
  require(mip_tau >= 0.0, ErrorCode::kInvalidArgument, "mip_tau must be >= 0");
  require(tile_size > 0, ErrorCode::kInvalidArgument, "tile_size must be positive");
  require(alpha_cutoff >= 0.0, ErrorCode::kInvalidArgument, "alpha_cutoff must be >= 0");
  require(transmittance_floor >= 0.0, ErrorCode::kInvalidArgument,
          "transmittance_floor must be >= 0");
  require(gaussian_support_sigmas > 0.0, ErrorCode::kInvalidArgument,
          "gaussian_support_sigmas must be positive");
}

PrimitiveGradient& PrimitiveGradient::operator+=(const PrimitiveGradient& o) {
  d_center += o.d_center;
  d_log_scale += o.d_log_scale;
  d_rotation += o.d_rotation;
  d_opacity_logit += o.d_opacity_logit;
  d_color += o.d_color;
  return *this;
}

namespace {

struct Projection {
  Vec3 view;
  Eigen::Matrix<double, 2, 3> jacobian;
  Eigen::Matrix<double, 2, 3> jw;  // jacobian * W
  Mat3 cov3d;
};

Projection project_geometry(const GaussianPrimitive& g, const Camera& cam) {
  Projection p;
  p.view = cam.to_view(g.center);
  const double fx = cam.focal.x(), fy = cam.focal.y();
  const double z = p.view.z();
  p.jacobian << fx / z, 0.0, -fx * p.view.x() / (z * z), 0.0, fy / z, -fy * p.view.y() / (z * z);
  p.jw = p.jacobian * cam.rotation();
  p.cov3d = covariance_of(g);
  return p;
}

}  // namespace

std::optional<Splat2D> project_gaussian(const GaussianPrimitive& g, const Camera& cam,
                                        const RasterConfig& cfg, int source_index) {
  const Vec3 view = cam.to_view(g.center);
  if (!(view.z() > kNearPlane)) return std::nullopt;

  const Projection p = project_geometry(g, cam);
  Splat2D s;
  s.source_index = source_index;
  s.depth = view.z();
  s.mean2d = Vec2(cam.focal.x() * view.x() / view.z() + cam.principal_point.x(),
                  cam.focal.y() * view.y() / view.z() + cam.principal_point.y());
  Mat2 raw = p.jw * p.cov3d * p.jw.transpose();
  raw = 0.5 * (raw + raw.transpose()).eval();
  s.cov2d_raw = raw;
  s.cov2d = raw + cfg.mip_tau * cfg.mip_tau * Mat2::Identity();
  const double det_raw = raw.determinant();
  const double det = s.cov2d.determinant();
  if (!(det > 0.0) || !(det_raw > 0.0)) return std::nullopt;
  s.mip_scale = std::sqrt(det_raw / det);
  s.conic = Mat2(Mat2{{s.cov2d(1, 1), -s.cov2d(0, 1)}, {-s.cov2d(1, 0), s.cov2d(0, 0)}} / det);
  s.opacity = g.opacity();
  s.color = g.color;

  // Exact bounding box of the support ellipse, padded by one pixel so that the
  // tile binning never drops a pixel the per-pixel test would accept.
  const double k = cfg.gaussian_support_sigmas;
  const double ex = k * std::sqrt(s.cov2d(0, 0));
  const double ey = k * std::sqrt(s.cov2d(1, 1));
  const double x0 = std::ceil(s.mean2d.x() - ex - 0.5) - 1.0;
  const double x1 = std::floor(s.mean2d.x() + ex - 0.5) + 1.0;
  const double y0 = std::ceil(s.mean2d.y() - ey - 0.5) - 1.0;
  const double y1 = std::floor(s.mean2d.y() + ey - 0.5) + 1.0;
  if (x1 < 0.0 || y1 < 0.0 || x0 > cam.width - 1 || y0 > cam.height - 1) return std::nullopt;
  s.x_min = static_cast<int>(std::max(0.0, x0));
  s.x_max = static_cast<int>(std::min<double>(cam.width - 1, x1));
  s.y_min = static_cast<int>(std::max(0.0, y0));
  s.y_max = static_cast<int>(std::min<double>(cam.height - 1, y1));
  return s;
}

namespace {

/// Projected splats sorted front to back, ties broken by primitive index.
std::vector<Splat2D> project_scene(const GaussianScene& scene, const Camera& cam,
                                   const RasterConfig& cfg) {
  cfg.validate();
  cam.validate();
  std::vector<Splat2D> splats;
  splats.reserve(scene.primitives.size());
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    if (auto s = project_gaussian(scene.primitives[i], cam, cfg, static_cast<int>(i))) {
      splats.push_back(*s);
    }
  }
  std::sort(splats.begin(), splats.end(), [](const Splat2D& a, const Splat2D& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.source_index < b.source_index;
  });
  return splats;
}

struct Sample {
  double alpha = 0.0;
  double gauss = 0.0;  // mip_scale * exp(power), before the opacity multiply
  double dx = 0.0, dy = 0.0;
  bool clamped = false;
};

/// Evaluates splat s at pixel (px, py). Returns false when the pixel lies
/// outside the support ellipse or the contribution is below the cutoff.
inline bool sample_splat(const Splat2D& s, int px, int py, const RasterConfig& cfg, Sample& out) {
  const double dx = px + 0.5 - s.mean2d.x();
  const double dy = py + 0.5 - s.mean2d.y();
  const double maha = s.conic(0, 0) * dx * dx + 2.0 * s.conic(0, 1) * dx * dy + s.conic(1, 1) * dy * dy;
  const double k = cfg.gaussian_support_sigmas;
  if (maha > k * k) return false;
  const double gauss = s.mip_scale * std::exp(-0.5 * maha);
  double alpha = s.opacity * gauss;
  bool clamped = false;
  if (alpha > kMaxAlpha) {
    alpha = kMaxAlpha;
    clamped = true;
  }
  if (alpha < cfg.alpha_cutoff) return false;
  out = {alpha, gauss, dx, dy, clamped};
  return true;
}

/// Composites an ordered list of splat indices at one pixel.
template <typename IndexRange>
void composite_pixel(const std::vector<Splat2D>& splats, const IndexRange& order, int px, int py,
                     const RasterConfig& cfg, const Vec3& background, double* rgb) {
  double t = 1.0;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  Sample smp;
  for (int idx : order) {
    const Splat2D& s = splats[idx];
    if (!sample_splat(s, px, py, cfg, smp)) continue;
    const double next_t = t * (1.0 - smp.alpha);
    if (next_t < cfg.transmittance_floor) break;
    const double w = smp.alpha * t;
    c0 += s.color[0] * w;
    c1 += s.color[1] * w;
    c2 += s.color[2] * w;
    t = next_t;
  }
  rgb[0] = c0 + t * background[0];
  rgb[1] = c1 + t * background[1];
  rgb[2] = c2 + t * background[2];
}

struct TileGrid {
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::vector<int>> lists;  // per tile, splat indices in depth order
};

TileGrid bin_splats(const std::vector<Splat2D>& splats, const Camera& cam, int tile) {
  TileGrid grid;
  grid.tiles_x = (cam.width + tile - 1) / tile;
  grid.tiles_y = (cam.height + tile - 1) / tile;
  grid.lists.resize(static_cast<std::size_t>(grid.tiles_x) * grid.tiles_y);
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const Splat2D& s = splats[i];
    for (int ty = s.y_min / tile; ty <= s.y_max / tile; ++ty) {
      for (int tx = s.x_min / tile; tx <= s.x_max / tile; ++tx) {
        grid.lists[static_cast<std::size_t>(ty) * grid.tiles_x + tx].push_back(static_cast<int>(i));
      }
    }
  }
  return grid;
}

}  // namespace

ImageBuffer render(const GaussianScene& scene, const Camera& cam, const RasterConfig& cfg) {
  const auto splats = project_scene(scene, cam, cfg);
  const int tile = cfg.tile_size;
  const TileGrid grid = bin_splats(splats, cam, tile);
  ImageBuffer image(cam.width, cam.height);
  parallel_for(grid.lists.size(), [&](std::size_t t) {
    const int tx = static_cast<int>(t) % grid.tiles_x;
    const int ty = static_cast<int>(t) / grid.tiles_x;
    const auto& list = grid.lists[t];
    for (int py = ty * tile; py < std::min(cam.height, (ty + 1) * tile); ++py) {
      for (int px = tx * tile; px < std::min(cam.width, (tx + 1) * tile); ++px) {
        composite_pixel(splats, list, px, py, cfg, scene.background, &image.at(px, py, 0));
      }
    }
  });
  return image;
}

ImageBuffer render_reference(const GaussianScene& scene, const Camera& cam,
                             const RasterConfig& cfg) {
  const auto splats = project_scene(scene, cam, cfg);
  std::vector<int> all(splats.size());
  std::iota(all.begin(), all.end(), 0);
  ImageBuffer image(cam.width, cam.height);
  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      composite_pixel(splats, all, px, py, cfg, scene.background, &image.at(px, py, 0));
    }
  }
  return image;
}

namespace {

/// Gradient with respect to the screen-space quantities of one splat.
struct SplatGrad {
  Vec2 d_mean = Vec2::Zero();
  Mat2 d_conic = Mat2::Zero();  // full (not symmetrized) matrix gradient
  double d_mip = 0.0;
  double d_opacity = 0.0;
  Vec3 d_color = Vec3::Zero();

  void add(const SplatGrad& o) {
    d_mean += o.d_mean;
    d_conic += o.d_conic;
    d_mip += o.d_mip;
    d_opacity += o.d_opacity;
    d_color += o.d_color;
  }
};

struct Contribution {
  int list_pos;
  Sample sample;
  double transmittance;  // before this splat
};

void backward_pixel(const std::vector<Splat2D>& splats, const std::vector<int>& list, int px,
                    int py, const RasterConfig& cfg, const Vec3& background, const Vec3& d_pixel,
                    std::vector<Contribution>& scratch, std::vector<SplatGrad>& grads) {
  scratch.clear();
  double t = 1.0;
  Sample smp;
  for (std::size_t pos = 0; pos < list.size(); ++pos) {
    const Splat2D& s = splats[list[pos]];
    if (!sample_splat(s, px, py, cfg, smp)) continue;
    const double next_t = t * (1.0 - smp.alpha);
    if (next_t < cfg.transmittance_floor) break;
    scratch.push_back({static_cast<int>(pos), smp, t});
    t = next_t;
  }

  Vec3 behind = background;  // color composited behind the current splat
  for (auto it = scratch.rbegin(); it != scratch.rend(); ++it) {
    const Splat2D& s = splats[list[it->list_pos]];
    const Sample& sm = it->sample;
    SplatGrad& g = grads[it->list_pos];
    g.d_color += d_pixel * (sm.alpha * it->transmittance);
    const double d_alpha = it->transmittance * d_pixel.dot(s.color - behind);
    behind = sm.alpha * s.color + (1.0 - sm.alpha) * behind;
    if (sm.clamped) continue;
    g.d_opacity += d_alpha * sm.gauss;
    const double d_gauss = d_alpha * s.opacity;
    // gauss = mip * exp(power)
    g.d_mip += d_gauss * sm.gauss / s.mip_scale;
    const double d_power = d_gauss * sm.gauss;
    const double a = s.conic(0, 0), b = s.conic(0, 1), c = s.conic(1, 1);
    g.d_mean.x() += d_power * (a * sm.dx + b * sm.dy);
    g.d_mean.y() += d_power * (b * sm.dx + c * sm.dy);
    g.d_conic(0, 0) += -0.5 * d_power * sm.dx * sm.dx;
    g.d_conic(0, 1) += -0.5 * d_power * sm.dx * sm.dy;
    g.d_conic(1, 0) += -0.5 * d_power * sm.dx * sm.dy;
    g.d_conic(1, 1) += -0.5 * d_power * sm.dy * sm.dy;
  }
}

PrimitiveGradient chain_to_primitive(const GaussianPrimitive& prim, const Splat2D& s,
                                     const SplatGrad& sg, const Camera& cam) {
  PrimitiveGradient out;
  out.d_color = sg.d_color;
  const double o = s.opacity;
  out.d_opacity_logit = sg.d_opacity * o * (1.0 - o);

  // conic = cov2d^{-1}
  const Mat2 d_cov_filtered = -s.conic * sg.d_conic * s.conic;
  Mat2 d_cov_raw = d_cov_filtered;
  if (sg.d_mip != 0.0) {
    // mip = sqrt(det raw / det filtered), d log det(M) = tr(M^{-1} dM)
    d_cov_raw += sg.d_mip * s.mip_scale * 0.5 * (s.cov2d_raw.inverse() - s.conic);
  }
  const Mat2 g2 = 0.5 * (d_cov_raw + d_cov_raw.transpose());

  const Projection p = project_geometry(prim, cam);
  const Mat3 w = cam.rotation();
  const Mat3 d_cov3 = p.jw.transpose() * g2 * p.jw;
  const Eigen::Matrix<double, 2, 3> d_jw = 2.0 * g2 * p.jw * p.cov3d;
  const Eigen::Matrix<double, 2, 3> d_j = d_jw * w.transpose();

  const double fx = cam.focal.x(), fy = cam.focal.y();
  const double vx = p.view.x(), vy = p.view.y(), vz = p.view.z();
  const double vz2 = vz * vz, vz3 = vz2 * vz;
  Vec3 d_view = Vec3::Zero();
  d_view.x() += sg.d_mean.x() * fx / vz;
  d_view.y() += sg.d_mean.y() * fy / vz;
  d_view.z() += -sg.d_mean.x() * fx * vx / vz2 - sg.d_mean.y() * fy * vy / vz2;
  d_view.x() += d_j(0, 2) * (-fx / vz2);
  d_view.y() += d_j(1, 2) * (-fy / vz2);
  d_view.z() += d_j(0, 0) * (-fx / vz2) + d_j(0, 2) * (2.0 * fx * vx / vz3) +
                d_j(1, 1) * (-fy / vz2) + d_j(1, 2) * (2.0 * fy * vy / vz3);
  out.d_center = w.transpose() * d_view;

  // cov3 = R D R^T, D = diag(exp(2 log_scale))
  const Mat3 r = rotation_matrix(prim.rotation);
  const Vec3 var = (2.0 * prim.log_scale).array().exp();
  const Mat3 g3 = 0.5 * (d_cov3 + d_cov3.transpose());
  const Mat3 d_r = 2.0 * g3 * r * var.asDiagonal();
  const Mat3 rgr = r.transpose() * g3 * r;
  for (int i = 0; i < 3; ++i) out.d_log_scale[i] = 2.0 * var[i] * rgr(i, i);
  out.d_rotation = rotation_matrix_vjp(prim.rotation, d_r);
  return out;
}

}  // namespace

SceneGradients render_backward(const GaussianScene& scene, const Camera& cam,
                               const RasterConfig& cfg, const ImageBuffer& d_pixels) {
  require(d_pixels.width() == cam.width && d_pixels.height() == cam.height,
          ErrorCode::kShapeMismatch, "render_backward: pixel gradient does not match camera");
  const auto splats = project_scene(scene, cam, cfg);
  const int tile = cfg.tile_size;
  const TileGrid grid = bin_splats(splats, cam, tile);

  std::vector<std::vector<SplatGrad>> tile_grads(grid.lists.size());
  parallel_for(grid.lists.size(), [&](std::size_t t) {
    const int tx = static_cast<int>(t) % grid.tiles_x;
    const int ty = static_cast<int>(t) / grid.tiles_x;
    const auto& list = grid.lists[t];
    auto& grads = tile_grads[t];
    grads.assign(list.size(), SplatGrad{});
    if (list.empty()) return;
    std::vector<Contribution> scratch;
    for (int py = ty * tile; py < std::min(cam.height, (ty + 1) * tile); ++py) {
      for (int px = tx * tile; px < std::min(cam.width, (tx + 1) * tile); ++px) {
        const Vec3 d_pixel(d_pixels.at(px, py, 0), d_pixels.at(px, py, 1), d_pixels.at(px, py, 2));
        if (d_pixel.isZero(0.0)) continue;
        backward_pixel(splats, list, px, py, cfg, scene.background, d_pixel, scratch, grads);
      }
    }
  });

  // Merge in fixed tile order so the sums do not depend on scheduling.
  std::vector<SplatGrad> per_splat(splats.size());
  for (std::size_t t = 0; t < grid.lists.size(); ++t) {
    const auto& list = grid.lists[t];
    for (std::size_t pos = 0; pos < list.size(); ++pos) per_splat[list[pos]].add(tile_grads[t][pos]);
  }

  SceneGradients out;
  out.primitives.assign(scene.primitives.size(), PrimitiveGradient{});
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const int src = splats[i].source_index;
    const GaussianPrimitive& prim = scene.primitives[src];
    if (prim.frozen) continue;
    out.primitives[src] = chain_to_primitive(prim, splats[i], per_splat[i], cam);
  }
  return out;
}

}  // namespace gswm
