#pragma once

#include <optional>
#include <vector>

#include "gswm/camera.hpp"
#include "gswm/image.hpp"
#include "gswm/scene.hpp"

namespace gswm {

struct RasterConfig {
  double mip_tau = 0.3;  ///< screen-space filter std-dev in pixels
  int tile_size = 16;
  double alpha_cutoff = 1.0 / 255.0;
  double transmittance_floor = 1e-4;
  double gaussian_support_sigmas = 3.0;

  void validate() const;
};

inline constexpr double kNearPlane = 0.01;
inline constexpr double kMaxAlpha = 0.999;

/// A Gaussian after projection and screen-space filtering.
struct Splat2D {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();    ///< filtered covariance, cov2d_raw + tau^2 I
  Mat2 cov2d_raw = Mat2::Identity();
  Mat2 conic = Mat2::Identity();    ///< inverse of cov2d
  double depth = 0.0;
  double opacity = 0.0;
  Vec3 color = Vec3::Zero();
  double mip_scale = 1.0;           ///< sqrt(det cov2d_raw / det cov2d)
  int source_index = -1;
  // Pixel bounding box of the support ellipse, clipped to the image (inclusive).
  int x_min = 0, x_max = -1, y_min = 0, y_max = -1;
};

/// Per-primitive gradients. Frozen primitives keep all-zero entries.
struct PrimitiveGradient {
  Vec3 d_center = Vec3::Zero();
  Vec3 d_log_scale = Vec3::Zero();
  Vec4 d_rotation = Vec4::Zero();
  double d_opacity_logit = 0.0;
  Vec3 d_color = Vec3::Zero();

  PrimitiveGradient& operator+=(const PrimitiveGradient& o);
};

struct SceneGradients {
  std::vector<PrimitiveGradient> primitives;  ///< indexed like scene.primitives
};

/// Projects one Gaussian through the camera with the local affine (Jacobian)
/// approximation and applies the screen-space filter. Returns nullopt when the
/// primitive is behind the near plane or its support ellipse misses the image.
std::optional<Splat2D> project_gaussian(const GaussianPrimitive& g, const Camera& cam,
                                        const RasterConfig& cfg, int source_index = -1);

/// Tiled front-to-back alpha compositing.
ImageBuffer render(const GaussianScene& scene, const Camera& cam, const RasterConfig& cfg = {});

/// Same image as render(), computed by a plain per-pixel loop over every
/// projected splat. Test oracle.
ImageBuffer render_reference(const GaussianScene& scene, const Camera& cam,
                             const RasterConfig& cfg = {});

/// Gradient of sum(d_pixels * render(scene)) with respect to every unfrozen
/// primitive's parameters.
SceneGradients render_backward(const GaussianScene& scene, const Camera& cam,
                               const RasterConfig& cfg, const ImageBuffer& d_pixels);

}  // namespace gswm
