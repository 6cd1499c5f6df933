#pragma once

#include <vector>

#include "gswm/scene.hpp"

namespace gswm {

/// Pinhole camera. Pixel (x, y) has its center at (x + 0.5, y + 0.5); a view
/// point (vx, vy, vz) projects to (fx vx / vz + cx, fy vy / vz + cy).
struct Camera {
  Mat4 world_to_view = Mat4::Identity();  ///< rigid transform, row-major on disk
  Vec2 focal = Vec2(64.0, 64.0);
  Vec2 principal_point = Vec2(32.0, 32.0);
  int width = 64;
  int height = 64;

  Mat3 rotation() const { return world_to_view.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return world_to_view.topRightCorner<3, 1>(); }
  /// Camera center in world coordinates.
  Vec3 center() const { return -rotation().transpose() * translation(); }

  Vec3 to_view(const Vec3& world) const { return rotation() * world + translation(); }

  /// Full horizontal / vertical field of view in radians.
  double fov_x() const;
  double fov_y() const;

  /// Throws Error(kValidation) unless the rotation block is orthonormal
  /// within 1e-5 and both focal lengths are positive.
  void validate() const;

  friend bool operator==(const Camera&, const Camera&) = default;
};

/// Camera at `center` looking at `target`, view +z forward, +y down in the image.
Camera look_at(const Vec3& center, const Vec3& target, const Vec3& up, double focal, int width,
               int height);

/// Linear blend of center, world-to-view matrix and field of view. The blended
/// rotation block is projected back onto SO(3) (polar decomposition); t = 0
/// and t = 1 return the endpoints exactly.
Camera interpolate_cameras(const Camera& a, const Camera& b, double t);

struct InterpolationSlot {
  int pair = 0;  ///< 1-based index i of the pair (C_i, C_{i+1})
  double t = 0.0;

  friend bool operator==(const InterpolationSlot&, const InterpolationSlot&) = default;
};

/// k interior samples t = j / (k + 1), j = 1..k, for each of the n - 1
/// consecutive pairs.
std::vector<InterpolationSlot> interpolation_schedule(int n_cameras, int k);

/// Applies interpolation_schedule to an ordered camera list.
std::vector<Camera> interpolate_path(const std::vector<Camera>& cameras, int k);

/// Nearest orthonormal matrix (polar factor) with positive determinant.
Mat3 orthonormalize(const Mat3& m);

}  // namespace gswm
