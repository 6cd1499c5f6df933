#include "gswm/camera.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "gswm/error.hpp"

namespace gswm {

double Camera::fov_x() const { return 2.0 * std::atan(0.5 * width / focal.x()); }
double Camera::fov_y() const { return 2.0 * std::atan(0.5 * height / focal.y()); }

void Camera::validate() const {
  require(focal.x() > 0.0 && focal.y() > 0.0, ErrorCode::kValidation,
          "camera focal lengths must be positive");
  require(width > 0 && height > 0, ErrorCode::kValidation, "camera resolution must be positive");
  require(world_to_view.allFinite(), ErrorCode::kValidation, "camera matrix has non-finite entries");
  const Mat3 r = rotation();
  const double err = (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  require(err <= 1e-5, ErrorCode::kValidation,
          "camera rotation block is not orthonormal (error " + std::to_string(err) + ")");
  const Eigen::RowVector4d last = world_to_view.row(3);
  require(last.isApprox(Eigen::RowVector4d(0, 0, 0, 1), 1e-12), ErrorCode::kValidation,
          "camera matrix last row must be (0 0 0 1)");
}

Camera look_at(const Vec3& center, const Vec3& target, const Vec3& up, double focal, int width,
               int height) {
  const Vec3 forward = (target - center).normalized();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  Camera cam;
  cam.world_to_view.setIdentity();
  cam.world_to_view.topLeftCorner<3, 3>() = r;
  cam.world_to_view.topRightCorner<3, 1>() = -r * center;
  cam.focal = Vec2(focal, focal);
  cam.principal_point = Vec2(0.5 * width, 0.5 * height);
  cam.width = width;
  cam.height = height;
  return cam;
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

Camera interpolate_cameras(const Camera& a, const Camera& b, double t) {
  require(t >= 0.0 && t <= 1.0, ErrorCode::kInvalidArgument,
          "interpolation parameter must lie in [0,1], got " + std::to_string(t));
  require(a.width == b.width && a.height == b.height, ErrorCode::kInvalidArgument,
          "interpolated cameras must share a resolution");
  if (t == 0.0) return a;
  if (t == 1.0) return b;

  auto lerp = [t](const auto& x, const auto& y) { return ((1.0 - t) * x + t * y).eval(); };

  const Vec3 center = lerp(a.center(), b.center());
  const Mat4 blended = lerp(a.world_to_view, b.world_to_view);
  const Mat3 r = orthonormalize(blended.topLeftCorner<3, 3>());

  Camera out;
  out.width = a.width;
  out.height = a.height;
  out.world_to_view.setIdentity();
  out.world_to_view.topLeftCorner<3, 3>() = r;
  out.world_to_view.topRightCorner<3, 1>() = -r * center;

  const double fov_x = (1.0 - t) * a.fov_x() + t * b.fov_x();
  const double fov_y = (1.0 - t) * a.fov_y() + t * b.fov_y();
  out.focal = Vec2(0.5 * out.width / std::tan(0.5 * fov_x), 0.5 * out.height / std::tan(0.5 * fov_y));
  out.principal_point = lerp(a.principal_point, b.principal_point);
  return out;
}

std::vector<InterpolationSlot> interpolation_schedule(int n_cameras, int k) {
  require(n_cameras >= 2, ErrorCode::kInvalidArgument, "interpolation needs at least two cameras");
  require(k >= 1, ErrorCode::kInvalidArgument, "interpolation needs k >= 1");
  std::vector<InterpolationSlot> slots;
  slots.reserve(static_cast<std::size_t>(n_cameras - 1) * k);
  for (int i = 1; i < n_cameras; ++i) {
    for (int j = 1; j <= k; ++j) slots.push_back({i, static_cast<double>(j) / (k + 1)});
  }
  return slots;
}

std::vector<Camera> interpolate_path(const std::vector<Camera>& cameras, int k) {
  std::vector<Camera> out;
  for (const auto& slot : interpolation_schedule(static_cast<int>(cameras.size()), k)) {
    out.push_back(interpolate_cameras(cameras[slot.pair - 1], cameras[slot.pair], slot.t));
  }
  return out;
}

}  // namespace gswm
