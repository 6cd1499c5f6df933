#pragma once

#include <Eigen/Core>
#include <vector>

namespace gswm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// One anisotropic 3D Gaussian with degree-0 (view-independent) color.
struct GaussianPrimitive {
  Vec3 center = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();             ///< log of per-axis standard deviation
  Vec4 rotation = Vec4(1.0, 0.0, 0.0, 0.0);  ///< unit quaternion (w, x, y, z)
  double opacity_logit = 0.0;
  Vec3 color = Vec3::Zero();
  bool frozen = false;

  double opacity() const;

  friend bool operator==(const GaussianPrimitive&, const GaussianPrimitive&) = default;
};

struct GaussianScene {
  std::vector<GaussianPrimitive> primitives;
  Vec3 background = Vec3::Zero();

  std::size_t size() const { return primitives.size(); }

  friend bool operator==(const GaussianScene&, const GaussianScene&) = default;
};

double sigmoid(double x);
double logit(double p);

/// Rotation matrix of a quaternion (w, x, y, z); the quaternion is normalized first.
Mat3 rotation_matrix(const Vec4& q);

/// Gradient of <G, R(q)> with respect to the raw (unnormalized) quaternion.
Vec4 rotation_matrix_vjp(const Vec4& q, const Mat3& d_rotation);

Vec4 normalized_quaternion(const Vec4& q);

/// Quaternion for a proper rotation matrix.
Vec4 quaternion_from_matrix(const Mat3& r);

/// R diag(exp(2 log_scale)) R^T.
Mat3 covariance_of(const GaussianPrimitive& g);

}  // namespace gswm
