#include "gswm/scene.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace gswm {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double GaussianPrimitive::opacity() const { return sigmoid(opacity_logit); }

Vec4 normalized_quaternion(const Vec4& q) {
  const double n = q.norm();
  if (n == 0.0) return Vec4(1.0, 0.0, 0.0, 0.0);
  return q / n;
}

Mat3 rotation_matrix(const Vec4& q_raw) {
  const Vec4 q = normalized_quaternion(q_raw);
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

Vec4 rotation_matrix_vjp(const Vec4& q_raw, const Mat3& g) {
  const double n = q_raw.norm();
  const Vec4 q = normalized_quaternion(q_raw);
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Vec4 dq;
  dq[0] = 2.0 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  dq[1] = 2.0 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2.0 * x * g(1, 1) - w * g(1, 2) +
                 z * g(2, 0) + w * g(2, 1) - 2.0 * x * g(2, 2));
  dq[2] = 2.0 * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
                 w * g(2, 0) + z * g(2, 1) - 2.0 * y * g(2, 2));
  dq[3] = 2.0 * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2.0 * z * g(1, 1) +
                 y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  if (n == 0.0) return Vec4::Zero();
  // Chain through q / |q|.
  return (dq - q * q.dot(dq)) / n;
}

Vec4 quaternion_from_matrix(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  Vec4 out(q.w(), q.x(), q.y(), q.z());
  if (out[0] < 0.0) out = -out;
  return out;
}

Mat3 covariance_of(const GaussianPrimitive& g) {
  const Mat3 r = rotation_matrix(g.rotation);
  const Vec3 var = (2.0 * g.log_scale).array().exp();
  const Mat3 cov = r * var.asDiagonal() * r.transpose();
  return 0.5 * (cov + cov.transpose());
}

}  // namespace gswm
