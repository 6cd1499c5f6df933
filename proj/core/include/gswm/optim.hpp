#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gswm/error.hpp"

namespace gswm {

/// Adam with bias correction. Moments are kept in double regardless of the
/// parameter type.
class Adam {
 public:
  explicit Adam(std::size_t size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

  /// Applies one update and returns the L2 norm of the parameter change.
  template <typename T>
  double step(std::span<T> params, std::span<const double> grad, double lr) {
    require(params.size() == m_.size() && grad.size() == m_.size(), ErrorCode::kShapeMismatch,
            "optimizer state does not match parameters");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    double norm2 = 0.0;
    for (std::size_t i = 0; i < m_.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1 - beta2_) * grad[i] * grad[i];
      const double delta = -lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
      params[i] = static_cast<T>(params[i] + delta);
      norm2 += delta * delta;
    }
    return std::sqrt(norm2);
  }

  long steps() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

 private:
  double beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace gswm
