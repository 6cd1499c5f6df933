#include "gswm/detection.hpp"

#include <cmath>
#include <cstdint>

#include "gswm/error.hpp"

namespace gswm {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

BceResult bce_loss(std::span<const double> logits, const MessageBits& target) {
  require(logits.size() == static_cast<std::size_t>(kMessageBits), ErrorCode::kShapeMismatch,
          "bce_loss expects 48 logits");
  BceResult r;
  r.gradient.resize(kMessageBits);
  for (int i = 0; i < kMessageBits; ++i) {
    const double z = logits[i];
    const double y = target[i] ? 1.0 : 0.0;
    // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    r.loss += softplus(z) - y * z;
    const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    r.gradient[i] = (s - y) / kMessageBits;
  }
  r.loss /= kMessageBits;
  return r;
}

int matched_bits(const MessageBits& decoded, const MessageBits& reference) {
  int n = 0;
  for (int i = 0; i < kMessageBits; ++i) n += decoded[i] == reference[i];
  return n;
}

double bit_accuracy(const MessageBits& decoded, const MessageBits& reference) {
  return static_cast<double>(matched_bits(decoded, reference)) / kMessageBits;
}

namespace {

constexpr int kExactBits = 62;

// Number of n-bit strings with at least k ones, exact for n <= kExactBits.
std::uint64_t tail_count(int n, int k) {
  std::uint64_t c = 1;  // C(n, j)
  std::uint64_t total = 0;
  for (int j = 0; j <= n; ++j) {
    if (j >= k) total += c;
    c = c * static_cast<std::uint64_t>(n - j) / static_cast<std::uint64_t>(j + 1);
  }
  return total;
}

}  // namespace

double binomial_tail(int n, int k) {
  require(n >= 0, ErrorCode::kInvalidArgument, "binomial_tail needs n >= 0");
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  if (n <= kExactBits) return std::ldexp(static_cast<double>(tail_count(n, k)), -n);
  double sum = 0.0;
  for (int j = k; j <= n; ++j) {
    sum += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) - n * std::log(2.0));
  }
  return std::min(sum, 1.0);
}

int detection_threshold(int n_bits, double fpr) {
  require(n_bits >= 1, ErrorCode::kInvalidArgument, "detection_threshold needs n_bits >= 1");
  require(fpr > 0.0 && fpr < 1.0, ErrorCode::kInvalidArgument, "fpr must lie in (0, 1)");
  int k = 0;
  if (n_bits <= kExactBits) {
    // count / 2^n <= fpr, compared without rounding the tail.
    const long double budget = std::ldexp(static_cast<long double>(fpr), n_bits);
    while (k <= n_bits && static_cast<long double>(tail_count(n_bits, k)) > budget) ++k;
    return k;
  }
  while (binomial_tail(n_bits, k) > fpr) ++k;
  return k;
}

DetectionStats detect(const MessageBits& decoded, const MessageBits& reference, int threshold_bits) {
  DetectionStats s;
  s.matched_bits = matched_bits(decoded, reference);
  s.bit_accuracy = static_cast<double>(s.matched_bits) / kMessageBits;
  s.threshold_bits = threshold_bits;
  s.detected = s.matched_bits >= threshold_bits;
  return s;
}

double tpr_at_fpr(std::span<const DetectionStats> trials) {
  require(!trials.empty(), ErrorCode::kInvalidArgument, "tpr_at_fpr needs at least one trial");
  int hits = 0;
  for (const auto& t : trials) hits += t.detected;
  return static_cast<double>(hits) / static_cast<double>(trials.size());
}

}  // namespace gswm
