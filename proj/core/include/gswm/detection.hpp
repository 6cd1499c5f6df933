#pragma once

#include <span>
#include <vector>

#include "gswm/message.hpp"

namespace gswm {

struct BceResult {
  double loss = 0.0;
  std::vector<double> gradient;  ///< d loss / d logits
};

/// Mean binary cross-entropy over the 48 bits, in the stable softplus form.
BceResult bce_loss(std::span<const double> logits, const MessageBits& target);

double bit_accuracy(const MessageBits& decoded, const MessageBits& reference);
int matched_bits(const MessageBits& decoded, const MessageBits& reference);

/// P(Binomial(n, 1/2) >= k), summed exactly.
double binomial_tail(int n, int k);

/// Smallest k with P(Binomial(n_bits, 1/2) >= k) <= fpr.
int detection_threshold(int n_bits, double fpr);

struct DetectionStats {
  double bit_accuracy = 0.0;
  int matched_bits = 0;
  bool detected = false;
  int threshold_bits = 0;
};

DetectionStats detect(const MessageBits& decoded, const MessageBits& reference, int threshold_bits);

/// Fraction of trials with detected set. Throws on an empty list.
double tpr_at_fpr(std::span<const DetectionStats> trials);

}  // namespace gswm
