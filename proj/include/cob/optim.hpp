#pragma once

#include <vector>

#include "cob/matrix.hpp"

namespace cob {

struct AdamaxConfig {
  double learning_rate = 0.001;
  double beta1 = 0.95;
  double beta2 = 0.99;
  double epsilon = 1e-8;

  void validate() const;
};

/// Adamax update rule:
///   m <- beta1*m + (1-beta1)*g
///   u <- max(beta2*u, |g|)
///   theta <- theta - lr/(1-beta1^t) * m/(u+eps)
/// The infinity-norm accumulator u is nonnegative by construction.
class Adamax {
 public:
  explicit Adamax(AdamaxConfig cfg = {});

  /// Apply one update. The params/grads lists must keep the same length and
  /// shapes across calls (slots are allocated on first use).
  void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);

  long steps_taken() const { return t_; }
  const AdamaxConfig& config() const { return cfg_; }
  /// Infinity-norm accumulator for parameter slot i (test hook).
  const Matrix& u_accumulator(size_t i) const { return u_.at(i); }

 private:
  AdamaxConfig cfg_;
  long t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> u_;
};

}  // namespace cob
