#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "acdnet/tensor.hpp"

namespace acdnet {

/// Raised when an optimizer step sees a NaN or infinite gradient. The step is
/// not applied.
class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates for one parameter array.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

/// One bias-corrected Adam update of `params` in place. `step` is the 1-based
/// index of this update. Throws NonFiniteGradient before touching anything if
/// a gradient entry is not finite, and ShapeError on length mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::uint64_t step, const AdamOptions& options);

/// Adam over a fixed list of leaf tensors.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);

  /// Applies one update using the tensors' accumulated gradients. Parameters
  /// without a gradient are treated as having a zero gradient.
  void step();
  void zero_grad();

  std::uint64_t steps_taken() const { return steps_; }
  const AdamOptions& options() const { return options_; }
  std::vector<AdamState>& states() { return states_; }
  const std::vector<AdamState>& states() const { return states_; }
  void restore(std::uint64_t steps, std::vector<AdamState> states);

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  std::vector<AdamState> states_;
  std::uint64_t steps_ = 0;
};

}  // namespace acdnet
