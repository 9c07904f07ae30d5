#include "acdnet/adam.hpp"

#include <cmath>
#include <string>

namespace acdnet {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::uint64_t step, const AdamOptions& options) {
  if (grads.size() != params.size()) throw ShapeError("adam_step: gradient length mismatch");
  if (state.m.empty()) state.m.assign(params.size(), 0.0);
  if (state.v.empty()) state.v.assign(params.size(), 0.0);
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam_step: optimizer state length mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i]))
      throw NonFiniteGradient("adam_step: non-finite gradient at index " + std::to_string(i));
  }
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(options.beta1, t);
  const double c2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = options.beta1 * state.m[i] + (1.0 - options.beta1) * g;
    state.v[i] = options.beta2 * state.v[i] + (1.0 - options.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= options.lr * mhat / (std::sqrt(vhat) + options.eps);
  }
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options), states_(params_.size()) {
  if (!(options_.lr >= 0.0)) throw std::invalid_argument("Adam: learning rate must be >= 0");
}

void Adam::step() {
  // Validate every gradient first so a rejected step leaves no partial update.
  for (const auto& p : params_) {
    for (double g : p.grad())
      if (!std::isfinite(g)) throw NonFiniteGradient("Adam: non-finite gradient");
  }
  ++steps_;
  std::vector<double> zeros;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    std::span<const double> g = p.grad();
    if (g.empty()) {
      zeros.assign(p.numel(), 0.0);
      g = zeros;
    }
    adam_step(p.mutable_data(), g, states_[i], steps_, options_);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::restore(std::uint64_t steps, std::vector<AdamState> states) {
  if (states.size() != params_.size()) throw ShapeError("Adam::restore: state count mismatch");
  steps_ = steps;
  states_ = std::move(states);
}

}  // namespace acdnet
