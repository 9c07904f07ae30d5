#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acdnet/ops.hpp"
#include "acdnet/tensor.hpp"

namespace acdnet {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParameterList = std::vector<NamedTensor>;

std::size_t count_parameters(const ParameterList& params);

/// Kaiming-style fan-in uniform init: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng);

/// Convolution parameters plus their stride/dilation. Applies no padding.
struct Conv2dLayer {
  Tensor weight;
  std::optional<Tensor> bias;
  Conv2dOptions options;

  static Conv2dLayer create(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                            Conv2dOptions options, bool with_bias, Rng& rng);
  Tensor operator()(const Tensor& input) const { return conv2d(input, weight, bias, options); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

struct LinearLayer {
  Tensor weight;
  Tensor bias;

  static LinearLayer create(std::size_t in_features, std::size_t out_features, Rng& rng);
  Tensor operator()(const Tensor& input) const { return linear(input, weight, bias); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

}  // namespace acdnet
