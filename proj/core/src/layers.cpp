#include "acdnet/layers.hpp"

#include <cmath>

namespace acdnet {

std::size_t count_parameters(const ParameterList& params) {
  std::size_t total = 0;
  for (const auto& p : params) total += p.tensor.numel();
  return total;
}

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  return random_uniform(shape, rng, -bound, bound, true);
}

Conv2dLayer Conv2dLayer::create(std::size_t in_channels, std::size_t out_channels,
                                std::size_t kernel, Conv2dOptions options, bool with_bias,
                                Rng& rng) {
  Conv2dLayer layer;
  layer.weight = kaiming_uniform(Shape{out_channels, in_channels, kernel, kernel},
                                 in_channels * kernel * kernel, rng);
  if (with_bias) layer.bias = Tensor(Shape{out_channels, 1, 1, 1}, true);
  layer.options = options;
  return layer;
}

void Conv2dLayer::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias) out.push_back({prefix + ".bias", *bias});
}

LinearLayer LinearLayer::create(std::size_t in_features, std::size_t out_features, Rng& rng) {
  LinearLayer layer;
  layer.weight = kaiming_uniform(Shape{out_features, in_features, 1, 1}, in_features, rng);
  layer.bias = Tensor(Shape{out_features, 1, 1, 1}, true);
  return layer;
}

void LinearLayer::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

}  // namespace acdnet
