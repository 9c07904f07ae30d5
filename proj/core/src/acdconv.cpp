#include "acdnet/acdconv.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace acdnet {

std::string_view to_string(FusionStrategy strategy) {
  switch (strategy) {
    case FusionStrategy::ChannelWise: return "ChannelWise";
    case FusionStrategy::SimpleAverage: return "SimpleAverage";
    case FusionStrategy::RowWise: return "RowWise";
    case FusionStrategy::PixelWise: return "PixelWise";
  }
  return "?";
}

FusionStrategy parse_fusion_strategy(std::string_view text) {
  std::string t;
  for (char ch : text) {
    if (ch == '-' || ch == '_') continue;
    t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (t == "channelwise" || t == "channel" || t == "acf") return FusionStrategy::ChannelWise;
  if (t == "simpleaverage" || t == "simple" || t == "average") return FusionStrategy::SimpleAverage;
  if (t == "rowwise" || t == "row") return FusionStrategy::RowWise;
  if (t == "pixelwise" || t == "pixel") return FusionStrategy::PixelWise;
  throw std::invalid_argument("unknown fusion strategy '" + std::string(text) + "'");
}

const std::vector<Dilation>& default_dilations() {
  static const std::vector<Dilation> kDefault{{1, 1}, {1, 2}, {1, 4}, {2, 1}};
  return kDefault;
}

FusionHead FusionHead::create(std::size_t features, std::size_t branches, std::size_t reduction,
                              Rng& rng) {
  const std::size_t hidden = std::max<std::size_t>(1, features / std::max<std::size_t>(1, reduction));
  FusionHead head;
  head.squeeze = LinearLayer::create(features, hidden, rng);
  head.expand = LinearLayer::create(hidden, branches * features, rng);
  return head;
}

void FusionHead::collect(const std::string& prefix, ParameterList& out) const {
  squeeze.collect(prefix + ".fc1", out);
  expand.collect(prefix + ".fc2", out);
}

ACDConvParams ACDConvParams::create(const ACDConvConfig& config, Rng& rng) {
  if (config.dilations.empty()) throw std::invalid_argument("ACDConv: no dilation branches");
  for (const auto& d : config.dilations)
    if (d.dy < 1 || d.dx < 1) throw std::invalid_argument("ACDConv: dilation must be >= 1");
  if (config.in_channels == 0 || config.out_channels == 0)
    throw std::invalid_argument("ACDConv: channel counts must be positive");

  ACDConvParams p;
  p.config = config;
  const std::size_t k = config.dilations.size();
  for (const auto& d : config.dilations) {
    p.branches.push_back(Conv2dLayer::create(config.in_channels, config.out_channels, 3,
                                             Conv2dOptions{d.dy, d.dx, 1, 1}, config.bias, rng));
  }
  switch (config.strategy) {
    case FusionStrategy::ChannelWise:
      p.channel_head = FusionHead::create(config.out_channels, k, config.reduction, rng);
      break;
    case FusionStrategy::RowWise:
      if (config.rows == 0) throw std::invalid_argument("ACDConv: row-wise fusion needs rows");
      p.row_head = FusionHead::create(config.rows, k, config.reduction, rng);
      break;
    case FusionStrategy::PixelWise:
      p.pixel_head = Conv2dLayer::create(config.out_channels, k * config.out_channels, 1,
                                         Conv2dOptions{}, true, rng);
      break;
    case FusionStrategy::SimpleAverage:
      break;
  }
  return p;
}

void ACDConvParams::collect(const std::string& prefix, ParameterList& out) const {
  for (std::size_t i = 0; i < branches.size(); ++i)
    branches[i].collect(prefix + ".branch" + std::to_string(i), out);
  if (channel_head) channel_head->collect(prefix + ".fusion", out);
  if (row_head) row_head->collect(prefix + ".fusion", out);
  if (pixel_head) pixel_head->collect(prefix + ".fusion.conv", out);
}

std::vector<Tensor> branch_forward(const Tensor& x, const ACDConvParams& params, PadMode mode) {
  if (x.shape().c != params.config.in_channels) {
    throw ShapeError("ACDConv: input has " + std::to_string(x.shape().c) +
                     " channels, layer expects " + std::to_string(params.config.in_channels));
  }
  std::vector<Tensor> out;
  out.reserve(params.branches.size());
  for (std::size_t i = 0; i < params.branches.size(); ++i) {
    const Tensor padded = pad(x, pad_for_branch(params.config.dilations[i], mode));
    out.push_back(params.branches[i](padded));
  }
  return out;
}

Tensor acf_weights(std::span<const Tensor> features, const FusionHead& head) {
  if (features.empty()) throw ShapeError("acf_weights: no features");
  const double inv = 1.0 / static_cast<double>(features.size());
  const Tensor pooled = global_avg_pool(scale(add_n(features), inv));
  return branch_softmax(head(pooled), features.size());
}

Tensor fusion_weights(std::span<const Tensor> features, const ACDConvParams& params) {
  if (features.size() != params.branches.size())
    throw ShapeError("fuse: feature count does not match branch count");
  const std::size_t k = features.size();
  const Shape fs = features[0].shape();
  switch (params.config.strategy) {
    case FusionStrategy::ChannelWise:
      return acf_weights(features, *params.channel_head);
    case FusionStrategy::SimpleAverage:
      return Tensor::full(Shape{fs.n, k, 1, 1}, 1.0 / static_cast<double>(k));
    case FusionStrategy::RowWise: {
      if (fs.h != params.config.rows)
        throw ShapeError("fuse: row-wise head built for " + std::to_string(params.config.rows) +
                         " rows, features have " + std::to_string(fs.h));
      const Tensor logits = (*params.row_head)(row_mean(add_n(features)));
      // (B, K*H, 1, 1) and (B, K, H, 1) share one memory layout
      return reshape(branch_softmax(logits, k), Shape{fs.n, k, fs.h, 1});
    }
    case FusionStrategy::PixelWise:
      return branch_softmax((*params.pixel_head)(add_n(features)), k);
  }
  throw std::invalid_argument("fuse: unknown fusion strategy");
}

Tensor fuse(std::span<const Tensor> features, const ACDConvParams& params) {
  if (params.config.strategy == FusionStrategy::SimpleAverage) {
    if (features.size() != params.branches.size())
      throw ShapeError("fuse: feature count does not match branch count");
    return scale(add_n(features), 1.0 / static_cast<double>(features.size()));
  }
  return weighted_branch_sum(features, fusion_weights(features, params));
}

Tensor acdconv_forward(const Tensor& x, const ACDConvParams& params, PadMode mode) {
  const auto features = branch_forward(x, params, mode);
  return fuse(features, params);
}

}  // namespace acdnet
