#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acdnet/layers.hpp"
#include "acdnet/pano_padding.hpp"
#include "acdnet/tensor.hpp"

namespace acdnet {

/// How the dilated branch outputs are merged.
enum class FusionStrategy {
  ChannelWise,    // adaptive channel-wise fusion: one softmax weight per (branch, channel)
  SimpleAverage,  // plain mean of the branches
  RowWise,        // one weight per (branch, row) from row-squeezed statistics
  PixelWise,      // one weight per (branch, channel, pixel) from a 1x1 convolution
};

std::string_view to_string(FusionStrategy strategy);
FusionStrategy parse_fusion_strategy(std::string_view text);

/// Branch order used for the default layer: 1x1, 1x2, 1x4, 2x1.
const std::vector<Dilation>& default_dilations();

/// Bottleneck MLP producing branch logits: in -> in/r -> branches*in.
struct FusionHead {
  LinearLayer squeeze;
  LinearLayer expand;

  static FusionHead create(std::size_t features, std::size_t branches, std::size_t reduction,
                           Rng& rng);
  Tensor operator()(const Tensor& pooled) const { return expand(relu(squeeze(pooled))); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

struct ACDConvConfig {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<Dilation> dilations = default_dilations();
  FusionStrategy strategy = FusionStrategy::ChannelWise;
  std::size_t reduction = 4;
  /// Feature height at this layer; only the row-wise head depends on it.
  std::size_t rows = 0;
  bool bias = true;
};

/// Parameters of one adaptively combined dilated convolution.
struct ACDConvParams {
  ACDConvConfig config;
  std::vector<Conv2dLayer> branches;
  std::optional<FusionHead> channel_head;
  std::optional<FusionHead> row_head;
  std::optional<Conv2dLayer> pixel_head;

  /// Throws std::invalid_argument for an empty branch list, a dilation below 1,
  /// or a row-wise layer without `rows`.
  static ACDConvParams create(const ACDConvConfig& config, Rng& rng);
  std::size_t branch_count() const { return branches.size(); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

/// Runs every dilated branch on its own size-preserving pad of `x`.
std::vector<Tensor> branch_forward(const Tensor& x, const ACDConvParams& params, PadMode mode);

/// Channel-wise fusion weights: mean of the branches, global average pooling,
/// the fusion head, then a softmax across branches for each channel.
/// Returns (B, K*C', 1, 1) with channel k*C' + c holding W^k_c.
Tensor acf_weights(std::span<const Tensor> features, const FusionHead& head);

/// Branch weights for the configured strategy, broadcastable by
/// weighted_branch_sum. SimpleAverage yields a constant 1/K tensor.
Tensor fusion_weights(std::span<const Tensor> features, const ACDConvParams& params);

/// Merges branch outputs according to params.config.strategy.
Tensor fuse(std::span<const Tensor> features, const ACDConvParams& params);

/// branch_forward followed by fuse; output (B, C', H, W).
Tensor acdconv_forward(const Tensor& x, const ACDConvParams& params, PadMode mode);

}  // namespace acdnet
