#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "acdnet/acdconv.hpp"
#include "acdnet/layers.hpp"
#include "acdnet/pano_padding.hpp"

namespace acdnet {

/// Network shape and ablation switches.
struct NetConfig {
  std::size_t height = 64;
  std::size_t width = 128;
  std::size_t stem_channels = 16;
  /// Residual blocks per encoder stage (four stages).
  std::vector<std::size_t> blocks{2, 2, 2, 2};
  /// Output channels per encoder stage.
  std::vector<std::size_t> widths{16, 32, 64, 128};
  FusionStrategy fusion = FusionStrategy::ChannelWise;
  PadMode padding = PadMode::Circular;
  /// Coarse-to-fine residual depth pyramid; false uses one full-resolution head.
  bool iterative = true;
  std::vector<Dilation> dilations = default_dilations();
  std::size_t reduction = 4;

  /// Throws std::invalid_argument unless H is a positive multiple of 32,
  /// W == 2H, there are four stages with positive widths, and no vertical
  /// dilation exceeds the H/32 rows of the deepest stage.
  void validate() const;
};

/// Depth outputs. With iterative prediction every field is set and
/// D_i = upsample(D_{i-1}) + R_i; otherwise only d3 is defined.
struct DepthPyramid {
  Tensor d0;  // 1/8 resolution
  Tensor r1, r2, r3;
  Tensor d1, d2;
  Tensor d3;  // full resolution
};

class Model {
 public:
  /// Deterministic construction: the same (config, seed) always yields
  /// bit-identical parameters.
  static Model build(const NetConfig& config, std::uint64_t seed);

  const NetConfig& config() const { return config_; }

  /// Five feature maps at 1/2 ... 1/32 resolution. Throws ShapeError when the
  /// image is not (B, 3, H, W) for the configured size.
  std::vector<Tensor> encode(const Tensor& image) const;
  DepthPyramid decode(std::span<const Tensor> features) const;
  DepthPyramid forward(const Tensor& image) const;

  /// Every trainable tensor with a stable dotted name, encoder first.
  ParameterList named_parameters() const;
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;

  /// Horizontal boundary rule the decoder uses when upsampling.
  UpsampleBoundary upsample_boundary() const;

 private:
  struct Block {
    std::optional<Conv2dLayer> strided_conv;  // first block of a stage
    std::optional<ACDConvParams> acd_conv1;   // other blocks
    ACDConvParams acd_conv2;
    std::optional<Conv2dLayer> shortcut;      // 1x1 projection
  };

  Tensor run_block(const Block& block, const Tensor& x) const;
  Tensor conv_same(const Conv2dLayer& layer, const Tensor& x) const;
  Tensor upconv(const Conv2dLayer& layer, const Tensor& x) const;

  NetConfig config_;
  Conv2dLayer stem_;
  std::vector<std::vector<Block>> stages_;
  std::vector<Conv2dLayer> up_;  // coarse to fine, five modules
  std::vector<Conv2dLayer> heads_;  // D0, R1, R2, R3 or a single full-resolution head
};

}  // namespace acdnet
