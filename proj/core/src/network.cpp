#include "acdnet/network.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace acdnet {

namespace {

constexpr std::size_t kStages = 4;

std::string stage_name(std::size_t s, std::size_t b) {
  return "encoder.stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
}

}  // namespace

void NetConfig::validate() const {
  if (height == 0 || height % 32 != 0)
    throw std::invalid_argument("NetConfig: height must be a positive multiple of 32, got " +
                                std::to_string(height));
  if (width != 2 * height)
    throw std::invalid_argument("NetConfig: width must be twice the height (equirectangular)");
  if (blocks.size() != kStages || widths.size() != kStages)
    throw std::invalid_argument("NetConfig: blocks and widths need exactly four stages");
  for (std::size_t s = 0; s < kStages; ++s) {
    if (blocks[s] == 0 || widths[s] == 0)
      throw std::invalid_argument("NetConfig: stage block counts and widths must be positive");
  }
  if (stem_channels == 0) throw std::invalid_argument("NetConfig: stem_channels must be > 0");
  if (dilations.empty()) throw std::invalid_argument("NetConfig: empty dilation list");
  // the deepest stage has height/32 rows; a branch may pad at most that many
  for (const auto& d : dilations)
    if (static_cast<std::size_t>(d.dy) > height / 32)
      throw std::invalid_argument("NetConfig: vertical dilation " + std::to_string(d.dy) +
                                  " exceeds the " + std::to_string(height / 32) +
                                  " rows of the deepest stage");
}

Model Model::build(const NetConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Model m;
  m.config_ = config;
  const bool bias = true;

  m.stem_ = Conv2dLayer::create(3, config.stem_channels, 7, Conv2dOptions{1, 1, 2, 2}, bias, rng);

  std::size_t in_ch = config.stem_channels;
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::size_t out_ch = config.widths[s];
    const std::size_t rows = config.height >> (s + 2);
    ACDConvConfig acd;
    acd.out_channels = out_ch;
    acd.dilations = config.dilations;
    acd.strategy = config.fusion;
    acd.reduction = config.reduction;
    acd.rows = rows;
    acd.bias = bias;

    std::vector<Block> stage;
    for (std::size_t b = 0; b < config.blocks[s]; ++b) {
      Block block;
      if (b == 0) {
        block.strided_conv =
            Conv2dLayer::create(in_ch, out_ch, 3, Conv2dOptions{1, 1, 2, 2}, bias, rng);
        block.shortcut = Conv2dLayer::create(in_ch, out_ch, 1, Conv2dOptions{1, 1, 2, 2}, bias, rng);
      } else {
        acd.in_channels = out_ch;
        block.acd_conv1 = ACDConvParams::create(acd, rng);
      }
      acd.in_channels = out_ch;
      block.acd_conv2 = ACDConvParams::create(acd, rng);
      stage.push_back(std::move(block));
    }
    m.stages_.push_back(std::move(stage));
    in_ch = out_ch;
  }

  const auto& w = config.widths;
  const std::size_t stem = config.stem_channels;
  const std::size_t finest = std::max<std::size_t>(1, stem / 2);
  // (in, out) per up-convolution, coarse to fine; skips double the channels.
  const std::size_t up_in[5] = {w[3], 2 * w[2], 2 * w[1], 2 * w[0], 2 * stem};
  const std::size_t up_out[5] = {w[2], w[1], w[0], stem, finest};
  for (std::size_t i = 0; i < 5; ++i)
    m.up_.push_back(Conv2dLayer::create(up_in[i], up_out[i], 3, Conv2dOptions{}, bias, rng));

  if (config.iterative) {
    const std::size_t head_in[4] = {2 * w[1], 2 * w[0], 2 * stem, finest};
    for (std::size_t ch : head_in)
      m.heads_.push_back(Conv2dLayer::create(ch, 1, 3, Conv2dOptions{}, true, rng));
  } else {
    m.heads_.push_back(Conv2dLayer::create(finest, 1, 3, Conv2dOptions{}, true, rng));
  }
  return m;
}

UpsampleBoundary Model::upsample_boundary() const {
  return config_.padding == PadMode::Zero ? UpsampleBoundary::Clamp : UpsampleBoundary::Wrap;
}

Tensor Model::conv_same(const Conv2dLayer& layer, const Tensor& x) const {
  const int p = static_cast<int>(layer.weight.shape().h / 2);
  return layer(pad(x, PadSpec{p, p, p, p, config_.padding}));
}

Tensor Model::upconv(const Conv2dLayer& layer, const Tensor& x) const {
  return relu(conv_same(layer, bilinear_upsample2x(x, upsample_boundary())));
}

Tensor Model::run_block(const Block& block, const Tensor& x) const {
  Tensor h = block.strided_conv ? conv_same(*block.strided_conv, x)
                                : acdconv_forward(x, *block.acd_conv1, config_.padding);
  h = relu(h);
  h = acdconv_forward(h, block.acd_conv2, config_.padding);
  const Tensor skip = block.shortcut ? (*block.shortcut)(x) : x;
  return relu(add(h, skip));
}

std::vector<Tensor> Model::encode(const Tensor& image) const {
  const Shape s = image.shape();
  if (s.c != 3 || s.h != config_.height || s.w != config_.width) {
    throw ShapeError("encode: expected (B, 3, " + std::to_string(config_.height) + ", " +
                     std::to_string(config_.width) + ") image, got " + to_string(s));
  }
  std::vector<Tensor> features;
  Tensor x = relu(conv_same(stem_, image));
  features.push_back(x);
  for (const auto& stage : stages_) {
    for (const auto& block : stage) x = run_block(block, x);
    features.push_back(x);
  }
  return features;
}

DepthPyramid Model::decode(std::span<const Tensor> features) const {
  if (features.size() != 5) throw ShapeError("decode: expected five encoder feature maps");
  DepthPyramid out;
  auto merge = [](const Tensor& up, const Tensor& skip) {
    const Tensor parts[] = {up, skip};
    return concat_channels(parts);
  };
  Tensor x = merge(upconv(up_[0], features[4]), features[3]);  // 1/16
  x = merge(upconv(up_[1], x), features[2]);                   // 1/8
  const auto boundary = upsample_boundary();
  if (config_.iterative) {
    out.d0 = conv_same(heads_[0], x);
    x = merge(upconv(up_[2], x), features[1]);  // 1/4
    out.r1 = conv_same(heads_[1], x);
    out.d1 = add(bilinear_upsample2x(out.d0, boundary), out.r1);
    x = merge(upconv(up_[3], x), features[0]);  // 1/2
    out.r2 = conv_same(heads_[2], x);
    out.d2 = add(bilinear_upsample2x(out.d1, boundary), out.r2);
    x = upconv(up_[4], x);  // 1/1
    out.r3 = conv_same(heads_[3], x);
    out.d3 = add(bilinear_upsample2x(out.d2, boundary), out.r3);
  } else {
    x = merge(upconv(up_[2], x), features[1]);
    x = merge(upconv(up_[3], x), features[0]);
    x = upconv(up_[4], x);
    out.d3 = conv_same(heads_[0], x);
  }
  return out;
}

DepthPyramid Model::forward(const Tensor& image) const {
  const auto features = encode(image);
  return decode(features);
}

ParameterList Model::named_parameters() const {
  ParameterList out;
  stem_.collect("encoder.stem", out);
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    for (std::size_t b = 0; b < stages_[s].size(); ++b) {
      const Block& block = stages_[s][b];
      const std::string prefix = stage_name(s, b);
      if (block.strided_conv) block.strided_conv->collect(prefix + ".conv1", out);
      if (block.acd_conv1) block.acd_conv1->collect(prefix + ".conv1", out);
      block.acd_conv2.collect(prefix + ".conv2", out);
      if (block.shortcut) block.shortcut->collect(prefix + ".shortcut", out);
    }
  }
  for (std::size_t i = 0; i < up_.size(); ++i)
    up_[i].collect("decoder.up" + std::to_string(i), out);
  if (config_.iterative) {
    static const char* kHeads[] = {"decoder.head_d0", "decoder.head_r1", "decoder.head_r2",
                                   "decoder.head_r3"};
    for (std::size_t i = 0; i < heads_.size(); ++i) heads_[i].collect(kHeads[i], out);
  } else {
    heads_[0].collect("decoder.head_full", out);
  }
  return out;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

std::size_t Model::parameter_count() const { return count_parameters(named_parameters()); }

}  // namespace acdnet
