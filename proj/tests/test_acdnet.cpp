#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <map>

#include "acdnet/dataset.hpp"
#include "acdnet/gradcheck.hpp"
#include "acdnet/loss_metrics.hpp"
#include "acdnet/network.hpp"
#include "acdnet/training.hpp"

using namespace acdnet;

namespace {

NetConfig small_config() {
  NetConfig c;
  c.stem_channels = 8;
  c.widths = {8, 8, 16, 16};
  c.blocks = {1, 1, 1, 1};
  return c;
}

bool all_finite(const Tensor& t) {
  for (double v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Parameters of one channel-wise fusion head for C' output channels.
std::size_t head_size(std::size_t c, std::size_t r, std::size_t k) {
  const std::size_t h = std::max<std::size_t>(1, c / r);
  return c * h + h + h * k * c + k * c;
}

}  // namespace

TEST(Build, SameSeedSameParameters) {
  const Model a = Model::build(small_config(), 7), b = Model::build(small_config(), 7);
  const auto pa = a.named_parameters(), pb = b.named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_TRUE(std::equal(pa[i].tensor.data().begin(), pa[i].tensor.data().end(), pb[i].tensor.data().begin()));
  }
  const Model c = Model::build(small_config(), 8);
  EXPECT_FALSE(std::equal(pa[0].tensor.data().begin(), pa[0].tensor.data().end(),
                          c.named_parameters()[0].tensor.data().begin()));
}

TEST(Build, ZeroImageGivesFinitePyramid) {
  const Model m = Model::build(NetConfig{}, 1);
  NoGradGuard ng;
  const DepthPyramid p = m.forward(Tensor({1, 3, 64, 128}));
  for (const Tensor* t : {&p.d0, &p.r1, &p.r2, &p.r3, &p.d1, &p.d2, &p.d3}) EXPECT_TRUE(all_finite(*t));
  EXPECT_EQ(p.d0.shape(), (Shape{1, 1, 8, 16}));
  EXPECT_EQ(p.r1.shape(), (Shape{1, 1, 16, 32}));
  EXPECT_EQ(p.r2.shape(), (Shape{1, 1, 32, 64}));
  EXPECT_EQ(p.d3.shape(), (Shape{1, 1, 64, 128}));
}

TEST(Build, FusionHeadsAccountForParameterDifference) {
  NetConfig c = NetConfig{};
  const std::size_t channel = Model::build(c, 3).parameter_count();
  c.fusion = FusionStrategy::SimpleAverage;
  const std::size_t simple = Model::build(c, 3).parameter_count();
  // every block has one ACDConv, blocks after the first have two
  std::size_t heads = 0;
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t layers = 2 * c.blocks[s] - 1;
    heads += layers * head_size(c.widths[s], c.reduction, 4);
  }
  EXPECT_EQ(channel - simple, heads);
}

TEST(Build, RejectsBadSizes) {
  NetConfig c;
  c.height = 48;
  c.width = 96;
  EXPECT_THROW(Model::build(c, 1), std::invalid_argument);
  c.height = 64;
  c.width = 64;
  EXPECT_THROW(Model::build(c, 1), std::invalid_argument);
  c.width = 128;
  c.blocks = {1, 1, 1};
  EXPECT_THROW(Model::build(c, 1), std::invalid_argument);
  c.blocks = {1, 1, 1, 1};
  c.height = 32;
  c.width = 64;
  EXPECT_THROW(Model::build(c, 1), std::invalid_argument);  // (2,1) needs two rows at 1/32
}

TEST(Build, DeeperBackbonesHaveMoreParameters) {
  NetConfig c;
  std::size_t last = 0;
  for (auto blocks : {std::vector<std::size_t>{1, 1, 1, 1}, {2, 2, 2, 2}, {3, 4, 6, 3}}) {
    c.blocks = blocks;
    const std::size_t n = Model::build(c, 1).parameter_count();
    EXPECT_GT(n, last);
    last = n;
  }
}

TEST(Encode, FeatureShapes) {
  const Model m = Model::build(small_config(), 2);
  NoGradGuard ng;
  const auto f = m.encode(Tensor({2, 3, 64, 128}));
  ASSERT_EQ(f.size(), 5u);
  const std::size_t hw[5][2] = {{32, 64}, {16, 32}, {8, 16}, {4, 8}, {2, 4}};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(f[i].shape().h, hw[i][0]);
    EXPECT_EQ(f[i].shape().w, hw[i][1]);
  }
  EXPECT_THROW(m.encode(Tensor({1, 3, 32, 64})), ShapeError);
  EXPECT_THROW(m.encode(Tensor({1, 1, 64, 128})), ShapeError);
}

TEST(Encode, SphereConstantImageGivesConstantFeatures) {
  const Model m = Model::build(small_config(), 3);
  NoGradGuard ng;
  Tensor image({1, 3, 64, 128});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 64 * 128; ++i) image.mutable_data()[c * 64 * 128 + i] = 0.1 * (c + 1);
  for (const auto& f : m.encode(image)) {
    const std::size_t plane = f.shape().plane();
    for (std::size_t c = 0; c < f.shape().c; ++c)
      for (std::size_t i = 0; i < plane; ++i) ASSERT_NEAR(f.data()[c * plane + i], f.data()[c * plane], 1e-12);
  }
}

TEST(Encode, RollEquivariantAtStrideMultiples) {
  const Model m = Model::build(small_config(), 4);
  Rng rng(40);
  const Tensor x = random_uniform({1, 3, 64, 128}, rng, -0.5, 0.5);
  NoGradGuard ng;
  const auto base = m.encode(x);
  for (int s : {1, 2}) {
    const auto rolled = m.encode(roll_width(x, 32 * s));
    for (std::size_t i = 0; i < 5; ++i)
      EXPECT_LT(max_abs_diff(rolled[i], roll_width(base[i], (32 * s) >> (i + 1))), 1e-8) << "scale " << i;
  }
}

TEST(Decode, PyramidRecurrenceHoldsExactly) {
  const Model m = Model::build(small_config(), 5);
  Rng rng(50);
  NoGradGuard ng;
  const DepthPyramid p = m.forward(random_uniform({2, 3, 64, 128}, rng, -0.5, 0.5));
  const auto b = m.upsample_boundary();
  EXPECT_EQ(max_abs_diff(p.d1, add(bilinear_upsample2x(p.d0, b), p.r1)), 0.0);
  EXPECT_EQ(max_abs_diff(p.d2, add(bilinear_upsample2x(p.d1, b), p.r2)), 0.0);
  EXPECT_EQ(max_abs_diff(p.d3, add(bilinear_upsample2x(p.d2, b), p.r3)), 0.0);
  // rebuilding D3 from D0 and the residuals alone is bit-identical
  Tensor d = p.d0;
  for (const Tensor* r : {&p.r1, &p.r2, &p.r3}) d = add(bilinear_upsample2x(d, b), *r);
  EXPECT_EQ(max_abs_diff(d, p.d3), 0.0);
}

TEST(Decode, ZeroDecoderWeightsGiveBiasOnlyResiduals) {
  Model m = Model::build(small_config(), 6);
  for (auto& p : m.named_parameters())
    if (p.name.rfind("decoder.", 0) == 0 && p.name.find(".weight") != std::string::npos)
      for (auto& v : p.tensor.mutable_data()) v = 0.0;
  // biases start at zero; give each head a distinct one
  std::map<std::string, double> bias;
  double next = 0.25;
  for (auto& p : m.named_parameters())
    if (p.name.rfind("decoder.head_", 0) == 0 && p.name.find(".bias") != std::string::npos) {
      p.tensor.mutable_data()[0] = next;
      bias[p.name] = next;
      next += 0.5;
    }
  Rng rng(60);
  NoGradGuard ng;
  const DepthPyramid p = m.forward(random_uniform({1, 3, 64, 128}, rng, -0.5, 0.5));
  for (double v : p.d0.data()) EXPECT_EQ(v, bias.at("decoder.head_d0.bias"));
  for (double v : p.r1.data()) EXPECT_EQ(v, bias.at("decoder.head_r1.bias"));
  for (double v : p.r3.data()) EXPECT_EQ(v, bias.at("decoder.head_r3.bias"));
  const double expect = bias.at("decoder.head_d0.bias") + bias.at("decoder.head_r1.bias") +
                        bias.at("decoder.head_r2.bias") + bias.at("decoder.head_r3.bias");
  for (double v : p.d3.data()) EXPECT_NEAR(v, expect, 1e-12);
}

TEST(Decode, NonIterativeHasSingleHead) {
  NetConfig c = small_config();
  c.iterative = false;
  const Model m = Model::build(c, 7);
  std::size_t heads = 0;
  for (const auto& p : m.named_parameters()) heads += p.name.rfind("decoder.head", 0) == 0;
  EXPECT_EQ(heads, 2u);  // weight and bias
  NoGradGuard ng;
  const DepthPyramid p = m.forward(Tensor({1, 3, 64, 128}));
  EXPECT_EQ(p.d3.shape(), (Shape{1, 1, 64, 128}));
  EXPECT_FALSE(p.d0.defined());
}

TEST(Decode, EndToEndGradientMatchesFiniteDifferences) {
  GradcheckOptions opts;
  opts.seeds = 3;
  const auto cases = default_gradcheck_cases();
  const auto r = run_gradcheck({cases.back()}, opts);
  ASSERT_EQ(r[0].name, "network");
  EXPECT_TRUE(r[0].passed) << r[0].max_error;
}

TEST(Forward, DeterministicFiniteAndFast) {
  const Model m = Model::build(NetConfig{}, 8);
  Rng rng(80);
  const Tensor x = random_uniform({1, 3, 64, 128}, rng, -0.5, 0.5);
  NoGradGuard ng;
  const auto t0 = std::chrono::steady_clock::now();
  const DepthPyramid a = m.forward(x);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const DepthPyramid b = m.forward(x);
  EXPECT_TRUE(all_finite(a.d3));
  EXPECT_EQ(max_abs_diff(a.d3, b.d3), 0.0);
  EXPECT_EQ(max_abs_diff(a.d0, b.d0), 0.0);
  EXPECT_LT(seconds, 1.0);
}

TEST(Forward, RollEquivariantWithCircularPadding) {
  const Model m = Model::build(NetConfig{}, 9);
  Rng rng(90);
  const Tensor x = random_uniform({1, 3, 64, 128}, rng, -0.5, 0.5);
  NoGradGuard ng;
  const Tensor base = m.forward(x).d3;
  for (int s : {32, 64}) EXPECT_LT(max_abs_diff(m.forward(roll_width(x, s)).d3, roll_width(base, s)), 1e-7);
}

TEST(Training, NonIterativeVariantStillLearns) {
  RunConfig cfg;
  cfg.net = small_config();
  cfg.net.iterative = false;
  cfg.batch_size = 1;
  cfg.epochs = 200;
  const auto frames = synthesize_frames(1, 5, 64, 128);
  TrainHooks hooks;
  hooks.write_files = false;
  const TrainResult r = train(cfg, frames, hooks);
  ASSERT_EQ(r.steps.size(), 200u);
  EXPECT_LT(r.steps.back().loss, r.steps.front().loss);
}
