#include <gtest/gtest.h>

#include <cmath>

#include "acdnet/acdconv.hpp"
#include "acdnet/erp_geometry.hpp"
#include "acdnet/gradcheck.hpp"
#include "oracles.hpp"

using namespace acdnet;

namespace {

ACDConvParams make_layer(FusionStrategy s, std::uint64_t seed, std::size_t cin = 3, std::size_t cout = 4,
                         std::size_t rows = 6, std::vector<Dilation> d = default_dilations(), bool bias = true) {
  Rng rng(seed);
  ACDConvConfig cfg;
  cfg.in_channels = cin;
  cfg.out_channels = cout;
  cfg.strategy = s;
  cfg.rows = rows;
  cfg.dilations = std::move(d);
  cfg.reduction = 2;
  cfg.bias = bias;
  return ACDConvParams::create(cfg, rng);
}

const FusionStrategy kAll[] = {FusionStrategy::ChannelWise, FusionStrategy::SimpleAverage, FusionStrategy::RowWise,
                               FusionStrategy::PixelWise};

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Forces the fusion head to emit one constant logit for every output.
void flatten_logits(FusionHead& head) {
  for (auto& v : head.expand.weight.mutable_data()) v = 0.0;
  for (auto& v : head.expand.bias.mutable_data()) v = 0.3;
}

}  // namespace

TEST(AcdConv, DefaultBranchesAndHeadSize) {
  const auto p = make_layer(FusionStrategy::ChannelWise, 1, 3, 8);
  ASSERT_EQ(p.branch_count(), 4u);
  EXPECT_EQ(p.config.dilations, (std::vector<Dilation>{{1, 1}, {1, 2}, {1, 4}, {2, 1}}));
  EXPECT_EQ(p.channel_head->squeeze.weight.shape(), (Shape{4, 8, 1, 1}));
  EXPECT_EQ(p.channel_head->expand.weight.shape(), (Shape{32, 4, 1, 1}));
  for (const auto& b : p.branches) EXPECT_EQ(b.weight.shape(), (Shape{8, 3, 3, 3}));
}

TEST(AcdConv, ZeroInputGivesZeroBranchesWithoutBias) {
  const auto p = make_layer(FusionStrategy::ChannelWise, 2, 3, 4, 6, default_dilations(), false);
  for (const auto& f : branch_forward(Tensor({1, 3, 6, 12}), p, PadMode::Circular))
    for (double v : f.data()) EXPECT_EQ(v, 0.0);
}

TEST(AcdConv, SharedKernelsOnConstantInputGiveIdenticalBranches) {
  auto p = make_layer(FusionStrategy::ChannelWise, 3);
  for (std::size_t i = 1; i < 4; ++i) {
    std::copy(p.branches[0].weight.data().begin(), p.branches[0].weight.data().end(),
              p.branches[i].weight.mutable_data().begin());
    std::copy(p.branches[0].bias->data().begin(), p.branches[0].bias->data().end(),
              p.branches[i].bias->mutable_data().begin());
  }
  const auto f = branch_forward(Tensor::full({1, 3, 6, 12}, 0.7), p, PadMode::Circular);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(max_abs_diff(f[i], f[0]), 0.0);
}

TEST(AcdConv, BranchesMatchStandaloneConvolution) {
  const auto p = make_layer(FusionStrategy::ChannelWise, 4);
  Rng rng(40);
  const Tensor x = random_uniform({2, 3, 6, 12}, rng, -1, 1);
  const auto f = branch_forward(x, p, PadMode::Circular);
  for (std::size_t i = 0; i < 4; ++i) {
    const Dilation d = p.config.dilations[i];
    const Tensor padded = pad(x, pad_for_branch(d, PadMode::Circular));
    const auto ref = oracle::conv2d(padded, p.branches[i].weight,
                                    {p.branches[i].bias->data().begin(), p.branches[i].bias->data().end()}, d.dy, d.dx);
    for (std::size_t k = 0; k < ref.size(); ++k) ASSERT_NEAR(f[i].data()[k], ref[k], 1e-12);
  }
}

TEST(AcfWeights, EqualLogitsGiveQuarterWeights) {
  auto p = make_layer(FusionStrategy::ChannelWise, 5);
  flatten_logits(*p.channel_head);
  Rng rng(50);
  const auto f = branch_forward(random_uniform({2, 3, 6, 12}, rng, -1, 1), p, PadMode::Circular);
  const Tensor w = acf_weights(f, *p.channel_head);
  for (double v : w.data()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(AcfWeights, NormalizedPerChannelForEveryStrategy) {
  Rng rng(51);
  for (FusionStrategy s : kAll)
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = make_layer(s, 100 + seed);
      const auto f = branch_forward(random_uniform({2, 3, 6, 12}, rng, -2, 2), p, PadMode::Circular);
      const Tensor w = fusion_weights(f, p);
      const Shape ws = w.shape();
      const std::size_t group = ws.c / 4;
      for (std::size_t b = 0; b < ws.n; ++b)
        for (std::size_t g = 0; g < group; ++g)
          for (std::size_t y = 0; y < ws.h; ++y)
            for (std::size_t x = 0; x < ws.w; ++x) {
              double total = 0.0;
              for (std::size_t k = 0; k < 4; ++k) total += w.at(b, k * group + g, y, x);
              EXPECT_NEAR(total, 1.0, 1e-9) << to_string(s);
            }
    }
}

TEST(AcfWeights, MatchesPoolMatvecSoftmaxOracle) {
  const auto p = make_layer(FusionStrategy::ChannelWise, 6);
  Rng rng(60);
  const auto f = branch_forward(random_uniform({2, 3, 6, 12}, rng, -1, 1), p, PadMode::Circular);
  const Tensor w = acf_weights(f, *p.channel_head);
  const auto& h = *p.channel_head;
  auto vec = [](const Tensor& t) { return std::vector<double>(t.data().begin(), t.data().end()); };
  for (std::size_t b = 0; b < 2; ++b) {
    std::vector<double> v(4);
    for (std::size_t c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (const auto& fi : f) acc += oracle::plane_mean(fi, b, c);
      v[c] = acc / 4.0;
    }
    auto hidden = oracle::matvec(v, vec(h.squeeze.weight), vec(h.squeeze.bias));
    for (auto& e : hidden) e = std::max(e, 0.0);
    const auto logits = oracle::matvec(hidden, vec(h.expand.weight), vec(h.expand.bias));
    for (std::size_t c = 0; c < 4; ++c) {
      const auto sm = oracle::softmax({logits[0 * 4 + c], logits[1 * 4 + c], logits[2 * 4 + c], logits[3 * 4 + c]});
      for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(w.at(b, k * 4 + c, 0, 0), sm[k], 1e-10);
    }
  }
}

TEST(Fuse, EqualLogitsMatchSimpleAverage) {
  auto cw = make_layer(FusionStrategy::ChannelWise, 7);
  flatten_logits(*cw.channel_head);
  auto avg = cw;
  avg.config.strategy = FusionStrategy::SimpleAverage;
  avg.channel_head.reset();
  Rng rng(70);
  const Tensor x = random_uniform({2, 3, 6, 12}, rng, -1, 1);
  EXPECT_LT(max_abs_diff(acdconv_forward(x, cw, PadMode::Circular), acdconv_forward(x, avg, PadMode::Circular)), 1e-12);
}

TEST(Fuse, OneHotWeightsSelectBranch) {
  Rng rng(71);
  std::vector<Tensor> f;
  for (int i = 0; i < 4; ++i) f.push_back(random_uniform({1, 2, 3, 4}, rng, -1, 1));
  for (std::size_t k = 0; k < 4; ++k) {
    Tensor w({1, 8, 1, 1});
    w.mutable_data()[k * 2] = w.mutable_data()[k * 2 + 1] = 1.0;
    EXPECT_EQ(max_abs_diff(weighted_branch_sum(f, w), f[k]), 0.0);
  }
}

TEST(Fuse, MatchesLoopWeightedSum) {
  Rng rng(72);
  for (FusionStrategy s : kAll) {
    const auto p = make_layer(s, 200);
    const auto f = branch_forward(random_uniform({2, 3, 6, 12}, rng, -1, 1), p, PadMode::Circular);
    const Tensor w = s == FusionStrategy::SimpleAverage ? Tensor::full({2, 4, 1, 1}, 0.25) : fusion_weights(f, p);
    const Tensor out = fuse(f, p);
    const Shape ws = w.shape();
    const std::size_t cw = ws.c / 4;
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t y = 0; y < 6; ++y)
          for (std::size_t x = 0; x < 12; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 4; ++k)
              acc += f[k].at(b, c, y, x) *
                     w.at(b, k * cw + (cw == 1 ? 0 : c), ws.h == 1 ? 0 : y, ws.w == 1 ? 0 : x);
            ASSERT_NEAR(out.at(b, c, y, x), acc, 1e-12) << to_string(s);
          }
  }
}

TEST(AcdConvForward, SphereConstantInputGivesConstantOutput) {
  for (FusionStrategy s : {FusionStrategy::ChannelWise, FusionStrategy::SimpleAverage}) {
    const auto p = make_layer(s, 8);
    const Tensor y = acdconv_forward(Tensor::full({1, 3, 6, 12}, -0.4), p, PadMode::Circular);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 72; ++i) EXPECT_NEAR(y.data()[c * 72 + i], y.data()[c * 72], 1e-12);
  }
}

TEST(AcdConvForward, RollEquivariantUnderWrappingPads) {
  Rng rng(80);
  const Tensor x = random_uniform({2, 3, 6, 12}, rng, -1, 1);
  for (PadMode m : {PadMode::Circular, PadMode::LeftRight})
    for (FusionStrategy s : kAll)
      for (std::size_t n : {2u, 3u, 4u, 5u}) {
        std::vector<Dilation> d(default_dilations().begin(), default_dilations().begin() + std::min<std::size_t>(n, 4));
        if (n == 5) d.push_back({1, 8});
        const auto p = make_layer(s, 300 + n, 3, 4, 6, d);
        for (int shift : {1, 5, 7}) {
          const Tensor a = acdconv_forward(roll_width(x, shift), p, m);
          const Tensor b = roll_width(acdconv_forward(x, p, m), shift);
          EXPECT_LT(max_abs_diff(a, b), 1e-9) << to_string(s) << " n=" << n << " shift=" << shift;
        }
      }
}

TEST(AcdConvForward, WeightsNormalizedForEveryBranchCount) {
  Rng rng(81);
  for (std::size_t n : {2u, 3u, 4u, 5u}) {
    std::vector<Dilation> d(default_dilations().begin(), default_dilations().begin() + std::min<std::size_t>(n, 4));
    if (n == 5) d.push_back({1, 8});
    const auto p = make_layer(FusionStrategy::ChannelWise, 400 + n, 3, 4, 6, d);
    const auto f = branch_forward(random_uniform({1, 3, 6, 12}, rng, -1, 1), p, PadMode::Circular);
    ASSERT_EQ(f.size(), n);
    const Tensor w = acf_weights(f, *p.channel_head);
    for (std::size_t c = 0; c < 4; ++c) {
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) total += w.at(0, k * 4 + c, 0, 0);
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(AcdConvForward, GradientMatchesFiniteDifferences) {
  GradcheckOptions opts;
  for (const auto& c : default_gradcheck_cases()) {
    if (c.name.rfind("acdconv.", 0) != 0) continue;
    const auto r = run_gradcheck({c}, opts);
    EXPECT_TRUE(r[0].passed) << c.name << " " << r[0].max_error;
  }
}

TEST(AcdConvParams, Rejections) {
  Rng rng(9);
  ACDConvConfig cfg;
  cfg.in_channels = 2;
  cfg.out_channels = 2;
  cfg.dilations = {};
  EXPECT_THROW(ACDConvParams::create(cfg, rng), std::invalid_argument);
  cfg.dilations = {{0, 1}};
  EXPECT_THROW(ACDConvParams::create(cfg, rng), std::invalid_argument);
  cfg.dilations = default_dilations();
  cfg.strategy = FusionStrategy::RowWise;
  cfg.rows = 0;
  EXPECT_THROW(ACDConvParams::create(cfg, rng), std::invalid_argument);
  EXPECT_THROW(parse_fusion_strategy("bogus"), std::invalid_argument);
  const auto p = make_layer(FusionStrategy::ChannelWise, 10);
  EXPECT_THROW(branch_forward(Tensor({1, 5, 6, 12}), p, PadMode::Circular), ShapeError);
}

TEST(Footprint, DefaultUnionHas27TapsIn5x9) {
  const Footprint fp = receptive_field_footprint(default_dilations());
  const auto ref = oracle::footprint({{1, 1}, {1, 2}, {1, 4}, {2, 1}});
  EXPECT_EQ(fp.size(), ref.size());
  EXPECT_EQ(fp.size(), 27u);
  EXPECT_EQ(fp.rows(), 5);
  EXPECT_EQ(fp.cols(), 9);
  EXPECT_EQ(fp.multiplicity.at({0, 0}), 4);
}
