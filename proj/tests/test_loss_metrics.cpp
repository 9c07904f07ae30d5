#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "acdnet/loss_metrics.hpp"
#include "oracles.hpp"

using namespace acdnet;

namespace {

struct Pair {
  std::vector<double> pred, gt;
  std::vector<std::uint8_t> mask;
};

Pair random_pair(Rng& rng, std::size_t n, double invalid_share) {
  Pair p;
  for (std::size_t i = 0; i < n; ++i) {
    p.pred.push_back(rng.uniform(0.5, 9.5));
    p.gt.push_back(rng.uniform(0.5, 9.5));
    p.mask.push_back(rng.uniform() < invalid_share ? 0 : 1);
  }
  p.mask[0] = 1;
  return p;
}

}  // namespace

TEST(BerhuC, FifthOfLargestError) {
  const std::vector<double> pred{1.5, 3.0, 0.0}, gt{1.0, 2.0, 2.5};
  const std::vector<std::uint8_t> mask{1, 1, 1};
  EXPECT_DOUBLE_EQ(berhu_c(pred, gt, mask), 0.5);
  EXPECT_EQ(berhu_c(gt, gt, mask), 0.0);
  EXPECT_THROW(berhu_c(pred, gt, std::vector<std::uint8_t>{0, 0, 0}), std::invalid_argument);
}

TEST(BerhuC, MatchesScanOracle) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const Pair p = random_pair(rng, 97, 0.3);
    EXPECT_EQ(berhu_c(p.pred, p.gt, p.mask), oracle::berhu_c(p.pred, p.gt, p.mask));
  }
}

TEST(BerhuLoss, WorkedValues) {
  EXPECT_DOUBLE_EQ(berhu_value(2.5, 0.5), 6.5);
  EXPECT_DOUBLE_EQ(berhu_value(0.3, 0.5), 0.3);
  EXPECT_DOUBLE_EQ(berhu_value(-2.5, 0.5), 6.5);
  const Tensor gt({1, 1, 1, 2}, {1.0, 2.0});
  EXPECT_EQ(berhu_loss(gt, gt, ValidMask::all(gt.shape())).item(), 0.0);
}

TEST(BerhuLoss, SinglePixelThroughTheTensorPath) {
  // one image, errors {2.5, 0.3}: c = 0.5
  const Tensor pred({1, 1, 1, 2}, {3.5, 1.3}), gt({1, 1, 1, 2}, {1.0, 1.0});
  EXPECT_NEAR(berhu_loss(pred, gt, ValidMask::all(gt.shape())).item(), (6.5 + 0.3) / 2.0, 1e-15);
}

TEST(BerhuLoss, ContinuousAtThreshold) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const double c = rng.uniform(1e-3, 10.0);
    EXPECT_NEAR(berhu_value(c, c), c, 1e-12);
    EXPECT_NEAR((c * c + c * c) / (2.0 * c), c, 1e-12);
    EXPECT_NEAR(berhu_value(std::nextafter(c, 1e9), c), c, 1e-12);
  }
}

TEST(BerhuLoss, MonotoneInAbsoluteError) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const double c = rng.uniform(0.1, 2.0);
    double last = -1.0;
    for (double d = 0.0; d < 5.0; d += 0.01) {
      const double v = berhu_value(d, c);
      EXPECT_GE(v, last);
      last = v;
    }
  }
}

TEST(BerhuLoss, MaskedMeanWithPerImageThreshold) {
  Rng rng(4);
  const Tensor pred = random_uniform({3, 1, 4, 6}, rng, 0.5, 4.0);
  const Tensor gt = random_uniform({3, 1, 4, 6}, rng, 0.5, 4.0);
  ValidMask mask = ValidMask::all(gt.shape());
  for (auto& m : mask.valid) m = rng.uniform() < 0.7;
  mask.valid[0] = mask.valid[24] = mask.valid[48] = 1;
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    const std::vector<double> p(pred.data().begin() + b * 24, pred.data().begin() + (b + 1) * 24);
    const std::vector<double> g(gt.data().begin() + b * 24, gt.data().begin() + (b + 1) * 24);
    const std::vector<std::uint8_t> m(mask.valid.begin() + b * 24, mask.valid.begin() + (b + 1) * 24);
    const double c = oracle::berhu_c(p, g, m);
    for (std::size_t i = 0; i < 24; ++i)
      if (m[i]) {
        total += oracle::berhu(p[i] - g[i], c);
        ++n;
      }
  }
  EXPECT_NEAR(berhu_loss(pred, gt, mask).item(), total / n, 1e-13);
  EXPECT_THROW(berhu_loss(pred, Tensor({3, 1, 4, 5}), mask), ShapeError);
}

TEST(BerhuLoss, GradientAwayFromKinks) {
  Rng rng(5);
  Tensor pred = random_uniform({1, 1, 4, 8}, rng, 0.5, 4.0, true);
  const Tensor gt = random_uniform({1, 1, 4, 8}, rng, 0.5, 4.0);
  const ValidMask mask = ValidMask::all(gt.shape());
  const auto c = berhu_thresholds(pred, gt, mask);
  backward(berhu_loss(pred, gt, mask, c));
  const double h = 1e-6;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = pred.data()[i] - gt.data()[i];
    if (std::abs(std::abs(d) - c[0]) < 1e-6 || std::abs(d) < 1e-6) continue;
    NoGradGuard ng;
    const double x = pred.data()[i];
    pred.mutable_data()[i] = x + h;
    const double up = berhu_loss(pred, gt, mask, c).item();
    pred.mutable_data()[i] = x - h;
    const double down = berhu_loss(pred, gt, mask, c).item();
    pred.mutable_data()[i] = x;
    const double numeric = (up - down) / (2 * h);
    EXPECT_NEAR(pred.grad()[i], numeric, 1e-4 * std::max(1.0, std::abs(numeric)));
  }
}

TEST(Metrics, PerfectPrediction) {
  const std::vector<double> gt{1.0, 2.0, 3.0, 4.0};
  const MetricsRecord m = compute_metrics(gt, gt, std::vector<std::uint8_t>(4, 1));
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.rmse_log, 0.0);
  EXPECT_EQ(m.abs_rel, 0.0);
  EXPECT_EQ(m.delta1, 100.0);
  EXPECT_EQ(m.delta2, 100.0);
  EXPECT_EQ(m.delta3, 100.0);
  EXPECT_EQ(m.pixel_count, 4u);
}

TEST(Metrics, RatioExactlyOnBoundary) {
  const std::vector<double> gt{0.5, 1.0, 2.0, 4.0, 6.0};
  std::vector<double> pred;
  for (double g : gt) pred.push_back(1.25 * g);
  const MetricsRecord m = compute_metrics(pred, gt, std::vector<std::uint8_t>(5, 1));
  EXPECT_NEAR(m.abs_rel, 0.25, 1e-15);
  EXPECT_EQ(m.delta1, 0.0);
  EXPECT_EQ(m.delta2, 100.0);
}

TEST(Metrics, MatchesPerPixelOracle) {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const Pair p = random_pair(rng, 8 * 16, 0.2);
    const MetricsRecord m = compute_metrics(p.pred, p.gt, p.mask);
    const oracle::Metrics o = oracle::metrics(p.pred, p.gt, p.mask);
    EXPECT_NEAR(m.mae, o.mae, 1e-12);
    EXPECT_NEAR(m.rmse, o.rmse, 1e-12);
    EXPECT_NEAR(m.rmse_log, o.rmse_log, 1e-12);
    EXPECT_NEAR(m.abs_rel, o.abs_rel, 1e-12);
    EXPECT_NEAR(m.delta1, o.d1, 1e-12);
    EXPECT_NEAR(m.delta2, o.d2, 1e-12);
    EXPECT_NEAR(m.delta3, o.d3, 1e-12);
    EXPECT_EQ(m.pixel_count, o.n);
  }
}

TEST(Metrics, ClipsPredictionsAndSkipsInvalidTruth) {
  const std::vector<double> pred{25.0, -3.0, 2.0}, gt{8.0, 1.0, 0.0};
  const MetricsRecord m = compute_metrics(pred, gt, std::vector<std::uint8_t>{1, 1, 1});
  EXPECT_EQ(m.pixel_count, 2u);
  EXPECT_NEAR(m.mae, (2.0 + (1.0 - 1e-4)) / 2.0, 1e-12);
  EXPECT_THROW(compute_metrics(pred, gt, std::vector<std::uint8_t>{0, 0, 1}), std::invalid_argument);
}

TEST(Metrics, OrderingAndPermutationInvariance) {
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    Pair p = random_pair(rng, 64, 0.0);
    const MetricsRecord a = compute_metrics(p.pred, p.gt, p.mask);
    EXPECT_LE(a.delta1, a.delta2);
    EXPECT_LE(a.delta2, a.delta3);
    EXPECT_GE(a.rmse, a.mae);
    std::vector<std::size_t> idx(64);
    for (std::size_t i = 0; i < 64; ++i) idx[i] = i;
    for (std::size_t i = 63; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    Pair q;
    for (auto i : idx) {
      q.pred.push_back(p.pred[i]);
      q.gt.push_back(p.gt[i]);
      q.mask.push_back(p.mask[i]);
    }
    const MetricsRecord b = compute_metrics(q.pred, q.gt, q.mask);
    EXPECT_NEAR(a.mae, b.mae, 1e-12);
    EXPECT_NEAR(a.rmse_log, b.rmse_log, 1e-12);
    EXPECT_EQ(a.delta1, b.delta1);
  }
}

TEST(Metrics, MaskedSubsetEqualsExcludedFullMap) {
  Rng rng(8);
  const Pair p = random_pair(rng, 50, 0.4);
  Pair sub;
  for (std::size_t i = 0; i < 50; ++i)
    if (p.mask[i]) {
      sub.pred.push_back(p.pred[i]);
      sub.gt.push_back(p.gt[i]);
      sub.mask.push_back(1);
    }
  const MetricsRecord a = compute_metrics(p.pred, p.gt, p.mask), b = compute_metrics(sub.pred, sub.gt, sub.mask);
  EXPECT_NEAR(a.mae, b.mae, 1e-14);
  EXPECT_NEAR(a.rmse, b.rmse, 1e-14);
  EXPECT_EQ(a.pixel_count, b.pixel_count);
}

TEST(Metrics, AggregateIsPixelWeighted) {
  Rng rng(9);
  const Pair a = random_pair(rng, 30, 0.5), b = random_pair(rng, 70, 0.1);
  const MetricsRecord ma = compute_metrics(a.pred, a.gt, a.mask), mb = compute_metrics(b.pred, b.gt, b.mask);
  const MetricsRecord records[] = {ma, mb};
  const MetricsRecord agg = aggregate(records);
  const double wa = static_cast<double>(ma.pixel_count), wb = static_cast<double>(mb.pixel_count);
  EXPECT_EQ(agg.pixel_count, ma.pixel_count + mb.pixel_count);
  EXPECT_NEAR(agg.mae, (wa * ma.mae + wb * mb.mae) / (wa + wb), 1e-14);
  EXPECT_NEAR(agg.delta1, (wa * ma.delta1 + wb * mb.delta1) / (wa + wb), 1e-12);
  EXPECT_NE(to_key_value(agg).find("mae="), std::string::npos);
}
