#include "acdnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "acdnet/acdconv.hpp"
#include "acdnet/loss_metrics.hpp"
#include "acdnet/network.hpp"
#include "acdnet/ops.hpp"
#include "acdnet/pano_padding.hpp"

namespace acdnet {

GradcheckStats gradient_check(GradProbe& probe, Rng& rng, const GradcheckOptions& options) {
  for (auto& leaf : probe.leaves) leaf.zero_grad();
  backward(probe.loss());

  GradcheckStats stats;
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  NoGradGuard no_grad;
  const double centre = probe.loss().item();
  for (auto& leaf : probe.leaves) {
    const std::size_t n = leaf.numel();
    std::vector<std::size_t> picks;
    if (n <= options.entries_per_leaf) {
      for (std::size_t i = 0; i < n; ++i) picks.push_back(i);
    } else {
      for (std::size_t i = 0; i < options.entries_per_leaf; ++i) picks.push_back(rng.below(n));
    }
    for (std::size_t i : picks) {
      const double analytic = leaf.has_grad() ? leaf.grad()[i] : 0.0;
      double& x = leaf.mutable_data()[i];
      const double saved = x;
      x = saved + options.step;
      const double up = probe.loss().item();
      x = saved - options.step;
      const double down = probe.loss().item();
      x = saved;
      ++stats.probed;
      // one-sided slopes that disagree mean a ReLU switched inside the probe
      const double fwd = (up - centre) / options.step;
      const double bwd = (centre - down) / options.step;
      if (std::abs(fwd - bwd) > options.kink_tolerance * std::max({std::abs(fwd), std::abs(bwd), 1e-8})) {
        ++stats.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * options.step);
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
    }
  }
  stats.error = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-10});
  return stats;
}

namespace {

Tensor leaf(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return random_uniform(s, rng, lo, hi, true);
}

// Random linear functional of an op output, so every output entry matters.
std::function<Tensor()> project(std::function<Tensor()> f, Shape out, Rng& rng) {
  const Tensor r = random_uniform(out, rng, -1.0, 1.0);
  return [f = std::move(f), r] { return weighted_sum(f(), r); };
}

GradcheckCase conv_case(std::string name, Conv2dOptions opts) {
  return {std::move(name), [opts](std::uint64_t seed) {
            Rng rng(seed);
            Tensor x = leaf({2, 3, 9, 12}, rng), w = leaf({4, 3, 3, 3}, rng), b = leaf({4, 1, 1, 1}, rng);
            const Shape out = conv2d(x, w, b, opts).shape();
            return GradProbe{{x, w, b}, project([=] { return conv2d(x, w, b, opts); }, out, rng)};
          }};
}

GradcheckCase pad_case(std::string name, PadMode mode) {
  return {std::move(name), [mode](std::uint64_t seed) {
            Rng rng(seed);
            Tensor x = leaf({2, 2, 4, 8}, rng);
            const PadSpec spec{2, 1, 3, 9, mode};
            return GradProbe{{x}, project([=] { return pad(x, spec); }, pad(x, spec).shape(), rng)};
          }};
}

GradcheckCase upsample_case(std::string name, UpsampleBoundary boundary) {
  return {std::move(name), [boundary](std::uint64_t seed) {
            Rng rng(seed);
            Tensor x = leaf({2, 2, 3, 5}, rng);
            return GradProbe{{x}, project([=] { return bilinear_upsample2x(x, boundary); }, {2, 2, 6, 10}, rng)};
          }};
}

GradcheckCase acdconv_case(FusionStrategy strategy) {
  return {"acdconv." + std::string(to_string(strategy)), [strategy](std::uint64_t seed) {
            Rng rng(seed);
            ACDConvConfig cfg;
            cfg.in_channels = 3;
            cfg.out_channels = 4;
            cfg.strategy = strategy;
            cfg.reduction = 2;
            cfg.rows = 6;
            const ACDConvParams params = ACDConvParams::create(cfg, rng);
            Tensor x = leaf({2, 3, 6, 12}, rng);
            ParameterList named;
            params.collect("acd", named);
            std::vector<Tensor> leaves{x};
            for (auto& p : named) leaves.push_back(p.tensor);
            return GradProbe{leaves, project([=] { return acdconv_forward(x, params, PadMode::Circular); },
                                             {2, 4, 6, 12}, rng)};
          }};
}

}  // namespace

std::vector<GradcheckCase> default_gradcheck_cases() {
  std::vector<GradcheckCase> cases;
  cases.push_back(conv_case("conv2d", Conv2dOptions{1, 2, 1, 1}));
  cases.push_back(conv_case("conv2d.dilated_rows", Conv2dOptions{2, 1, 1, 1}));
  cases.push_back(conv_case("conv2d.stride2", Conv2dOptions{1, 1, 2, 2}));
  cases.push_back({"linear", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = leaf({3, 8, 1, 1}, rng), w = leaf({5, 8, 1, 1}, rng), b = leaf({5, 1, 1, 1}, rng);
                     return GradProbe{{x, w, b}, project([=] { return linear(x, w, b); }, {3, 5, 1, 1}, rng)};
                   }});
  cases.push_back({"branch_softmax", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = leaf({2, 12, 1, 3}, rng, -2.0, 2.0);
                     return GradProbe{{x}, project([=] { return branch_softmax(x, 4); }, x.shape(), rng)};
                   }});
  cases.push_back({"global_avg_pool", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = leaf({2, 3, 4, 5}, rng);
                     return GradProbe{{x}, project([=] { return global_avg_pool(x); }, {2, 3, 1, 1}, rng)};
                   }});
  cases.push_back({"row_mean", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = leaf({2, 3, 4, 5}, rng);
                     return GradProbe{{x}, project([=] { return row_mean(x); }, {2, 4, 1, 1}, rng)};
                   }});
  cases.push_back(upsample_case("bilinear_upsample2x", UpsampleBoundary::Clamp));
  cases.push_back(upsample_case("bilinear_upsample2x.wrap", UpsampleBoundary::Wrap));
  cases.push_back({"relu", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = leaf({2, 3, 4, 5}, rng);
                     // keep inputs off the kink by more than the probe step
                     for (auto& v : x.mutable_data()) v = v < 0 ? v - 0.01 : v + 0.01;
                     return GradProbe{{x}, project([=] { return relu(x); }, x.shape(), rng)};
                   }});
  cases.push_back({"add", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = leaf({2, 3, 4, 5}, rng), b = leaf({2, 3, 4, 5}, rng);
                     return GradProbe{{a, b}, project([=] { return add(a, b); }, a.shape(), rng)};
                   }});
  cases.push_back({"add_n", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = leaf({2, 3, 4, 5}, rng), b = leaf({2, 3, 4, 5}, rng), c = leaf({2, 3, 4, 5}, rng);
                     return GradProbe{{a, b, c}, project([=] {
                                        const Tensor t[] = {a, b, c, a};
                                        return add_n(t);
                                      }, a.shape(), rng)};
                   }});
  cases.push_back({"scale", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = leaf({2, 3, 4, 5}, rng);
                     return GradProbe{{x}, project([=] { return scale(x, -1.7); }, x.shape(), rng)};
                   }});
  cases.push_back({"concat_channels", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = leaf({2, 3, 4, 5}, rng), b = leaf({2, 2, 4, 5}, rng);
                     return GradProbe{{a, b}, project([=] {
                                        const Tensor t[] = {a, b};
                                        return concat_channels(t);
                                      }, {2, 5, 4, 5}, rng)};
                   }});
  cases.push_back({"reshape", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = leaf({2, 6, 1, 1}, rng);
                     return GradProbe{{x}, project([=] { return reshape(x, {2, 2, 3, 1}); }, {2, 2, 3, 1}, rng)};
                   }});
  cases.push_back({"sum", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = leaf({2, 3, 4, 5}, rng);
                     return GradProbe{{x}, project([=] { return sum(x); }, {1, 1, 1, 1}, rng)};
                   }});
  cases.push_back({"weighted_branch_sum", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor f0 = leaf({2, 3, 4, 5}, rng), f1 = leaf({2, 3, 4, 5}, rng);
                     Tensor wc = leaf({2, 6, 1, 1}, rng), wr = leaf({2, 2, 4, 1}, rng), wp = leaf({2, 6, 4, 5}, rng);
                     return GradProbe{{f0, f1, wc, wr, wp}, project([=] {
                                        const Tensor f[] = {f0, f1};
                                        const Tensor parts[] = {weighted_branch_sum(f, wc), weighted_branch_sum(f, wr),
                                                                weighted_branch_sum(f, wp)};
                                        return concat_channels(parts);
                                      }, {2, 9, 4, 5}, rng)};
                   }});
  cases.push_back(pad_case("pad.circular", PadMode::Circular));
  cases.push_back(pad_case("pad.leftright", PadMode::LeftRight));
  cases.push_back(pad_case("pad.zero", PadMode::Zero));
  for (auto s : {FusionStrategy::ChannelWise, FusionStrategy::SimpleAverage, FusionStrategy::RowWise,
                 FusionStrategy::PixelWise})
    cases.push_back(acdconv_case(s));
  cases.push_back({"berhu_loss", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor pred = leaf({2, 1, 4, 8}, rng, 0.5, 4.0);
                     const Tensor gt = random_uniform({2, 1, 4, 8}, rng, 0.5, 4.0);
                     ValidMask mask = ValidMask::all(gt.shape());
                     for (auto& m : mask.valid) m = rng.uniform() < 0.8 ? 1 : 0;
                     mask.valid[0] = mask.valid[32] = 1;
                     // the threshold is a constant of the gradient; freeze it at the probe point
                     const auto c = berhu_thresholds(pred, gt, mask);
                     return GradProbe{{pred}, [=] { return berhu_loss(pred, gt, mask, c); }};
                   }});
  cases.push_back({"network", [](std::uint64_t seed) {
                     Rng rng(seed);
                     NetConfig cfg;
                     cfg.height = 64;
                     cfg.width = 128;
                     cfg.stem_channels = 4;
                     cfg.blocks = {1, 1, 1, 2};
                     cfg.widths = {4, 4, 8, 8};
                     cfg.reduction = 2;
                     const Model model = Model::build(cfg, seed);
                     const Tensor image = random_uniform({1, 3, 64, 128}, rng, -0.5, 0.5);
                     const Tensor gt = random_uniform({1, 1, 64, 128}, rng, 1.0, 3.0);
                     const ValidMask mask = ValidMask::all(gt.shape());
                     std::vector<Tensor> params = model.parameters();
                     std::vector<double> c;
                     {
                       NoGradGuard ng;
                       c = berhu_thresholds(model.forward(image).d3, gt, mask);
                     }
                     // a sample of parameter tensors from every part of the network
                     std::vector<Tensor> picked;
                     for (std::size_t i = 0; i < params.size(); i += 1 + rng.below(4)) picked.push_back(params[i]);
                     return GradProbe{picked, [=] { return berhu_loss(model.forward(image).d3, gt, mask, c); }};
                   }});
  return cases;
}

std::vector<GradcheckResult> run_gradcheck(const std::vector<GradcheckCase>& cases,
                                           const GradcheckOptions& options) {
  std::vector<GradcheckResult> results;
  for (const auto& c : cases) {
    GradcheckResult r;
    r.name = c.name;
    for (std::size_t s = 0; s < options.seeds; ++s) {
      const std::uint64_t seed = options.seed + s;
      GradProbe probe = c.make(seed);
      Rng pick(seed ^ 0xD1B54A32D192ED03ULL);
      const GradcheckStats stats = gradient_check(probe, pick, options);
      const double err = stats.error;
      r.probed += stats.probed;
      r.skipped += stats.skipped;
      if (s == 0 || std::isnan(err) || (!std::isnan(r.max_error) && err > r.max_error)) {
        r.max_error = err;
        r.worst_seed = seed;
      }
      ++r.seeds;
    }
    // a check that had to skip most of its probes proves nothing
    r.passed = r.max_error < options.tolerance && 4 * r.skipped <= r.probed;
    results.push_back(r);
  }
  return results;
}

std::string format_gradcheck_report(const std::vector<GradcheckResult>& results,
                                    const GradcheckOptions& options) {
  std::size_t width = 4;
  for (const auto& r : results) width = std::max(width, r.name.size());
  std::ostringstream os;
  char line[256];
  std::size_t failed = 0;
  for (const auto& r : results) {
    std::snprintf(line, sizeof(line), "%-*s  seeds=%zu  max_rel_err=%.3e  worst_seed=%llu  kinks=%zu/%zu  %s\n",
                  static_cast<int>(width), r.name.c_str(), r.seeds, r.max_error,
                  static_cast<unsigned long long>(r.worst_seed), r.skipped, r.probed, r.passed ? "PASS" : "FAIL");
    os << line;
    if (!r.passed) ++failed;
  }
  std::snprintf(line, sizeof(line), "%zu/%zu checks passed (tolerance %.0e, step %.0e)\n",
                results.size() - failed, results.size(), options.tolerance, options.step);
  os << line;
  return os.str();
}

}  // namespace acdnet
