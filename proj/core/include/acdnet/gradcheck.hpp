#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "acdnet/tensor.hpp"

namespace acdnet {

/// A differentiable scalar function of some leaf tensors.
struct GradProbe {
  std::vector<Tensor> leaves;
  std::function<Tensor()> loss;
};

struct GradcheckOptions {
  std::uint64_t seed = 2024;
  std::size_t seeds = 20;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Entries probed per leaf tensor (all of them when the leaf is smaller).
  std::size_t entries_per_leaf = 8;
  /// Relative gap between the forward and backward one-sided slopes above
  /// which a probe is treated as straddling a kink and left out.
  double kink_tolerance = 1e-4;
};

struct GradcheckStats {
  double error = 0.0;
  std::size_t probed = 0;
  std::size_t skipped = 0;  // probes that straddled a kink
};

/// Central-difference comparison of one probe. The error is
/// |g_analytic - g_numeric| / max(|g_analytic|, |g_numeric|, 1e-10) over the
/// vector of probed entries that did not straddle a kink.
GradcheckStats gradient_check(GradProbe& probe, Rng& rng, const GradcheckOptions& options);

struct GradcheckCase {
  std::string name;
  std::function<GradProbe(std::uint64_t seed)> make;
};

/// Every op, the ACDConv layer under each fusion strategy, the BerHu loss and
/// a small end-to-end network.
std::vector<GradcheckCase> default_gradcheck_cases();

struct GradcheckResult {
  std::string name;
  std::size_t seeds = 0;
  double max_error = 0.0;
  std::uint64_t worst_seed = 0;
  std::size_t probed = 0;
  std::size_t skipped = 0;
  bool passed = false;
};

std::vector<GradcheckResult> run_gradcheck(const std::vector<GradcheckCase>& cases,
                                           const GradcheckOptions& options);

/// One line per case: name, seeds, max relative error, worst seed, skipped
/// kink probes, PASS/FAIL. A case fails when more than a quarter of its probes
/// were skipped.
std::string format_gradcheck_report(const std::vector<GradcheckResult>& results,
                                    const GradcheckOptions& options);

}  // namespace acdnet
