#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acdnet/tensor.hpp"

namespace acdnet {

/// Validity map for a batch of depth maps; one byte per pixel, nonzero = valid.
struct ValidMask {
  Shape shape;
  std::vector<std::uint8_t> valid;

  static ValidMask all(Shape shape) { return {shape, std::vector<std::uint8_t>(shape.numel(), 1)}; }
  /// Valid where the ground truth is strictly positive.
  static ValidMask from_depth(const Tensor& gt);
};

/// BerHu threshold c = max |pred - gt| / 5 over valid pixels of one image.
/// Throws std::invalid_argument when no pixel is valid or lengths differ.
double berhu_c(std::span<const double> pred, std::span<const double> gt,
               std::span<const std::uint8_t> mask);

/// Per-pixel reverse Huber: |d| when |d| <= c, (d^2 + c^2) / (2c) otherwise.
double berhu_value(double delta, double c);

/// Thresholds per image of a (B, 1, H, W) batch.
std::vector<double> berhu_thresholds(const Tensor& pred, const Tensor& gt, const ValidMask& mask);

/// Mean BerHu over every valid pixel of the batch, with c computed per image
/// and held constant for the gradient. `fixed_c`, when non-empty, supplies the
/// per-image thresholds instead (used to finite-difference the same function
/// the gradient describes).
Tensor berhu_loss(const Tensor& pred, const Tensor& gt, const ValidMask& mask,
                  std::span<const double> fixed_c = {});

/// Depth error summary for one evaluation.
struct MetricsRecord {
  double mae = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double abs_rel = 0.0;
  double delta1 = 0.0;  // percent
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::uint64_t pixel_count = 0;
};

inline constexpr double kMaxEvalDepth = 10.0;
inline constexpr double kMinEvalDepth = 1e-4;

/// Scores one depth map. Predictions are clipped to [1e-4, 10] m; pixels are
/// scored where the mask is set and the ground truth is positive. Logs are
/// natural; delta_n counts max(p/g, g/p) < 1.25^n strictly. Throws
/// std::invalid_argument when nothing is scorable.
MetricsRecord compute_metrics(std::span<const double> pred, std::span<const double> gt,
                              std::span<const std::uint8_t> mask);

/// Pixel-weighted mean of per-frame records.
MetricsRecord aggregate(std::span<const MetricsRecord> records);

/// "mae=... rmse=..." on one line.
std::string to_key_value(const MetricsRecord& m);

}  // namespace acdnet
