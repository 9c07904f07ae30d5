#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "acdnet/tensor.hpp"

namespace acdnet {

struct Conv2dOptions {
  int dilation_y = 1;
  int dilation_x = 1;
  int stride_y = 1;
  int stride_x = 1;
};

/// Direct dilated cross-correlation with no implicit padding.
///
/// input  (B, Cin, H, W), weight (Cout, Cin, kH, kW), bias (Cout, 1, 1, 1).
/// Output spatial size is floor((H - (kH-1)*dy - 1) / sy) + 1 per axis.
/// Throws ShapeError on channel mismatch or an empty output.
Tensor conv2d(const Tensor& input, const Tensor& weight, const std::optional<Tensor>& bias,
              const Conv2dOptions& options = {});

/// Fully connected map over the channel axis of (B, K, 1, 1) vectors.
/// weight is (N, K, 1, 1), bias (N, 1, 1, 1); result (B, N, 1, 1).
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Reference linear map on plain vectors; weight is row-major (rows x cols).
std::vector<double> linear(std::span<const double> input, std::span<const double> weight,
                           std::span<const double> bias);

/// Max-subtracted softmax of a plain vector.
std::vector<double> softmax(std::span<const double> logits);

/// Softmax over a branch axis folded into channels: channel k*G + g holds
/// branch k of group g, for K = `branches` and G = C / K.
Tensor branch_softmax(const Tensor& logits, std::size_t branches);

/// Spatial mean per (batch, channel): (B, C, H, W) -> (B, C, 1, 1).
Tensor global_avg_pool(const Tensor& input);

/// Mean over channels and columns per row: (B, C, H, W) -> (B, H, 1, 1).
Tensor row_mean(const Tensor& input);

enum class UpsampleBoundary {
  Clamp,  // replicate edge columns
  Wrap,   // columns are periodic (equirectangular longitude)
};

/// 2x bilinear upsampling with half-pixel-centre alignment. Rows always
/// clamp at the borders; columns clamp or wrap.
Tensor bilinear_upsample2x(const Tensor& input,
                           UpsampleBoundary horizontal = UpsampleBoundary::Clamp);

Tensor relu(const Tensor& input);
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_n(std::span<const Tensor> terms);
Tensor scale(const Tensor& input, double factor);
Tensor concat_channels(std::span<const Tensor> parts);
/// Same values under a new shape with equal element count.
Tensor reshape(const Tensor& input, Shape shape);
/// Sum of all elements as a (1, 1, 1, 1) tensor.
Tensor sum(const Tensor& input);
/// Sum of input * weights, weights held constant.
Tensor weighted_sum(const Tensor& input, const Tensor& weights);

/// Per-plane gather: out[b, c, i] = in[b, c, index[i]] (or 0 when index[i] < 0).
/// `index` has out_h * out_w entries pointing into the H*W input plane.
Tensor spatial_gather(const Tensor& input, std::size_t out_h, std::size_t out_w,
                      std::span<const std::int64_t> index);

/// sum_k features[k] * weights[branch k], with the weights broadcast over any
/// of their unit dims. `weights` is (B, K*Cw, Hw, Ww) with Cw in {1, C},
/// Hw in {1, H}, Ww in {1, W}; channel k*Cw + c belongs to branch k.
Tensor weighted_branch_sum(std::span<const Tensor> features, const Tensor& weights);

namespace fault {
/// Test hook: when enabled, conv2d's backward perturbs the kernel gradient so
/// that gradient checks must fail.
void set_conv2d_backward_fault(bool enabled);
bool conv2d_backward_fault();
}  // namespace fault

}  // namespace acdnet
