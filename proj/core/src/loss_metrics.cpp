#include "acdnet/loss_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace acdnet {

ValidMask ValidMask::from_depth(const Tensor& gt) {
  ValidMask m{gt.shape(), std::vector<std::uint8_t>(gt.numel())};
  const auto d = gt.data();
  for (std::size_t i = 0; i < d.size(); ++i) m.valid[i] = d[i] > 0.0 ? 1 : 0;
  return m;
}

double berhu_c(std::span<const double> pred, std::span<const double> gt,
               std::span<const std::uint8_t> mask) {
  if (pred.size() != gt.size() || mask.size() != gt.size())
    throw std::invalid_argument("berhu_c: length mismatch");
  double worst = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    any = true;
    worst = std::max(worst, std::abs(pred[i] - gt[i]));
  }
  if (!any) throw std::invalid_argument("berhu_c: no valid pixels");
  return worst / 5.0;
}

double berhu_value(double delta, double c) {
  const double a = std::abs(delta);
  if (a <= c) return a;
  return (delta * delta + c * c) / (2.0 * c);
}

namespace {

void check_batch(const Tensor& pred, const Tensor& gt, const ValidMask& mask) {
  if (!(pred.shape() == gt.shape()) || !(mask.shape == gt.shape()) ||
      mask.valid.size() != gt.numel())
    throw ShapeError("berhu: prediction " + to_string(pred.shape()) + ", ground truth " +
                     to_string(gt.shape()) + " and mask " + to_string(mask.shape) +
                     " must agree");
}

}  // namespace

std::vector<double> berhu_thresholds(const Tensor& pred, const Tensor& gt, const ValidMask& mask) {
  check_batch(pred, gt, mask);
  const Shape s = gt.shape();
  const std::size_t per = s.c * s.h * s.w;
  std::vector<double> c(s.n);
  for (std::size_t b = 0; b < s.n; ++b) {
    c[b] = berhu_c(pred.data().subspan(b * per, per), gt.data().subspan(b * per, per),
                   std::span<const std::uint8_t>(mask.valid).subspan(b * per, per));
  }
  return c;
}

Tensor berhu_loss(const Tensor& pred, const Tensor& gt, const ValidMask& mask,
                  std::span<const double> fixed_c) {
  check_batch(pred, gt, mask);
  const Shape s = gt.shape();
  const std::size_t per = s.c * s.h * s.w;
  std::vector<double> c;
  if (fixed_c.empty()) {
    c = berhu_thresholds(pred, gt, mask);
  } else {
    if (fixed_c.size() != s.n) throw ShapeError("berhu_loss: one threshold per image required");
    c.assign(fixed_c.begin(), fixed_c.end());
  }

  const auto p = pred.data();
  const auto g = gt.data();
  std::size_t count = 0;
  double total = 0.0;
  std::vector<double> slope(p.size(), 0.0);  // dL/dpred before the 1/N factor
  for (std::size_t b = 0; b < s.n; ++b) {
    const double cb = c[b];
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
      if (!mask.valid[i]) continue;
      ++count;
      const double d = p[i] - g[i];
      if (cb <= 0.0) {
        // every error in this image is zero (or c was forced to zero)
        total += std::abs(d);
        slope[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        continue;
      }
      total += berhu_value(d, cb);
      if (std::abs(d) <= cb) {
        slope[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      } else {
        slope[i] = d / cb;
      }
    }
  }
  if (count == 0) throw std::invalid_argument("berhu_loss: no valid pixels");
  const double inv = 1.0 / static_cast<double>(count);
  for (auto& v : slope) v *= inv;
  return make_result(Shape{1, 1, 1, 1}, {total * inv}, "berhu_loss", {pred},
                     [slope = std::move(slope)](
                         std::span<const double> gout,
                         std::span<const std::shared_ptr<detail::TensorImpl>> in) {
                       auto xg = in[0]->grad_buffer();
                       for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += gout[0] * slope[i];
                     });
}

MetricsRecord compute_metrics(std::span<const double> pred, std::span<const double> gt,
                              std::span<const std::uint8_t> mask) {
  if (pred.size() != gt.size() || mask.size() != gt.size())
    throw std::invalid_argument("compute_metrics: length mismatch");
  double abs_sum = 0.0, sq_sum = 0.0, log_sq_sum = 0.0, rel_sum = 0.0;
  std::uint64_t n = 0, d1 = 0, d2 = 0, d3 = 0;
  constexpr double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask[i] || !(gt[i] > 0.0)) continue;
    const double p = std::clamp(pred[i], kMinEvalDepth, kMaxEvalDepth);
    const double g = gt[i];
    const double e = p - g;
    abs_sum += std::abs(e);
    sq_sum += e * e;
    const double le = std::log(p) - std::log(g);
    log_sq_sum += le * le;
    rel_sum += std::abs(e) / g;
    const double ratio = std::max(p / g, g / p);
    d1 += ratio < t1;
    d2 += ratio < t2;
    d3 += ratio < t3;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("compute_metrics: no valid pixels");
  const double inv = 1.0 / static_cast<double>(n);
  MetricsRecord m;
  m.mae = abs_sum * inv;
  m.rmse = std::sqrt(sq_sum * inv);
  m.rmse_log = std::sqrt(log_sq_sum * inv);
  m.abs_rel = rel_sum * inv;
  m.delta1 = 100.0 * static_cast<double>(d1) * inv;
  m.delta2 = 100.0 * static_cast<double>(d2) * inv;
  m.delta3 = 100.0 * static_cast<double>(d3) * inv;
  m.pixel_count = n;
  return m;
}

MetricsRecord aggregate(std::span<const MetricsRecord> records) {
  MetricsRecord out;
  double total = 0.0;
  for (const auto& r : records) {
    const double w = static_cast<double>(r.pixel_count);
    out.mae += w * r.mae;
    out.rmse += w * r.rmse;
    out.rmse_log += w * r.rmse_log;
    out.abs_rel += w * r.abs_rel;
    out.delta1 += w * r.delta1;
    out.delta2 += w * r.delta2;
    out.delta3 += w * r.delta3;
    out.pixel_count += r.pixel_count;
    total += w;
  }
  if (total > 0.0) {
    out.mae /= total;
    out.rmse /= total;
    out.rmse_log /= total;
    out.abs_rel /= total;
    out.delta1 /= total;
    out.delta2 /= total;
    out.delta3 /= total;
  }
  return out;
}

std::string to_key_value(const MetricsRecord& m) {
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "mae=%.6f rmse=%.6f rmse_log=%.6f abs_rel=%.6f delta1=%.4f delta2=%.4f "
                "delta3=%.4f pixels=%llu",
                m.mae, m.rmse, m.rmse_log, m.abs_rel, m.delta1, m.delta2, m.delta3,
                static_cast<unsigned long long>(m.pixel_count));
  return buf;
}

}  // namespace acdnet
