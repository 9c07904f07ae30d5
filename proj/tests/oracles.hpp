// Brute-force reference implementations used only by the tests. Each one is
// written straight from the defining formula, with no shared code paths with
// the library beyond plain data types.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

#include "acdnet/tensor.hpp"

namespace oracle {

using acdnet::Shape;
using acdnet::Tensor;

// out[b][o][y][x] = bias[o] + sum_{i,ky,kx} in[b][i][y*sy + ky*dy][x*sx + kx*dx] * w[o][i][ky][kx]
inline std::vector<double> conv2d(const Tensor& in, const Tensor& w, const std::vector<double>& bias, int dy,
                                  int dx, int sy = 1, int sx = 1) {
  const Shape s = in.shape(), k = w.shape();
  const std::size_t oh = (s.h - (k.h - 1) * dy - 1) / sy + 1;
  const std::size_t ow = (s.w - (k.w - 1) * dx - 1) / sx + 1;
  std::vector<double> out(s.n * k.n * oh * ow, 0.0);
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t o = 0; o < k.n; ++o)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          double acc = bias.empty() ? 0.0 : bias[o];
          for (std::size_t i = 0; i < k.c; ++i)
            for (std::size_t ky = 0; ky < k.h; ++ky)
              for (std::size_t kx = 0; kx < k.w; ++kx)
                acc += in.at(b, i, y * sy + ky * dy, x * sx + kx * dx) * w.at(o, i, ky, kx);
          out[((b * k.n + o) * oh + y) * ow + x] = acc;
        }
  return out;
}

inline std::vector<double> matvec(const std::vector<double>& x, const std::vector<double>& w,
                                  const std::vector<double>& b) {
  std::vector<double> out(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    double acc = b[j];
    for (std::size_t k = 0; k < x.size(); ++k) acc += w[j * x.size() + k] * x[k];
    out[j] = acc;
  }
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  long double total = 0.0L;
  for (double v : z) total += std::exp(static_cast<long double>(v));
  std::vector<double> out;
  for (double v : z) out.push_back(static_cast<double>(std::exp(static_cast<long double>(v)) / total));
  return out;
}

inline double plane_mean(const Tensor& t, std::size_t b, std::size_t c) {
  double acc = 0.0;
  for (std::size_t y = 0; y < t.shape().h; ++y)
    for (std::size_t x = 0; x < t.shape().w; ++x) acc += t.at(b, c, y, x);
  return acc / static_cast<double>(t.shape().h * t.shape().w);
}

enum class Pad { Circular, LeftRight, Zero };

// Value of padded cell (r, q) in padded coordinates, applying the pole rule
// first and the horizontal wrap second.
inline double padded_value(const Tensor& in, std::size_t b, std::size_t c, long r, long q, long top, long left,
                           Pad mode) {
  const long h = static_cast<long>(in.shape().h), w = static_cast<long>(in.shape().w);
  long y = r - top, x = q - left;
  if (mode == Pad::Zero && (y < 0 || y >= h || x < 0 || x >= w)) return 0.0;
  if (y < 0 || y >= h) {
    if (mode == Pad::LeftRight) return 0.0;
    if (y < 0) {
      const long j = -y;  // 1 = first row above the top edge
      y = j - 1;
    } else {
      const long j = y - h + 1;
      y = h - j;
    }
    x += w / 2;
  }
  x = ((x % w) + w) % w;
  return in.at(b, c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
}

// Half-pixel-centre 2x bilinear: output column X samples input coordinate
// (X + 0.5) / 2 - 0.5.
inline double upsample_value(const Tensor& in, std::size_t b, std::size_t c, std::size_t Y, std::size_t X,
                             bool wrap) {
  const long h = static_cast<long>(in.shape().h), w = static_cast<long>(in.shape().w);
  const double sy = (static_cast<double>(Y) + 0.5) / 2.0 - 0.5;
  const double sx = (static_cast<double>(X) + 0.5) / 2.0 - 0.5;
  const long y0 = static_cast<long>(std::floor(sy)), x0 = static_cast<long>(std::floor(sx));
  const double fy = sy - static_cast<double>(y0), fx = sx - static_cast<double>(x0);
  auto row = [&](long y) { return std::clamp(y, 0L, h - 1); };
  auto col = [&](long x) { return wrap ? ((x % w) + w) % w : std::clamp(x, 0L, w - 1); };
  auto v = [&](long y, long x) {
    return in.at(b, c, static_cast<std::size_t>(row(y)), static_cast<std::size_t>(col(x)));
  };
  return (1 - fy) * ((1 - fx) * v(y0, x0) + fx * v(y0, x0 + 1)) + fy * ((1 - fx) * v(y0 + 1, x0) + fx * v(y0 + 1, x0 + 1));
}

inline double berhu_c(const std::vector<double>& p, const std::vector<double>& g, const std::vector<std::uint8_t>& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (m[i] && std::abs(p[i] - g[i]) > best) best = std::abs(p[i] - g[i]);
  return best / 5.0;
}

inline double berhu(double d, double c) {
  const double a = std::abs(d);
  return a <= c ? a : (d * d + c * c) / (2.0 * c);
}

struct Metrics {
  double mae = 0, rmse = 0, rmse_log = 0, abs_rel = 0, d1 = 0, d2 = 0, d3 = 0;
  std::size_t n = 0;
};

inline Metrics metrics(const std::vector<double>& pred, const std::vector<double>& gt,
                       const std::vector<std::uint8_t>& mask) {
  Metrics m;
  double se = 0, sle = 0;
  std::size_t c1 = 0, c2 = 0, c3 = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i] || !(gt[i] > 0)) continue;
    const double p = std::min(std::max(pred[i], 1e-4), 10.0);
    const double g = gt[i];
    ++m.n;
    m.mae += std::abs(p - g);
    se += (p - g) * (p - g);
    sle += (std::log(p) - std::log(g)) * (std::log(p) - std::log(g));
    m.abs_rel += std::abs(p - g) / g;
    const double r = std::max(p / g, g / p);
    if (r < 1.25) ++c1;
    if (r < 1.25 * 1.25) ++c2;
    if (r < 1.25 * 1.25 * 1.25) ++c3;
  }
  const double n = static_cast<double>(m.n);
  m.mae /= n;
  m.rmse = std::sqrt(se / n);
  m.rmse_log = std::sqrt(sle / n);
  m.abs_rel /= n;
  m.d1 = 100.0 * static_cast<double>(c1) / n;
  m.d2 = 100.0 * static_cast<double>(c2) / n;
  m.d3 = 100.0 * static_cast<double>(c3) / n;
  return m;
}

inline std::set<std::pair<int, int>> footprint(const std::vector<std::pair<int, int>>& dilations) {
  std::set<std::pair<int, int>> taps;
  for (auto [dy, dx] : dilations)
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b) taps.insert({a * dy, b * dx});
  return taps;
}

// Exit distance of a ray from the inside of an origin-centred box.
inline double box_exit(double cx, double cy, double cz, double dx, double dy, double dz, double ax, double ay,
                       double az) {
  double t = INFINITY;
  if (dx != 0) t = std::min(t, ((dx > 0 ? ax : -ax) - cx) / dx);
  if (dy != 0) t = std::min(t, ((dy > 0 ? ay : -ay) - cy) / dy);
  if (dz != 0) t = std::min(t, ((dz > 0 ? az : -az) - cz) / dz);
  return t;
}

}  // namespace oracle
