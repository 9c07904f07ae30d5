#include "acdnet/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

namespace acdnet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

std::atomic<bool> g_conv_fault{false};

void require(bool ok, const std::string& message) {
  if (!ok) throw ShapeError(message);
}

struct ConvGeometry {
  std::size_t cin, h, w;
  std::size_t cout, kh, kw;
  std::size_t hout, wout;
  std::size_t dy, dx, sy, sx;

  std::size_t k() const { return cin * kh * kw; }
  std::size_t p() const { return hout * wout; }
  bool trivial() const { return kh == 1 && kw == 1 && sy == 1 && sx == 1; }
};

void im2col(const double* in, const ConvGeometry& g, double* cols) {
  const std::size_t p = g.p();
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = cols + ((ci * g.kh + ky) * g.kw + kx) * p;
        for (std::size_t oy = 0; oy < g.hout; ++oy) {
          const double* src = in + (ci * g.h + oy * g.sy + ky * g.dy) * g.w + kx * g.dx;
          double* dst = row + oy * g.wout;
          if (g.sx == 1) {
            std::copy(src, src + g.wout, dst);
          } else {
            for (std::size_t ox = 0; ox < g.wout; ++ox) dst[ox] = src[ox * g.sx];
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeometry& g, double* in_grad) {
  const std::size_t p = g.p();
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = cols + ((ci * g.kh + ky) * g.kw + kx) * p;
        for (std::size_t oy = 0; oy < g.hout; ++oy) {
          double* dst = in_grad + (ci * g.h + oy * g.sy + ky * g.dy) * g.w + kx * g.dx;
          const double* src = row + oy * g.wout;
          for (std::size_t ox = 0; ox < g.wout; ++ox) dst[ox * g.sx] += src[ox];
        }
      }
    }
  }
}

struct Taps {
  std::size_t i0, i1;
  double w0, w1;
};

std::vector<Taps> upsample_taps(std::size_t n, bool wrap) {
  std::vector<Taps> taps(2 * n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
  auto fix = [&](std::ptrdiff_t i) -> std::size_t {
    if (wrap) return static_cast<std::size_t>(((i % sn) + sn) % sn);
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, sn - 1));
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto si = static_cast<std::ptrdiff_t>(i);
    // even output sits at source coordinate i - 1/4, odd at i + 1/4
    taps[2 * i] = {fix(si - 1), fix(si), 0.25, 0.75};
    taps[2 * i + 1] = {fix(si), fix(si + 1), 0.75, 0.25};
  }
  return taps;
}

}  // namespace

namespace fault {
void set_conv2d_backward_fault(bool enabled) { g_conv_fault.store(enabled); }
bool conv2d_backward_fault() { return g_conv_fault.load(); }
}  // namespace fault

Tensor conv2d(const Tensor& input, const Tensor& weight, const std::optional<Tensor>& bias,
              const Conv2dOptions& options) {
  const Shape is = input.shape();
  const Shape ws = weight.shape();
  require(options.dilation_y >= 1 && options.dilation_x >= 1 && options.stride_y >= 1 &&
              options.stride_x >= 1,
          "conv2d: dilation and stride must be positive");
  require(ws.c == is.c, "conv2d: input has " + std::to_string(is.c) +
                            " channels but kernel expects " + std::to_string(ws.c));
  if (bias) {
    require(bias->shape() == Shape{ws.n, 1, 1, 1}, "conv2d: bias must be (Cout, 1, 1, 1)");
  }
  const auto span_y = static_cast<std::ptrdiff_t>((ws.h - 1) * options.dilation_y + 1);
  const auto span_x = static_cast<std::ptrdiff_t>((ws.w - 1) * options.dilation_x + 1);
  const auto hi = static_cast<std::ptrdiff_t>(is.h);
  const auto wi = static_cast<std::ptrdiff_t>(is.w);
  require(ws.h >= 1 && ws.w >= 1 && hi >= span_y && wi >= span_x,
          "conv2d: kernel footprint exceeds input " + to_string(is) + "; output would be empty");

  ConvGeometry g{};
  g.cin = is.c;
  g.h = is.h;
  g.w = is.w;
  g.cout = ws.n;
  g.kh = ws.h;
  g.kw = ws.w;
  g.dy = static_cast<std::size_t>(options.dilation_y);
  g.dx = static_cast<std::size_t>(options.dilation_x);
  g.sy = static_cast<std::size_t>(options.stride_y);
  g.sx = static_cast<std::size_t>(options.stride_x);
  g.hout = static_cast<std::size_t>((hi - span_y) / options.stride_y + 1);
  g.wout = static_cast<std::size_t>((wi - span_x) / options.stride_x + 1);

  const std::size_t batch = is.n;
  const std::size_t k = g.k();
  const std::size_t p = g.p();
  const Shape out_shape{batch, g.cout, g.hout, g.wout};
  std::vector<double> out(out_shape.numel());

  const ConstMap wmat(weight.data().data(), static_cast<Eigen::Index>(g.cout),
                      static_cast<Eigen::Index>(k));
  std::vector<double> cols(g.trivial() ? 0 : k * p);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* in = input.data().data() + b * is.c * is.h * is.w;
    const double* col_ptr = in;
    if (!g.trivial()) {
      im2col(in, g, cols.data());
      col_ptr = cols.data();
    }
    MutMap omat(out.data() + b * g.cout * p, static_cast<Eigen::Index>(g.cout),
                static_cast<Eigen::Index>(p));
    omat.noalias() = wmat * ConstMap(col_ptr, static_cast<Eigen::Index>(k),
                                     static_cast<Eigen::Index>(p));
    if (bias) {
      const auto bv = bias->data();
      for (std::size_t co = 0; co < g.cout; ++co) {
        double* row = out.data() + (b * g.cout + co) * p;
        for (std::size_t i = 0; i < p; ++i) row[i] += bv[co];
      }
    }
  }

  std::vector<Tensor> inputs{input, weight};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias.has_value();
  return make_result(
      out_shape, std::move(out), "conv2d", std::move(inputs),
      [g, batch, has_bias](std::span<const double> gout,
                           std::span<const std::shared_ptr<detail::TensorImpl>> in) {
        auto& x = *in[0];
        auto& wt = *in[1];
        const std::size_t k = g.k();
        const std::size_t p = g.p();
        const auto ki = static_cast<Eigen::Index>(k);
        const auto pi = static_cast<Eigen::Index>(p);
        const auto ci = static_cast<Eigen::Index>(g.cout);
        const std::size_t in_plane = g.cin * g.h * g.w;
        std::vector<double> cols(g.trivial() ? 0 : k * p);
        std::vector<double> dcols(x.requires_grad && !g.trivial() ? k * p : 0);
        const ConstMap wmat(wt.data.data(), ci, ki);
        RowMat dw;
        if (wt.requires_grad) dw = RowMat::Zero(ci, ki);
        for (std::size_t b = 0; b < batch; ++b) {
          const ConstMap gmat(gout.data() + b * g.cout * p, ci, pi);
          if (wt.requires_grad) {
            const double* col_ptr = x.data.data() + b * in_plane;
            if (!g.trivial()) {
              im2col(col_ptr, g, cols.data());
              col_ptr = cols.data();
            }
            dw.noalias() += gmat * ConstMap(col_ptr, ki, pi).transpose();
          }
          if (x.requires_grad) {
            double* xg = x.grad_buffer().data() + b * in_plane;
            if (g.trivial()) {
              MutMap(xg, ki, pi).noalias() += wmat.transpose() * gmat;
            } else {
              MutMap(dcols.data(), ki, pi).noalias() = wmat.transpose() * gmat;
              col2im_add(dcols.data(), g, xg);
            }
          }
        }
        if (wt.requires_grad) {
          if (fault::conv2d_backward_fault()) dw *= 1.01;
          auto wg = wt.grad_buffer();
          for (std::size_t i = 0; i < wg.size(); ++i) wg[i] += dw.data()[i];
        }
        if (has_bias && in[2]->requires_grad) {
          auto bg = in[2]->grad_buffer();
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t co = 0; co < g.cout; ++co) {
              const double* row = gout.data() + (b * g.cout + co) * p;
              double acc = 0.0;
              for (std::size_t i = 0; i < p; ++i) acc += row[i];
              bg[co] += acc;
            }
          }
        }
      });
}

std::vector<double> linear(std::span<const double> input, std::span<const double> weight,
                           std::span<const double> bias) {
  const std::size_t cols = input.size();
  const std::size_t rows = bias.size();
  require(weight.size() == rows * cols, "linear: weight is not (outputs x inputs)");
  std::vector<double> out(rows);
  for (std::size_t j = 0; j < rows; ++j) {
    double acc = bias[j];
    for (std::size_t k = 0; k < cols; ++k) acc += weight[j * cols + k] * input[k];
    out[j] = acc;
  }
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  const Shape is = input.shape();
  const Shape ws = weight.shape();
  require(is.h == 1 && is.w == 1, "linear: input must be (B, K, 1, 1)");
  require(ws.c == is.c && ws.h == 1 && ws.w == 1,
          "linear: weight columns (" + std::to_string(ws.c) + ") must equal input length (" +
              std::to_string(is.c) + ")");
  require(bias.shape() == Shape{ws.n, 1, 1, 1}, "linear: bias must be (N, 1, 1, 1)");
  const std::size_t batch = is.n, kin = is.c, nout = ws.n;
  std::vector<double> out(batch * nout);
  for (std::size_t b = 0; b < batch; ++b) {
    auto row = linear(input.data().subspan(b * kin, kin), weight.data(), bias.data());
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(b * nout));
  }
  return make_result(
      Shape{batch, nout, 1, 1}, std::move(out), "linear", {input, weight, bias},
      [batch, kin, nout](std::span<const double> g,
                         std::span<const std::shared_ptr<detail::TensorImpl>> in) {
        auto& x = *in[0];
        auto& w = *in[1];
        auto& bi = *in[2];
        for (std::size_t b = 0; b < batch; ++b) {
          const double* gb = g.data() + b * nout;
          const double* xb = x.data.data() + b * kin;
          if (x.requires_grad) {
            double* xg = x.grad_buffer().data() + b * kin;
            for (std::size_t j = 0; j < nout; ++j)
              for (std::size_t k = 0; k < kin; ++k) xg[k] += w.data[j * kin + k] * gb[j];
          }
          if (w.requires_grad) {
            auto wg = w.grad_buffer();
            for (std::size_t j = 0; j < nout; ++j)
              for (std::size_t k = 0; k < kin; ++k) wg[j * kin + k] += gb[j] * xb[k];
          }
          if (bi.requires_grad) {
            auto bg = bi.grad_buffer();
            for (std::size_t j = 0; j < nout; ++j) bg[j] += gb[j];
          }
        }
      });
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

Tensor branch_softmax(const Tensor& logits, std::size_t branches) {
  const Shape s = logits.shape();
  require(branches >= 1 && s.c % branches == 0,
          "branch_softmax: channel count must be a multiple of the branch count");
  const std::size_t groups = s.c / branches;
  const std::size_t plane = s.plane();
  const std::size_t stride = groups * plane;  // distance between branches
  std::vector<double> out(s.numel());
  const auto in = logits.data();
  std::vector<double> tmp(branches);
  for (std::size_t b = 0; b < s.n; ++b) {
    const std::size_t base = b * s.c * plane;
    for (std::size_t i = 0; i < stride; ++i) {
      for (std::size_t k = 0; k < branches; ++k) tmp[k] = in[base + k * stride + i];
      const auto sm = softmax(tmp);
      for (std::size_t k = 0; k < branches; ++k) out[base + k * stride + i] = sm[k];
    }
  }
  std::vector<double> saved = out;
  return make_result(
      s, std::move(out), "branch_softmax", {logits},
      [s, branches, stride, y = std::move(saved)](
          std::span<const double> g, std::span<const std::shared_ptr<detail::TensorImpl>> in) {
        auto xg = in[0]->grad_buffer();
        const std::size_t per_batch = s.c * s.plane();
        for (std::size_t b = 0; b < s.n; ++b) {
          const std::size_t base = b * per_batch;
          for (std::size_t i = 0; i < stride; ++i) {
            double dot = 0.0;
            for (std::size_t k = 0; k < branches; ++k) {
              const std::size_t idx = base + k * stride + i;
              dot += y[idx] * g[idx];
            }
            for (std::size_t k = 0; k < branches; ++k) {
              const std::size_t idx = base + k * stride + i;
              xg[idx] += y[idx] * (g[idx] - dot);
            }
          }
        }
      });
}

Tensor global_avg_pool(const Tensor& input) {
  const Shape s = input.shape();
  require(s.plane() >= 1, "global_avg_pool: empty spatial extent");
  const std::size_t plane = s.plane();
  std::vector<double> out(s.n * s.c);
  const auto in = input.data();
  for (std::size_t i = 0; i < s.n * s.c; ++i) {
    double acc = 0.0;
    for (std::size_t p = 0; p < plane; ++p) acc += in[i * plane + p];
    out[i] = acc / static_cast<double>(plane);
  }
  return make_result(Shape{s.n, s.c, 1, 1}, std::move(out), "global_avg_pool", {input},
                     [s, plane](std::span<const double> g,
                                std::span<const std::shared_ptr<detail::TensorImpl>> in) {
                       auto xg = in[0]->grad_buffer();
                       const double inv = 1.0 / static_cast<double>(plane);
                       for (std::size_t i = 0; i < s.n * s.c; ++i) {
                         const double v = g[i] * inv;
                         for (std::size_t p = 0; p < plane; ++p) xg[i * plane + p] += v;
                       }
                     });
}

Tensor row_mean(const Tensor& input) {
  const Shape s = input.shape();
  require(s.c * s.w >= 1, "row_mean: empty rows");
  std::vector<double> out(s.n * s.h, 0.0);
  const auto in = input.data();
  const double inv = 1.0 / static_cast<double>(s.c * s.w);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t y = 0; y < s.h; ++y) {
      double acc = 0.0;
      for (std::size_t c = 0; c < s.c; ++c) {
        const double* row = in.data() + s.offset(b, c, y, 0);
        for (std::size_t x = 0; x < s.w; ++x) acc += row[x];
      }
      out[b * s.h + y] = acc * inv;
    }
  }
  return make_result(Shape{s.n, s.h, 1, 1}, std::move(out), "row_mean", {input},
                     [s, inv](std::span<const double> g,
                              std::span<const std::shared_ptr<detail::TensorImpl>> in) {
                       auto xg = in[0]->grad_buffer();
                       for (std::size_t b = 0; b < s.n; ++b)
                         for (std::size_t c = 0; c < s.c; ++c)
                           for (std::size_t y = 0; y < s.h; ++y) {
                             const double v = g[b * s.h + y] * inv;
                             double* row = xg.data() + s.offset(b, c, y, 0);
                             for (std::size_t x = 0; x < s.w; ++x) row[x] += v;
                           }
                     });
}

Tensor bilinear_upsample2x(const Tensor& input, UpsampleBoundary horizontal) {
  const Shape s = input.shape();
  require(s.h >= 1 && s.w >= 1, "bilinear_upsample2x: empty input");
  const Shape os{s.n, s.c, 2 * s.h, 2 * s.w};
  auto ty = upsample_taps(s.h, false);
  auto tx = upsample_taps(s.w, horizontal == UpsampleBoundary::Wrap);
  std::vector<double> out(os.numel());
  const auto in = input.data();
  for (std::size_t pl = 0; pl < s.n * s.c; ++pl) {
    const double* src = in.data() + pl * s.plane();
    double* dst = out.data() + pl * os.plane();
    for (std::size_t y = 0; y < os.h; ++y) {
      const Taps& a = ty[y];
      const double* r0 = src + a.i0 * s.w;
      const double* r1 = src + a.i1 * s.w;
      double* orow = dst + y * os.w;
      for (std::size_t x = 0; x < os.w; ++x) {
        const Taps& b = tx[x];
        orow[x] = a.w0 * (b.w0 * r0[b.i0] + b.w1 * r0[b.i1]) +
                  a.w1 * (b.w0 * r1[b.i0] + b.w1 * r1[b.i1]);
      }
    }
  }
  return make_result(
      os, std::move(out), "bilinear_upsample2x", {input},
      [s, os, ty = std::move(ty), tx = std::move(tx)](
          std::span<const double> g, std::span<const std::shared_ptr<detail::TensorImpl>> in) {
        auto xg = in[0]->grad_buffer();
        for (std::size_t pl = 0; pl < s.n * s.c; ++pl) {
          double* dst = xg.data() + pl * s.plane();
          const double* src = g.data() + pl * os.plane();
          for (std::size_t y = 0; y < os.h; ++y) {
            const Taps& a = ty[y];
            double* r0 = dst + a.i0 * s.w;
            double* r1 = dst + a.i1 * s.w;
            const double* grow = src + y * os.w;
            for (std::size_t x = 0; x < os.w; ++x) {
              const Taps& b = tx[x];
              const double v = grow[x];
              r0[b.i0] += a.w0 * b.w0 * v;
              r0[b.i1] += a.w0 * b.w1 * v;
              r1[b.i0] += a.w1 * b.w0 * v;
              r1[b.i1] += a.w1 * b.w1 * v;
            }
          }
        }
      });
}

Tensor relu(const Tensor& input) {
  std::vector<double> out(input.data().begin(), input.data().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return make_result(input.shape(), std::move(out), "relu", {input},
                     [](std::span<const double> g,
                        std::span<const std::shared_ptr<detail::TensorImpl>> in) {
                       auto xg = in[0]->grad_buffer();
                       const auto& x = in[0]->data;
                       for (std::size_t i = 0; i < g.size(); ++i)
                         if (x[i] > 0.0) xg[i] += g[i];
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const Tensor terms[] = {a, b};
  return add_n(terms);
}

Tensor add_n(std::span<const Tensor> terms) {
  require(!terms.empty(), "add_n: no operands");
  const Shape s = terms[0].shape();
  std::vector<double> out(terms[0].data().begin(), terms[0].data().end());
  for (std::size_t t = 1; t < terms.size(); ++t) {
    require(terms[t].shape() == s, "add: shape " + to_string(terms[t].shape()) +
                                       " does not match " + to_string(s));
    const auto d = terms[t].data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  return make_result(s, std::move(out), "add", {terms.begin(), terms.end()},
                     [](std::span<const double> g,
                        std::span<const std::shared_ptr<detail::TensorImpl>> in) {
                       for (const auto& t : in) {
                         if (!t->requires_grad) continue;
                         auto tg = t->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) tg[i] += g[i];
                       }
                     });
}

Tensor scale(const Tensor& input, double factor) {
  std::vector<double> out(input.data().begin(), input.data().end());
  for (auto& v : out) v *= factor;
  return make_result(input.shape(), std::move(out), "scale", {input},
                     [factor](std::span<const double> g,
                              std::span<const std::shared_ptr<detail::TensorImpl>> in) {
                       auto xg = in[0]->grad_buffer();
                       for (std::size_t i = 0; i < g.size(); ++i) xg[i] += factor * g[i];
                     });
}

Tensor concat_channels(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_channels: no operands");
  const Shape s0 = parts[0].shape();
  std::size_t channels = 0;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    require(s.n == s0.n && s.h == s0.h && s.w == s0.w,
            "concat_channels: mismatched shapes " + to_string(s) + " and " + to_string(s0));
    channels += s.c;
  }
  const Shape os{s0.n, channels, s0.h, s0.w};
  const std::size_t plane = s0.plane();
  std::vector<double> out(os.numel());
  std::vector<std::size_t> widths;
  for (std::size_t b = 0; b < s0.n; ++b) {
    std::size_t c_off = 0;
    for (const auto& p : parts) {
      const std::size_t chunk = p.shape().c * plane;
      const double* src = p.data().data() + b * chunk;
      std::copy(src, src + chunk, out.data() + (b * channels + c_off) * plane);
      c_off += p.shape().c;
    }
  }
  for (const auto& p : parts) widths.push_back(p.shape().c);
  return make_result(
      os, std::move(out), "concat_channels", {parts.begin(), parts.end()},
      [os, plane, widths = std::move(widths)](
          std::span<const double> g, std::span<const std::shared_ptr<detail::TensorImpl>> in) {
        for (std::size_t b = 0; b < os.n; ++b) {
          std::size_t c_off = 0;
          for (std::size_t t = 0; t < in.size(); ++t) {
            const std::size_t chunk = widths[t] * plane;
            if (in[t]->requires_grad) {
              auto tg = in[t]->grad_buffer();
              const double* src = g.data() + (b * os.c + c_off) * plane;
              double* dst = tg.data() + b * chunk;
              for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
            }
            c_off += widths[t];
          }
        }
      });
}

Tensor reshape(const Tensor& input, Shape shape) {
  require(shape.numel() == input.numel(),
          "reshape: " + to_string(input.shape()) + " -> " + to_string(shape));
  std::vector<double> out(input.data().begin(), input.data().end());
  return make_result(shape, std::move(out), "reshape", {input},
                     [](std::span<const double> g,
                        std::span<const std::shared_ptr<detail::TensorImpl>> in) {
                       auto xg = in[0]->grad_buffer();
                       for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i];
                     });
}

Tensor sum(const Tensor& input) {
  double acc = 0.0;
  for (double v : input.data()) acc += v;
  return make_result(Shape{1, 1, 1, 1}, {acc}, "sum", {input},
                     [](std::span<const double> g,
                        std::span<const std::shared_ptr<detail::TensorImpl>> in) {
                       auto xg = in[0]->grad_buffer();
                       for (auto& v : xg) v += g[0];
                     });
}

Tensor weighted_sum(const Tensor& input, const Tensor& weights) {
  require(input.shape() == weights.shape(), "weighted_sum: shape mismatch");
  double acc = 0.0;
  const auto x = input.data();
  const auto w = weights.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w[i];
  std::vector<double> wcopy(w.begin(), w.end());
  return make_result(Shape{1, 1, 1, 1}, {acc}, "weighted_sum", {input},
                     [wcopy = std::move(wcopy)](
                         std::span<const double> g,
                         std::span<const std::shared_ptr<detail::TensorImpl>> in) {
                       auto xg = in[0]->grad_buffer();
                       for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += g[0] * wcopy[i];
                     });
}

Tensor spatial_gather(const Tensor& input, std::size_t out_h, std::size_t out_w,
                      std::span<const std::int64_t> index) {
  const Shape s = input.shape();
  require(index.size() == out_h * out_w, "spatial_gather: index map size mismatch");
  const auto plane = static_cast<std::int64_t>(s.plane());
  for (auto i : index) require(i < plane, "spatial_gather: index out of range");
  const Shape os{s.n, s.c, out_h, out_w};
  std::vector<double> out(os.numel(), 0.0);
  const auto in = input.data();
  for (std::size_t pl = 0; pl < s.n * s.c; ++pl) {
    const double* src = in.data() + pl * s.plane();
    double* dst = out.data() + pl * os.plane();
    for (std::size_t i = 0; i < index.size(); ++i)
      if (index[i] >= 0) dst[i] = src[index[i]];
  }
  std::vector<std::int64_t> map(index.begin(), index.end());
  return make_result(os, std::move(out), "spatial_gather", {input},
                     [s, os, map = std::move(map)](
                         std::span<const double> g,
                         std::span<const std::shared_ptr<detail::TensorImpl>> in) {
                       auto xg = in[0]->grad_buffer();
                       for (std::size_t pl = 0; pl < s.n * s.c; ++pl) {
                         double* dst = xg.data() + pl * s.plane();
                         const double* src = g.data() + pl * os.plane();
                         for (std::size_t i = 0; i < map.size(); ++i)
                           if (map[i] >= 0) dst[map[i]] += src[i];
                       }
                     });
}

Tensor weighted_branch_sum(std::span<const Tensor> features, const Tensor& weights) {
  require(!features.empty(), "weighted_branch_sum: no features");
  const Shape fs = features[0].shape();
  for (const auto& f : features)
    require(f.shape() == fs, "weighted_branch_sum: features differ in shape");
  const std::size_t branches = features.size();
  const Shape ws = weights.shape();
  require(ws.n == fs.n && ws.c % branches == 0, "weighted_branch_sum: bad weight shape " +
                                                    to_string(ws));
  const std::size_t wc = ws.c / branches;
  require((wc == 1 || wc == fs.c) && (ws.h == 1 || ws.h == fs.h) && (ws.w == 1 || ws.w == fs.w),
          "weighted_branch_sum: weights " + to_string(ws) + " do not broadcast to " +
              to_string(fs));

  // Strides into the weight tensor; zero along broadcast axes.
  struct Layout {
    std::size_t batch, branch, chan, row, col;
  };
  const Layout lw{ws.c * ws.h * ws.w, wc * ws.h * ws.w, wc == 1 ? 0 : ws.h * ws.w,
                  ws.h == 1 ? 0 : ws.w, ws.w == 1 ? std::size_t{0} : 1};

  std::vector<double> out(fs.numel(), 0.0);
  const auto wd = weights.data();
  for (std::size_t k = 0; k < branches; ++k) {
    const auto fd = features[k].data();
    for (std::size_t b = 0; b < fs.n; ++b)
      for (std::size_t c = 0; c < fs.c; ++c)
        for (std::size_t y = 0; y < fs.h; ++y) {
          const double* wrow = wd.data() + b * lw.batch + k * lw.branch + c * lw.chan + y * lw.row;
          const std::size_t o = fs.offset(b, c, y, 0);
          for (std::size_t x = 0; x < fs.w; ++x) out[o + x] += fd[o + x] * wrow[x * lw.col];
        }
  }
  std::vector<Tensor> inputs(features.begin(), features.end());
  inputs.push_back(weights);
  return make_result(
      fs, std::move(out), "weighted_branch_sum", std::move(inputs),
      [fs, branches, lw](std::span<const double> g,
                         std::span<const std::shared_ptr<detail::TensorImpl>> in) {
        auto& wt = *in[branches];
        for (std::size_t k = 0; k < branches; ++k) {
          auto& f = *in[k];
          std::span<double> fg = f.requires_grad ? f.grad_buffer() : std::span<double>{};
          std::span<double> wg = wt.requires_grad ? wt.grad_buffer() : std::span<double>{};
          for (std::size_t b = 0; b < fs.n; ++b)
            for (std::size_t c = 0; c < fs.c; ++c)
              for (std::size_t y = 0; y < fs.h; ++y) {
                const std::size_t wo = b * lw.batch + k * lw.branch + c * lw.chan + y * lw.row;
                const std::size_t o = fs.offset(b, c, y, 0);
                if (!fg.empty()) {
                  for (std::size_t x = 0; x < fs.w; ++x)
                    fg[o + x] += g[o + x] * wt.data[wo + x * lw.col];
                }
                if (!wg.empty()) {
                  for (std::size_t x = 0; x < fs.w; ++x)
                    wg[wo + x * lw.col] += g[o + x] * f.data[o + x];
                }
              }
        }
      });
}

}  // namespace acdnet
