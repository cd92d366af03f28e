#include "unipose/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gemm.hpp"

namespace unipose::ops {

namespace {

template <typename T>
void require_defined(const Tensor<T>& t, const char* op) {
  if (!t.defined()) throw TensorError(std::string(op) + ": undefined input tensor");
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.shape() != b.shape()) {
    throw TensorError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                      b.shape().str());
  }
}

struct ConvGeometry {
  int in_c, in_h, in_w;
  int kh, kw;
  int out_h, out_w;
  int stride, padding, dilation;

  int patch() const { return in_c * kh * kw; }
  int pixels() const { return out_h * out_w; }
  bool is_pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && padding == 0;
  }
};

// cols is (Cin*kh*kw) x (out_h*out_w), row-major.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  const int pixels = g.pixels();
  for (int ci = 0; ci < g.in_c; ++ci) {
    const T* plane = image + static_cast<std::size_t>(ci) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        T* row = cols + static_cast<std::size_t>((ci * g.kh + ky) * g.kw + kx) * pixels;
        const int dy = ky * g.dilation - g.padding;
        const int dx = kx * g.dilation - g.padding;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride + dy;
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride + dx;
            dst[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* image) {
  const int pixels = g.pixels();
  for (int ci = 0; ci < g.in_c; ++ci) {
    T* plane = image + static_cast<std::size_t>(ci) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const T* row = cols + static_cast<std::size_t>((ci * g.kh + ky) * g.kw + kx) * pixels;
        const int dy = ky * g.dilation - g.padding;
        const int dx = kx * g.dilation - g.padding;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride + dy;
          if (iy < 0 || iy >= g.in_h) continue;
          const T* src = row + oy * g.out_w;
          T* dst = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride + dx;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T, typename F>
Tensor<T> unary(const Tensor<T>& input, const char* name, F forward,
                BackwardFn<T> (*make_backward)(const Tensor<T>&)) {
  require_defined(input, name);
  Tensor<T> out(input.shape());
  auto x = input.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = forward(x[i]);
  return record<T>(out, {input}, make_backward(input));
}

}  // namespace

int conv_output_size(int input, int kernel, int stride, int padding, int dilation) {
  return (input + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 Conv2dOptions options) {
  require_defined(input, "conv2d");
  require_defined(weight, "conv2d");
  if (options.dilation < 1) {
    throw TensorError("conv2d: dilation must be >= 1, got " + std::to_string(options.dilation));
  }
  if (options.stride < 1) {
    throw TensorError("conv2d: stride must be >= 1, got " + std::to_string(options.stride));
  }
  if (options.padding < 0) throw TensorError("conv2d: negative padding");
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  if (ws.c != xs.c) {
    throw TensorError("conv2d: input has " + std::to_string(xs.c) +
                      " channels but weight expects " + std::to_string(ws.c) + " (weight " +
                      ws.str() + ", input " + xs.str() + ")");
  }
  if (bias.defined() && bias.numel() != static_cast<std::size_t>(ws.n)) {
    throw TensorError("conv2d: bias holds " + std::to_string(bias.numel()) + " values, expected " +
                      std::to_string(ws.n));
  }
  ConvGeometry g{xs.c, xs.h, xs.w, ws.h, ws.w, 0, 0,
                 options.stride, options.padding, options.dilation};
  g.out_h = conv_output_size(xs.h, ws.h, g.stride, g.padding, g.dilation);
  g.out_w = conv_output_size(xs.w, ws.w, g.stride, g.padding, g.dilation);
  if (g.out_h < 1 || g.out_w < 1) {
    throw TensorError("conv2d: kernel " + ws.str() + " with dilation " +
                      std::to_string(g.dilation) + " does not fit input " + xs.str());
  }

  const int cout = ws.n;
  const int patch = g.patch();
  const int pixels = g.pixels();
  Tensor<T> out(Shape{xs.n, cout, g.out_h, g.out_w});
  auto x = input.data();
  auto w = weight.data();
  auto y = out.mutable_data();
  std::vector<T> cols(g.is_pointwise() ? 0 : static_cast<std::size_t>(patch) * pixels);
  const std::size_t in_stride = static_cast<std::size_t>(xs.c) * xs.h * xs.w;
  const std::size_t out_stride = static_cast<std::size_t>(cout) * pixels;
  for (int n = 0; n < xs.n; ++n) {
    const T* src = x.data() + n * in_stride;
    if (!g.is_pointwise()) {
      im2col(src, g, cols.data());
      src = cols.data();
    }
    T* dst = y.data() + n * out_stride;
    detail::gemm(false, false, cout, pixels, patch, T(1), w.data(), patch, src, pixels, T(0), dst,
                 pixels);
    if (bias.defined()) {
      auto b = bias.data();
      for (int co = 0; co < cout; ++co) {
        T* row = dst + static_cast<std::size_t>(co) * pixels;
        for (int p = 0; p < pixels; ++p) row[p] += b[co];
      }
    }
  }

  return record<T>(out, {input, weight, bias},
                [input, weight, bias, g, cout](std::span<const T> gy, std::span<const T>) {
                  const int patch = g.patch();
                  const int pixels = g.pixels();
                  const Shape& xs = input.shape();
                  const std::size_t in_stride = static_cast<std::size_t>(xs.c) * xs.h * xs.w;
                  const std::size_t out_stride = static_cast<std::size_t>(cout) * pixels;
                  auto x = input.data();
                  auto w = weight.data();
                  std::vector<T> cols(g.is_pointwise() ? 0
                                                       : static_cast<std::size_t>(patch) * pixels);
                  std::vector<T> dcols(cols.size());
                  std::vector<T> dw(weight.requires_grad() ? w.size() : 0, T(0));
                  std::vector<T> dx(input.requires_grad() ? x.size() : 0, T(0));
                  std::vector<T> db(bias.requires_grad() ? static_cast<std::size_t>(cout) : 0, T(0));
                  for (int n = 0; n < xs.n; ++n) {
                    const T* dyn = gy.data() + n * out_stride;
                    if (!dw.empty()) {
                      const T* src = x.data() + n * in_stride;
                      if (!g.is_pointwise()) {
                        im2col(src, g, cols.data());
                        src = cols.data();
                      }
                      detail::gemm(false, true, cout, patch, pixels, T(1), dyn, pixels, src, pixels,
                                   T(1), dw.data(), patch);
                    }
                    if (!dx.empty()) {
                      T* dxn = dx.data() + n * in_stride;
                      if (g.is_pointwise()) {
                        detail::gemm(true, false, patch, pixels, cout, T(1), w.data(), patch, dyn,
                                     pixels, T(1), dxn, pixels);
                      } else {
                        detail::gemm(true, false, patch, pixels, cout, T(1), w.data(), patch, dyn,
                                     pixels, T(0), dcols.data(), pixels);
                        col2im(dcols.data(), g, dxn);
                      }
                    }
                    if (!db.empty()) {
                      for (int co = 0; co < cout; ++co) {
                        const T* row = dyn + static_cast<std::size_t>(co) * pixels;
                        T acc = 0;
                        for (int p = 0; p < pixels; ++p) acc += row[p];
                        db[co] += acc;
                      }
                    }
                  }
                  if (!dw.empty()) accumulate_grad<T>(weight, dw);
                  if (!dx.empty()) accumulate_grad<T>(input, dx);
                  if (!db.empty()) accumulate_grad<T>(bias, db);
                });
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input, int window, int stride) {
  require_defined(input, "max_pool2d");
  if (window < 1 || stride < 1) throw TensorError("max_pool2d: window and stride must be >= 1");
  const Shape& s = input.shape();
  if (window > s.h || window > s.w) {
    throw TensorError("max_pool2d: window " + std::to_string(window) +
                      " larger than input extent " + s.str());
  }
  const int oh = conv_output_size(s.h, window, stride, 0, 1);
  const int ow = conv_output_size(s.w, window, stride, 0, 1);
  Tensor<T> out(Shape{s.n, s.c, oh, ow});
  auto x = input.data();
  auto y = out.mutable_data();
  std::vector<std::size_t> argmax(y.size());
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = s.index(n, c, 0, 0);
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++o) {
          std::size_t best = base + static_cast<std::size_t>(oy * stride) * s.w + ox * stride;
          for (int ky = 0; ky < window; ++ky) {
            for (int kx = 0; kx < window; ++kx) {
              const std::size_t idx =
                  base + static_cast<std::size_t>(oy * stride + ky) * s.w + ox * stride + kx;
              if (x[idx] > x[best] || std::isnan(x[idx])) best = idx;
            }
          }
          argmax[o] = best;
          y[o] = x[best];
        }
      }
    }
  }
  return record<T>(out, {input},
                [input, argmax = std::move(argmax)](std::span<const T> gy, std::span<const T>) {
                  std::vector<T> dx(input.numel(), T(0));
                  for (std::size_t i = 0; i < gy.size(); ++i) dx[argmax[i]] += gy[i];
                  accumulate_grad<T>(input, dx);
                });
}

namespace {

struct LerpTap {
  int lo;
  int hi;
  double frac;
};

std::vector<LerpTap> align_corners_taps(int in, int out) {
  std::vector<LerpTap> taps(out);
  const double ratio = out > 1 ? static_cast<double>(in - 1) / (out - 1) : 0.0;
  for (int i = 0; i < out; ++i) {
    const double src = i * ratio;
    int lo = static_cast<int>(std::floor(src));
    lo = std::clamp(lo, 0, in - 1);
    const int hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& input, int out_h, int out_w) {
  require_defined(input, "bilinear_resize");
  if (out_h < 1 || out_w < 1) throw TensorError("bilinear_resize: output size must be >= 1");
  const Shape& s = input.shape();
  if (s.h < 1 || s.w < 1) throw TensorError("bilinear_resize: empty input " + s.str());
  if (out_h == s.h && out_w == s.w) {
    Tensor<T> out(s, std::vector<T>(input.data().begin(), input.data().end()));
    return record<T>(out, {input}, [input](std::span<const T> gy, std::span<const T>) {
      accumulate_grad<T>(input, gy);
    });
  }
  const auto ty = align_corners_taps(s.h, out_h);
  const auto tx = align_corners_taps(s.w, out_w);
  Tensor<T> out(Shape{s.n, s.c, out_h, out_w});
  auto x = input.data();
  auto y = out.mutable_data();
  const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x.data() + p * s.plane();
    T* dst = y.data() + p * static_cast<std::size_t>(out_h) * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const T fy = static_cast<T>(ty[oy].frac);
      const T* r0 = src + static_cast<std::size_t>(ty[oy].lo) * s.w;
      const T* r1 = src + static_cast<std::size_t>(ty[oy].hi) * s.w;
      for (int ox = 0; ox < out_w; ++ox) {
        const T fx = static_cast<T>(tx[ox].frac);
        const T top = r0[tx[ox].lo] * (T(1) - fx) + r0[tx[ox].hi] * fx;
        const T bottom = r1[tx[ox].lo] * (T(1) - fx) + r1[tx[ox].hi] * fx;
        dst[oy * out_w + ox] = top * (T(1) - fy) + bottom * fy;
      }
    }
  }
  return record<T>(out, {input}, [input, ty, tx, out_h, out_w](std::span<const T> gy,
                                                            std::span<const T>) {
    const Shape& s = input.shape();
    std::vector<T> dx(input.numel(), T(0));
    const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
    for (std::size_t p = 0; p < planes; ++p) {
      T* dst = dx.data() + p * s.plane();
      const T* src = gy.data() + p * static_cast<std::size_t>(out_h) * out_w;
      for (int oy = 0; oy < out_h; ++oy) {
        const T fy = static_cast<T>(ty[oy].frac);
        T* r0 = dst + static_cast<std::size_t>(ty[oy].lo) * s.w;
        T* r1 = dst + static_cast<std::size_t>(ty[oy].hi) * s.w;
        for (int ox = 0; ox < out_w; ++ox) {
          const T fx = static_cast<T>(tx[ox].frac);
          const T g = src[oy * out_w + ox];
          r0[tx[ox].lo] += g * (T(1) - fy) * (T(1) - fx);
          r0[tx[ox].hi] += g * (T(1) - fy) * fx;
          r1[tx[ox].lo] += g * fy * (T(1) - fx);
          r1[tx[ox].hi] += g * fy * fx;
        }
      }
    }
    accumulate_grad<T>(input, dx);
  });
}

template <typename T>
Tensor<T> spatial_softmax(const Tensor<T>& input) {
  require_defined(input, "spatial_softmax");
  const Shape& s = input.shape();
  Tensor<T> out(s);
  auto x = input.data();
  auto y = out.mutable_data();
  const std::size_t plane = s.plane();
  for (std::size_t p = 0; p < static_cast<std::size_t>(s.n) * s.c; ++p) {
    const T* src = x.data() + p * plane;
    T* dst = y.data() + p * plane;
    const T peak = *std::max_element(src, src + plane);
    T total = 0;
    for (std::size_t i = 0; i < plane; ++i) {
      dst[i] = std::exp(src[i] - peak);
      total += dst[i];
    }
    for (std::size_t i = 0; i < plane; ++i) dst[i] /= total;
  }
  return record<T>(out, {input}, [input](std::span<const T> gy, std::span<const T> y) {
    const std::size_t plane = input.shape().plane();
    std::vector<T> dx(y.size());
    for (std::size_t p = 0; p < y.size() / plane; ++p) {
      const std::size_t base = p * plane;
      T dot = 0;
      for (std::size_t i = 0; i < plane; ++i) dot += gy[base + i] * y[base + i];
      for (std::size_t i = 0; i < plane; ++i) dx[base + i] = y[base + i] * (gy[base + i] - dot);
    }
    accumulate_grad<T>(input, dx);
  });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
  require_defined(input, "global_avg_pool");
  const Shape& s = input.shape();
  if (s.plane() == 0) throw TensorError("global_avg_pool: empty spatial extent");
  Tensor<T> out(Shape{s.n, s.c, 1, 1});
  auto x = input.data();
  auto y = out.mutable_data();
  const std::size_t plane = s.plane();
  for (std::size_t p = 0; p < y.size(); ++p) {
    T acc = 0;
    for (std::size_t i = 0; i < plane; ++i) acc += x[p * plane + i];
    y[p] = acc / static_cast<T>(plane);
  }
  return record<T>(out, {input}, [input](std::span<const T> gy, std::span<const T>) {
    const std::size_t plane = input.shape().plane();
    std::vector<T> dx(input.numel());
    const T inv = T(1) / static_cast<T>(plane);
    for (std::size_t p = 0; p < gy.size(); ++p) {
      std::fill_n(dx.begin() + p * plane, plane, gy[p] * inv);
    }
    accumulate_grad<T>(input, dx);
  });
}

template <typename T>
Tensor<T> broadcast_spatial(const Tensor<T>& input, int h, int w) {
  require_defined(input, "broadcast_spatial");
  const Shape& s = input.shape();
  if (s.h != 1 || s.w != 1) throw TensorError("broadcast_spatial: expects (N,C,1,1), got " + s.str());
  if (h < 1 || w < 1) throw TensorError("broadcast_spatial: target extent must be >= 1");
  Tensor<T> out(Shape{s.n, s.c, h, w});
  auto x = input.data();
  auto y = out.mutable_data();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t p = 0; p < x.size(); ++p) std::fill_n(y.begin() + p * plane, plane, x[p]);
  return record<T>(out, {input}, [input, plane](std::span<const T> gy, std::span<const T>) {
    std::vector<T> dx(input.numel(), T(0));
    for (std::size_t p = 0; p < dx.size(); ++p) {
      for (std::size_t i = 0; i < plane; ++i) dx[p] += gy[p * plane + i];
    }
    accumulate_grad<T>(input, dx);
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  return unary<T>(
      input, "relu", [](T v) { return v < T(0) ? T(0) : v; },
      [](const Tensor<T>& in) -> BackwardFn<T> {
        return [in](std::span<const T> gy, std::span<const T> y) {
          std::vector<T> dx(gy.size());
          for (std::size_t i = 0; i < gy.size(); ++i) dx[i] = y[i] > T(0) ? gy[i] : T(0);
          accumulate_grad<T>(in, dx);
        };
      });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
  return unary<T>(
      input, "sigmoid", [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](const Tensor<T>& in) -> BackwardFn<T> {
        return [in](std::span<const T> gy, std::span<const T> y) {
          std::vector<T> dx(gy.size());
          for (std::size_t i = 0; i < gy.size(); ++i) dx[i] = gy[i] * y[i] * (T(1) - y[i]);
          accumulate_grad<T>(in, dx);
        };
      });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& input) {
  return unary<T>(
      input, "tanh", [](T v) { return std::tanh(v); },
      [](const Tensor<T>& in) -> BackwardFn<T> {
        return [in](std::span<const T> gy, std::span<const T> y) {
          std::vector<T> dx(gy.size());
          for (std::size_t i = 0; i < gy.size(); ++i) dx[i] = gy[i] * (T(1) - y[i] * y[i]);
          accumulate_grad<T>(in, dx);
        };
      });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  auto y = out.mutable_data();
  auto x0 = a.data();
  auto x1 = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x0[i] + x1[i];
  return record<T>(out, {a, b}, [a, b](std::span<const T> gy, std::span<const T>) {
    accumulate_grad<T>(a, gy);
    accumulate_grad<T>(b, gy);
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  Tensor<T> out(a.shape());
  auto y = out.mutable_data();
  auto x0 = a.data();
  auto x1 = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x0[i] - x1[i];
  return record<T>(out, {a, b}, [a, b](std::span<const T> gy, std::span<const T>) {
    accumulate_grad<T>(a, gy);
    if (b.requires_grad()) {
      std::vector<T> neg(gy.begin(), gy.end());
      for (auto& v : neg) v = -v;
      accumulate_grad<T>(b, neg);
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  auto y = out.mutable_data();
  auto x0 = a.data();
  auto x1 = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x0[i] * x1[i];
  return record<T>(out, {a, b}, [a, b](std::span<const T> gy, std::span<const T>) {
    std::vector<T> d(gy.size());
    if (a.requires_grad()) {
      auto v = b.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = gy[i] * v[i];
      accumulate_grad<T>(a, d);
    }
    if (b.requires_grad()) {
      auto v = a.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = gy[i] * v[i];
      accumulate_grad<T>(b, d);
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  require_defined(a, "scale");
  Tensor<T> out(a.shape());
  auto y = out.mutable_data();
  auto x = a.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * factor;
  return record<T>(out, {a}, [a, factor](std::span<const T> gy, std::span<const T>) {
    std::vector<T> d(gy.begin(), gy.end());
    for (auto& v : d) v *= factor;
    accumulate_grad<T>(a, d);
  });
}

template <typename T>
Tensor<T> channel_affine(const Tensor<T>& input, const Tensor<T>& scale_t, const Tensor<T>& shift) {
  require_defined(input, "channel_affine");
  const Shape& s = input.shape();
  if (scale_t.numel() != static_cast<std::size_t>(s.c) ||
      shift.numel() != static_cast<std::size_t>(s.c)) {
    throw TensorError("channel_affine: expected " + std::to_string(s.c) +
                      " scale/shift values for input " + s.str());
  }
  Tensor<T> out(s);
  auto x = input.data();
  auto y = out.mutable_data();
  auto g = scale_t.data();
  auto b = shift.data();
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = s.index(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) y[base + i] = x[base + i] * g[c] + b[c];
    }
  }
  return record<T>(out, {input, scale_t, shift},
                [input, scale_t, shift](std::span<const T> gy, std::span<const T>) {
                  const Shape& s = input.shape();
                  const std::size_t plane = s.plane();
                  auto x = input.data();
                  auto g = scale_t.data();
                  std::vector<T> dx(input.requires_grad() ? x.size() : 0);
                  std::vector<T> dg(s.c, T(0));
                  std::vector<T> db(s.c, T(0));
                  for (int n = 0; n < s.n; ++n) {
                    for (int c = 0; c < s.c; ++c) {
                      const std::size_t base = s.index(n, c, 0, 0);
                      for (std::size_t i = 0; i < plane; ++i) {
                        const T gv = gy[base + i];
                        if (!dx.empty()) dx[base + i] = gv * g[c];
                        dg[c] += gv * x[base + i];
                        db[c] += gv;
                      }
                    }
                  }
                  if (!dx.empty()) accumulate_grad<T>(input, dx);
                  accumulate_grad<T>(scale_t, dg);
                  accumulate_grad<T>(shift, db);
                });
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw TensorError("concat_channels: no inputs");
  const Shape first = parts.front().shape();
  int channels = 0;
  for (const auto& p : parts) {
    require_defined(p, "concat_channels");
    const Shape& s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw TensorError("concat_channels: incompatible shapes " + first.str() + " and " + s.str());
    }
    channels += s.c;
  }
  Shape os{first.n, channels, first.h, first.w};
  Tensor<T> out(os);
  auto y = out.mutable_data();
  const std::size_t plane = os.plane();
  for (int n = 0; n < os.n; ++n) {
    int offset = 0;
    for (const auto& p : parts) {
      const int c = p.shape().c;
      const std::size_t len = static_cast<std::size_t>(c) * plane;
      std::copy_n(p.data().begin() + n * len, len, y.begin() + os.index(n, offset, 0, 0));
      offset += c;
    }
  }
  return record<T>(out, parts, [parts, os](std::span<const T> gy, std::span<const T>) {
    const std::size_t plane = os.plane();
    int offset = 0;
    for (const auto& p : parts) {
      const int c = p.shape().c;
      if (p.requires_grad()) {
        const std::size_t len = static_cast<std::size_t>(c) * plane;
        std::vector<T> d(p.numel());
        for (int n = 0; n < os.n; ++n) {
          std::copy_n(gy.begin() + os.index(n, offset, 0, 0), len, d.begin() + n * len);
        }
        accumulate_grad<T>(p, d);
      }
      offset += c;
    }
  });
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, int begin, int count) {
  require_defined(input, "slice_channels");
  const Shape& s = input.shape();
  if (begin < 0 || count < 1 || begin + count > s.c) {
    throw TensorError("slice_channels: range [" + std::to_string(begin) + "," +
                      std::to_string(begin + count) + ") outside " + s.str());
  }
  Shape os{s.n, count, s.h, s.w};
  Tensor<T> out(os);
  auto y = out.mutable_data();
  const std::size_t len = static_cast<std::size_t>(count) * s.plane();
  for (int n = 0; n < s.n; ++n) {
    std::copy_n(input.data().begin() + s.index(n, begin, 0, 0), len, y.begin() + n * len);
  }
  return record<T>(out, {input}, [input, begin, len](std::span<const T> gy, std::span<const T>) {
    const Shape& s = input.shape();
    std::vector<T> d(input.numel(), T(0));
    for (int n = 0; n < s.n; ++n) {
      std::copy_n(gy.begin() + n * len, len, d.begin() + s.index(n, begin, 0, 0));
    }
    accumulate_grad<T>(input, d);
  });
}

template <typename T>
Tensor<T> mul_constant(const Tensor<T>& input, std::span<const T> mask) {
  require_defined(input, "mul_constant");
  if (mask.size() != input.numel()) throw TensorError("mul_constant: mask size mismatch");
  Tensor<T> out(input.shape());
  auto x = input.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * mask[i];
  std::vector<T> m(mask.begin(), mask.end());
  return record<T>(out, {input}, [input, m = std::move(m)](std::span<const T> gy, std::span<const T>) {
    std::vector<T> d(gy.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = gy[i] * m[i];
    accumulate_grad<T>(input, d);
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& input) {
  require_defined(input, "sum");
  T acc = 0;
  for (T v : input.data()) acc += v;
  return record<T>(Tensor<T>::scalar(acc), {input}, [input](std::span<const T> gy, std::span<const T>) {
    std::vector<T> d(input.numel(), gy[0]);
    accumulate_grad<T>(input, d);
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& input) {
  require_defined(input, "mean");
  if (input.numel() == 0) throw TensorError("mean of empty tensor");
  return scale(sum(input), T(1) / static_cast<T>(input.numel()));
}

#define UNIPOSE_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Conv2dOptions); \
  template Tensor<T> max_pool2d(const Tensor<T>&, int, int);                                     \
  template Tensor<T> bilinear_resize(const Tensor<T>&, int, int);                                \
  template Tensor<T> spatial_softmax(const Tensor<T>&);                                          \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                          \
  template Tensor<T> broadcast_spatial(const Tensor<T>&, int, int);                              \
  template Tensor<T> relu(const Tensor<T>&);                                                     \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                  \
  template Tensor<T> tanh(const Tensor<T>&);                                                     \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> channel_affine(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);                             \
  template Tensor<T> slice_channels(const Tensor<T>&, int, int);                                 \
  template Tensor<T> mul_constant(const Tensor<T>&, std::span<const T>);                         \
  template Tensor<T> sum(const Tensor<T>&);                                                      \
  template Tensor<T> mean(const Tensor<T>&);

UNIPOSE_INSTANTIATE_OPS(float)
UNIPOSE_INSTANTIATE_OPS(double)

#undef UNIPOSE_INSTANTIATE_OPS

}  // namespace unipose::ops
