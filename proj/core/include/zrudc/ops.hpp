#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "zrudc/parallel.hpp"
#include "zrudc/tensor.hpp"

namespace zrudc::ops {

// ---------------------------------------------------------------------------
// Reduction helpers. Element loops that feed a scalar accumulate in a fixed
// order so results do not depend on the thread count.
// ---------------------------------------------------------------------------

/// Dot product with a fixed 16-lane accumulation order (vectorizes without
/// reassociation flags).
template <typename T>
inline T dot_fixed(const T* a, const T* b, int64_t n) {
    constexpr int B = 16;
    T acc[B] = {};
    int64_t i = 0;
    for (; i + B <= n; i += B)
        for (int l = 0; l < B; ++l) acc[l] += a[i + l] * b[i + l];
    T tail = T(0);
    for (; i < n; ++i) tail += a[i] * b[i];
    T s = tail;
    for (int l = 0; l < B; ++l) s += acc[l];
    return s;
}

/// Sequential double-precision sum; exact for sums of equal dyadic values.
template <typename T>
inline double sum_double(const T* a, int64_t n) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += static_cast<double>(a[i]);
    return s;
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "add");
    TensorT<T> y(a.shape);
    for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] + b[i];
    return y;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "sub");
    TensorT<T> y(a.shape);
    for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] - b[i];
    return y;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "mul");
    TensorT<T> y(a.shape);
    for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] * b[i];
    return y;
}

template <typename T>
TensorT<T> mul_scalar(const TensorT<T>& a, T c) {
    TensorT<T> y(a.shape);
    for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] * c;
    return y;
}

template <typename T>
TensorT<T> add_scalar(const TensorT<T>& a, T c) {
    TensorT<T> y(a.shape);
    for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] + c;
    return y;
}

/// c - a, elementwise.
template <typename T>
TensorT<T> rsub_scalar(const TensorT<T>& a, T c) {
    TensorT<T> y(a.shape);
    for (int64_t i = 0; i < a.numel(); ++i) y[i] = c - a[i];
    return y;
}

template <typename T>
TensorT<T> abs(const TensorT<T>& a) {
    TensorT<T> y(a.shape);
    for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] < T(0) ? -a[i] : a[i];
    return y;
}

template <typename T>
TensorT<T> clamp01(const TensorT<T>& a) {
    TensorT<T> y(a.shape);
    for (int64_t i = 0; i < a.numel(); ++i) y[i] = std::min(T(1), std::max(T(0), a[i]));
    return y;
}

template <typename T>
T sum(const TensorT<T>& a) {
    return static_cast<T>(sum_double(a.ptr(), a.numel()));
}

template <typename T>
T mean(const TensorT<T>& a) {
    return static_cast<T>(sum_double(a.ptr(), a.numel()) / static_cast<double>(a.numel()));
}

// ---------------------------------------------------------------------------
// conv2d: cross-correlation over [C_in, H, W] with weight [C_out, C_in, k, k].
// ---------------------------------------------------------------------------

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

template <typename T>
void check_conv_args(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                     int pad) {
    if (x.rank() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " + shape_str(x.shape));
    if (w.rank() != 4 || w.dim(2) != w.dim(3))
        throw ShapeError("conv2d: weight must be [Co,Ci,k,k], got " + shape_str(w.shape));
    if (x.dim(0) != w.dim(1))
        throw ShapeError("conv2d: input has " + std::to_string(x.dim(0)) +
                         " channels but weight expects " + std::to_string(w.dim(1)) + " (weight " +
                         shape_str(w.shape) + ")");
    if (b.numel() != w.dim(0))
        throw ShapeError("conv2d: bias " + shape_str(b.shape) + " does not match C_out " +
                         std::to_string(w.dim(0)));
    const int k = w.dim(2);
    if (k % 2 == 0 || k < 1) throw ConfigError("conv2d: kernel size must be odd, got " + std::to_string(k));
    if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
    if (pad < 0) throw ConfigError("conv2d: padding must be >= 0");
    if (conv_out_dim(x.dim(1), k, stride, pad) < 1 || conv_out_dim(x.dim(2), k, stride, pad) < 1)
        throw ShapeError("conv2d: output would be empty for input " + shape_str(x.shape));
}

/// Per input channel the k*k taps accumulate in T (a short, vectorizable
/// SAXPY chain); the cross-channel combine runs in double so the rounding
/// error stays well under 1e-6 regardless of channel count.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride = 1,
                  int pad = 0) {
    check_conv_args(x, w, b, stride, pad);
    const int Ci = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Co = w.dim(0), k = w.dim(2);
    const int Ho = conv_out_dim(H, k, stride, pad), Wo = conv_out_dim(W, k, stride, pad);
    const int64_t plane = int64_t(Ho) * Wo;
    TensorT<T> y({Co, Ho, Wo});

    parallel_for(0, Co, [&](int64_t co) {
        std::vector<double> acc(static_cast<size_t>(plane), static_cast<double>(b[co]));
        std::vector<T> part(static_cast<size_t>(plane));
        for (int ci = 0; ci < Ci; ++ci) {
            std::fill(part.begin(), part.end(), T(0));
            const T* xplane = x.ptr() + int64_t(ci) * H * W;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const T wv = w[((co * Ci + ci) * k + ky) * k + kx];
                    if (wv == T(0)) continue;
                    // valid output column range for this tap
                    int ox0 = std::max(0, (pad - kx + stride - 1) / stride);
                    int ox1 = std::min(Wo, (W - 1 - kx + pad) / stride + 1);
                    if (ox1 <= ox0) continue;
                    for (int oy = 0; oy < Ho; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= H) continue;
                        T* yrow = part.data() + int64_t(oy) * Wo;
                        const T* xrow = xplane + int64_t(iy) * W - pad + kx;
                        if (stride == 1) {
                            for (int ox = ox0; ox < ox1; ++ox) yrow[ox] += wv * xrow[ox];
                        } else {
                            for (int ox = ox0; ox < ox1; ++ox) yrow[ox] += wv * xrow[int64_t(ox) * stride];
                        }
                    }
                }
            }
            for (int64_t i = 0; i < plane; ++i) acc[static_cast<size_t>(i)] += static_cast<double>(part[static_cast<size_t>(i)]);
        }
        T* yplane = y.ptr() + co * plane;
        for (int64_t i = 0; i < plane; ++i) yplane[i] = static_cast<T>(acc[static_cast<size_t>(i)]);
    });
    return y;
}

template <typename T>
TensorT<T> conv2d_grad_input(const TensorT<T>& gy, const TensorT<T>& w, int H, int W, int stride,
                             int pad) {
    const int Co = w.dim(0), Ci = w.dim(1), k = w.dim(2);
    const int Ho = gy.dim(1), Wo = gy.dim(2);
    TensorT<T> gx({Ci, H, W}, T(0));
    parallel_for(0, Ci, [&](int64_t ci) {
        T* gxplane = gx.ptr() + ci * H * W;
        for (int co = 0; co < Co; ++co) {
            const T* gyplane = gy.ptr() + int64_t(co) * Ho * Wo;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const T wv = w[((co * Ci + ci) * k + ky) * k + kx];
                    if (wv == T(0)) continue;
                    int ox0 = std::max(0, (pad - kx + stride - 1) / stride);
                    int ox1 = std::min(Wo, (W - 1 - kx + pad) / stride + 1);
                    if (ox1 <= ox0) continue;
                    for (int oy = 0; oy < Ho; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= H) continue;
                        const T* gyrow = gyplane + int64_t(oy) * Wo;
                        T* gxrow = gxplane + int64_t(iy) * W - pad + kx;
                        if (stride == 1) {
                            for (int ox = ox0; ox < ox1; ++ox) gxrow[ox] += wv * gyrow[ox];
                        } else {
                            for (int ox = ox0; ox < ox1; ++ox) gxrow[int64_t(ox) * stride] += wv * gyrow[ox];
                        }
                    }
                }
            }
        }
    });
    return gx;
}

template <typename T>
TensorT<T> conv2d_grad_weight(const TensorT<T>& gy, const TensorT<T>& x, int k, int stride,
                              int pad) {
    const int Ci = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Co = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
    TensorT<T> gw({Co, Ci, k, k}, T(0));
    parallel_for(0, Co, [&](int64_t co) {
        const T* gyplane = gy.ptr() + co * Ho * Wo;
        for (int ci = 0; ci < Ci; ++ci) {
            const T* xplane = x.ptr() + int64_t(ci) * H * W;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    int ox0 = std::max(0, (pad - kx + stride - 1) / stride);
                    int ox1 = std::min(Wo, (W - 1 - kx + pad) / stride + 1);
                    double acc = 0.0;
                    if (ox1 > ox0) {
                        for (int oy = 0; oy < Ho; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= H) continue;
                            const T* gyrow = gyplane + int64_t(oy) * Wo;
                            const T* xrow = xplane + int64_t(iy) * W - pad + kx;
                            if (stride == 1) {
                                acc += static_cast<double>(dot_fixed(gyrow + ox0, xrow + ox0, ox1 - ox0));
                            } else {
                                T racc = T(0);
                                for (int ox = ox0; ox < ox1; ++ox)
                                    racc += gyrow[ox] * xrow[int64_t(ox) * stride];
                                acc += static_cast<double>(racc);
                            }
                        }
                    }
                    gw[((co * Ci + ci) * k + ky) * k + kx] = static_cast<T>(acc);
                }
            }
        }
    });
    return gw;
}

template <typename T>
TensorT<T> conv2d_grad_bias(const TensorT<T>& gy) {
    const int Co = gy.dim(0);
    const int64_t plane = int64_t(gy.dim(1)) * gy.dim(2);
    TensorT<T> gb({Co});
    for (int co = 0; co < Co; ++co)
        gb[co] = static_cast<T>(sum_double(gy.ptr() + co * plane, plane));
    return gb;
}

// ---------------------------------------------------------------------------
// maxpool2d: ceil-mode pooling, windows clipped at the borders.
// ---------------------------------------------------------------------------

inline int pool_out_dim(int in, int k, int stride) {
    if (in <= k) return 1;
    int out = (in - k + stride - 1) / stride + 1;
    while ((out - 1) * stride >= in) --out;  // never start a window past the input
    return out;
}

/// argmax (when non-null) receives, per output cell, the flat input index of
/// the first maximal element in row-major window scan order.
template <typename T>
TensorT<T> maxpool2d(const TensorT<T>& x, int kernel, int stride,
                     std::vector<int32_t>* argmax = nullptr) {
    if (x.rank() != 3) throw ShapeError("maxpool2d: input must be [C,H,W], got " + shape_str(x.shape));
    if (kernel < 1) throw ConfigError("maxpool2d: kernel must be >= 1, got " + std::to_string(kernel));
    if (stride < 1) throw ConfigError("maxpool2d: stride must be >= 1, got " + std::to_string(stride));
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Ho = pool_out_dim(H, kernel, stride), Wo = pool_out_dim(W, kernel, stride);
    TensorT<T> y({C, Ho, Wo});
    if (argmax) argmax->assign(static_cast<size_t>(y.numel()), 0);

    parallel_for(0, C, [&](int64_t c) {
        const T* xplane = x.ptr() + c * H * W;
        T* yplane = y.ptr() + c * Ho * Wo;
        for (int oy = 0; oy < Ho; ++oy) {
            const int y0 = oy * stride, y1 = std::min(y0 + kernel, H);
            for (int ox = 0; ox < Wo; ++ox) {
                const int x0 = ox * stride, x1 = std::min(x0 + kernel, W);
                T best = xplane[int64_t(y0) * W + x0];
                int64_t bestidx = int64_t(y0) * W + x0;
                for (int iy = y0; iy < y1; ++iy) {
                    const T* row = xplane + int64_t(iy) * W;
                    for (int ix = x0; ix < x1; ++ix) {
                        if (row[ix] > best) {
                            best = row[ix];
                            bestidx = int64_t(iy) * W + ix;
                        }
                    }
                }
                yplane[int64_t(oy) * Wo + ox] = best;
                if (argmax)
                    (*argmax)[static_cast<size_t>(c * Ho * Wo + int64_t(oy) * Wo + ox)] =
                        static_cast<int32_t>(c * H * W + bestidx);
            }
        }
    });
    return y;
}

template <typename T>
TensorT<T> maxpool2d_grad(const TensorT<T>& gy, const std::vector<int32_t>& argmax,
                          const std::vector<int>& in_shape) {
    TensorT<T> gx(in_shape, T(0));
    for (int64_t i = 0; i < gy.numel(); ++i) gx[argmax[static_cast<size_t>(i)]] += gy[i];
    return gx;
}

// ---------------------------------------------------------------------------
// prelu: x >= 0 ? x : slope * x, one learnable slope shared by all channels.
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> prelu(const TensorT<T>& x, T slope) {
    TensorT<T> y(x.shape);
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] >= T(0) ? x[i] : slope * x[i];
    return y;
}

// ---------------------------------------------------------------------------
// bilinear_resize: half-pixel-center sampling with edge clamping. The lerp
// form keeps constants exact and same-size resizes identical to the input.
// ---------------------------------------------------------------------------

struct ResizeAxis {
    std::vector<int> i0, i1;
    std::vector<double> frac;
};

inline ResizeAxis resize_axis(int in, int out) {
    ResizeAxis ax;
    ax.i0.resize(static_cast<size_t>(out));
    ax.i1.resize(static_cast<size_t>(out));
    ax.frac.resize(static_cast<size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        double src = (o + 0.5) * scale - 0.5;
        double fl = std::floor(src);
        int lo = static_cast<int>(fl);
        double f = src - fl;
        if (lo < 0) { lo = 0; f = 0.0; }
        if (lo >= in - 1) { lo = in - 1; f = 0.0; }
        ax.i0[static_cast<size_t>(o)] = lo;
        ax.i1[static_cast<size_t>(o)] = std::min(lo + 1, in - 1);
        ax.frac[static_cast<size_t>(o)] = f;
    }
    return ax;
}

template <typename T>
TensorT<T> bilinear_resize(const TensorT<T>& x, int outH, int outW) {
    if (x.rank() != 3) throw ShapeError("bilinear_resize: input must be [C,H,W], got " + shape_str(x.shape));
    if (outH < 1 || outW < 1) throw ConfigError("bilinear_resize: output dims must be >= 1");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const ResizeAxis ay = resize_axis(H, outH);
    const ResizeAxis axx = resize_axis(W, outW);
    TensorT<T> y({C, outH, outW});
    parallel_for(0, int64_t(C) * outH, [&](int64_t job) {
        const int c = static_cast<int>(job / outH);
        const int oy = static_cast<int>(job % outH);
        const T* xplane = x.ptr() + int64_t(c) * H * W;
        const T* row0 = xplane + int64_t(ay.i0[oy]) * W;
        const T* row1 = xplane + int64_t(ay.i1[oy]) * W;
        const T fy = static_cast<T>(ay.frac[oy]);
        T* yrow = y.ptr() + (int64_t(c) * outH + oy) * outW;
        for (int ox = 0; ox < outW; ++ox) {
            const int x0 = axx.i0[ox], x1 = axx.i1[ox];
            const T fx = static_cast<T>(axx.frac[ox]);
            const T top = row0[x0] + fx * (row0[x1] - row0[x0]);
            const T bot = row1[x0] + fx * (row1[x1] - row1[x0]);
            yrow[ox] = top + fy * (bot - top);
        }
    }, 64);
    return y;
}

template <typename T>
TensorT<T> bilinear_resize_grad(const TensorT<T>& gy, int inH, int inW) {
    const int C = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
    const ResizeAxis ay = resize_axis(inH, Ho);
    const ResizeAxis axx = resize_axis(inW, Wo);
    TensorT<T> gx({C, inH, inW}, T(0));
    parallel_for(0, C, [&](int64_t c) {
        T* gxplane = gx.ptr() + c * inH * inW;
        const T* gyplane = gy.ptr() + c * Ho * Wo;
        for (int oy = 0; oy < Ho; ++oy) {
            const int y0 = ay.i0[oy], y1 = ay.i1[oy];
            const T fy = static_cast<T>(ay.frac[oy]);
            for (int ox = 0; ox < Wo; ++ox) {
                const int x0 = axx.i0[ox], x1 = axx.i1[ox];
                const T fx = static_cast<T>(axx.frac[ox]);
                const T g = gyplane[int64_t(oy) * Wo + ox];
                gxplane[int64_t(y0) * inW + x0] += (T(1) - fy) * (T(1) - fx) * g;
                gxplane[int64_t(y0) * inW + x1] += (T(1) - fy) * fx * g;
                gxplane[int64_t(y1) * inW + x0] += fy * (T(1) - fx) * g;
                gxplane[int64_t(y1) * inW + x1] += fy * fx * g;
            }
        }
    });
    return gx;
}

// ---------------------------------------------------------------------------
// Channel reductions and patch min/max filters (dark / bright channel).
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
        throw ShapeError("concat_channels: spatial dims must match, got " + shape_str(a.shape) +
                         " vs " + shape_str(b.shape));
    TensorT<T> y({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
    std::copy(a.data.begin(), a.data.end(), y.data.begin());
    std::copy(b.data.begin(), b.data.end(), y.data.begin() + a.data.size());
    return y;
}

/// Per-pixel minimum over channels; arg (when non-null) records the winning
/// channel (first on ties, scan order c = 0,1,...).
template <typename T>
TensorT<T> channel_min(const TensorT<T>& x, std::vector<int8_t>* arg = nullptr) {
    if (x.rank() != 3) throw ShapeError("channel_min: input must be [C,H,W]");
    const int C = x.dim(0);
    const int64_t plane = int64_t(x.dim(1)) * x.dim(2);
    TensorT<T> y({x.dim(1), x.dim(2)});
    if (arg) arg->assign(static_cast<size_t>(plane), 0);
    for (int64_t i = 0; i < plane; ++i) {
        T best = x[i];
        int8_t bc = 0;
        for (int c = 1; c < C; ++c) {
            const T v = x[c * plane + i];
            if (v < best) { best = v; bc = static_cast<int8_t>(c); }
        }
        y[i] = best;
        if (arg) (*arg)[static_cast<size_t>(i)] = bc;
    }
    return y;
}

template <typename T>
TensorT<T> channel_max(const TensorT<T>& x, std::vector<int8_t>* arg = nullptr) {
    if (x.rank() != 3) throw ShapeError("channel_max: input must be [C,H,W]");
    const int C = x.dim(0);
    const int64_t plane = int64_t(x.dim(1)) * x.dim(2);
    TensorT<T> y({x.dim(1), x.dim(2)});
    if (arg) arg->assign(static_cast<size_t>(plane), 0);
    for (int64_t i = 0; i < plane; ++i) {
        T best = x[i];
        int8_t bc = 0;
        for (int c = 1; c < C; ++c) {
            const T v = x[c * plane + i];
            if (v > best) { best = v; bc = static_cast<int8_t>(c); }
        }
        y[i] = best;
        if (arg) (*arg)[static_cast<size_t>(i)] = bc;
    }
    return y;
}

inline void check_patch(int patch) {
    if (patch < 1 || patch % 2 == 0)
        throw ConfigError("patch filter: size must be odd and >= 1, got " + std::to_string(patch));
}

namespace detail {

/// Separable sliding min (Cmp = std::less) or max filter over a [H,W] map
/// with edge replication (window coordinates clamped to the map). Ties go to
/// the first element in row-major window scan order, matching a naive scan.
template <typename T, typename Cmp>
TensorT<T> patch_filter(const TensorT<T>& x, int patch, std::vector<int32_t>* argidx, Cmp better) {
    check_patch(patch);
    if (x.rank() != 2) throw ShapeError("patch filter: input must be [H,W], got " + shape_str(x.shape));
    const int H = x.dim(0), W = x.dim(1);
    const int r = patch / 2;

    // pass 1: horizontal
    TensorT<T> rowv({H, W});
    std::vector<int32_t> rowa(static_cast<size_t>(int64_t(H) * W));
    for (int y = 0; y < H; ++y) {
        const T* in = x.ptr() + int64_t(y) * W;
        T* out = rowv.ptr() + int64_t(y) * W;
        int32_t* oa = rowa.data() + int64_t(y) * W;
        for (int xc = 0; xc < W; ++xc) {
            const int x0 = std::max(0, xc - r), x1 = std::min(W - 1, xc + r);
            T best = in[x0];
            int bi = x0;
            for (int ix = x0 + 1; ix <= x1; ++ix)
                if (better(in[ix], best)) { best = in[ix]; bi = ix; }
            out[xc] = best;
            oa[xc] = bi;
        }
    }
    // pass 2: vertical
    TensorT<T> y({H, W});
    if (argidx) argidx->assign(static_cast<size_t>(int64_t(H) * W), 0);
    for (int yc = 0; yc < H; ++yc) {
        const int y0 = std::max(0, yc - r), y1 = std::min(H - 1, yc + r);
        for (int xc = 0; xc < W; ++xc) {
            T best = rowv.at2(y0, xc);
            int by = y0;
            for (int iy = y0 + 1; iy <= y1; ++iy) {
                const T v = rowv.at2(iy, xc);
                if (better(v, best)) { best = v; by = iy; }
            }
            y.at2(yc, xc) = best;
            if (argidx)
                (*argidx)[static_cast<size_t>(int64_t(yc) * W + xc)] =
                    static_cast<int32_t>(int64_t(by) * W + rowa[static_cast<size_t>(int64_t(by) * W + xc)]);
        }
    }
    return y;
}

}  // namespace detail

template <typename T>
TensorT<T> patch_min(const TensorT<T>& x, int patch, std::vector<int32_t>* argidx = nullptr) {
    return detail::patch_filter(x, patch, argidx, [](T a, T b) { return a < b; });
}

template <typename T>
TensorT<T> patch_max(const TensorT<T>& x, int patch, std::vector<int32_t>* argidx = nullptr) {
    return detail::patch_filter(x, patch, argidx, [](T a, T b) { return a > b; });
}

/// Dark channel: min over color then min over the patch neighborhood.
template <typename T>
TensorT<T> dark_channel(const TensorT<T>& img, int patch) {
    check_patch(patch);
    return patch_min(channel_min(img), patch);
}

template <typename T>
TensorT<T> bright_channel(const TensorT<T>& img, int patch) {
    check_patch(patch);
    return patch_max(channel_max(img), patch);
}

// ---------------------------------------------------------------------------
// Region means and spatial differences (loss building blocks).
// ---------------------------------------------------------------------------

/// Per-pixel mean over the channel axis: [C,H,W] -> [H,W].
template <typename T>
TensorT<T> mean_channels(const TensorT<T>& x) {
    if (x.rank() != 3) throw ShapeError("mean_channels: input must be [C,H,W]");
    const int C = x.dim(0);
    const int64_t plane = int64_t(x.dim(1)) * x.dim(2);
    TensorT<T> y({x.dim(1), x.dim(2)});
    for (int64_t i = 0; i < plane; ++i) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += static_cast<double>(x[c * plane + i]);
        y[i] = static_cast<T>(s / C);
    }
    return y;
}

/// Spatial mean per channel: [C,H,W] -> [C].
template <typename T>
TensorT<T> mean_per_channel(const TensorT<T>& x) {
    if (x.rank() != 3) throw ShapeError("mean_per_channel: input must be [C,H,W]");
    const int C = x.dim(0);
    const int64_t plane = int64_t(x.dim(1)) * x.dim(2);
    TensorT<T> y({C});
    for (int c = 0; c < C; ++c)
        y[c] = static_cast<T>(sum_double(x.ptr() + c * plane, plane) / static_cast<double>(plane));
    return y;
}

/// Non-overlapping region means over a [H,W] map; trailing rows/columns that
/// do not fill a full region are dropped.
template <typename T>
TensorT<T> region_mean(const TensorT<T>& x, int region) {
    if (x.rank() != 2) throw ShapeError("region_mean: input must be [H,W]");
    if (region < 1) throw ConfigError("region_mean: region must be >= 1");
    const int H = x.dim(0), W = x.dim(1);
    const int Rh = H / region, Rw = W / region;
    if (Rh < 1 || Rw < 1)
        throw ShapeError("region_mean: region " + std::to_string(region) + " larger than map " +
                         shape_str(x.shape));
    TensorT<T> y({Rh, Rw});
    const double inv = 1.0 / (static_cast<double>(region) * region);
    for (int by = 0; by < Rh; ++by) {
        for (int bx = 0; bx < Rw; ++bx) {
            double s = 0.0;
            for (int iy = by * region; iy < (by + 1) * region; ++iy) {
                const T* row = x.ptr() + int64_t(iy) * W + int64_t(bx) * region;
                for (int ix = 0; ix < region; ++ix) s += static_cast<double>(row[ix]);
            }
            y.at2(by, bx) = static_cast<T>(s * inv);
        }
    }
    return y;
}

/// Forward difference along the last axis: out[...,x] = in[...,x+1] - in[...,x].
template <typename T>
TensorT<T> diff_x(const TensorT<T>& x) {
    const int W = x.shape.back();
    if (W < 2) throw ShapeError("diff_x: needs width >= 2, got " + shape_str(x.shape));
    std::vector<int> os = x.shape;
    os.back() = W - 1;
    TensorT<T> y(os);
    const int64_t rows = x.numel() / W;
    for (int64_t rix = 0; rix < rows; ++rix) {
        const T* in = x.ptr() + rix * W;
        T* out = y.ptr() + rix * (W - 1);
        for (int i = 0; i < W - 1; ++i) out[i] = in[i + 1] - in[i];
    }
    return y;
}

/// Forward difference along the second-to-last axis.
template <typename T>
TensorT<T> diff_y(const TensorT<T>& x) {
    if (x.rank() < 2) throw ShapeError("diff_y: needs rank >= 2");
    const int W = x.shape.back();
    const int H = x.shape[x.shape.size() - 2];
    if (H < 2) throw ShapeError("diff_y: needs height >= 2, got " + shape_str(x.shape));
    std::vector<int> os = x.shape;
    os[os.size() - 2] = H - 1;
    TensorT<T> y(os);
    const int64_t planes = x.numel() / (int64_t(H) * W);
    for (int64_t p = 0; p < planes; ++p) {
        const T* in = x.ptr() + p * H * W;
        T* out = y.ptr() + p * (H - 1) * W;
        for (int64_t i = 0; i < int64_t(H - 1) * W; ++i) out[i] = in[i + W] - in[i];
    }
    return y;
}

// ---------------------------------------------------------------------------
// S-Slicing: factor the per-pixel 3x4 affine application into 12 feature
// maps. For output channel c and input channel j: F[4c+j] = G[4c+j] * raw[j];
// the 4th map of each group carries the additive term through unchanged.
// ---------------------------------------------------------------------------

template <typename T>
void check_slice_args(const TensorT<T>& grid, const TensorT<T>& raw) {
    if (grid.rank() != 3 || grid.dim(0) != 12)
        throw ShapeError("s_slice: grid must be [12,H,W], got " + shape_str(grid.shape));
    if (raw.rank() != 3 || raw.dim(0) != 3)
        throw ShapeError("s_slice: image must be [3,H,W], got " + shape_str(raw.shape));
    if (grid.dim(1) != raw.dim(1) || grid.dim(2) != raw.dim(2))
        throw ShapeError("s_slice: spatial mismatch, grid " + shape_str(grid.shape) + " vs image " +
                         shape_str(raw.shape));
}

template <typename T>
TensorT<T> s_slice(const TensorT<T>& grid, const TensorT<T>& raw) {
    check_slice_args(grid, raw);
    const int64_t plane = int64_t(grid.dim(1)) * grid.dim(2);
    TensorT<T> f(grid.shape);
    for (int c = 0; c < 3; ++c) {
        for (int j = 0; j < 3; ++j) {
            const T* g = grid.ptr() + (4 * c + j) * plane;
            const T* r = raw.ptr() + j * plane;
            T* out = f.ptr() + (4 * c + j) * plane;
            for (int64_t i = 0; i < plane; ++i) out[i] = g[i] * r[i];
        }
        std::copy_n(grid.ptr() + (4 * c + 3) * plane, plane, f.ptr() + (4 * c + 3) * plane);
    }
    return f;
}

template <typename T>
TensorT<T> s_slice_grad_grid(const TensorT<T>& gf, const TensorT<T>& raw) {
    const int64_t plane = int64_t(gf.dim(1)) * gf.dim(2);
    TensorT<T> gg(gf.shape);
    for (int c = 0; c < 3; ++c) {
        for (int j = 0; j < 3; ++j) {
            const T* g = gf.ptr() + (4 * c + j) * plane;
            const T* r = raw.ptr() + j * plane;
            T* out = gg.ptr() + (4 * c + j) * plane;
            for (int64_t i = 0; i < plane; ++i) out[i] = g[i] * r[i];
        }
        std::copy_n(gf.ptr() + (4 * c + 3) * plane, plane, gg.ptr() + (4 * c + 3) * plane);
    }
    return gg;
}

// ---------------------------------------------------------------------------
// Gaussian blur (degradation model utility; not differentiated).
// ---------------------------------------------------------------------------

inline std::vector<float> gaussian_kernel(float sigma) {
    const int r = std::max(1, static_cast<int>(std::ceil(3.0f * sigma)));
    std::vector<float> k(static_cast<size_t>(2 * r + 1));
    double s = 0.0;
    for (int i = -r; i <= r; ++i) {
        double v = std::exp(-0.5 * (static_cast<double>(i) * i) / (static_cast<double>(sigma) * sigma));
        k[static_cast<size_t>(i + r)] = static_cast<float>(v);
        s += v;
    }
    for (auto& v : k) v = static_cast<float>(v / s);
    return k;
}

template <typename T>
TensorT<T> gaussian_blur(const TensorT<T>& img, float sigma) {
    if (img.rank() != 3) throw ShapeError("gaussian_blur: input must be [C,H,W]");
    if (sigma <= 0.0f) return img;
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size()) / 2;
    const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    TensorT<T> tmp(img.shape), out(img.shape);
    for (int c = 0; c < C; ++c) {
        const T* in = img.ptr() + int64_t(c) * H * W;
        T* t = tmp.ptr() + int64_t(c) * H * W;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i)
                    s += static_cast<double>(k[static_cast<size_t>(i + r)]) *
                         in[int64_t(y) * W + std::clamp(x + i, 0, W - 1)];
                t[int64_t(y) * W + x] = static_cast<T>(s);
            }
        T* o = out.ptr() + int64_t(c) * H * W;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i)
                    s += static_cast<double>(k[static_cast<size_t>(i + r)]) *
                         t[int64_t(std::clamp(y + i, 0, H - 1)) * W + x];
                o[int64_t(y) * W + x] = static_cast<T>(s);
            }
    }
    return out;
}

}  // namespace zrudc::ops
