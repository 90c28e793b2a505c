// Naive scalar reference implementations used as independent oracles.
// Everything here is written directly from the operator definitions with
// plain nested loops and double arithmetic; none of it shares code with the
// library kernels it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "zrudc/rng.hpp"
#include "zrudc/tensor.hpp"

namespace oracle {

using zrudc::Rng;
using zrudc::Tensor;
using zrudc::TensorT;

template <typename T>
TensorT<T> random_tensor(Rng& rng, std::vector<int> shape, T lo = T(-1), T hi = T(1)) {
    TensorT<T> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
    return t;
}

template <typename T>
T max_abs_diff(const TensorT<T>& a, const TensorT<T>& b) {
    T m = T(0);
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Shuffled lattice of well-separated values: no two entries closer than the
/// lattice step, so small finite-difference probes cannot flip an arg-extremum.
template <typename T>
TensorT<T> separated_tensor(Rng& rng, std::vector<int> shape, T lo = T(0), T hi = T(1)) {
    TensorT<T> t(std::move(shape));
    const int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i)
        t[i] = lo + (hi - lo) * static_cast<T>(i + 1) / static_cast<T>(n + 1);
    for (int64_t i = n - 1; i > 0; --i) {
        const int64_t j = rng.uniform_int(0, static_cast<int>(i));
        std::swap(t[i], t[j]);
    }
    return t;
}

// ---- conv2d -----------------------------------------------------------------

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                  int pad) {
    const int Ci = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Co = w.dim(0), k = w.dim(2);
    const int Ho = (H + 2 * pad - k) / stride + 1;
    const int Wo = (W + 2 * pad - k) / stride + 1;
    TensorT<T> y({Co, Ho, Wo});
    for (int co = 0; co < Co; ++co)
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox) {
                double acc = static_cast<double>(b[co]);
                for (int ci = 0; ci < Ci; ++ci)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * stride - pad + ky;
                            const int ix = ox * stride - pad + kx;
                            if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                            acc += static_cast<double>(w[((co * Ci + ci) * k + ky) * k + kx]) *
                                   static_cast<double>(x[(int64_t(ci) * H + iy) * W + ix]);
                        }
                y[(int64_t(co) * Ho + oy) * Wo + ox] = static_cast<T>(acc);
            }
    return y;
}

// ---- maxpool2d (ceil mode, clipped windows) ----------------------------------

inline int pool_out(int in, int k, int s) {
    if (in <= k) return 1;
    int out = static_cast<int>(std::ceil(static_cast<double>(in - k) / s)) + 1;
    while ((out - 1) * s >= in) --out;
    return out;
}

template <typename T>
TensorT<T> maxpool2d(const TensorT<T>& x, int k, int s) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Ho = pool_out(H, k, s), Wo = pool_out(W, k, s);
    TensorT<T> y({C, Ho, Wo});
    for (int c = 0; c < C; ++c)
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox) {
                T best = -std::numeric_limits<T>::infinity();
                for (int iy = oy * s; iy < std::min(oy * s + k, H); ++iy)
                    for (int ix = ox * s; ix < std::min(ox * s + k, W); ++ix)
                        best = std::max(best, x[(int64_t(c) * H + iy) * W + ix]);
                y[(int64_t(c) * Ho + oy) * Wo + ox] = best;
            }
    return y;
}

// ---- prelu --------------------------------------------------------------------

template <typename T>
TensorT<T> prelu(const TensorT<T>& x, T slope) {
    TensorT<T> y(x.shape);
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] >= T(0) ? x[i] : slope * x[i];
    return y;
}

// ---- bilinear resize (half-pixel centers, clamped, 4-weight form) -------------

template <typename T>
TensorT<T> bilinear_resize(const TensorT<T>& x, int outH, int outW) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    TensorT<T> y({C, outH, outW});
    for (int c = 0; c < C; ++c)
        for (int oy = 0; oy < outH; ++oy)
            for (int ox = 0; ox < outW; ++ox) {
                double sy = (oy + 0.5) * static_cast<double>(H) / outH - 0.5;
                double sx = (ox + 0.5) * static_cast<double>(W) / outW - 0.5;
                sy = std::min(std::max(sy, 0.0), static_cast<double>(H - 1));
                sx = std::min(std::max(sx, 0.0), static_cast<double>(W - 1));
                const int y0 = static_cast<int>(std::floor(sy));
                const int x0 = static_cast<int>(std::floor(sx));
                const int y1 = std::min(y0 + 1, H - 1);
                const int x1 = std::min(x0 + 1, W - 1);
                const double fy = sy - y0, fx = sx - x0;
                auto at = [&](int yy, int xx) {
                    return static_cast<double>(x[(int64_t(c) * H + yy) * W + xx]);
                };
                const double v = (1 - fy) * (1 - fx) * at(y0, x0) + (1 - fy) * fx * at(y0, x1) +
                                 fy * (1 - fx) * at(y1, x0) + fy * fx * at(y1, x1);
                y[(int64_t(c) * outH + oy) * outW + ox] = static_cast<T>(v);
            }
    return y;
}

// ---- dark / bright channel (naive triple loop, edge replication) ---------------

template <typename T>
TensorT<T> dark_channel(const TensorT<T>& img, int patch) {
    const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    const int r = patch / 2;
    TensorT<T> y({H, W});
    for (int yy = 0; yy < H; ++yy)
        for (int xx = 0; xx < W; ++xx) {
            T best = std::numeric_limits<T>::infinity();
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int iy = std::clamp(yy + dy, 0, H - 1);
                    const int ix = std::clamp(xx + dx, 0, W - 1);
                    for (int c = 0; c < C; ++c)
                        best = std::min(best, img[(int64_t(c) * H + iy) * W + ix]);
                }
            y[int64_t(yy) * W + xx] = best;
        }
    return y;
}

template <typename T>
TensorT<T> bright_channel(const TensorT<T>& img, int patch) {
    const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    const int r = patch / 2;
    TensorT<T> y({H, W});
    for (int yy = 0; yy < H; ++yy)
        for (int xx = 0; xx < W; ++xx) {
            T best = -std::numeric_limits<T>::infinity();
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int iy = std::clamp(yy + dy, 0, H - 1);
                    const int ix = std::clamp(xx + dx, 0, W - 1);
                    for (int c = 0; c < C; ++c)
                        best = std::max(best, img[(int64_t(c) * H + iy) * W + ix]);
                }
            y[int64_t(yy) * W + xx] = best;
        }
    return y;
}

// ---- S-Slicing (per-pixel scalar form) -----------------------------------------

template <typename T>
TensorT<T> s_slice(const TensorT<T>& grid, const TensorT<T>& raw) {
    const int H = grid.dim(1), W = grid.dim(2);
    TensorT<T> f({12, H, W});
    for (int c = 0; c < 3; ++c)
        for (int j = 0; j < 4; ++j)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const int m = 4 * c + j;
                    const T g = grid[(int64_t(m) * H + y) * W + x];
                    f[(int64_t(m) * H + y) * W + x] =
                        j < 3 ? g * raw[(int64_t(j) * H + y) * W + x] : g;
                }
    return f;
}

/// Direct per-pixel 3x4 affine application y_c = sum_j A[c,j] x_j + A[c,3].
template <typename T>
TensorT<T> affine_apply(const TensorT<T>& grid, const TensorT<T>& raw) {
    const int H = grid.dim(1), W = grid.dim(2);
    TensorT<T> out({3, H, W});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = static_cast<double>(grid[(int64_t(4 * c + 3) * H + y) * W + x]);
                for (int j = 0; j < 3; ++j)
                    acc += static_cast<double>(grid[(int64_t(4 * c + j) * H + y) * W + x]) *
                           static_cast<double>(raw[(int64_t(j) * H + y) * W + x]);
                out[(int64_t(c) * H + y) * W + x] = static_cast<T>(acc);
            }
    return out;
}

// ---- region means and loss formulas ---------------------------------------------

template <typename T>
std::vector<std::vector<double>> region_mean_lum(const TensorT<T>& img, int region) {
    const int H = img.dim(1), W = img.dim(2);
    const int Rh = H / region, Rw = W / region;
    std::vector<std::vector<double>> out(static_cast<size_t>(Rh),
                                         std::vector<double>(static_cast<size_t>(Rw), 0.0));
    for (int by = 0; by < Rh; ++by)
        for (int bx = 0; bx < Rw; ++bx) {
            double s = 0.0;
            for (int y = by * region; y < (by + 1) * region; ++y)
                for (int x = bx * region; x < (bx + 1) * region; ++x) {
                    double lum = 0.0;
                    for (int c = 0; c < 3; ++c) lum += static_cast<double>(img[(int64_t(c) * H + y) * W + x]);
                    s += lum / 3.0;
                }
            out[static_cast<size_t>(by)][static_cast<size_t>(bx)] = s / (static_cast<double>(region) * region);
        }
    return out;
}

/// Spatial consistency: (1/P) sum_i sum_{j in 4-neighborhood}
/// (|O_i - O_j| - |I_i - I_j|)^2 over region-mean luminances.
template <typename T>
double loss_spa(const TensorT<T>& out, const TensorT<T>& inp, int region) {
    const auto O = region_mean_lum(out, region);
    const auto I = region_mean_lum(inp, region);
    const int Rh = static_cast<int>(O.size()), Rw = static_cast<int>(O[0].size());
    const int dy[] = {-1, 1, 0, 0}, dx[] = {0, 0, -1, 1};
    double acc = 0.0;
    for (int y = 0; y < Rh; ++y)
        for (int x = 0; x < Rw; ++x)
            for (int d = 0; d < 4; ++d) {
                const int ny = y + dy[d], nx = x + dx[d];
                if (ny < 0 || ny >= Rh || nx < 0 || nx >= Rw) continue;
                const double od = std::abs(O[static_cast<size_t>(y)][static_cast<size_t>(x)] -
                                           O[static_cast<size_t>(ny)][static_cast<size_t>(nx)]);
                const double id = std::abs(I[static_cast<size_t>(y)][static_cast<size_t>(x)] -
                                           I[static_cast<size_t>(ny)][static_cast<size_t>(nx)]);
                acc += (od - id) * (od - id);
            }
    return acc / (static_cast<double>(Rh) * Rw);
}

/// Exposure control: (1/M) sum |Y_k - E|.
template <typename T>
double loss_exp(const TensorT<T>& out, int region, double target) {
    const auto Y = region_mean_lum(out, region);
    double acc = 0.0;
    int count = 0;
    for (const auto& row : Y)
        for (double v : row) {
            acc += std::abs(v - target);
            ++count;
        }
    return acc / count;
}

/// Color constancy: sum over channel pairs of squared mean differences.
template <typename T>
double loss_cc(const TensorT<T>& out) {
    const int64_t plane = out.numel() / 3;
    double m[3] = {0, 0, 0};
    for (int c = 0; c < 3; ++c) {
        for (int64_t i = 0; i < plane; ++i) m[c] += static_cast<double>(out[c * plane + i]);
        m[c] /= static_cast<double>(plane);
    }
    return (m[0] - m[1]) * (m[0] - m[1]) + (m[0] - m[2]) * (m[0] - m[2]) +
           (m[1] - m[2]) * (m[1] - m[2]);
}

/// Grid smoothness: (1/N) sum over maps of (mean|dx| + mean|dy|)^2.
template <typename T>
double loss_tv(const TensorT<T>& grid) {
    const int N = grid.dim(0), H = grid.dim(1), W = grid.dim(2);
    double acc = 0.0;
    for (int n = 0; n < N; ++n) {
        double mx = 0.0, my = 0.0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x + 1 < W; ++x)
                mx += std::abs(static_cast<double>(grid[(int64_t(n) * H + y) * W + x + 1]) -
                               static_cast<double>(grid[(int64_t(n) * H + y) * W + x]));
        for (int y = 0; y + 1 < H; ++y)
            for (int x = 0; x < W; ++x)
                my += std::abs(static_cast<double>(grid[(int64_t(n) * H + y + 1) * W + x]) -
                               static_cast<double>(grid[(int64_t(n) * H + y) * W + x]));
        mx /= static_cast<double>(H) * (W - 1);
        my /= static_cast<double>(H - 1) * W;
        acc += (mx + my) * (mx + my);
    }
    return acc / N;
}

template <typename T>
double loss_dcp(const TensorT<T>& out, int patch) {
    const auto d = dark_channel(out, patch);
    double acc = 0.0;
    for (int64_t i = 0; i < d.numel(); ++i) acc += std::abs(static_cast<double>(d[i]));
    return acc / static_cast<double>(d.numel());
}

template <typename T>
double loss_dbc(const TensorT<T>& out, int patch) {
    const auto d = dark_channel(out, patch);
    const auto b = bright_channel(out, patch);
    double acc = 0.0;
    for (int64_t i = 0; i < d.numel(); ++i)
        acc += std::abs(static_cast<double>(d[i])) + std::abs(1.0 - static_cast<double>(b[i]));
    return acc / static_cast<double>(d.numel());
}

// ---- central finite differences ---------------------------------------------------

struct GradCheckStats {
    int total = 0;
    int ok = 0;
    double max_rel = 0.0;

    double frac_ok() const { return total == 0 ? 1.0 : static_cast<double>(ok) / total; }
};

/// Central finite differences with step h against an analytic gradient; an
/// element passes when the relative error (floored against tiny values) is
/// below `tol`.
inline GradCheckStats grad_check(TensorT<double>& param, const TensorT<double>& analytic,
                                 const std::function<double()>& eval, double h = 1e-3,
                                 double tol = 1e-4) {
    GradCheckStats st;
    for (int64_t i = 0; i < param.numel(); ++i) {
        const double keep = param[i];
        param[i] = keep + h;
        const double up = eval();
        param[i] = keep - h;
        const double dn = eval();
        param[i] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double an = analytic[i];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        const double rel = std::abs(fd - an) / denom;
        ++st.total;
        if (rel < tol) ++st.ok;
        st.max_rel = std::max(st.max_rel, rel);
    }
    return st;
}

}  // namespace oracle
