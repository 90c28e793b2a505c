#pragma once

#include <optional>

#include "zrudc/gridnet.hpp"
#include "zrudc/image.hpp"

namespace zrudc {

/// Channel-wise bilinear expansion of the low-rank grid to image resolution.
template <typename T>
TensorT<T> grid_upsample(const TensorT<T>& lowrank, int H, int W) {
    if (lowrank.rank() != 3 || lowrank.dim(0) != kGridChannels)
        throw ShapeError("grid_upsample: grid must be [12,Gh,Gw], got " + shape_str(lowrank.shape));
    return ops::bilinear_resize(lowrank, H, W);
}

/// 12->3 channel decompression conv, no activation, raw (unclamped) output.
template <typename T>
TensorT<T> decompress_raw(const TensorT<T>& f, const GridNetParamsT<T>& params) {
    return ops::conv2d(f, params.find("decompress.weight"), params.find("decompress.bias"), 1, 1);
}

/// Final image: decompression conv followed by the [0,1] clamp.
inline ImageRGB decompress(const Tensor& f, const GridNetParams& params) {
    return ImageRGB::from_tensor_clamped(decompress_raw(f, params));
}

template <typename T>
struct ForwardTrace {
    VarT<T> grid;          // full-resolution-of-proxy coefficient grid T (for the smoothness loss)
    VarT<T> lowrank;       // T' after pooling
    VarT<T> out_preclamp;  // enhanced image before the clamp (losses act here)
};

/// Traced full pipeline on an in-memory [3,H,W] image tensor. The proxy is a
/// constant (no parameters act before the network), so it is computed outside
/// the tape. proxy_size stays at 256 in production; reduced test networks
/// shrink it.
template <typename T>
ForwardTrace<T> enhance_traced(TapeT<T>& tape, VarT<T> raw, const ParamVarsT<T>& pv,
                               std::optional<int> pool_kernel, int proxy_size = kProxySize) {
    const auto& rs = raw.val().shape;
    if (rs.size() != 3 || rs[0] != 3)
        throw ShapeError("enhance_traced: image must be [3,H,W], got " + shape_str(raw.val().shape));
    const int H = rs[1], W = rs[2];
    TensorT<T> proxy = ops::bilinear_resize(raw.val(), proxy_size, proxy_size);
    auto proxy_var = watch(tape, std::move(proxy));

    ForwardTrace<T> t;
    t.grid = gridnet_forward(proxy_var, pv, proxy_size);
    t.lowrank = low_rank(t.grid, pool_kernel, pv);
    auto full = bilinear_resize(t.lowrank, H, W);
    auto f = s_slice(full, raw);
    t.out_preclamp = conv2d(f, pv.find("decompress.weight"), pv.find("decompress.bias"), 1, 1);
    return t;
}

namespace detail {

/// Fused full-resolution path: expand the low-rank grid, slice against the
/// raw image and run the decompression conv in horizontal bands, so peak
/// memory stays proportional to one band rather than 12 full-size maps.
template <typename T>
TensorT<T> sliced_decompress_banded(const TensorT<T>& lowrank, const TensorT<T>& raw,
                                    const TensorT<T>& dw, const TensorT<T>& db) {
    const int H = raw.dim(1), W = raw.dim(2);
    const int Gh = lowrank.dim(1), Gw = lowrank.dim(2);
    const ops::ResizeAxis ay = ops::resize_axis(Gh, H);
    const ops::ResizeAxis ax = ops::resize_axis(Gw, W);

    TensorT<T> out({3, H, W});
    const int band = 128;
    const int nbands = (H + band - 1) / band;

    parallel_for(0, nbands, [&](int64_t bi) {
        const int r0 = static_cast<int>(bi) * band;
        const int r1 = std::min(H, r0 + band);
        const int a = std::max(0, r0 - 1);       // slab rows [a, b) of F
        const int b = std::min(H, r1 + 1);
        const int slabH = b - a;
        TensorT<T> slab({kGridChannels, slabH, W});

        // T* rows for the slab, multiplied into F on the fly
        std::vector<T> gridrow(static_cast<size_t>(W));
        for (int gy = a; gy < b; ++gy) {
            const int y0 = ay.i0[static_cast<size_t>(gy)], y1 = ay.i1[static_cast<size_t>(gy)];
            const T fy = static_cast<T>(ay.frac[static_cast<size_t>(gy)]);
            for (int ch = 0; ch < kGridChannels; ++ch) {
                const T* row0 = lowrank.ptr() + (int64_t(ch) * Gh + y0) * Gw;
                const T* row1 = lowrank.ptr() + (int64_t(ch) * Gh + y1) * Gw;
                for (int x = 0; x < W; ++x) {
                    const int x0 = ax.i0[static_cast<size_t>(x)], x1 = ax.i1[static_cast<size_t>(x)];
                    const T fx = static_cast<T>(ax.frac[static_cast<size_t>(x)]);
                    const T top = row0[x0] + fx * (row0[x1] - row0[x0]);
                    const T bot = row1[x0] + fx * (row1[x1] - row1[x0]);
                    gridrow[static_cast<size_t>(x)] = top + fy * (bot - top);
                }
                T* frow = slab.ptr() + (int64_t(ch) * slabH + (gy - a)) * W;
                const int j = ch % 4;
                if (j < 3) {
                    const T* rrow = raw.ptr() + (int64_t(j) * H + gy) * W;
                    for (int x = 0; x < W; ++x) frow[x] = gridrow[static_cast<size_t>(x)] * rrow[x];
                } else {
                    std::copy(gridrow.begin(), gridrow.end(), frow);
                }
            }
        }

        // 3x3 decompression conv over the band; zero padding applies only at
        // true image borders (the slab halo provides interior rows). The
        // accumulation structure (per-channel partial in T, cross-channel
        // combine in double) matches ops::conv2d element for element.
        std::vector<double> acc(static_cast<size_t>(W));
        std::vector<T> part(static_cast<size_t>(W));
        for (int co = 0; co < 3; ++co) {
            for (int oy = r0; oy < r1; ++oy) {
                std::fill(acc.begin(), acc.end(), static_cast<double>(db[co]));
                for (int m = 0; m < kGridChannels; ++m) {
                    std::fill(part.begin(), part.end(), T(0));
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = oy - 1 + ky;
                        if (iy < a || iy >= b) continue;  // zero padding rows
                        const T* frow = slab.ptr() + (int64_t(m) * slabH + (iy - a)) * W;
                        for (int kx = 0; kx < 3; ++kx) {
                            const T wv = dw[((co * kGridChannels + m) * 3 + ky) * 3 + kx];
                            if (wv == T(0)) continue;
                            const int lo = std::max(0, 1 - kx), hi = std::min(W, W + 1 - kx);
                            const T* src = frow - 1 + kx;
                            for (int x = lo; x < hi; ++x) part[static_cast<size_t>(x)] += wv * src[x];
                        }
                    }
                    for (int x = 0; x < W; ++x) acc[static_cast<size_t>(x)] += static_cast<double>(part[static_cast<size_t>(x)]);
                }
                T* orow = out.ptr() + (int64_t(co) * H + oy) * W;
                for (int x = 0; x < W; ++x) orow[x] = static_cast<T>(acc[static_cast<size_t>(x)]);
            }
        }
    });
    return out;
}

}  // namespace detail

/// Full pipeline before the final clamp: proxy -> grid network -> low-rank
/// pooling -> band-fused upsample + S-Slicing + decompression.
inline Tensor enhance_preclamp(const ImageRGB& raw, const GridNetParams& params,
                               std::optional<int> pool_kernel) {
    Tensor grid = grid_forward(make_proxy(raw), params);
    Tensor low = low_rank(grid, pool_kernel, params);
    grid = Tensor{};
    return detail::sliced_decompress_banded(low, raw.pixels, params.find("decompress.weight"),
                                            params.find("decompress.bias"));
}

inline ImageRGB enhance(const ImageRGB& raw, const GridNetParams& params,
                        std::optional<int> pool_kernel) {
    return ImageRGB::from_tensor_clamped(enhance_preclamp(raw, params, pool_kernel));
}

}  // namespace zrudc
