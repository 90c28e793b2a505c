#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zrudc/autodiff.hpp"
#include "zrudc/image.hpp"
#include "zrudc/rng.hpp"

namespace zrudc {

inline constexpr int kGridChannels = 12;

/// Grid-network topology. Three encoder levels at base, 2*base and 4*base
/// channels (two 3x3 convs + PReLU each, 2x maxpool between), a mirrored
/// decoder with bilinear upsampling and skip concatenation, and a 1x1 head
/// conv producing the 12 affine coefficient channels with no activation.
///
/// proxy_size is the spatial contract of the network input; the production
/// pipeline always runs at 256 (kProxySize). Smaller instances exist for the
/// reduced networks the gradient-check tests use.
struct GridNetConfig {
    int base_channels = 16;
    int proxy_size = 256;
};

template <typename T>
struct NamedTensorT {
    std::string name;
    TensorT<T> tensor;
};

/// All learnable state: encoder/decoder convs, head conv, the single shared
/// PReLU slope, and the channel-decompression conv consumed by the slicing
/// stage. Tensor order is fixed; checkpoints serialize it by name.
template <typename T>
struct GridNetParamsT {
    std::vector<NamedTensorT<T>> tensors;

    TensorT<T>& find(const std::string& name) {
        for (auto& nt : tensors)
            if (nt.name == name) return nt.tensor;
        throw Error("GridNetParams: no tensor named '" + name + "'");
    }
    const TensorT<T>& find(const std::string& name) const {
        return const_cast<GridNetParamsT*>(this)->find(name);
    }
    bool has(const std::string& name) const {
        for (auto& nt : tensors)
            if (nt.name == name) return true;
        return false;
    }

    int base_channels() const { return find("enc1.conv1.weight").dim(0); }

    bool all_finite() const {
        for (auto& nt : tensors)
            if (!nt.tensor.all_finite()) return false;
        return true;
    }
};

using GridNetParams = GridNetParamsT<float>;

/// Decompression weights that reduce S-Slicing to the plain additive affine:
/// output channel c takes the center tap of its own four maps {4c..4c+3}.
template <typename T>
TensorT<T> group_sum_decompress_weight() {
    TensorT<T> w({3, kGridChannels, 3, 3}, T(0));
    for (int c = 0; c < 3; ++c)
        for (int j = 0; j < 4; ++j)
            w[((c * kGridChannels + 4 * c + j) * 3 + 1) * 3 + 1] = T(1);
    return w;
}

/// 12-channel bias pattern that makes every grid cell the identity affine.
template <typename T>
TensorT<T> identity_grid_bias() {
    TensorT<T> b({kGridChannels}, T(0));
    for (int c = 0; c < 3; ++c) b[4 * c + c] = T(1);
    return b;
}

namespace detail {

template <typename T>
void push_conv(GridNetParamsT<T>& p, Rng& rng, const std::string& prefix, int co, int ci, int k) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(ci) * k * k);
    TensorT<T> w({co, ci, k, k});
    for (auto& v : w.data) v = static_cast<T>(rng.uniform(-bound, bound));
    TensorT<T> b({co});
    for (auto& v : b.data) v = static_cast<T>(rng.uniform(-bound, bound));
    p.tensors.push_back({prefix + ".weight", std::move(w)});
    p.tensors.push_back({prefix + ".bias", std::move(b)});
}

}  // namespace detail

/// Fan-in uniform init for the trunk. The head conv starts at exactly zero
/// weight with the identity-affine bias, and the decompression conv starts as
/// the group-sum pattern, so a fresh network reproduces its input.
template <typename T>
GridNetParamsT<T> init_gridnet_params(const GridNetConfig& cfg, uint64_t seed) {
    if (cfg.base_channels < 1) throw ConfigError("GridNetConfig: base_channels must be >= 1");
    const int c1 = cfg.base_channels, c2 = 2 * c1, c3 = 4 * c1;
    Rng rng(seed);
    GridNetParamsT<T> p;
    detail::push_conv(p, rng, "enc1.conv1", c1, 3, 3);
    detail::push_conv(p, rng, "enc1.conv2", c1, c1, 3);
    detail::push_conv(p, rng, "enc2.conv1", c2, c1, 3);
    detail::push_conv(p, rng, "enc2.conv2", c2, c2, 3);
    detail::push_conv(p, rng, "enc3.conv1", c3, c2, 3);
    detail::push_conv(p, rng, "enc3.conv2", c3, c3, 3);
    detail::push_conv(p, rng, "dec2.conv1", c2, c3 + c2, 3);
    detail::push_conv(p, rng, "dec2.conv2", c2, c2, 3);
    detail::push_conv(p, rng, "dec1.conv1", c1, c2 + c1, 3);
    detail::push_conv(p, rng, "dec1.conv2", c1, c1, 3);
    p.tensors.push_back({"head.weight", TensorT<T>({kGridChannels, c1, 1, 1}, T(0))});
    p.tensors.push_back({"head.bias", identity_grid_bias<T>()});
    p.tensors.push_back({"prelu.slope", TensorT<T>::scalar(T(0.25))});
    p.tensors.push_back({"decompress.weight", group_sum_decompress_weight<T>()});
    p.tensors.push_back({"decompress.bias", TensorT<T>({3}, T(0))});
    return p;
}

template <typename U, typename T>
GridNetParamsT<U> cast_params(const GridNetParamsT<T>& p) {
    GridNetParamsT<U> out;
    out.tensors.reserve(p.tensors.size());
    for (const auto& nt : p.tensors) {
        TensorT<U> t(nt.tensor.shape);
        for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<U>(nt.tensor[i]);
        out.tensors.push_back({nt.name, std::move(t)});
    }
    return out;
}

/// Parameter leaves on a tape, in the same order as GridNetParams.tensors.
template <typename T>
struct ParamVarsT {
    std::vector<std::string> names;
    std::vector<VarT<T>> vars;

    VarT<T> find(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return vars[i];
        throw Error("ParamVars: no tensor named '" + name + "'");
    }
};

template <typename T>
ParamVarsT<T> watch_params(TapeT<T>& tape, const GridNetParamsT<T>& params, bool requires_grad) {
    ParamVarsT<T> pv;
    pv.names.reserve(params.tensors.size());
    pv.vars.reserve(params.tensors.size());
    for (const auto& nt : params.tensors) {
        pv.names.push_back(nt.name);
        pv.vars.push_back(watch(tape, nt.tensor, requires_grad));
    }
    return pv;
}

namespace detail {

template <typename T>
VarT<T> conv_block(VarT<T> x, const ParamVarsT<T>& pv, const std::string& prefix, VarT<T> slope) {
    auto a = conv2d(x, pv.find(prefix + ".conv1.weight"), pv.find(prefix + ".conv1.bias"), 1, 1);
    a = prelu(a, slope);
    auto b = conv2d(a, pv.find(prefix + ".conv2.weight"), pv.find(prefix + ".conv2.bias"), 1, 1);
    return prelu(b, slope);
}

}  // namespace detail

/// Traced encoder-decoder forward: proxy [3,S,S] -> coefficient grid
/// [12,S,S]. S is 256 in the production pipeline.
template <typename T>
VarT<T> gridnet_forward(VarT<T> proxy, const ParamVarsT<T>& pv, int proxy_size = kProxySize) {
    const auto& s = proxy.val().shape;
    if (s != std::vector<int>{3, proxy_size, proxy_size})
        throw ShapeError("gridnet_forward: proxy must be [3," + std::to_string(proxy_size) + "," +
                         std::to_string(proxy_size) + "], got " + shape_str(s));
    auto slope = pv.find("prelu.slope");

    auto e1 = detail::conv_block(proxy, pv, "enc1", slope);
    auto p1 = maxpool2d(e1, 2, 2);
    auto e2 = detail::conv_block(p1, pv, "enc2", slope);
    auto p2 = maxpool2d(e2, 2, 2);
    auto e3 = detail::conv_block(p2, pv, "enc3", slope);

    auto u2 = bilinear_resize(e3, e2.val().dim(1), e2.val().dim(2));
    auto d2 = detail::conv_block(concat_channels(u2, e2), pv, "dec2", slope);
    auto u1 = bilinear_resize(d2, e1.val().dim(1), e1.val().dim(2));
    auto d1 = detail::conv_block(concat_channels(u1, e1), pv, "dec1", slope);

    return conv2d(d1, pv.find("head.weight"), pv.find("head.bias"), 1, 0);
}

/// Low-rank reduction: T' = PReLU(MaxPool_k(T)) with stride = kernel
/// (non-overlapping windows). No kernel means PReLU only, size unchanged.
template <typename T>
VarT<T> low_rank(VarT<T> grid, std::optional<int> kernel, const ParamVarsT<T>& pv) {
    if (kernel && *kernel <= 0)
        throw ConfigError("low_rank: kernel must be positive, got " + std::to_string(*kernel));
    auto slope = pv.find("prelu.slope");
    if (!kernel) return prelu(grid, slope);
    return prelu(maxpool2d(grid, *kernel, *kernel), slope);
}

/// Untraced convenience wrappers (inference path).
template <typename T>
TensorT<T> grid_forward(const TensorT<T>& proxy, const GridNetParamsT<T>& params,
                        int proxy_size = kProxySize) {
    TapeT<T> tape;
    auto pv = watch_params(tape, params, false);
    return gridnet_forward(watch(tape, proxy), pv, proxy_size).val();
}

template <typename T>
TensorT<T> low_rank(const TensorT<T>& grid, std::optional<int> kernel,
                    const GridNetParamsT<T>& params) {
    TapeT<T> tape;
    auto pv = watch_params(tape, params, false);
    return low_rank(watch(tape, grid), kernel, pv).val();
}

}  // namespace zrudc
