#pragma once

#include "zrudc/autodiff.hpp"

namespace zrudc {

/// Weights and geometry for the non-reference objective: the dark-channel
/// prior, the local-enhancement group (spatial consistency, exposure, color
/// constancy, grid smoothness) and the dark/bright sparsity term. Everything
/// is configurable; the defaults are the trained configuration.
template <typename T>
struct LossWeightsT {
    T w_dcp = T(0.8);
    T w_lle = T(0.1);
    T w_dbc = T(0.1);
    // sub-weights of the local-enhancement group
    T w_spa = T(1);
    T w_exp = T(1);
    T w_cc = T(0.5);
    T w_tv = T(20);
    T exposure_target = T(0.6);
    int spa_region = 8;
    int exp_region = 16;
    int dcp_patch = 15;
    int dbc_patch = 5;

    void validate() const {
        if (w_dcp < T(0) || w_lle < T(0) || w_dbc < T(0) || w_spa < T(0) || w_exp < T(0) ||
            w_cc < T(0) || w_tv < T(0))
            throw ConfigError("LossWeights: weights must be >= 0");
        if (!(exposure_target > T(0) && exposure_target < T(1)))
            throw ConfigError("LossWeights: exposure target must lie in (0,1)");
        if (spa_region < 1 || exp_region < 1 || dcp_patch < 1 || dbc_patch < 1)
            throw ConfigError("LossWeights: region/patch sizes must be >= 1");
    }
};

using LossWeights = LossWeightsT<float>;

struct LossReport {
    float dcp = 0, spa = 0, exp = 0, cc = 0, tv = 0, dbc = 0;
    float total = 0;
};

/// Recomputes the weighted total from report fields with the same operation
/// order the traced objective uses. The volatile intermediates force each
/// product to round separately (no FMA contraction), keeping the identity
/// bitwise.
inline float recompute_total(const LossReport& r, const LossWeights& w) {
    volatile float p_spa = w.w_spa * r.spa;
    volatile float p_exp = w.w_exp * r.exp;
    volatile float p_cc = w.w_cc * r.cc;
    volatile float p_tv = w.w_tv * r.tv;
    volatile float lle = ((p_spa + p_exp) + p_cc) + p_tv;
    volatile float t_dcp = w.w_dcp * r.dcp;
    volatile float t_lle = w.w_lle * lle;
    volatile float t_dbc = w.w_dbc * r.dbc;
    return (t_dcp + t_lle) + t_dbc;
}

/// L1 dark-channel energy on the (pre-clamp) enhanced image.
template <typename T>
VarT<T> loss_dcp(VarT<T> out, const LossWeightsT<T>& cfg) {
    return mean(abs(dark_channel(out, cfg.dcp_patch)));
}

/// Spatial consistency: region-mean luminance differences toward the four
/// neighbors must match those of the input. Each adjacent region pair inside
/// the map contributes once per direction; normalization is by region count.
template <typename T>
VarT<T> loss_spa(VarT<T> out, VarT<T> inp, const LossWeightsT<T>& cfg) {
    check_same_shape(out.val(), inp.val(), "loss_spa");
    auto ro = region_mean(mean_channels(out), cfg.spa_region);
    auto ri = region_mean(mean_channels(inp), cfg.spa_region);
    const auto& rs = ro.val().shape;
    const T regions = static_cast<T>(int64_t(rs[0]) * rs[1]);

    auto horiz = sub(abs(diff_x(ro)), abs(diff_x(ri)));
    auto vert = sub(abs(diff_y(ro)), abs(diff_y(ri)));
    auto s = add(sum(mul(horiz, horiz)), sum(mul(vert, vert)));
    return mul_scalar(s, T(2) / regions);
}

/// Exposure control: mean |region luminance - target| over non-overlapping
/// regions.
template <typename T>
VarT<T> loss_exp(VarT<T> out, const LossWeightsT<T>& cfg) {
    auto rm = region_mean(mean_channels(out), cfg.exp_region);
    return mean(abs(add_scalar(rm, -cfg.exposure_target)));
}

/// Color constancy: squared pairwise differences of the channel means.
template <typename T>
VarT<T> loss_cc(VarT<T> out) {
    auto m = mean_per_channel(out);
    auto r = index(m, 0), g = index(m, 1), b = index(m, 2);
    auto rg = sub(r, g), rb = sub(r, b), gb = sub(g, b);
    return add(add(mul(rg, rg), mul(rb, rb)), mul(gb, gb));
}

/// Smoothness of the coefficient grid: per map, (mean |dx| + mean |dy|)^2,
/// averaged over the 12 maps.
template <typename T>
VarT<T> loss_tv(VarT<T> grid) {
    auto mx = mean_per_channel(abs(diff_x(grid)));
    auto my = mean_per_channel(abs(diff_y(grid)));
    auto s = add(mx, my);
    return mean(mul(s, s));
}

/// Sparsity of the dark channel plus closeness of the bright channel to 1.
template <typename T>
VarT<T> loss_dbc(VarT<T> out, const LossWeightsT<T>& cfg) {
    auto d = dark_channel(out, cfg.dbc_patch);
    auto b = bright_channel(out, cfg.dbc_patch);
    return add(mean(abs(d)), mean(abs(rsub_scalar(b, T(1)))));
}

template <typename T>
struct LossTermsT {
    VarT<T> dcp, spa, exp, cc, tv, dbc;
    VarT<T> total;

    LossReport report() const {
        LossReport r;
        r.dcp = static_cast<float>(dcp.scalar());
        r.spa = static_cast<float>(spa.scalar());
        r.exp = static_cast<float>(exp.scalar());
        r.cc = static_cast<float>(cc.scalar());
        r.tv = static_cast<float>(tv.scalar());
        r.dbc = static_cast<float>(dbc.scalar());
        r.total = static_cast<float>(total.scalar());
        return r;
    }
};

using LossTerms = LossTermsT<float>;

/// Weighted objective over all six terms. `out` is the pre-clamp enhanced
/// image, `inp` the network input, `grid` the coefficient grid T before
/// pooling.
template <typename T>
LossTermsT<T> loss_total(VarT<T> out, VarT<T> inp, VarT<T> grid, const LossWeightsT<T>& cfg) {
    cfg.validate();
    LossTermsT<T> t;
    t.dcp = loss_dcp(out, cfg);
    t.spa = loss_spa(out, inp, cfg);
    t.exp = loss_exp(out, cfg);
    t.cc = loss_cc(out);
    t.tv = loss_tv(grid);
    t.dbc = loss_dbc(out, cfg);
    auto lle = add(add(add(mul_scalar(t.spa, cfg.w_spa), mul_scalar(t.exp, cfg.w_exp)),
                       mul_scalar(t.cc, cfg.w_cc)),
                   mul_scalar(t.tv, cfg.w_tv));
    t.total = add(add(mul_scalar(t.dcp, cfg.w_dcp), mul_scalar(lle, cfg.w_lle)),
                  mul_scalar(t.dbc, cfg.w_dbc));
    return t;
}

/// Plain evaluation (no gradients) for reporting and tests.
inline LossReport eval_losses(const Tensor& out, const Tensor& inp, const Tensor& grid,
                              const LossWeights& cfg) {
    Tape tape;
    auto terms = loss_total(watch(tape, out), watch(tape, inp), watch(tape, grid), cfg);
    return terms.report();
}

}  // namespace zrudc
