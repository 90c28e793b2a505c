#include "zrudc/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "zrudc/ops.hpp"

namespace zrudc {

std::array<float, 3> estimate_airlight(const ImageRGB& img, const DehazeConfig& cfg) {
    cfg.validate();
    const Tensor dc = ops::dark_channel(img.pixels, cfg.window);
    const int64_t n = dc.numel();

    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&dc](int64_t a, int64_t b) {
        if (dc[a] != dc[b]) return dc[a] > dc[b];
        return a < b;
    });

    const int64_t take = std::max<int64_t>(
        1, static_cast<int64_t>(std::llround(static_cast<double>(cfg.airlight_quantile) * n)));
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    for (int64_t i = 0; i < take; ++i)
        for (int c = 0; c < 3; ++c) acc[static_cast<size_t>(c)] += img.pixels[c * n + order[static_cast<size_t>(i)]];
    return {static_cast<float>(acc[0] / take), static_cast<float>(acc[1] / take),
            static_cast<float>(acc[2] / take)};
}

ImageRGB dehaze(const ImageRGB& img, const DehazeConfig& cfg,
                std::optional<std::array<float, 3>> known_airlight) {
    cfg.validate();
    const auto airlight = known_airlight ? *known_airlight : estimate_airlight(img, cfg);
    const int H = img.height, W = img.width;
    const int64_t plane = int64_t(H) * W;

    Tensor normalized({3, H, W});
    std::array<float, 3> a;
    for (int c = 0; c < 3; ++c) {
        a[static_cast<size_t>(c)] = std::max(1e-3f, airlight[static_cast<size_t>(c)]);
        const float inv = 1.0f / a[static_cast<size_t>(c)];
        for (int64_t i = 0; i < plane; ++i) normalized[c * plane + i] = img.pixels[c * plane + i] * inv;
    }
    const Tensor dc = ops::dark_channel(normalized, cfg.window);

    Tensor out({3, H, W});
    for (int64_t i = 0; i < plane; ++i) {
        const float t = std::max(cfg.t_floor, 1.0f - cfg.omega * dc[i]);
        for (int c = 0; c < 3; ++c) {
            const float ac = a[static_cast<size_t>(c)];
            const float j = (img.pixels[c * plane + i] - ac) / t + ac;
            out[c * plane + i] = std::min(1.0f, std::max(0.0f, j));
        }
    }
    ImageRGB res;
    res.height = H;
    res.width = W;
    res.pixels = std::move(out);
    return res;
}

ImageRGB gamma_correct(const ImageRGB& img, float gamma) {
    if (!(gamma > 0.0f)) throw ConfigError("gamma_correct: gamma must be > 0");
    ImageRGB out;
    out.height = img.height;
    out.width = img.width;
    out.pixels = Tensor(img.pixels.shape);
    for (int64_t i = 0; i < img.pixels.numel(); ++i)
        out.pixels[i] = std::pow(img.pixels[i], gamma);
    return out;
}

ImageRGB dcp_gamma_baseline(const ImageRGB& img, const DehazeConfig& cfg) {
    return gamma_correct(dehaze(img, cfg), cfg.gamma);
}

}  // namespace zrudc
