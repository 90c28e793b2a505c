#pragma once

#include <array>
#include <optional>

#include "zrudc/image.hpp"

namespace zrudc {

/// Dark-channel-prior dehazing plus gamma correction: the deterministic
/// reference pipeline behind the `baseline` subcommand.
struct DehazeConfig {
    int window = 45;                    // dark-channel window (odd)
    float omega = 0.95f;                // haze retention factor
    float t_floor = 0.1f;               // minimum transmission
    float airlight_quantile = 0.001f;   // fraction of pixels used for airlight
    float gamma = 0.7f;

    void validate() const {
        if (window < 1 || window % 2 == 0)
            throw ConfigError("DehazeConfig: window must be odd and >= 1");
        if (!(omega > 0.0f && omega <= 1.0f)) throw ConfigError("DehazeConfig: omega must be in (0,1]");
        if (!(t_floor > 0.0f && t_floor < 1.0f))
            throw ConfigError("DehazeConfig: t_floor must be in (0,1)");
        if (!(airlight_quantile > 0.0f && airlight_quantile <= 1.0f))
            throw ConfigError("DehazeConfig: airlight_quantile must be in (0,1]");
        if (!(gamma > 0.0f)) throw ConfigError("DehazeConfig: gamma must be > 0");
    }
};

/// Mean color of the brightest airlight_quantile fraction of pixels, ranked
/// by dark channel value (ties broken by pixel index for determinism).
std::array<float, 3> estimate_airlight(const ImageRGB& img, const DehazeConfig& cfg);

/// t(x) = max(t_floor, 1 - omega * dark(I/A)); J = (I - A)/t + A, clamped.
/// The airlight is estimated from the image unless a known value is given.
ImageRGB dehaze(const ImageRGB& img, const DehazeConfig& cfg,
                std::optional<std::array<float, 3>> known_airlight = std::nullopt);

/// Per-channel power law v -> v^gamma.
ImageRGB gamma_correct(const ImageRGB& img, float gamma);

/// The full empirical pipeline: dehaze then gamma-correct.
ImageRGB dcp_gamma_baseline(const ImageRGB& img, const DehazeConfig& cfg);

}  // namespace zrudc
