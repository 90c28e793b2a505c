#pragma once

#include "zrudc/image.hpp"

namespace zrudc {

/// Peak signal-to-noise ratio in dB against peak 1.0, capped at 99.0
/// (identical images report the cap).
float psnr(const ImageRGB& a, const ImageRGB& b);

inline constexpr float kPsnrCap = 99.0f;

/// Mean structural similarity with the canonical 11x11 Gaussian window
/// (sigma 1.5) and stabilizers C1 = 0.01^2, C2 = 0.03^2, averaged over
/// channels. Images must be at least the window size.
float ssim(const ImageRGB& a, const ImageRGB& b);

}  // namespace zrudc
