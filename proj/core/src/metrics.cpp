#include "zrudc/metrics.hpp"

#include <cmath>
#include <vector>

#include "zrudc/parallel.hpp"

namespace zrudc {

namespace {

void check_dims(const ImageRGB& a, const ImageRGB& b, const char* what) {
    if (a.height != b.height || a.width != b.width)
        throw ShapeError(std::string(what) + ": dimension mismatch " + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height));
}

}  // namespace

float psnr(const ImageRGB& a, const ImageRGB& b) {
    check_dims(a, b, "psnr");
    double se = 0.0;
    const int64_t n = a.pixels.numel();
    for (int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
        se += d * d;
    }
    const double mse = se / static_cast<double>(n);
    if (mse == 0.0) return kPsnrCap;
    const double v = 10.0 * std::log10(1.0 / mse);
    return static_cast<float>(std::min(static_cast<double>(kPsnrCap), v));
}

float ssim(const ImageRGB& a, const ImageRGB& b) {
    check_dims(a, b, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    const int H = a.height, W = a.width;
    if (H < kWin || W < kWin)
        throw ShapeError("ssim: images smaller than the 11x11 window: " + std::to_string(W) + "x" +
                         std::to_string(H));

    // normalized 2-D Gaussian window
    double win[kWin][kWin];
    double wsum = 0.0;
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
            const double dy = i - kWin / 2, dx = j - kWin / 2;
            win[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * kSigma * kSigma));
            wsum += win[i][j];
        }
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) win[i][j] /= wsum;

    const int Ho = H - kWin + 1, Wo = W - kWin + 1;
    const int64_t plane = int64_t(H) * W;
    std::vector<double> rowmean(static_cast<size_t>(Ho), 0.0);
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const float* pa = a.pixels.ptr() + c * plane;
        const float* pb = b.pixels.ptr() + c * plane;
        parallel_for(0, Ho, [&](int64_t oy) {
            double racc = 0.0;
            for (int ox = 0; ox < Wo; ++ox) {
                double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
                for (int i = 0; i < kWin; ++i) {
                    const float* ra = pa + (oy + i) * W + ox;
                    const float* rb = pb + (oy + i) * W + ox;
                    for (int j = 0; j < kWin; ++j) {
                        const double w = win[i][j];
                        const double va = ra[j], vb = rb[j];
                        mx += w * va;
                        my += w * vb;
                        xx += w * va * va;
                        yy += w * vb * vb;
                        xy += w * va * vb;
                    }
                }
                const double sx = xx - mx * mx;
                const double sy = yy - my * my;
                const double sxy = xy - mx * my;
                const double num = (2.0 * mx * my + kC1) * (2.0 * sxy + kC2);
                const double den = (mx * mx + my * my + kC1) * (sx + sy + kC2);
                racc += num / den;
            }
            rowmean[static_cast<size_t>(oy)] = racc;
        }, 8);
        for (int oy = 0; oy < Ho; ++oy) total += rowmean[static_cast<size_t>(oy)];
    }
    return static_cast<float>(total / (3.0 * Ho * Wo));
}

}  // namespace zrudc
