#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "synth.hpp"
#include "zrudc/classical.hpp"
#include "zrudc/ops.hpp"

using namespace zrudc;
using oracle::max_abs_diff;

namespace {

/// Image with an exactly zero dark channel: at each pixel one channel is 0.
ImageRGB zero_dark_image(Rng& rng, int h, int w) {
    Tensor t({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int dead = (x + y) % 3;
            for (int c = 0; c < 3; ++c)
                t.at3(c, y, x) = c == dead ? 0.0f : rng.uniform_f(0.3f, 1.0f);
        }
    return ImageRGB::from_tensor(std::move(t));
}

double mean_dark(const ImageRGB& img, int patch) {
    return static_cast<double>(ops::mean(ops::dark_channel(img.pixels, patch)));
}

}  // namespace

TEST_CASE("estimate_airlight: ties, degenerate quantile, planted airlight") {
    DehazeConfig cfg;
    cfg.window = 15;

    ImageRGB c;
    c.height = 32;
    c.width = 32;
    c.pixels = Tensor({3, 32, 32}, 0.4f);
    const auto a = estimate_airlight(c, cfg);
    for (float v : a) CHECK(v == doctest::Approx(0.4f));

    // quantile 1.0 -> plain channel means
    Rng rng(1);
    ImageRGB img = synth::random_image(rng, 24, 24);
    DehazeConfig all = cfg;
    all.airlight_quantile = 1.0f;
    const auto means = estimate_airlight(img, all);
    const Tensor want = ops::mean_per_channel(img.pixels);
    for (int ch = 0; ch < 3; ++ch) CHECK(means[static_cast<size_t>(ch)] == doctest::Approx(want[ch]).epsilon(1e-5));

    // planted airlight with a strongly hazed region
    for (int trial = 0; trial < 5; ++trial) {
        ImageRGB clean = synth::clean_image(rng, 128, 128);
        ImageRGB hazy = synth::plant_haze(clean, rng, 0.05f, 0.8f, {0.9f, 0.9f, 0.9f});
        const auto est = estimate_airlight(hazy, cfg);
        for (float v : est) CHECK(v == doctest::Approx(0.9f).epsilon(0.06));
    }
}

TEST_CASE("dehaze: haze-free input with omega = 1 passes through") {
    Rng rng(2);
    ImageRGB img = zero_dark_image(rng, 48, 48);
    DehazeConfig cfg;
    cfg.window = 9;
    cfg.omega = 1.0f;
    ImageRGB out = dehaze(img, cfg);
    CHECK(max_abs_diff(out.pixels, img.pixels) <= 1e-6f);
}

TEST_CASE("dehaze: inverts the planted constant-transmission haze model") {
    Rng rng(3);
    ImageRGB j = zero_dark_image(rng, 48, 48);
    const std::array<float, 3> a{0.9f, 0.9f, 0.9f};

    // I = 0.5 J + 0.5 A
    Tensor hazy_px({3, 48, 48});
    for (int c = 0; c < 3; ++c)
        for (int64_t i = 0; i < 48 * 48; ++i)
            hazy_px[c * 48 * 48 + i] =
                0.5f * j.pixels[c * 48 * 48 + i] + 0.5f * a[static_cast<size_t>(c)];
    ImageRGB hazy = ImageRGB::from_tensor(hazy_px);

    DehazeConfig cfg;
    cfg.window = 9;
    cfg.omega = 1.0f;
    cfg.t_floor = 0.05f;
    ImageRGB rec = dehaze(hazy, cfg, a);  // planted airlight is known here

    double acc = 0.0;
    for (int64_t i = 0; i < rec.pixels.numel(); ++i)
        acc += std::abs(static_cast<double>(rec.pixels[i]) - j.pixels[i]);
    CHECK(acc / static_cast<double>(rec.pixels.numel()) <= 2.0 / 255.0);
}

TEST_CASE("dehaze: output stays in range on adversarial inputs") {
    Rng rng(4);
    DehazeConfig cfg;
    cfg.window = 5;
    for (int trial = 0; trial < 5; ++trial) {
        ImageRGB img = synth::random_image(rng, 16, 16);
        ImageRGB out = dehaze(img, cfg);
        for (float v : out.pixels.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("dehaze: does not increase the mean dark channel on hazy synthetics") {
    Rng rng(5);
    DehazeConfig cfg;
    cfg.window = 15;
    for (int trial = 0; trial < 8; ++trial) {
        ImageRGB clean = synth::clean_image(rng, 64, 64);
        ImageRGB hazy = synth::plant_haze(clean, rng, 0.4f, 0.8f, {0.9f, 0.9f, 0.9f});
        ImageRGB out = dehaze(hazy, cfg);
        CHECK(mean_dark(out, cfg.window) <= mean_dark(hazy, cfg.window) + 1e-6);
    }
}

TEST_CASE("gamma_correct: definitional values and error") {
    ImageRGB img;
    img.height = 8;
    img.width = 8;
    img.pixels = Tensor({3, 8, 8}, 0.25f);
    img.pixels.at3(0, 0, 0) = 0.0f;
    img.pixels.at3(1, 0, 0) = 1.0f;

    ImageRGB out = gamma_correct(img, 0.5f);
    CHECK(out.pixels.at3(2, 3, 3) == doctest::Approx(0.5f));
    CHECK(out.pixels.at3(0, 0, 0) == 0.0f);   // endpoints are fixed points
    CHECK(out.pixels.at3(1, 0, 0) == 1.0f);

    ImageRGB ident = gamma_correct(img, 1.0f);
    CHECK(max_abs_diff(ident.pixels, img.pixels) == 0.0f);

    CHECK_THROWS_AS(gamma_correct(img, 0.0f), ConfigError);
    CHECK_THROWS_AS(gamma_correct(img, -0.5f), ConfigError);
}

TEST_CASE("baseline pipeline is deterministic") {
    Rng rng(6);
    ImageRGB clean = synth::clean_image(rng, 48, 48);
    ImageRGB hazy = synth::plant_haze(clean, rng, 0.5f, 0.8f, {0.9f, 0.9f, 0.9f});
    DehazeConfig cfg;
    cfg.window = 15;
    ImageRGB a = dcp_gamma_baseline(hazy, cfg);
    ImageRGB b = dcp_gamma_baseline(hazy, cfg);
    CHECK(max_abs_diff(a.pixels, b.pixels) == 0.0f);
}

TEST_CASE("config validation") {
    DehazeConfig bad;
    bad.window = 4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    DehazeConfig bad2;
    bad2.omega = 0.0f;
    CHECK_THROWS_AS(bad2.validate(), ConfigError);
    DehazeConfig bad3;
    bad3.t_floor = 1.0f;
    CHECK_THROWS_AS(bad3.validate(), ConfigError);
}
