#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "oracles.hpp"
#include "tmpdir.hpp"
#include "zrudc/image.hpp"
#include "zrudc/ops.hpp"
#include "zrudc/rng.hpp"

using namespace zrudc;
using testutil::TmpDir;

namespace {

ImageRGB make_image(int h, int w, uint64_t seed) {
    Rng rng(seed);
    Tensor t({3, h, w});
    for (auto& v : t.data) v = rng.uniform_f();
    return ImageRGB::from_tensor(std::move(t));
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("quantization endpoints and rounding") {
    TmpDir tmp("imgio");
    ImageRGB img;
    img.height = 8;
    img.width = 8;
    img.pixels = Tensor({3, 8, 8}, 0.0f);
    img.pixels.at3(0, 0, 0) = 1.0f;    // -> 255
    img.pixels.at3(1, 0, 0) = 0.5f;    // -> round(127.5) = 128
    img.pixels.at3(2, 0, 0) = 1.3f;    // out of range -> clamped to 255
    img.pixels.at3(0, 1, 1) = 0.0f;    // -> 0

    const std::string path = tmp.file("q.png");
    save_image(img, path);
    ImageRGB back = load_image(path);
    CHECK(back.pixels.at3(0, 0, 0) == 1.0f);
    CHECK(back.pixels.at3(1, 0, 0) == doctest::Approx(128.0f / 255.0f));
    CHECK(back.pixels.at3(2, 0, 0) == 1.0f);
    CHECK(back.pixels.at3(0, 1, 1) == 0.0f);
}

TEST_CASE("round-trip stays within one quantization step and is then idempotent") {
    TmpDir tmp("imgio");
    ImageRGB img = make_image(13, 9, 5);
    const std::string p1 = tmp.file("a.png"), p2 = tmp.file("b.png");
    save_image(img, p1);
    ImageRGB once = load_image(p1);
    CHECK(oracle::max_abs_diff(once.pixels, img.pixels) <= 1.0f / 255.0f);

    save_image(once, p2);
    ImageRGB twice = load_image(p2);
    CHECK(oracle::max_abs_diff(twice.pixels, once.pixels) == 0.0f);
}

TEST_CASE("PPM P6 loads and matches the PNG of the same content") {
    TmpDir tmp("imgio");
    ImageRGB img = make_image(10, 11, 7);
    const std::string png = tmp.file("x.png");
    save_image(img, png);
    ImageRGB from_png = load_image(png);

    // write the equivalent P6 by hand
    std::string ppm = "P6\n# comment\n11 10\n255\n";
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 11; ++x)
            for (int c = 0; c < 3; ++c)
                ppm.push_back(static_cast<char>(
                    static_cast<unsigned char>(std::lround(img.pixels.at3(c, y, x) * 255.0f))));
    const std::string ppm_path = tmp.file("x.ppm");
    write_bytes(ppm_path, ppm);
    ImageRGB from_ppm = load_image(ppm_path);
    CHECK(oracle::max_abs_diff(from_ppm.pixels, from_png.pixels) == 0.0f);
}

TEST_CASE("error variants are distinct") {
    TmpDir tmp("imgio");

    CHECK_THROWS_AS(load_image(tmp.file("missing.png")), ImageError);
    try {
        load_image(tmp.file("missing.png"));
    } catch (const ImageError& e) {
        CHECK(e.kind() == ImageErrorKind::Unreadable);
    }

    const std::string garbage = tmp.file("garbage.png");
    write_bytes(garbage, "this is not an image at all");
    try {
        load_image(garbage);
        FAIL("expected ImageError");
    } catch (const ImageError& e) {
        CHECK(e.kind() == ImageErrorKind::BadFormat);
    }

    const std::string gray = tmp.file("gray.pgm");
    write_bytes(gray, "P5\n8 8\n255\n" + std::string(64, '\x40'));
    try {
        load_image(gray);
        FAIL("expected ImageError");
    } catch (const ImageError& e) {
        CHECK(e.kind() == ImageErrorKind::Grayscale);
    }

    const std::string deep = tmp.file("deep.ppm");
    write_bytes(deep, "P6\n8 8\n65535\n" + std::string(8 * 8 * 6, '\x01'));
    try {
        load_image(deep);
        FAIL("expected ImageError");
    } catch (const ImageError& e) {
        CHECK(e.kind() == ImageErrorKind::UnsupportedDepth);
    }

    const std::string trunc = tmp.file("trunc.ppm");
    write_bytes(trunc, "P6\n8 8\n255\n1234");
    try {
        load_image(trunc);
        FAIL("expected ImageError");
    } catch (const ImageError& e) {
        CHECK(e.kind() == ImageErrorKind::Unreadable);
    }
}

TEST_CASE("png fixtures: grayscale, 16-bit and palette files are rejected by kind") {
    const std::string dir = ZRUDC_TEST_DATA_DIR;
    struct Case {
        const char* file;
        ImageErrorKind kind;
    };
    const Case cases[] = {
        {"/gray8.png", ImageErrorKind::Grayscale},
        {"/rgb16.png", ImageErrorKind::UnsupportedDepth},
        {"/palette.png", ImageErrorKind::BadFormat},
    };
    for (const auto& c : cases) {
        try {
            load_image(dir + c.file);
            FAIL("expected ImageError for ", c.file);
        } catch (const ImageError& e) {
            CHECK(e.kind() == c.kind);
        }
    }
    // RGBA is accepted with the alpha channel dropped
    ImageRGB rgba = load_image(dir + "/rgba8.png");
    CHECK(rgba.width == 8);
    CHECK(rgba.height == 8);
}

TEST_CASE("images below 8x8 are rejected") {
    Tensor ok({3, 8, 8}, 0.5f);
    CHECK_NOTHROW(ImageRGB::from_tensor(ok));
    Tensor small({3, 7, 20}, 0.5f);
    CHECK_THROWS_AS(ImageRGB::from_tensor(small), ImageError);
}

TEST_CASE("make_proxy: identity at 256, constants, and shape at 1280x720") {
    ImageRGB exact = make_image(kProxySize, kProxySize, 3);
    CHECK(oracle::max_abs_diff(make_proxy(exact), exact.pixels) == 0.0f);

    ImageRGB c;
    c.height = 33;
    c.width = 57;
    c.pixels = Tensor({3, 33, 57}, 0.77f);
    Tensor proxy = make_proxy(c);
    REQUIRE(proxy.shape == std::vector<int>{3, kProxySize, kProxySize});
    for (float v : proxy.data) CHECK(v == 0.77f);

    ImageRGB wide = make_image(720, 1280, 9);
    Tensor p = make_proxy(wide);
    CHECK(p.shape == std::vector<int>{3, kProxySize, kProxySize});

    // convex combination: proxy range within input range
    float inLo = 1.0f, inHi = 0.0f, pLo = 1.0f, pHi = 0.0f;
    for (float v : wide.pixels.data) {
        inLo = std::min(inLo, v);
        inHi = std::max(inHi, v);
    }
    for (float v : p.data) {
        pLo = std::min(pLo, v);
        pHi = std::max(pHi, v);
    }
    CHECK(pLo >= inLo);
    CHECK(pHi <= inHi);
}
