#include "zrudc/image.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "zrudc/ops.hpp"

namespace zrudc {

namespace {

constexpr int kMinSide = 8;

void check_min_size(int h, int w, const std::string& what) {
    if (h < kMinSide || w < kMinSide)
        throw ImageError(ImageErrorKind::TooSmall, what + ": image must be at least 8x8, got " +
                                                       std::to_string(w) + "x" + std::to_string(h));
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageRGB load_png(const std::string& path, FilePtr fp) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw ImageError(ImageErrorKind::Unreadable, "png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw ImageError(ImageErrorKind::Unreadable, "png: allocation failed");
    }

    std::vector<png_bytep> rows;
    std::vector<png_byte> storage;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageError(ImageErrorKind::Unreadable, "png: corrupt stream: " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);

    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageError(ImageErrorKind::Grayscale, "png: grayscale input not supported: " + path);
    }
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageError(ImageErrorKind::BadFormat, "png: palette images not supported: " + path);
    }
    if (depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageError(ImageErrorKind::UnsupportedDepth,
                         "png: bit depth " + std::to_string(depth) + " not supported (need 8): " + path);
    }
    if (color == PNG_COLOR_TYPE_RGB_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const size_t rowbytes = png_get_rowbytes(png, info);
    storage.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = storage.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    check_min_size(static_cast<int>(h), static_cast<int>(w), "load_image");
    ImageRGB img;
    img.height = static_cast<int>(h);
    img.width = static_cast<int>(w);
    img.pixels = Tensor({3, img.height, img.width});
    const float inv = 1.0f / 255.0f;
    for (int y = 0; y < img.height; ++y) {
        const png_byte* row = rows[static_cast<size_t>(y)];
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                img.pixels.at3(c, y, x) = static_cast<float>(row[3 * x + c]) * inv;
    }
    return img;
}

ImageRGB load_ppm(const std::string& path, std::ifstream in) {
    auto next_token = [&in, &path]() -> std::string {
        std::string tok;
        while (in) {
            int ch = in.get();
            if (ch == '#') {
                while (in && in.get() != '\n') {}
                continue;
            }
            if (ch == EOF) break;
            if (std::isspace(ch)) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok.push_back(static_cast<char>(ch));
        }
        if (tok.empty())
            throw ImageError(ImageErrorKind::Unreadable, "ppm: truncated header: " + path);
        return tok;
    };

    const std::string magic = next_token();
    if (magic == "P5" || magic == "P2")
        throw ImageError(ImageErrorKind::Grayscale, "ppm: grayscale input not supported: " + path);
    if (magic != "P6")
        throw ImageError(ImageErrorKind::BadFormat, "ppm: expected P6, got '" + magic + "': " + path);
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (maxval != 255)
        throw ImageError(ImageErrorKind::UnsupportedDepth,
                         "ppm: maxval " + std::to_string(maxval) + " not supported (need 255): " + path);
    if (w < 1 || h < 1) throw ImageError(ImageErrorKind::BadFormat, "ppm: bad dimensions: " + path);
    check_min_size(h, w, "load_image");

    std::vector<unsigned char> buf(static_cast<size_t>(3) * w * h);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
        throw ImageError(ImageErrorKind::Unreadable, "ppm: truncated pixel data: " + path);

    ImageRGB img;
    img.height = h;
    img.width = w;
    img.pixels = Tensor({3, h, w});
    const float inv = 1.0f / 255.0f;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.pixels.at3(c, y, x) = static_cast<float>(buf[(static_cast<size_t>(y) * w + x) * 3 + c]) * inv;
    return img;
}

}  // namespace

ImageRGB ImageRGB::from_tensor(Tensor t) {
    if (t.rank() != 3 || t.dim(0) != 3)
        throw ShapeError("ImageRGB: tensor must be [3,H,W], got " + shape_str(t.shape));
    check_min_size(t.dim(1), t.dim(2), "ImageRGB");
    for (float v : t.data)
        if (!(v >= 0.0f && v <= 1.0f))
            throw Error("ImageRGB: values must lie in [0,1], got " + std::to_string(v));
    ImageRGB img;
    img.height = t.dim(1);
    img.width = t.dim(2);
    img.pixels = std::move(t);
    return img;
}

ImageRGB ImageRGB::from_tensor_clamped(Tensor t) {
    if (t.rank() != 3 || t.dim(0) != 3)
        throw ShapeError("ImageRGB: tensor must be [3,H,W], got " + shape_str(t.shape));
    for (auto& v : t.data) v = std::min(1.0f, std::max(0.0f, v));
    return from_tensor(std::move(t));
}

ImageRGB load_image(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw ImageError(ImageErrorKind::Unreadable, "cannot open file: " + path);

    unsigned char magic[2] = {0, 0};
    if (std::fread(magic, 1, 2, fp.get()) != 2)
        throw ImageError(ImageErrorKind::Unreadable, "file too short: " + path);
    std::rewind(fp.get());

    if (magic[0] == 0x89 && magic[1] == 'P') return load_png(path, std::move(fp));
    if (magic[0] == 'P') {
        fp.reset();
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ImageError(ImageErrorKind::Unreadable, "cannot open file: " + path);
        return load_ppm(path, std::move(in));
    }
    throw ImageError(ImageErrorKind::BadFormat, "not a PNG or PPM file: " + path);
}

void save_image(const ImageRGB& img, const std::string& path) {
    if (img.pixels.rank() != 3 || img.pixels.dim(0) != 3)
        throw ShapeError("save_image: pixels must be [3,H,W]");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw ImageError(ImageErrorKind::WriteFailed, "cannot open for write: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw ImageError(ImageErrorKind::WriteFailed, "png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw ImageError(ImageErrorKind::WriteFailed, "png: allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ImageError(ImageErrorKind::WriteFailed, "png: write failure: " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
                 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<size_t>(3) * img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = img.pixels.at3(c, y, x);
                v = std::min(1.0f, std::max(0.0f, v));
                row[static_cast<size_t>(3 * x + c)] =
                    static_cast<png_byte>(std::lround(v * 255.0f));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor make_proxy(const ImageRGB& img, ProxyInterp interp) {
    if (interp == ProxyInterp::Bilinear)
        return ops::bilinear_resize(img.pixels, kProxySize, kProxySize);
    // nearest-neighbor fallback (same half-pixel mapping, rounded)
    Tensor out({3, kProxySize, kProxySize});
    const double sy = static_cast<double>(img.height) / kProxySize;
    const double sx = static_cast<double>(img.width) / kProxySize;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < kProxySize; ++y) {
            const int iy = std::min(img.height - 1,
                                    std::max(0, static_cast<int>(std::floor((y + 0.5) * sy))));
            for (int x = 0; x < kProxySize; ++x) {
                const int ix = std::min(img.width - 1,
                                        std::max(0, static_cast<int>(std::floor((x + 0.5) * sx))));
                out.at3(c, y, x) = img.pixels.at3(c, iy, ix);
            }
        }
    return out;
}

}  // namespace zrudc
