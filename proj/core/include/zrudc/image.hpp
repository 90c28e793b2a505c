#pragma once

#include <string>

#include "zrudc/tensor.hpp"

namespace zrudc {

enum class ImageErrorKind {
    Unreadable,        // missing file, I/O failure, corrupt stream
    BadFormat,         // not a PNG or PPM(P6), or an unsupported layout (palette)
    UnsupportedDepth,  // bit depth other than 8
    Grayscale,         // grayscale-only input
    TooSmall,          // below the 8x8 minimum
    WriteFailed,
};

class ImageError : public Error {
public:
    ImageError(ImageErrorKind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    ImageErrorKind kind() const { return kind_; }

private:
    ImageErrorKind kind_;
};

/// An RGB image as a [3, H, W] float tensor with values in [0, 1].
/// Dimensions are at least 8x8 (the patch-based losses need that much room).
struct ImageRGB {
    int height = 0;
    int width = 0;
    Tensor pixels;

    /// Validates range and minimum size.
    static ImageRGB from_tensor(Tensor t);
    /// Clamps values into [0, 1] first (for network outputs).
    static ImageRGB from_tensor_clamped(Tensor t);
};

inline constexpr int kProxySize = 256;

enum class ProxyInterp { Bilinear, Nearest };

/// Loads an 8-bit RGB PNG or binary PPM (P6); the format is sniffed from the
/// file's magic bytes. Channel value v maps to v/255 exactly.
ImageRGB load_image(const std::string& path);

/// Writes an 8-bit RGB PNG. Values are clamped to [0, 1] and quantized with
/// round-half-up: v -> round(v * 255).
void save_image(const ImageRGB& img, const std::string& path);

/// Fixed-resolution network input: resample to 3 x 256 x 256. The resampling
/// method is bilinear by default; values stay within the input's range.
Tensor make_proxy(const ImageRGB& img, ProxyInterp interp = ProxyInterp::Bilinear);

}  // namespace zrudc
