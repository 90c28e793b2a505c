#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace zrudc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when tensor shapes do not satisfy an operation's contract.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Thrown when a configuration value is outside its documented range.
class ConfigError : public Error {
public:
    using Error::Error;
};

inline std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

/// Dense row-major N-dimensional array. The outermost dimension comes first,
/// so an image is [C, H, W] and a conv weight is [C_out, C_in, k, k].
template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;
    bool requires_grad = false;

    TensorT() = default;

    explicit TensorT(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(check_shape(shape)), fill);
    }

    TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<size_t>(check_shape(shape)) != data.size())
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }

    static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }
    static TensorT full(std::vector<int> s, T v) { return TensorT(std::move(s), v); }
    static TensorT scalar(T v) { return TensorT({1}, std::vector<T>{v}); }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    /// Flat index for a [C, H, W] tensor.
    int64_t idx3(int c, int y, int x) const {
        return (static_cast<int64_t>(c) * shape[1] + y) * shape[2] + x;
    }
    T& at3(int c, int y, int x) { return data[static_cast<size_t>(idx3(c, y, x))]; }
    const T& at3(int c, int y, int x) const { return data[static_cast<size_t>(idx3(c, y, x))]; }

    /// Flat index for a [H, W] tensor.
    int64_t idx2(int y, int x) const { return static_cast<int64_t>(y) * shape[1] + x; }
    T& at2(int y, int x) { return data[static_cast<size_t>(idx2(y, x))]; }
    const T& at2(int y, int x) const { return data[static_cast<size_t>(idx2(y, x))]; }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

private:
    static int64_t check_shape(const std::vector<int>& s) {
        if (s.empty()) throw ShapeError("tensor rank must be >= 1");
        int64_t n = 1;
        for (int d : s) {
            if (d < 1) throw ShapeError("tensor dimensions must be >= 1, got " + shape_str(s));
            n *= d;
        }
        return n;
    }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
}

}  // namespace zrudc
