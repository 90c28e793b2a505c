#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "zrudc/ops.hpp"
#include "zrudc/tensor.hpp"

namespace zrudc {

/// Reverse-mode tape. Every differentiable operation appends one node holding
/// the forward value and a closure that pushes the node's adjoint into its
/// parents. Replaying the closures in reverse creation order yields exact
/// gradients; one training step records and consumes one tape.
template <typename T>
class TapeT {
public:
    struct Node {
        TensorT<T> value;
        std::vector<int> parents;
        std::function<void(TapeT&, int)> backprop;  // empty for leaves
        bool needs_grad = false;
    };

    int leaf(TensorT<T> v, bool requires_grad = false) {
        Node n;
        n.value = std::move(v);
        n.needs_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    int emit(TensorT<T> v, std::vector<int> parents, std::function<void(TapeT&, int)> backprop) {
        Node n;
        n.value = std::move(v);
        n.parents = std::move(parents);
        for (int p : n.parents)
            if (nodes_[static_cast<size_t>(p)].needs_grad) n.needs_grad = true;
        if (n.needs_grad) n.backprop = std::move(backprop);
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    const TensorT<T>& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
    bool wants_grad(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }
    size_t size() const { return nodes_.size(); }

    /// Adjoint buffer of a node, created zero-filled on first touch.
    TensorT<T>& grad_buf(int id) {
        auto& g = grads_[static_cast<size_t>(id)];
        if (g.data.empty()) g = TensorT<T>(nodes_[static_cast<size_t>(id)].value.shape, T(0));
        return g;
    }

    bool grad_touched(int id) const { return !grads_[static_cast<size_t>(id)].data.empty(); }

    /// Runs reverse-mode accumulation from a scalar loss node.
    void backward(int loss_id) {
        const auto& loss = nodes_[static_cast<size_t>(loss_id)].value;
        if (loss.numel() != 1)
            throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.shape));
        grads_.assign(nodes_.size(), TensorT<T>{});
        grad_buf(loss_id)[0] = T(1);
        for (int id = loss_id; id >= 0; --id) {
            auto& n = nodes_[static_cast<size_t>(id)];
            if (!n.needs_grad || !n.backprop || !grad_touched(id)) continue;
            n.backprop(*this, id);
        }
    }

    /// Gradient of a node after backward(); zero tensor if the node did not
    /// participate in the loss.
    TensorT<T> grad(int id) const {
        const auto& g = grads_[static_cast<size_t>(id)];
        if (g.data.empty()) return TensorT<T>(nodes_[static_cast<size_t>(id)].value.shape, T(0));
        return g;
    }

private:
    std::vector<Node> nodes_;
    std::vector<TensorT<T>> grads_;
};

using Tape = TapeT<float>;
using TapeD = TapeT<double>;

template <typename T>
struct VarT {
    TapeT<T>* tape = nullptr;
    int id = -1;

    const TensorT<T>& val() const { return tape->value(id); }
    T scalar() const { return val()[0]; }
};

using Var = VarT<float>;
using VarD = VarT<double>;

template <typename T>
VarT<T> watch(TapeT<T>& tape, TensorT<T> v, bool requires_grad = false) {
    return {&tape, tape.leaf(std::move(v), requires_grad)};
}

namespace detail {
template <typename T>
void add_into(TensorT<T>& dst, const TensorT<T>& src) {
    for (int64_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and reduction ops
// ---------------------------------------------------------------------------

template <typename T>
VarT<T> add(VarT<T> a, VarT<T> b) {
    auto* t = a.tape;
    int ia = a.id, ib = b.id;
    int id = t->emit(ops::add(a.val(), b.val()), {ia, ib}, [ia, ib](TapeT<T>& tp, int self) {
        const auto& g = tp.grad_buf(self);
        if (tp.wants_grad(ia)) detail::add_into(tp.grad_buf(ia), g);
        if (tp.wants_grad(ib)) detail::add_into(tp.grad_buf(ib), g);
    });
    return {t, id};
}

template <typename T>
VarT<T> sub(VarT<T> a, VarT<T> b) {
    auto* t = a.tape;
    int ia = a.id, ib = b.id;
    int id = t->emit(ops::sub(a.val(), b.val()), {ia, ib}, [ia, ib](TapeT<T>& tp, int self) {
        const auto& g = tp.grad_buf(self);
        if (tp.wants_grad(ia)) detail::add_into(tp.grad_buf(ia), g);
        if (tp.wants_grad(ib)) {
            auto& gb = tp.grad_buf(ib);
            for (int64_t i = 0; i < gb.numel(); ++i) gb[i] -= g[i];
        }
    });
    return {t, id};
}

template <typename T>
VarT<T> mul(VarT<T> a, VarT<T> b) {
    auto* t = a.tape;
    int ia = a.id, ib = b.id;
    int id = t->emit(ops::mul(a.val(), b.val()), {ia, ib}, [ia, ib](TapeT<T>& tp, int self) {
        const auto& g = tp.grad_buf(self);
        if (tp.wants_grad(ia)) {
            auto& ga = tp.grad_buf(ia);
            const auto& vb = tp.value(ib);
            for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += g[i] * vb[i];
        }
        if (tp.wants_grad(ib)) {
            auto& gb = tp.grad_buf(ib);
            const auto& va = tp.value(ia);
            for (int64_t i = 0; i < gb.numel(); ++i) gb[i] += g[i] * va[i];
        }
    });
    return {t, id};
}

template <typename T>
VarT<T> mul_scalar(VarT<T> a, T c) {
    auto* t = a.tape;
    int ia = a.id;
    int id = t->emit(ops::mul_scalar(a.val(), c), {ia}, [ia, c](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ia)) return;
        const auto& g = tp.grad_buf(self);
        auto& ga = tp.grad_buf(ia);
        for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += c * g[i];
    });
    return {t, id};
}

template <typename T>
VarT<T> add_scalar(VarT<T> a, T c) {
    auto* t = a.tape;
    int ia = a.id;
    int id = t->emit(ops::add_scalar(a.val(), c), {ia}, [ia](TapeT<T>& tp, int self) {
        if (tp.wants_grad(ia)) detail::add_into(tp.grad_buf(ia), tp.grad_buf(self));
    });
    return {t, id};
}

/// c - a
template <typename T>
VarT<T> rsub_scalar(VarT<T> a, T c) {
    auto* t = a.tape;
    int ia = a.id;
    int id = t->emit(ops::rsub_scalar(a.val(), c), {ia}, [ia](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ia)) return;
        const auto& g = tp.grad_buf(self);
        auto& ga = tp.grad_buf(ia);
        for (int64_t i = 0; i < ga.numel(); ++i) ga[i] -= g[i];
    });
    return {t, id};
}

/// |a|; the subgradient at 0 is 0.
template <typename T>
VarT<T> abs(VarT<T> a) {
    auto* t = a.tape;
    int ia = a.id;
    int id = t->emit(ops::abs(a.val()), {ia}, [ia](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ia)) return;
        const auto& g = tp.grad_buf(self);
        const auto& v = tp.value(ia);
        auto& ga = tp.grad_buf(ia);
        for (int64_t i = 0; i < ga.numel(); ++i) {
            if (v[i] > T(0)) ga[i] += g[i];
            else if (v[i] < T(0)) ga[i] -= g[i];
        }
    });
    return {t, id};
}

template <typename T>
VarT<T> sum(VarT<T> a) {
    auto* t = a.tape;
    int ia = a.id;
    int id = t->emit(TensorT<T>::scalar(ops::sum(a.val())), {ia}, [ia](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ia)) return;
        const T g = tp.grad_buf(self)[0];
        auto& ga = tp.grad_buf(ia);
        for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += g;
    });
    return {t, id};
}

template <typename T>
VarT<T> mean(VarT<T> a) {
    auto* t = a.tape;
    int ia = a.id;
    const int64_t n = a.val().numel();
    int id = t->emit(TensorT<T>::scalar(ops::mean(a.val())), {ia}, [ia, n](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ia)) return;
        const T g = tp.grad_buf(self)[0] / static_cast<T>(n);
        auto& ga = tp.grad_buf(ia);
        for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += g;
    });
    return {t, id};
}

template <typename T>
VarT<T> index(VarT<T> a, int64_t i) {
    auto* t = a.tape;
    int ia = a.id;
    int id = t->emit(TensorT<T>::scalar(a.val()[i]), {ia}, [ia, i](TapeT<T>& tp, int self) {
        if (tp.wants_grad(ia)) tp.grad_buf(ia)[i] += tp.grad_buf(self)[0];
    });
    return {t, id};
}

// ---------------------------------------------------------------------------
// Structured ops
// ---------------------------------------------------------------------------

template <typename T>
VarT<T> conv2d(VarT<T> x, VarT<T> w, VarT<T> b, int stride = 1, int pad = 0) {
    auto* t = x.tape;
    int ix = x.id, iw = w.id, ib = b.id;
    const int H = x.val().dim(1), W = x.val().dim(2);
    const int k = w.val().dim(2);
    int id = t->emit(ops::conv2d(x.val(), w.val(), b.val(), stride, pad), {ix, iw, ib},
                     [ix, iw, ib, H, W, k, stride, pad](TapeT<T>& tp, int self) {
                         const auto& g = tp.grad_buf(self);
                         if (tp.wants_grad(ix))
                             detail::add_into(tp.grad_buf(ix),
                                              ops::conv2d_grad_input(g, tp.value(iw), H, W, stride, pad));
                         if (tp.wants_grad(iw))
                             detail::add_into(tp.grad_buf(iw),
                                              ops::conv2d_grad_weight(g, tp.value(ix), k, stride, pad));
                         if (tp.wants_grad(ib)) detail::add_into(tp.grad_buf(ib), ops::conv2d_grad_bias(g));
                     });
    return {t, id};
}

/// Ties route the gradient to the first maximal element in window scan order.
template <typename T>
VarT<T> maxpool2d(VarT<T> x, int kernel, int stride) {
    auto* t = x.tape;
    int ix = x.id;
    auto argmax = std::make_shared<std::vector<int32_t>>();
    TensorT<T> y = ops::maxpool2d(x.val(), kernel, stride, argmax.get());
    std::vector<int> in_shape = x.val().shape;
    int id = t->emit(std::move(y), {ix}, [ix, argmax, in_shape](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ix)) return;
        detail::add_into(tp.grad_buf(ix), ops::maxpool2d_grad(tp.grad_buf(self), *argmax, in_shape));
    });
    return {t, id};
}

template <typename T>
VarT<T> prelu(VarT<T> x, VarT<T> slope) {
    auto* t = x.tape;
    int ix = x.id, is = slope.id;
    if (slope.val().numel() != 1)
        throw ShapeError("prelu: slope must be a scalar tensor, got " + shape_str(slope.val().shape));
    int id = t->emit(ops::prelu(x.val(), slope.val()[0]), {ix, is}, [ix, is](TapeT<T>& tp, int self) {
        const auto& g = tp.grad_buf(self);
        const auto& v = tp.value(ix);
        const T a = tp.value(is)[0];
        if (tp.wants_grad(ix)) {
            auto& gx = tp.grad_buf(ix);
            for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += v[i] >= T(0) ? g[i] : a * g[i];
        }
        if (tp.wants_grad(is)) {
            double acc = 0.0;
            for (int64_t i = 0; i < v.numel(); ++i)
                if (v[i] < T(0)) acc += static_cast<double>(g[i]) * static_cast<double>(v[i]);
            tp.grad_buf(is)[0] += static_cast<T>(acc);
        }
    });
    return {t, id};
}

template <typename T>
VarT<T> bilinear_resize(VarT<T> x, int outH, int outW) {
    auto* t = x.tape;
    int ix = x.id;
    const int H = x.val().dim(1), W = x.val().dim(2);
    int id = t->emit(ops::bilinear_resize(x.val(), outH, outW), {ix},
                     [ix, H, W](TapeT<T>& tp, int self) {
                         if (!tp.wants_grad(ix)) return;
                         detail::add_into(tp.grad_buf(ix), ops::bilinear_resize_grad(tp.grad_buf(self), H, W));
                     });
    return {t, id};
}

template <typename T>
VarT<T> concat_channels(VarT<T> a, VarT<T> b) {
    auto* t = a.tape;
    int ia = a.id, ib = b.id;
    const int64_t na = a.val().numel();
    int id = t->emit(ops::concat_channels(a.val(), b.val()), {ia, ib},
                     [ia, ib, na](TapeT<T>& tp, int self) {
                         const auto& g = tp.grad_buf(self);
                         if (tp.wants_grad(ia)) {
                             auto& ga = tp.grad_buf(ia);
                             for (int64_t i = 0; i < na; ++i) ga[i] += g[i];
                         }
                         if (tp.wants_grad(ib)) {
                             auto& gb = tp.grad_buf(ib);
                             for (int64_t i = 0; i < gb.numel(); ++i) gb[i] += g[na + i];
                         }
                     });
    return {t, id};
}

template <typename T>
VarT<T> channel_min(VarT<T> x) {
    auto* t = x.tape;
    int ix = x.id;
    auto arg = std::make_shared<std::vector<int8_t>>();
    TensorT<T> y = ops::channel_min(x.val(), arg.get());
    const int64_t plane = y.numel();
    int id = t->emit(std::move(y), {ix}, [ix, arg, plane](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ix)) return;
        const auto& g = tp.grad_buf(self);
        auto& gx = tp.grad_buf(ix);
        for (int64_t i = 0; i < plane; ++i) gx[(*arg)[static_cast<size_t>(i)] * plane + i] += g[i];
    });
    return {t, id};
}

template <typename T>
VarT<T> channel_max(VarT<T> x) {
    auto* t = x.tape;
    int ix = x.id;
    auto arg = std::make_shared<std::vector<int8_t>>();
    TensorT<T> y = ops::channel_max(x.val(), arg.get());
    const int64_t plane = y.numel();
    int id = t->emit(std::move(y), {ix}, [ix, arg, plane](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ix)) return;
        const auto& g = tp.grad_buf(self);
        auto& gx = tp.grad_buf(ix);
        for (int64_t i = 0; i < plane; ++i) gx[(*arg)[static_cast<size_t>(i)] * plane + i] += g[i];
    });
    return {t, id};
}

template <typename T>
VarT<T> patch_min(VarT<T> x, int patch) {
    auto* t = x.tape;
    int ix = x.id;
    auto arg = std::make_shared<std::vector<int32_t>>();
    TensorT<T> y = ops::patch_min(x.val(), patch, arg.get());
    int id = t->emit(std::move(y), {ix}, [ix, arg](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ix)) return;
        const auto& g = tp.grad_buf(self);
        auto& gx = tp.grad_buf(ix);
        for (int64_t i = 0; i < g.numel(); ++i) gx[(*arg)[static_cast<size_t>(i)]] += g[i];
    });
    return {t, id};
}

template <typename T>
VarT<T> patch_max(VarT<T> x, int patch) {
    auto* t = x.tape;
    int ix = x.id;
    auto arg = std::make_shared<std::vector<int32_t>>();
    TensorT<T> y = ops::patch_max(x.val(), patch, arg.get());
    int id = t->emit(std::move(y), {ix}, [ix, arg](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ix)) return;
        const auto& g = tp.grad_buf(self);
        auto& gx = tp.grad_buf(ix);
        for (int64_t i = 0; i < g.numel(); ++i) gx[(*arg)[static_cast<size_t>(i)]] += g[i];
    });
    return {t, id};
}

template <typename T>
VarT<T> dark_channel(VarT<T> img, int patch) {
    ops::check_patch(patch);
    return patch_min(channel_min(img), patch);
}

template <typename T>
VarT<T> bright_channel(VarT<T> img, int patch) {
    ops::check_patch(patch);
    return patch_max(channel_max(img), patch);
}

template <typename T>
VarT<T> mean_channels(VarT<T> x) {
    auto* t = x.tape;
    int ix = x.id;
    const int C = x.val().dim(0);
    TensorT<T> y = ops::mean_channels(x.val());
    const int64_t plane = y.numel();
    int id = t->emit(std::move(y), {ix}, [ix, C, plane](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ix)) return;
        const auto& g = tp.grad_buf(self);
        auto& gx = tp.grad_buf(ix);
        const T inv = T(1) / static_cast<T>(C);
        for (int c = 0; c < C; ++c)
            for (int64_t i = 0; i < plane; ++i) gx[c * plane + i] += g[i] * inv;
    });
    return {t, id};
}

template <typename T>
VarT<T> mean_per_channel(VarT<T> x) {
    auto* t = x.tape;
    int ix = x.id;
    const int C = x.val().dim(0);
    const int64_t plane = x.val().numel() / C;
    int id = t->emit(ops::mean_per_channel(x.val()), {ix}, [ix, C, plane](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ix)) return;
        const auto& g = tp.grad_buf(self);
        auto& gx = tp.grad_buf(ix);
        for (int c = 0; c < C; ++c) {
            const T gc = g[c] / static_cast<T>(plane);
            for (int64_t i = 0; i < plane; ++i) gx[c * plane + i] += gc;
        }
    });
    return {t, id};
}

template <typename T>
VarT<T> region_mean(VarT<T> x, int region) {
    auto* t = x.tape;
    int ix = x.id;
    const int W = x.val().dim(1);
    TensorT<T> y = ops::region_mean(x.val(), region);
    const int Rh = y.dim(0), Rw = y.dim(1);
    int id = t->emit(std::move(y), {ix}, [ix, region, W, Rh, Rw](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ix)) return;
        const auto& g = tp.grad_buf(self);
        auto& gx = tp.grad_buf(ix);
        const T inv = T(1) / (static_cast<T>(region) * static_cast<T>(region));
        for (int by = 0; by < Rh; ++by)
            for (int bx = 0; bx < Rw; ++bx) {
                const T gv = g[int64_t(by) * Rw + bx] * inv;
                for (int iy = by * region; iy < (by + 1) * region; ++iy)
                    for (int ix2 = bx * region; ix2 < (bx + 1) * region; ++ix2)
                        gx[int64_t(iy) * W + ix2] += gv;
            }
    });
    return {t, id};
}

template <typename T>
VarT<T> diff_x(VarT<T> x) {
    auto* t = x.tape;
    int ix = x.id;
    const int W = x.val().shape.back();
    TensorT<T> y = ops::diff_x(x.val());
    const int64_t rows = x.val().numel() / W;
    int id = t->emit(std::move(y), {ix}, [ix, W, rows](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ix)) return;
        const auto& g = tp.grad_buf(self);
        auto& gx = tp.grad_buf(ix);
        for (int64_t r = 0; r < rows; ++r) {
            const T* gr = g.ptr() + r * (W - 1);
            T* xr = gx.ptr() + r * W;
            for (int i = 0; i < W - 1; ++i) {
                xr[i + 1] += gr[i];
                xr[i] -= gr[i];
            }
        }
    });
    return {t, id};
}

template <typename T>
VarT<T> diff_y(VarT<T> x) {
    auto* t = x.tape;
    int ix = x.id;
    const int W = x.val().shape.back();
    const int H = x.val().shape[x.val().shape.size() - 2];
    TensorT<T> y = ops::diff_y(x.val());
    const int64_t planes = x.val().numel() / (int64_t(H) * W);
    int id = t->emit(std::move(y), {ix}, [ix, H, W, planes](TapeT<T>& tp, int self) {
        if (!tp.wants_grad(ix)) return;
        const auto& g = tp.grad_buf(self);
        auto& gx = tp.grad_buf(ix);
        for (int64_t p = 0; p < planes; ++p) {
            const T* gp = g.ptr() + p * (H - 1) * W;
            T* xp = gx.ptr() + p * H * W;
            for (int64_t i = 0; i < int64_t(H - 1) * W; ++i) {
                xp[i + W] += gp[i];
                xp[i] -= gp[i];
            }
        }
    });
    return {t, id};
}

template <typename T>
VarT<T> s_slice(VarT<T> grid, VarT<T> raw) {
    auto* t = grid.tape;
    int ig = grid.id, ir = raw.id;
    int id = t->emit(ops::s_slice(grid.val(), raw.val()), {ig, ir}, [ig, ir](TapeT<T>& tp, int self) {
        const auto& g = tp.grad_buf(self);
        if (tp.wants_grad(ig))
            detail::add_into(tp.grad_buf(ig), ops::s_slice_grad_grid(g, tp.value(ir)));
        if (tp.wants_grad(ir)) {
            auto& gr = tp.grad_buf(ir);
            const auto& gv = tp.value(ig);
            const int64_t plane = gr.numel() / 3;
            for (int c = 0; c < 3; ++c)
                for (int j = 0; j < 3; ++j) {
                    const T* gf = g.ptr() + (4 * c + j) * plane;
                    const T* gp = gv.ptr() + (4 * c + j) * plane;
                    T* out = gr.ptr() + j * plane;
                    for (int64_t i = 0; i < plane; ++i) out[i] += gf[i] * gp[i];
                }
        }
    });
    return {t, id};
}

}  // namespace zrudc
