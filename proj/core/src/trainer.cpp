#include "zrudc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "zrudc/ops.hpp"
#include "zrudc/rng.hpp"
#include "zrudc/slicing.hpp"

namespace zrudc {

namespace {

/// Control-grid resolution of the random transmission field.
constexpr int kHazeFieldCells = 4;

Tensor smooth_field(Rng& rng, int H, int W, float lo, float hi) {
    Tensor coarse({1, kHazeFieldCells, kHazeFieldCells});
    for (auto& v : coarse.data) v = rng.uniform_f(lo, hi);
    return ops::bilinear_resize(coarse, H, W);
}

}  // namespace

ImageRGB degrade(const ImageRGB& img, const DegradeConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const int H = img.height, W = img.width;
    const int64_t plane = int64_t(H) * W;

    Tensor px = cfg.blur_sigma > 0.0f ? ops::gaussian_blur(img.pixels, cfg.blur_sigma) : img.pixels;

    if (cfg.haze_strength > 0.0f) {
        const Tensor t = smooth_field(rng, H, W, 1.0f - cfg.haze_strength, 1.0f);
        for (int c = 0; c < 3; ++c) {
            const float a = cfg.airlight[static_cast<size_t>(c)];
            for (int64_t i = 0; i < plane; ++i) {
                const float tv = t[i];
                px[c * plane + i] = tv * px[c * plane + i] + (1.0f - tv) * a;
            }
        }
    }

    if (cfg.vignette_strength > 0.0f) {
        const double cy = (H - 1) / 2.0, cx = (W - 1) / 2.0;
        const double corner2 = cy * cy + cx * cx;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                const float m = 1.0f - cfg.vignette_strength * static_cast<float>(d2 / corner2);
                for (int c = 0; c < 3; ++c) px[c * plane + int64_t(y) * W + x] *= m;
            }
    }

    ImageRGB out;
    out.height = H;
    out.width = W;
    out.pixels = std::move(px);
    return out;
}

void adam_step(GridNetParams& params, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& cfg) {
    const size_t n = params.tensors.size();
    if (grads.size() != n)
        throw ShapeError("adam_step: got " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(n) + " parameters");
    if (state.m.empty()) {
        state.m.resize(n);
        state.v.resize(n);
        for (size_t i = 0; i < n; ++i) {
            state.m[i] = Tensor(params.tensors[i].tensor.shape, 0.0f);
            state.v[i] = Tensor(params.tensors[i].tensor.shape, 0.0f);
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1), static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2), static_cast<double>(state.step));
    for (size_t i = 0; i < n; ++i) {
        Tensor& p = params.tensors[i].tensor;
        const Tensor& g = grads[i];
        check_same_shape(p, g, ("adam_step: " + params.tensors[i].name).c_str());
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (int64_t j = 0; j < p.numel(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0f - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0f - cfg.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] = static_cast<float>(p[j] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
        }
    }
}

namespace {

void check_finite_report(const LossReport& r, const LossWeights& w) {
    struct Term {
        const char* name;
        float raw;
        float weighted;
    };
    const Term terms[] = {
        {"dcp", r.dcp, w.w_dcp * r.dcp},
        {"spa", r.spa, w.w_lle * w.w_spa * r.spa},
        {"exp", r.exp, w.w_lle * w.w_exp * r.exp},
        {"cc", r.cc, w.w_lle * w.w_cc * r.cc},
        {"tv", r.tv, w.w_lle * w.w_tv * r.tv},
        {"dbc", r.dbc, w.w_dbc * r.dbc},
    };
    for (const auto& t : terms) {
        if (!std::isfinite(t.raw) || !std::isfinite(t.weighted))
            throw TrainAbort(t.name, std::string("non-finite loss term: ") + t.name);
    }
    if (!std::isfinite(r.total)) throw TrainAbort("total", "non-finite loss term: total");
}

Tensor random_crop(const ImageRGB& img, int crop, Rng& rng) {
    const int ch = std::min(crop, img.height);
    const int cw = std::min(crop, img.width);
    const int y0 = img.height > ch ? rng.uniform_int(0, img.height - ch) : 0;
    const int x0 = img.width > cw ? rng.uniform_int(0, img.width - cw) : 0;
    Tensor out({3, ch, cw});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < ch; ++y)
            for (int x = 0; x < cw; ++x) out.at3(c, y, x) = img.pixels.at3(c, y0 + y, x0 + x);
    return out;
}

void accumulate_report(LossReport& acc, const LossReport& r) {
    acc.dcp += r.dcp;
    acc.spa += r.spa;
    acc.exp += r.exp;
    acc.cc += r.cc;
    acc.tv += r.tv;
    acc.dbc += r.dbc;
    acc.total += r.total;
}

LossReport scale_report(LossReport r, float s) {
    r.dcp *= s;
    r.spa *= s;
    r.exp *= s;
    r.cc *= s;
    r.tv *= s;
    r.dbc *= s;
    r.total *= s;
    return r;
}

}  // namespace

TrainResult train_on_images(const std::vector<ImageRGB>& images, const TrainConfig& cfg) {
    cfg.validate();
    if (images.empty()) throw Error("train: dataset is empty");

    TrainResult res;
    res.params = init_gridnet_params<float>(cfg.net, cfg.seed);
    AdamState state;
    Rng rng(cfg.seed);

    const int n = static_cast<int>(images.size());
    std::vector<int> order(static_cast<size_t>(n));
    int64_t step = 0;
    bool done = false;

    for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
        for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
        for (int i = n - 1; i > 0; --i)
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(rng.uniform_int(0, i))]);

        LossReport epoch_acc{};
        int epoch_steps = 0;
        for (int start = 0; start < n && !done; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            std::vector<Tensor> grads(res.params.tensors.size());
            for (size_t i = 0; i < grads.size(); ++i)
                grads[i] = Tensor(res.params.tensors[i].tensor.shape, 0.0f);
            LossReport batch_acc{};

            for (int bi = 0; bi < bsz; ++bi) {
                const ImageRGB& img = images[static_cast<size_t>(order[static_cast<size_t>(start + bi)])];
                Tensor crop = random_crop(img, cfg.crop_size, rng);

                Tape tape;
                auto pv = watch_params(tape, res.params, true);
                auto raw = watch(tape, std::move(crop));
                auto trace = enhance_traced(tape, raw, pv, cfg.pool_kernel);
                auto terms = loss_total(trace.out_preclamp, raw, trace.grid, cfg.loss);
                const LossReport r = terms.report();
                check_finite_report(r, cfg.loss);
                accumulate_report(batch_acc, r);

                tape.backward(terms.total.id);
                for (size_t i = 0; i < grads.size(); ++i) {
                    const Tensor g = tape.grad(pv.vars[i].id);
                    for (int64_t j = 0; j < g.numel(); ++j) grads[i][j] += g[j];
                }
            }

            const float inv = 1.0f / static_cast<float>(bsz);
            for (auto& g : grads)
                for (auto& v : g.data) v *= inv;
            adam_step(res.params, grads, state, cfg);

            const LossReport step_report = scale_report(batch_acc, inv);
            if (step == 0) res.first_step = step_report;
            res.last_step = step_report;
            accumulate_report(epoch_acc, step_report);
            ++epoch_steps;
            ++step;
            if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
        }
        if (epoch_steps > 0)
            res.history.push_back(scale_report(epoch_acc, 1.0f / static_cast<float>(epoch_steps)));
    }
    res.steps = step;
    return res;
}

std::vector<std::string> list_image_files(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    if (!fs::is_directory(dir)) return files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png" || ext == ".ppm") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

TrainResult train(const std::string& data_dir, const TrainConfig& cfg) {
    const auto files = list_image_files(data_dir);
    if (files.empty()) throw Error("train: no PNG/PPM images in '" + data_dir + "'");
    std::vector<ImageRGB> images;
    images.reserve(files.size());
    for (const auto& f : files) images.push_back(load_image(f));
    return train_on_images(images, cfg);
}

}  // namespace zrudc
