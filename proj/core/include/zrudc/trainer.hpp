#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zrudc/gridnet.hpp"
#include "zrudc/image.hpp"
#include "zrudc/losses.hpp"

namespace zrudc {

/// Synthetic degradation: Gaussian blur, then the haze model
/// I = t*J + (1-t)*A with a spatially smooth random transmission field, then
/// a radial vignette. Deterministic for a given seed.
struct DegradeConfig {
    float haze_strength = 0.5f;               // t >= 1 - haze_strength
    std::array<float, 3> airlight{0.9f, 0.9f, 0.9f};
    float vignette_strength = 0.3f;           // multiplier falls to 1 - strength at corners
    float blur_sigma = 1.0f;                  // pixels; 0 disables
    uint64_t seed = 0;

    void validate() const {
        if (!(haze_strength >= 0.0f && haze_strength <= 1.0f))
            throw ConfigError("DegradeConfig: haze_strength must be in [0,1]");
        if (!(vignette_strength >= 0.0f && vignette_strength <= 1.0f))
            throw ConfigError("DegradeConfig: vignette_strength must be in [0,1]");
        if (!(blur_sigma >= 0.0f)) throw ConfigError("DegradeConfig: blur_sigma must be >= 0");
        for (float a : airlight)
            if (!(a >= 0.0f && a <= 1.0f)) throw ConfigError("DegradeConfig: airlight must be in [0,1]");
    }
};

ImageRGB degrade(const ImageRGB& img, const DegradeConfig& cfg);

struct TrainConfig {
    float lr = 0.002f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
    int epochs = 100;
    int batch_size = 4;
    std::optional<int> pool_kernel = 3;
    uint64_t seed = 0;
    LossWeights loss;
    GridNetConfig net;
    int crop_size = 64;   // square training crops; whole image when smaller
    int max_steps = 0;    // optional step cap (0 = run all epochs)

    void validate() const {
        if (!(lr > 0.0f)) throw ConfigError("TrainConfig: lr must be > 0");
        if (!(beta1 >= 0.0f && beta1 < 1.0f && beta2 >= 0.0f && beta2 < 1.0f))
            throw ConfigError("TrainConfig: betas must lie in [0,1)");
        if (!(epsilon > 0.0f)) throw ConfigError("TrainConfig: epsilon must be > 0");
        if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
        if (pool_kernel && *pool_kernel < 1)
            throw ConfigError("TrainConfig: pool_kernel must be positive");
        if (crop_size < 8) throw ConfigError("TrainConfig: crop_size must be >= 8");
        loss.validate();
    }
};

/// Bias-corrected Adam over the parameter list; `grads` must align with
/// params.tensors.
struct AdamState {
    int64_t step = 0;
    std::vector<Tensor> m, v;
};

void adam_step(GridNetParams& params, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& cfg);

/// Raised when a loss term goes non-finite; names the offending term.
class TrainAbort : public Error {
public:
    TrainAbort(std::string term, const std::string& msg) : Error(msg), term_(std::move(term)) {}
    const std::string& term() const { return term_; }

private:
    std::string term_;
};

struct TrainResult {
    GridNetParams params;
    std::vector<LossReport> history;     // per-epoch means
    LossReport first_step;
    LossReport last_step;
    int64_t steps = 0;
};

/// Zero-reference training over in-memory images.
TrainResult train_on_images(const std::vector<ImageRGB>& images, const TrainConfig& cfg);

/// Loads every PNG/PPM in the directory (sorted by filename) and trains.
/// Throws on an empty dataset.
TrainResult train(const std::string& data_dir, const TrainConfig& cfg);

/// Sorted image paths under a directory (PNG/PPM extensions).
std::vector<std::string> list_image_files(const std::string& dir);

}  // namespace zrudc
