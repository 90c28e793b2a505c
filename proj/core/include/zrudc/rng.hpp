#pragma once

#include <cstdint>
#include <random>

namespace zrudc {

/// Deterministic random source. The raw engine is std::mt19937_64 but all
/// value conversion is done here, so streams are bit-identical across
/// standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    float uniform_f() { return static_cast<float>(gen_() >> 40) * 0x1.0p-24f; }

    float uniform_f(float lo, float hi) { return lo + (hi - lo) * uniform_f(); }

    /// Uniform integer in [lo, hi] inclusive. Modulo bias is irrelevant here;
    /// determinism is the contract.
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace zrudc
