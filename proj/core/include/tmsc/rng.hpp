#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tmsc {

// Deterministic random source. std::mt19937_64 is fully specified by the
// standard; the distributions here are hand-rolled because the std ones are
// implementation-defined and would break run-to-run reproducibility of
// datasets and checkpoints.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Normal truncated to |z| <= 2, rejection sampled.
    double truncated_normal() {
        for (;;) {
            double z = normal();
            if (z >= -2.0 && z <= 2.0) return z;
        }
    }

    // Uniform integer in [0, n), n > 0, rejection sampled for exactness.
    uint64_t below(uint64_t n) {
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            uint64_t v = engine_();
            if (v < limit) return v % n;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Derives an independent stream seed from (seed, stream), splitmix64 style.
uint64_t derive_seed(uint64_t seed, uint64_t stream);

}  // namespace tmsc
