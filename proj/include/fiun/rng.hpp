// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fiun {

// Deterministic RNG with portable output streams. std::mt19937_64 produces
// pinned bits, but the <random> distributions on top of it are
// implementation-defined, so gaussian/uniform/shuffle are implemented here
// instead of via distribution adaptors.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; caches the second variate.
    double gauss();

    // Uniform integer in [0, n), unbiased (rejection sampling).
    uint64_t below(uint64_t n);

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::vector<int64_t> permutation(int64_t n);

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derives a stream seed from a base seed, a label, and an index
// (FNV-1a over the inputs, finalized with the splitmix64 mixer).
// One global seed fans out to every component through this.
uint64_t derive_seed(uint64_t base, std::string_view label, uint64_t index = 0);

} // namespace fiun
