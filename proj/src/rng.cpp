// SPDX-License-Identifier: Apache-2.0
#include "fiun/rng.hpp"

#include <cmath>
#include <numeric>

namespace fiun {

double Rng::gauss() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

uint64_t Rng::below(uint64_t n) {
    if (n == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = 0;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

std::vector<int64_t> Rng::permutation(int64_t n) {
    std::vector<int64_t> p(static_cast<size_t>(n));
    std::iota(p.begin(), p.end(), int64_t{0});
    shuffle(p);
    return p;
}

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

uint64_t derive_seed(uint64_t base, std::string_view label, uint64_t index) {
    uint64_t h = 0xCBF29CE484222325ULL; // FNV-1a offset basis
    auto mix = [&h](uint8_t byte) {
        h ^= byte;
        h *= 0x100000001B3ULL;
    };
    for (int i = 0; i < 8; ++i) mix(static_cast<uint8_t>(base >> (8 * i)));
    for (char c : label) mix(static_cast<uint8_t>(c));
    for (int i = 0; i < 8; ++i) mix(static_cast<uint8_t>(index >> (8 * i)));
    return splitmix64(h);
}

} // namespace fiun
