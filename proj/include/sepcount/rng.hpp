#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "sepcount/tensor.hpp"

namespace sepcount {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates sub-seeds derived from one root seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable named sub-seed: all randomness in the project flows from one root
// seed through calls like sub_seed(seed, "data").
inline std::uint64_t sub_seed(std::uint64_t root, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return mix_seed(root ^ h);
}

inline Rng make_rng(std::uint64_t root, std::string_view name) {
    return Rng(sub_seed(root, name));
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng, double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(rng);
}

// uniform(-bound, bound) init for weight tensors.
inline void fill_uniform(Tensor& t, Rng& rng, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
}

}  // namespace sepcount
