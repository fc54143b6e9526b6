#include "eft/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace eft {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view path) {
    return splitmix64(master_seed ^ fnv1a64(path));
}

std::size_t RngStream::categorical(std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (total <= 0.0) {
        throw std::invalid_argument("categorical: weights must have positive sum");
    }
    double r = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        r -= weights[i];
        if (r < 0.0) return i;
    }
    return weights.size() - 1;
}

}  // namespace eft
