#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace eft {

// Deterministic stream splitting: every consumer of randomness derives its own
// stream from (master_seed, path). Streams are keyed by path string, so adding
// a new consumer never perturbs the draws of existing ones.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view path);

/// A single random stream. One stream per logical consumer; never share a
/// stream across threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    static RngStream derive(std::uint64_t master_seed, std::string_view path) {
        return RngStream(derive_seed(master_seed, path));
    }

    /// Uniform double in [0, 1).
    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    /// Standard normal draw.
    double gaussian() {
        return std::normal_distribution<double>(0.0, 1.0)(engine_);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    /// Sample an index from an unnormalized weight vector.
    std::size_t categorical(std::span<const double> weights);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace eft
