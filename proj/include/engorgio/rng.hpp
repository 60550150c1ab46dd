#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace engorgio {

// Expands one root seed into independent named sub-streams ("train",
// "attack", "eval", ...). Stable across platforms: FNV-1a over the name,
// then a splitmix64 finalizer.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // [0, 1)
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    // (0, 1), safe for log(u)
    double uniform_open();

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::uint64_t next() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace engorgio
