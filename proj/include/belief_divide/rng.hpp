#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace belief_divide {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the stream addressed by (master, keys...). Streams are addressed
/// by index rather than by consumption order, so results never depend on how
/// work is scheduled across threads.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

/// Stream tags keep independent uses of one master seed apart.
enum class StreamTag : std::uint64_t {
    profile = 1,
    panel = 2,
    crn = 3,
    trajectory = 4,
    bootstrap = 5,
    restart = 6,
    replication = 7,
    training = 8,
};

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}
    RngStream(std::uint64_t master, std::initializer_list<std::uint64_t> keys)
        : engine_(derive_seed(master, keys)) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    bool bernoulli(double p) { return uniform() < p; }
    std::int64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        return std::poisson_distribution<std::int64_t>(mean)(engine_);
    }
    std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace belief_divide
