#pragma once
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace socialsparse {

// Independent streams so that, e.g., changing the number of blobs does not
// perturb the noise draws or the fold assignment.
enum class Stream : std::uint64_t {
    noise = 1,
    blobs = 2,
    folds = 3,
    splits = 4,
    power_iteration = 5,
    labels = 6,
};

/// Portable random source.
///
/// std::mt19937_64 has a bit-exact output sequence mandated by the standard,
/// but the std:: distributions do not, so all transforms to uniform/normal
/// values are done here to keep synthetic data and CV splits identical across
/// platforms.
class Rng {
public:
    Rng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0);

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    // Standard normal via Box-Muller (both variates are used).
    double normal();

    // Uniform integer in [0, bound) without modulo bias.
    std::uint64_t below(std::uint64_t bound);

    template <class T>
    void shuffle(std::span<T> values)
    {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// SplitMix64 finalizer; used to derive stream seeds.
std::uint64_t mix64(std::uint64_t x);

} // namespace socialsparse
