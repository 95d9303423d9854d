#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace disentlab::numerics {

/// Counter-based random stream. Draw k of a stream is a pure function of
/// (seed, k), so sequences are reproducible across runs and platforms
/// (integer and uniform draws are bit-exact everywhere; normals go through
/// libm log/cos).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n);
    double normal();

    /// Child stream keyed by label. Does not advance this stream, so siblings
    /// are independent of the order in which they are derived or drawn.
    RngStream child(std::string_view label) const;
    RngStream child(std::uint64_t index) const;

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace disentlab::numerics
