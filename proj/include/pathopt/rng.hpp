#pragma once

#include <cstdint>

namespace pathopt {

/// Counter-based generator: output i is a SplitMix64 finalizer applied to
/// key + (i + 1) * golden gamma. Any (key, counter) pair can be evaluated
/// independently, so streams keyed by (master seed, path index) do not
/// depend on the order in which paths are produced.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return at(counter_++); }

    /// Uniform double on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    int bit() { return static_cast<int>(next_u64() >> 63); }

    std::uint64_t at(std::uint64_t counter) const;
    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

/// Seed for sub-stream `index` of `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

} // namespace pathopt
