#include "pathopt/rng.hpp"

namespace pathopt {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t CounterRng::at(std::uint64_t counter) const
{
    return mix64(key_ + (counter + 1) * kGamma);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    // two rounds so that (m, i) and (m + 1, i - gamma-ish) do not collide
    return mix64(mix64(master ^ 0x5851F42D4C957F2DULL) + (index + 1) * kGamma);
}

} // namespace pathopt
