#pragma once

#include <cstdint>

namespace fdkit {

// Counter-based generator: every draw is a pure function of (seed, stream,
// counter), so results are reproducible across platforms and independent of
// draw order between streams. splitmix64 finalizer underneath.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), counter_(0) {}

    // stateless access: value for an explicit counter
    static std::uint64_t bits_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1)
                        + 0xbf58476d1ce4e5b9ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_bits() { return bits_at(seed_, stream_, counter_++); }

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(next_bits() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // uniform in [-a, a)
    double symmetric(double a) { return uniform(-a, a); }

    CounterRng fork(std::uint64_t substream) const {
        return CounterRng(seed_, stream_ * 0x100000001b3ULL + substream + 1);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_;
};

} // namespace fdkit
