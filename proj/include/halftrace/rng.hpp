#pragma once

#include <cstdint>

namespace halftrace {

// Counter-based generator (stateless splitmix64 over seed/counter pairs).
// Draw i never depends on draw j, so parallel sampling reproduces the
// sequential stream for a fixed seed.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t word(std::uint64_t counter) const {
        std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (counter + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        // second round decorrelates nearby counters
        z += seed_ ^ 0xd1b54a32d192ed03ULL;
        z = (z ^ (z >> 29)) * 0xff51afd7ed558ccdULL;
        z = (z ^ (z >> 32)) * 0xc4ceb9fe1a85ec53ULL;
        return z ^ (z >> 33);
    }

    // uniform in [0, 1)
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(word(counter) >> 11) * 0x1.0p-53;
    }

    double uniform(std::uint64_t counter, double lo, double hi) const {
        return lo + (hi - lo) * uniform(counter);
    }

    // stream(k) gives an independent substream for nested draws
    CounterRng stream(std::uint64_t k) const { return CounterRng(word(~k)); }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
};

}  // namespace halftrace
