#pragma once

#include <cstdint>
#include <random>

namespace rydcat {

/// SplitMix64 finalizer. Used to derive independent per-item seeds from a run seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of work item `index` under run seed `seed0`:
/// splitmix64(splitmix64(seed0) ^ index). Independent of scheduling order.
inline std::uint64_t derive_seed(std::uint64_t seed0, std::uint64_t index) {
    return splitmix64(splitmix64(seed0) ^ index);
}

/// Deterministic uniform stream. The double conversion is done by hand so the
/// values are identical across standard library implementations.
class UniformStream {
  public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double next() {
        const std::uint64_t bits = engine_() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace rydcat
