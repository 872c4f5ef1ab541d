#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace marginalis {

// All randomness in the library flows through this generator so that results
// are reproducible from a single 64-bit seed.  The contract, relied on by the
// golden-file tests:
//
//   * engine: std::mt19937_64 seeded directly with the given seed
//   * uniforms: u = (x >> 11) * 2^-53 from successive engine outputs x
//   * gaussians: Box-Muller pairs from successive uniforms, cos before sin
//
// std::normal_distribution is deliberately not used; its algorithm is
// implementation-defined and would break reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; one cached value per pair.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is fine here; n is tiny compared to 2^64.
    return engine_() % n;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Deterministic derivation of per-task sub-seeds from a master seed
// (splitmix64 finalizer).  Used so that independent trials and solver
// restarts each get an independent, reproducible stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kDefaultSeed = 20040715ULL;

}  // namespace marginalis
