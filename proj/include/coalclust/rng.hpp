#ifndef COALCLUST_RNG_HPP
#define COALCLUST_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace coalclust {

// Derives a child seed from (master, tag, index). All randomness in the
// project flows from one master seed through named derivations so that
// results are reproducible regardless of evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index = 0);

// Thin deterministic wrapper over mt19937_64. Variates are generated from
// raw 64-bit draws (not std::*_distribution) so sequences are identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer on [0, n); n >= 1.
  std::uint64_t uniform_int(std::uint64_t n);

  double exponential(double rate);

  // Standard normal via Box-Muller; second variate cached.
  double normal();

  // Index drawn from an (unnormalized) nonnegative weight vector.
  std::size_t categorical(const std::vector<double>& weights);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace coalclust

#endif
