#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace rep {

/// Derives independent stream seeds from one master seed. Every source of
/// randomness in the pipeline (factor init, masking, training, synthesis)
/// pulls its seed from a named stream so that experiments are reproducible
/// and the streams stay decoupled when one consumer draws more numbers.
class SeedStream {
public:
  explicit SeedStream(std::uint64_t master) : master_(master) {}

  /// Stream seed for `name`; stable across runs and platforms.
  std::uint64_t derive(std::string_view name) const;

  std::uint64_t master() const { return master_; }

private:
  std::uint64_t master_;
};

/// Deterministic RNG with fully specified output. The engine is mt19937_64
/// (pinned by the standard); the distributions below are implemented by hand
/// because the std distributions are implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1). Strictly positive.
  double uniform_open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double normal();

  /// Uniform integer in [lo, hi], inclusive. Rejection sampling, no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct indices drawn from [0, n), in random order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rep
