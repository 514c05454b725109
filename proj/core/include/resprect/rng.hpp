#pragma once

#include <cstdint>
#include <string_view>

namespace resprect {

/// xoshiro256++ with splitmix64 seeding.  We carry our own generator and
/// distributions because the std:: distributions are implementation-defined
/// and would break bit-reproducibility across standard libraries.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).  n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller (one cached spare draw).
  double normal();
  double normal(double mean, double stddev);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 step; exposed for seed mixing.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent stream seed from a master seed and a stream name
/// (FNV-1a over the name, then splitmix64 mixing).  Same master + same name
/// always yields the same stream; distinct names decorrelate.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream_name);

}  // namespace resprect
