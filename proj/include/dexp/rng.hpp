#pragma once

#include <cstdint>

#include "dexp/tensor.hpp"

namespace dexp {

// Counter-based pseudo-random generator. Word i of stream (seed, stream) is
//
//   mix64(key + (i + 1) * kGamma)
//   key = mix64(seed + kGamma) ^ mix64(stream + 2 * kGamma)
//
// where mix64 is the SplitMix64 finalizer and kGamma = 0x9e3779b97f4a7c15.
// The same (seed, stream) pair therefore produces the same word sequence on
// every platform, and distinct stream ids give unrelated substreams.
//
// Derived samples use fixed transforms:
//   uniform (0,1]: ((word >> 11) + 1) * 2^-53
//   normal:        Box-Muller, two words per draw,
//                  sqrt(-2 ln u1) * cos(2 pi u2)
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double uniform();                    // (0, 1]
  double uniform(double a, double b);  // (a, b]
  double normal();                     // standard normal
  Tensor normal_tensor(std::vector<std::size_t> shape);
  std::size_t uniform_index(std::size_t n);  // [0, n), rejection sampled

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace dexp
