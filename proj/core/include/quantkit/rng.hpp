#pragma once

#include <cstdint>
#include <random>

#include "quantkit/dense.hpp"

namespace quantkit {

// Deterministic seeded generator. The engine is std::mt19937_64, whose
// output sequence is pinned by the C++ standard, so identical seeds give
// identical streams on every platform. Normal variates come from an
// explicit Box-Muller transform over 53-bit uniforms (spelled out here
// rather than std::normal_distribution, which is implementation-defined).
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double next_uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double next_normal();

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

DenseMatrix normal_matrix(std::size_t rows, std::size_t cols, SeededRng& rng,
                          Dtype dtype = Dtype::F64);

}  // namespace quantkit
