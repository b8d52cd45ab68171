#include "quantkit/rng.hpp"

#include <cmath>
#include <numbers>

namespace quantkit {

double SeededRng::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so log is finite; u2 in [0, 1).
  const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

DenseMatrix normal_matrix(std::size_t rows, std::size_t cols, SeededRng& rng,
                          Dtype dtype) {
  DenseMatrix m(rows, cols, Dtype::F64);
  for (double& v : m.data()) v = rng.next_normal();
  if (dtype == Dtype::F32) m.cast_to(Dtype::F32);
  return m;
}

}  // namespace quantkit
