#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "quantkit/dense.hpp"
#include "quantkit/grid.hpp"
#include "quantkit/hessian.hpp"
#include "quantkit/rng.hpp"

namespace qktest {

using namespace quantkit;

// Well-conditioned SPD matrix: a dampened Gram matrix of a random wide X,
// the same construction the solver sees in production.
inline DenseMatrix random_spd(std::size_t n, SeededRng& rng) {
  HessianAccumulator acc(n);
  accumulate(acc, normal_matrix(n, 2 * n + 8, rng));
  return dampen(acc, 0.01);
}

inline DenseMatrix random_hinv(std::size_t n, SeededRng& rng) {
  return invert_spd(random_spd(n, rng));
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

// Plain i-j-k triple loop, the independent matmul oracle.
inline DenseMatrix matmul_naive(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols(), Dtype::F64);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      c.at(i, j) = s;
    }
  return c;
}

// Direct per-column reference for the batched solver: natural order, one
// Gaussian-elimination downdate of H^-1 per column, no batching, no
// Cholesky. Grids fit per row/group from the weights current at each
// group's leading column (mirrors the production refit policy).
inline QuantizedLayer gptq_unbatched_reference(const DenseMatrix& w,
                                               const DenseMatrix& hinv0,
                                               int bits,
                                               std::size_t group_size) {
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  QuantizedLayer q;
  q.rows = rows;
  q.cols = cols;
  q.bits = bits;
  q.codes.assign(rows * cols, 0);
  q.grids = make_group_grids(rows, cols, group_size, bits);
  const std::size_t gsz = q.grids.effective_group_size();

  DenseMatrix work = w;
  DenseMatrix hinv = hinv0;  // shrinks; local index 0 is column j
  std::vector<double> buf(gsz);
  for (std::size_t j = 0; j < cols; ++j) {
    if (j % gsz == 0) {
      const std::size_t c1 = std::min(j + gsz, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = j; c < c1; ++c) buf[c - j] = work.at(r, c);
        q.grids.at(r, q.grids.group_of_col(j)) =
            fit_grid({buf.data(), c1 - j}, bits);
      }
    }
    const double pivot = hinv.at(0, 0);
    const std::size_t group = q.grids.group_of_col(j);
    for (std::size_t r = 0; r < rows; ++r) {
      const QuantGrid& grid = q.grids.at(r, group);
      const uint32_t code = quantize_value(work.at(r, j), grid);
      q.codes[r * cols + j] = code;
      const double e = work.at(r, j) - dequantize_value(code, grid);
      for (std::size_t k = j + 1; k < cols; ++k)
        work.at(r, k) -= e / pivot * hinv.at(0, k - j);
    }
    if (j + 1 < cols) hinv = ge_downdate(hinv, 0);
  }
  return q;
}

}  // namespace qktest
