#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "quantkit/dense.hpp"
#include "quantkit/grid.hpp"

namespace quantkit {

// Record of one greedy row solve: the column order chosen and the
// selection error (quant error squared over the inverse-Hessian diagonal)
// at each step.
struct ObqTrace {
  std::vector<std::size_t> order;
  std::vector<double> step_errors;
};

struct ObqRowResult {
  std::vector<uint32_t> codes;
  ObqTrace trace;
};

// Greedy per-row solver: at each step quantizes the column with the least
// selection error (ties -> lowest column index), optimally updates the
// remaining weights, and removes the column from the live inverse via
// Gaussian elimination. O(d_col^3) per row.
ObqRowResult obq_quantize_row(std::span<const double> w_row,
                              const DenseMatrix& hinv, const GroupGrids& grids,
                              std::size_t row, int bits);

// Whole-layer convenience wrapper: grids fit from the original weights,
// rows solved independently against the shared inverse Hessian.
QuantizedLayer obq_quantize(const DenseMatrix& w, const DenseMatrix& hinv,
                            int bits, std::size_t group_size);

// Brute-force minimizer of the quadratic row error e * H * e^T over all
// code vectors. Ties broken by lexicographically smallest code vector.
// Guarded to tiny instances: (2^bits)^d_col <= 65536, d_col <= 8, bits <= 3.
struct ExhaustiveResult {
  std::vector<uint32_t> codes;
  double error = 0.0;
};

ExhaustiveResult exhaustive_optimal(std::span<const double> w_row,
                                    const DenseMatrix& h, const QuantGrid& grid,
                                    int bits);

// e * H * e^T with e = w_row - dequant(codes); the shared error metric for
// oracle comparisons.
double row_quadratic_error(std::span<const double> w_row,
                           std::span<const uint32_t> codes,
                           const DenseMatrix& h, const GroupGrids& grids,
                           std::size_t row);

}  // namespace quantkit
