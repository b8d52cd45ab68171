#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "quantkit/dense.hpp"

namespace quantkit {

// Uniform asymmetric grid: real value = scale * (code - zero).
// Ties round half to even; codes of out-of-range values saturate.
struct QuantGrid {
  int bits = 4;
  float scale = 1.0f;   // always > 0
  int zero = 0;         // integer in [0, 2^bits - 1]
};

bool valid_bits(int bits);  // supported widths: 2, 3, 4, 8
uint32_t max_code(int bits);

// Min-max fit: scale = (max - min) / (2^bits - 1),
// zero = clamp(round_half_even(-min / scale), 0, 2^bits - 1).
// A constant input widens the range by 1e-8 before the formula.
QuantGrid fit_grid(std::span<const double> values, int bits);

uint32_t quantize_value(double w, const QuantGrid& grid);
double dequantize_value(uint32_t code, const QuantGrid& grid);

// Per-row, per-group grids over groups of group_size consecutive columns
// (0 means one group per row; the last group may be smaller).
struct GroupGrids {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t group_size = 0;
  std::vector<QuantGrid> grids;  // rows * groups_per_row, row-major

  std::size_t effective_group_size() const {
    return group_size == 0 ? cols : group_size;
  }
  std::size_t groups_per_row() const {
    const std::size_t g = effective_group_size();
    return (cols + g - 1) / g;
  }
  std::size_t group_of_col(std::size_t c) const {
    return c / effective_group_size();
  }
  QuantGrid& at(std::size_t row, std::size_t group) {
    return grids[row * groups_per_row() + group];
  }
  const QuantGrid& at(std::size_t row, std::size_t group) const {
    return grids[row * groups_per_row() + group];
  }
  const QuantGrid& for_col(std::size_t row, std::size_t col) const {
    return at(row, group_of_col(col));
  }
};

GroupGrids make_group_grids(std::size_t rows, std::size_t cols,
                            std::size_t group_size, int bits);

// Integer code matrix plus the grids that decode it.
struct QuantizedLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  int bits = 4;
  std::vector<uint32_t> codes;  // row-major, each in [0, 2^bits - 1]
  GroupGrids grids;

  uint32_t code(std::size_t r, std::size_t c) const { return codes[r * cols + c]; }
};

// Round-to-nearest baseline: grids fit per row/group from the weights
// themselves, then every element quantized independently.
QuantizedLayer rtn_quantize(const DenseMatrix& w, int bits,
                            std::size_t group_size);

// Elementwise decode with the owning group's grid; float32 output.
DenseMatrix dequantize_layer(const QuantizedLayer& q);

}  // namespace quantkit
