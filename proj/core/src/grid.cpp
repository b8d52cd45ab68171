#include "quantkit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "quantkit/errors.hpp"

namespace quantkit {

bool valid_bits(int bits) {
  return bits == 2 || bits == 3 || bits == 4 || bits == 8;
}

uint32_t max_code(int bits) { return (1u << bits) - 1u; }

namespace {

// Round half to even. Relies on the default FE_TONEAREST rounding mode.
double round_half_even(double v) { return std::nearbyint(v); }

}  // namespace

QuantGrid fit_grid(std::span<const double> values, int bits) {
  if (!valid_bits(bits))
    throw ValidationError("fit_grid: unsupported bit-width " +
                          std::to_string(bits));
  if (values.empty()) throw ValidationError("fit_grid: empty input");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("fit_grid: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double span = hi - lo;
  if (span == 0.0) span = 1e-8;  // constant input: widen to avoid scale 0
  const double levels = static_cast<double>(max_code(bits));
  const double scale = span / levels;  // stats in 64-bit
  const double z = round_half_even(-lo / scale);
  QuantGrid g;
  g.bits = bits;
  g.scale = static_cast<float>(scale);
  g.zero = static_cast<int>(
      std::clamp(z, 0.0, static_cast<double>(max_code(bits))));
  return g;
}

uint32_t quantize_value(double w, const QuantGrid& grid) {
  // The ratio is formed in float so that w/scale lands exactly on the
  // representable tie when w is a half-step multiple of the stored scale.
  const float ratio = static_cast<float>(w) / grid.scale;
  const double r = round_half_even(static_cast<double>(ratio)) + grid.zero;
  const double hi = static_cast<double>(max_code(grid.bits));
  return static_cast<uint32_t>(std::clamp(r, 0.0, hi));
}

double dequantize_value(uint32_t code, const QuantGrid& grid) {
  if (code > max_code(grid.bits))
    throw ValidationError("dequantize_value: code out of range");
  return static_cast<double>(grid.scale) *
         (static_cast<double>(code) - grid.zero);
}

GroupGrids make_group_grids(std::size_t rows, std::size_t cols,
                            std::size_t group_size, int bits) {
  if (!valid_bits(bits))
    throw ValidationError("make_group_grids: unsupported bit-width " +
                          std::to_string(bits));
  GroupGrids g;
  g.rows = rows;
  g.cols = cols;
  g.group_size = group_size;
  g.grids.assign(rows * g.groups_per_row(), QuantGrid{bits, 1.0f, 0});
  return g;
}

QuantizedLayer rtn_quantize(const DenseMatrix& w, int bits,
                            std::size_t group_size) {
  if (!w.all_finite()) throw ValidationError("rtn_quantize: non-finite weight");
  QuantizedLayer q;
  q.rows = w.rows();
  q.cols = w.cols();
  q.bits = bits;
  q.codes.resize(q.rows * q.cols);
  q.grids = make_group_grids(q.rows, q.cols, group_size, bits);
  const std::size_t gsz = q.grids.effective_group_size();
  for (std::size_t r = 0; r < q.rows; ++r) {
    const auto row = w.row(r);
    for (std::size_t g = 0; g < q.grids.groups_per_row(); ++g) {
      const std::size_t c0 = g * gsz;
      const std::size_t c1 = std::min(c0 + gsz, q.cols);
      const QuantGrid grid = fit_grid(row.subspan(c0, c1 - c0), bits);
      q.grids.at(r, g) = grid;
      for (std::size_t c = c0; c < c1; ++c)
        q.codes[r * q.cols + c] = quantize_value(row[c], grid);
    }
  }
  return q;
}

DenseMatrix dequantize_layer(const QuantizedLayer& q) {
  DenseMatrix w(q.rows, q.cols, Dtype::F64);
  for (std::size_t r = 0; r < q.rows; ++r)
    for (std::size_t c = 0; c < q.cols; ++c)
      w.at(r, c) = dequantize_value(q.code(r, c), q.grids.for_col(r, c));
  w.cast_to(Dtype::F32);
  return w;
}

}  // namespace quantkit
