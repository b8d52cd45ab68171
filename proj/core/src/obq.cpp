#include "quantkit/obq.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "quantkit/errors.hpp"
#include "quantkit/hessian.hpp"

namespace quantkit {

ObqRowResult obq_quantize_row(std::span<const double> w_row,
                              const DenseMatrix& hinv, const GroupGrids& grids,
                              std::size_t row, int bits) {
  (void)bits;  // bit-width lives in the grids
  const std::size_t d = w_row.size();
  if (hinv.rows() != d || hinv.cols() != d)
    throw ValidationError("obq: inverse Hessian dim != row length");

  std::vector<double> w(w_row.begin(), w_row.end());
  std::vector<std::size_t> live(d);  // local index -> global column
  for (std::size_t i = 0; i < d; ++i) live[i] = i;

  ObqRowResult res;
  res.codes.assign(d, 0);
  DenseMatrix h = hinv;

  for (std::size_t step = 0; step < d; ++step) {
    // Greedy selection: lowest (quant error)^2 / hinv diagonal, tie -> lowest
    // global column index (live[] is ascending, so first hit wins).
    std::size_t best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < live.size(); ++q) {
      const std::size_t col = live[q];
      const QuantGrid& grid = grids.for_col(row, col);
      const double dq =
          dequantize_value(quantize_value(w[col], grid), grid);
      const double e = w[col] - dq;
      const double sel = e * e / h.at(q, q);
      if (sel < best_err) {
        best_err = sel;
        best = q;
      }
    }

    const std::size_t col = live[best];
    const QuantGrid& grid = grids.for_col(row, col);
    const uint32_t code = quantize_value(w[col], grid);
    res.codes[col] = code;
    res.trace.order.push_back(col);
    res.trace.step_errors.push_back(best_err);

    // delta_F = -(w_q - quant(w_q)) / hinv_qq * hinv[:,q] over the live set.
    const double e = w[col] - dequantize_value(code, grid);
    const double ratio = e / h.at(best, best);
    for (std::size_t k = 0; k < live.size(); ++k) {
      if (k == best) continue;
      w[live[k]] -= ratio * h.at(k, best);
    }

    if (step + 1 < d) h = ge_downdate(h, best);
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return res;
}

QuantizedLayer obq_quantize(const DenseMatrix& w, const DenseMatrix& hinv,
                            int bits, std::size_t group_size) {
  QuantizedLayer q;
  q.rows = w.rows();
  q.cols = w.cols();
  q.bits = bits;
  q.codes.resize(q.rows * q.cols);
  q.grids = make_group_grids(q.rows, q.cols, group_size, bits);

  // Grids from the original weights, same as the RTN baseline.
  const QuantizedLayer ref = rtn_quantize(w, bits, group_size);
  q.grids = ref.grids;

  for (std::size_t r = 0; r < q.rows; ++r) {
    ObqRowResult rr = obq_quantize_row(w.row(r), hinv, q.grids, r, bits);
    std::copy(rr.codes.begin(), rr.codes.end(), q.codes.begin() + r * q.cols);
  }
  return q;
}

ExhaustiveResult exhaustive_optimal(std::span<const double> w_row,
                                    const DenseMatrix& h, const QuantGrid& grid,
                                    int bits) {
  const std::size_t d = w_row.size();
  if (d > 8 || bits > 3)
    throw ValidationError("exhaustive_optimal: instance too large");
  const uint64_t levels = 1ull << bits;
  uint64_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= levels;
  if (total > 65536)
    throw ValidationError("exhaustive_optimal: instance too large");

  std::vector<uint32_t> codes(d, 0);
  ExhaustiveResult best;
  best.error = std::numeric_limits<double>::infinity();
  std::vector<double> e(d);
  for (uint64_t n = 0; n < total; ++n) {
    // Decode n with index 0 as the most significant digit, so iteration is
    // lexicographic and strict improvement keeps the smallest tie.
    uint64_t rem = n;
    for (std::size_t i = d; i-- > 0;) {
      codes[i] = static_cast<uint32_t>(rem % levels);
      rem /= levels;
    }
    for (std::size_t i = 0; i < d; ++i)
      e[i] = w_row[i] - dequantize_value(codes[i], grid);
    double err = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += h.at(i, j) * e[j];
      err += e[i] * s;
    }
    if (err < best.error) {
      best.error = err;
      best.codes = codes;
    }
  }
  return best;
}

double row_quadratic_error(std::span<const double> w_row,
                           std::span<const uint32_t> codes,
                           const DenseMatrix& h, const GroupGrids& grids,
                           std::size_t row) {
  const std::size_t d = w_row.size();
  std::vector<double> e(d);
  for (std::size_t i = 0; i < d; ++i)
    e[i] = w_row[i] - dequantize_value(codes[i], grids.for_col(row, i));
  double err = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += h.at(i, j) * e[j];
    err += e[i] * s;
  }
  return err;
}

}  // namespace quantkit
