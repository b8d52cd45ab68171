#include "quantkit/gptq.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "quantkit/errors.hpp"

namespace quantkit {

namespace {

// Fits the grids of the group starting at column c0, for every row, from
// the current working weights (stored column-major: wt[c * rows + r]).
template <typename T>
void fit_group_at(const std::vector<T>& wt, std::size_t rows, std::size_t c0,
                  std::size_t c1, int bits, GroupGrids& grids) {
  std::vector<double> buf(c1 - c0);
  const std::size_t group = grids.group_of_col(c0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = c0; c < c1; ++c)
      buf[c - c0] = static_cast<double>(wt[c * rows + r]);
    grids.at(r, group) = fit_grid(buf, bits);
  }
}

// The column loop of Algorithm: quantize column j, divide the residual by
// the Cholesky diagonal, propagate within the block immediately and to the
// remaining columns once the block completes. Each target column receives
// its corrections in ascending source-column order as single fused
// subtractions, so the arithmetic (and hence the codes) is independent of
// the block size.
template <typename T>
void gptq_core(std::vector<T>& wt, std::size_t rows, std::size_t cols,
               const DenseMatrix& t, const GptqConfig& cfg,
               std::vector<uint32_t>& codes, GroupGrids& grids,
               double& proxy) {
  const std::size_t gsz = grids.effective_group_size();
  const std::size_t bsz = std::min(cfg.block_size, cols);

  if (cfg.refit == GroupRefitPolicy::kOriginalWeights) {
    for (std::size_t c0 = 0; c0 < cols; c0 += gsz)
      fit_group_at(wt, rows, c0, std::min(c0 + gsz, cols), cfg.bits, grids);
  }

  std::vector<T> err(bsz * rows);  // block residuals E, column-major
  for (std::size_t i = 0; i < cols; i += bsz) {
    const std::size_t bend = std::min(i + bsz, cols);
    for (std::size_t j = i; j < bend; ++j) {
      if (cfg.refit == GroupRefitPolicy::kRefitAtBlockEntry && j % gsz == 0)
        fit_group_at(wt, rows, j, std::min(j + gsz, cols), cfg.bits, grids);

      const double tjj = t.at(j, j);
      if (!(tjj > 0.0))
        throw NumericError("gptq: non-positive Cholesky diagonal at column " +
                           std::to_string(j));
      const T tjj_p = static_cast<T>(tjj);
      T* wcol = wt.data() + j * rows;
      T* ecol = err.data() + (j - i) * rows;
      const std::size_t group = grids.group_of_col(j);
      for (std::size_t r = 0; r < rows; ++r) {
        const QuantGrid& grid = grids.at(r, group);
        const uint32_t code = quantize_value(static_cast<double>(wcol[r]), grid);
        codes[r * cols + j] = code;
        const T dq = static_cast<T>(dequantize_value(code, grid));
        const T d = wcol[r] - dq;
        ecol[r] = d / tjj_p;
        proxy += static_cast<double>(d) * static_cast<double>(d);
      }
      for (std::size_t k = j + 1; k < bend; ++k) {
        const T tjk = static_cast<T>(t.at(j, k));
        T* wk = wt.data() + k * rows;
        for (std::size_t r = 0; r < rows; ++r) wk[r] -= ecol[r] * tjk;
      }
    }
    // Lazy update of everything past the block, ascending j.
    for (std::size_t j = i; j < bend; ++j) {
      const T* ecol = err.data() + (j - i) * rows;
      for (std::size_t k = bend; k < cols; ++k) {
        const T tjk = static_cast<T>(t.at(j, k));
        T* wk = wt.data() + k * rows;
        for (std::size_t r = 0; r < rows; ++r) wk[r] -= ecol[r] * tjk;
      }
    }
  }
}

template <typename T>
GptqResult run_gptq(const DenseMatrix& w, const CholeskyFactor& hinv_chol,
                    const GptqConfig& cfg) {
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  // Column-major working copy: the inner loops walk contiguous columns.
  std::vector<T> wt(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      wt[c * rows + r] = static_cast<T>(w.at(r, c));

  GptqResult res;
  res.layer.rows = rows;
  res.layer.cols = cols;
  res.layer.bits = cfg.bits;
  res.layer.codes.resize(rows * cols);
  res.layer.grids = make_group_grids(rows, cols, cfg.group_size, cfg.bits);
  gptq_core(wt, rows, cols, hinv_chol.t, cfg, res.layer.codes,
            res.layer.grids, res.report.layer_error_proxy);
  return res;
}

}  // namespace

GptqResult gptq_quantize(const DenseMatrix& w, const CholeskyFactor& hinv_chol,
                         const GptqConfig& cfg) {
  if (w.cols() != hinv_chol.dim)
    throw ValidationError("gptq: weight cols " + std::to_string(w.cols()) +
                          " != Cholesky dim " + std::to_string(hinv_chol.dim));
  if (!valid_bits(cfg.bits))
    throw ValidationError("gptq: unsupported bit-width " +
                          std::to_string(cfg.bits));
  if (cfg.block_size < 1) throw ValidationError("gptq: block size must be >= 1");
  if (!w.all_finite()) throw ValidationError("gptq: non-finite weight");

  const auto start = std::chrono::steady_clock::now();
  GptqResult res = cfg.precision == Dtype::F64
                       ? run_gptq<double>(w, hinv_chol, cfg)
                       : run_gptq<float>(w, hinv_chol, cfg);
  res.report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return res;
}

GptqResult gptq_quantize_with_calibration(const DenseMatrix& w,
                                          const DenseMatrix& x,
                                          const GptqConfig& cfg) {
  if (x.rows() != w.cols())
    throw ValidationError("gptq: calibration rows " + std::to_string(x.rows()) +
                          " != weight cols " + std::to_string(w.cols()));
  if (x.cols() < 1) throw ValidationError("gptq: empty calibration");

  const auto start = std::chrono::steady_clock::now();
  HessianAccumulator acc(w.cols());
  accumulate(acc, x);

  CholeskyFactor chol;
  int retries = 0;
  double fraction = cfg.damp_fraction;
  for (;;) {
    try {
      chol = cholesky_upper(invert_spd(dampen(acc, fraction)));
      break;
    } catch (const NumericError&) {
      if (retries == 3) throw;
      ++retries;
      fraction *= 10.0;
    }
  }

  GptqResult res = gptq_quantize(w, chol, cfg);
  res.report.damp_retries = retries;

  const DenseMatrix ref = matmul(w, x);
  res.report.true_layer_error =
      frobenius_sq_diff(ref, matmul(dequantize_layer(res.layer), x));
  const QuantizedLayer rtn = rtn_quantize(w, cfg.bits, cfg.group_size);
  res.report.rtn_error =
      frobenius_sq_diff(ref, matmul(dequantize_layer(rtn), x));
  res.report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return res;
}

}  // namespace quantkit
