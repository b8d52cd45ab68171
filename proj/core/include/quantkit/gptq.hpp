#pragma once

#include "quantkit/dense.hpp"
#include "quantkit/grid.hpp"
#include "quantkit/hessian.hpp"

namespace quantkit {

// When group grids are determined: from the original weights up front, or
// from the current (error-compensated) weights when the solver first
// reaches a group's leading column.
enum class GroupRefitPolicy { kOriginalWeights, kRefitAtBlockEntry };

struct GptqConfig {
  int bits = 4;
  std::size_t group_size = 0;    // 0 = one group per row
  std::size_t block_size = 128;  // lazy-update batch width B
  double damp_fraction = 0.01;
  Dtype precision = Dtype::F32;  // weight-update arithmetic
  GroupRefitPolicy refit = GroupRefitPolicy::kRefitAtBlockEntry;
};

struct QuantizeReport {
  double layer_error_proxy = 0.0;  // running sum of per-column squared error
  double true_layer_error = 0.0;   // ||WX - W_hat X||^2, when X is available
  double rtn_error = 0.0;          // same metric for the RTN baseline
  double wall_time_s = 0.0;
  int damp_retries = 0;
};

struct GptqResult {
  QuantizedLayer layer;
  QuantizeReport report;
};

// Column-wise quantization of all rows in natural order with lazy batched
// second-order updates, driven by the upper Cholesky factor of H^-1.
// The caller's matrix is never modified.
GptqResult gptq_quantize(const DenseMatrix& w, const CholeskyFactor& hinv_chol,
                         const GptqConfig& cfg);

// Full path from calibration inputs: H = 2XX^T, dampen (retrying with a 10x
// larger fraction up to 3 times on factorization failure), invert, factor,
// solve. Also fills true_layer_error and rtn_error.
GptqResult gptq_quantize_with_calibration(const DenseMatrix& w,
                                          const DenseMatrix& x,
                                          const GptqConfig& cfg);

}  // namespace quantkit
