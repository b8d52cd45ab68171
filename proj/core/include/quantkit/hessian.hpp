#pragma once

#include "quantkit/dense.hpp"

namespace quantkit {

// Running layer Hessian H = 2 * X * X^T over calibration columns.
// All Hessian-side arithmetic is 64-bit regardless of weight precision.
struct HessianAccumulator {
  explicit HessianAccumulator(std::size_t dim)
      : dim(dim), h(dim, dim, Dtype::F64), nsamples(0) {}

  std::size_t dim;
  DenseMatrix h;  // symmetric by construction (mirrored updates)
  std::size_t nsamples;
};

// Adds 2 * Xc * Xc^T for a chunk Xc of calibration columns (dim x m).
void accumulate(HessianAccumulator& acc, const DenseMatrix& x_chunk);

// H + lambda*I with lambda = fraction * mean(diag(H)). When the diagonal
// mean is zero (all-zero calibration) lambda falls back to 1e-8 so the
// result stays invertible; the solver then degrades to RTN behavior.
DenseMatrix dampen(const HessianAccumulator& acc, double fraction = 0.01);
DenseMatrix dampen_matrix(const DenseMatrix& h, double fraction = 0.01);

// Inverse of a symmetric positive definite matrix via Cholesky solves,
// symmetrized after the solve. Throws NumericError with the failing pivot
// index when a pivot is not positive.
DenseMatrix invert_spd(const DenseMatrix& h);

// Upper-triangular factor T with T^T * T == A.
struct CholeskyFactor {
  std::size_t dim = 0;
  DenseMatrix t;
};

CholeskyFactor cholesky_upper(const DenseMatrix& a);

// One Gaussian-elimination step removing row/column q from an inverse:
//   (hinv - hinv[:,q] * hinv[q,:] / hinv[q][q]) with row/col q deleted.
// Test oracle only; the production solver uses the Cholesky factor instead.
DenseMatrix ge_downdate(const DenseMatrix& hinv, std::size_t q);

}  // namespace quantkit
