#include "quantkit/hessian.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "quantkit/errors.hpp"

namespace quantkit {

void accumulate(HessianAccumulator& acc, const DenseMatrix& x_chunk) {
  if (x_chunk.rows() != acc.dim) {
    throw ValidationError("accumulate: chunk has " +
                          std::to_string(x_chunk.rows()) + " rows, expected " +
                          std::to_string(acc.dim));
  }
  const std::size_t d = acc.dim;
  const std::size_t m = x_chunk.cols();
  // Upper triangle once, mirrored, so symmetry holds bit-exactly.
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k)
        s += x_chunk.at(i, k) * x_chunk.at(j, k);
      const double v = 2.0 * s;
      acc.h.at(i, j) += v;
      if (j != i) acc.h.at(j, i) = acc.h.at(i, j);
    }
  }
  acc.nsamples += m;
}

DenseMatrix dampen_matrix(const DenseMatrix& h, double fraction) {
  if (h.rows() != h.cols() || h.rows() == 0)
    throw ValidationError("dampen: need a square nonempty matrix");
  if (!(fraction > 0.0)) throw ValidationError("dampen: fraction must be > 0");
  double mean_diag = 0.0;
  for (std::size_t i = 0; i < h.rows(); ++i) mean_diag += h.at(i, i);
  mean_diag /= static_cast<double>(h.rows());
  double lambda = fraction * mean_diag;
  if (lambda <= 0.0) lambda = 1e-8;  // all-zero calibration floor
  DenseMatrix out = h;
  for (std::size_t i = 0; i < h.rows(); ++i) out.at(i, i) += lambda;
  return out;
}

DenseMatrix dampen(const HessianAccumulator& acc, double fraction) {
  return dampen_matrix(acc.h, fraction);
}

CholeskyFactor cholesky_upper(const DenseMatrix& a) {
  if (a.rows() != a.cols())
    throw ValidationError("cholesky_upper: matrix not square");
  const std::size_t n = a.rows();
  DenseMatrix t(n, n, Dtype::F64);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) t.at(i, j) = a.at(i, j);
  // Right-looking factorization; every inner loop walks a contiguous row.
  for (std::size_t i = 0; i < n; ++i) {
    double* ri = t.row(i).data();
    const double d = ri[i];
    if (!(d > 0.0))
      throw NumericError("cholesky_upper: non-positive pivot at index " +
                         std::to_string(i));
    const double tii = std::sqrt(d);
    ri[i] = tii;
    for (std::size_t j = i + 1; j < n; ++j) ri[j] /= tii;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double f = ri[j];
      if (f == 0.0) continue;
      double* rj = t.row(j).data();
      for (std::size_t k = j; k < n; ++k) rj[k] -= f * ri[k];
    }
  }
  return CholeskyFactor{n, std::move(t)};
}

DenseMatrix invert_spd(const DenseMatrix& h) {
  const CholeskyFactor f = cholesky_upper(h);
  const std::size_t n = h.rows();
  const DenseMatrix& t = f.t;
  // Invert the triangular factor: zt row c holds column c of Z = T^-1
  // (entries k <= c), solved by back substitution over contiguous rows.
  DenseMatrix zt(n, n, Dtype::F64);
  for (std::size_t c = 0; c < n; ++c) {
    double* zc = zt.row(c).data();
    zc[c] = 1.0 / t.at(c, c);
    for (std::size_t i = c; i-- > 0;) {
      const auto ri = t.row(i);
      double s = 0.0;
      for (std::size_t k = i + 1; k <= c; ++k) s -= ri[k] * zc[k];
      zc[i] = s / ri[i];
    }
  }
  // H^-1 = Z Z^T, assembled as a sum of outer products of Z's columns.
  // Only the upper triangle is accumulated, then mirrored, so the result
  // is exactly symmetric.
  DenseMatrix inv(n, n, Dtype::F64);
  for (std::size_t c = 0; c < n; ++c) {
    const double* zc = zt.row(c).data();
    for (std::size_t i = 0; i <= c; ++i) {
      const double v = zc[i];
      if (v == 0.0) continue;
      double* ri = inv.row(i).data();
      for (std::size_t j = i; j <= c; ++j) ri[j] += v * zc[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) inv.at(j, i) = inv.at(i, j);
  return inv;
}

DenseMatrix ge_downdate(const DenseMatrix& hinv, std::size_t q) {
  const std::size_t n = hinv.rows();
  if (hinv.cols() != n) throw ValidationError("ge_downdate: matrix not square");
  if (q >= n) throw ValidationError("ge_downdate: index out of range");
  const double pivot = hinv.at(q, q);
  if (std::abs(pivot) < 1e-12)
    throw NumericError("ge_downdate: pivot too small at index " +
                       std::to_string(q));
  DenseMatrix out(n - 1, n - 1, Dtype::F64);
  for (std::size_t i = 0, oi = 0; i < n; ++i) {
    if (i == q) continue;
    for (std::size_t j = 0, oj = 0; j < n; ++j) {
      if (j == q) continue;
      out.at(oi, oj) = hinv.at(i, j) - hinv.at(i, q) * hinv.at(q, j) / pivot;
      ++oj;
    }
    ++oi;
  }
  // Mirror to keep exact symmetry under float rounding.
  for (std::size_t i = 0; i < n - 1; ++i)
    for (std::size_t j = i + 1; j < n - 1; ++j) out.at(j, i) = out.at(i, j);
  return out;
}

}  // namespace quantkit
