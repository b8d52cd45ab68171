#include "quantkit/dense.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "quantkit/errors.hpp"

namespace quantkit {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, Dtype dtype)
    : rows_(rows), cols_(cols), dtype_(dtype), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data, Dtype dtype)
    : rows_(rows), cols_(cols), dtype_(dtype), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ValidationError("DenseMatrix: data length " +
                          std::to_string(data_.size()) + " != rows*cols " +
                          std::to_string(rows_ * cols_));
  }
  if (dtype_ == Dtype::F32) cast_to(Dtype::F32);
}

DenseMatrix DenseMatrix::identity(std::size_t n, Dtype dtype) {
  DenseMatrix m(n, n, dtype);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

void DenseMatrix::cast_to(Dtype dtype) {
  if (dtype == Dtype::F32) {
    for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
  }
  dtype_ = dtype;
}

bool DenseMatrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ValidationError("matmul: dimension mismatch " +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()));
  }
  Dtype out_dtype = (a.dtype() == Dtype::F64 || b.dtype() == Dtype::F64)
                        ? Dtype::F64
                        : Dtype::F32;
  DenseMatrix c(a.rows(), b.cols(), out_dtype);
  // i-k-j order: b and c rows stream contiguously. Summation order over k
  // is ascending for every output element, same as the plain triple loop.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    double* crow = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  if (out_dtype == Dtype::F32) c.cast_to(Dtype::F32);
  return c;
}

double frobenius_sq_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) {
    throw ValidationError("frobenius_sq_diff: shape mismatch");
  }
  double sum = 0.0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    sum += d * d;
  }
  return sum;
}

DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix t(m.cols(), m.rows(), m.dtype());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t.at(j, i) = m.at(i, j);
  return t;
}

}  // namespace quantkit
