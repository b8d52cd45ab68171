#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace quantkit {

enum class Dtype : uint8_t { F32 = 0, F64 = 1 };

// Row-major dense matrix. Storage is always double; the dtype tag records
// the element precision. For F32 matrices every stored value is exactly
// representable as a float (constructors and ops enforce this), so the tag
// is a contract on the values, not just metadata.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, Dtype dtype = Dtype::F64);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data,
              Dtype dtype = Dtype::F64);

  static DenseMatrix identity(std::size_t n, Dtype dtype = Dtype::F64);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Dtype dtype() const { return dtype_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // Snaps every element to float precision and retags. No-op for F64 target.
  void cast_to(Dtype dtype);

  // True when all elements are finite.
  bool all_finite() const;

  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Dtype dtype_ = Dtype::F64;
  std::vector<double> data_;
};

// Standard product. Result precision is the wider of the two inputs;
// accumulation is always in double. Throws ValidationError on dimension
// mismatch.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// ||a - b||_F^2 summed over entries. Symmetric in its arguments, exactly.
double frobenius_sq_diff(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& m);

}  // namespace quantkit
