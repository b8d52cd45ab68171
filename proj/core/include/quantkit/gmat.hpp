#pragma once

#include <filesystem>

#include "quantkit/dense.hpp"

namespace quantkit {

// GMAT binary matrix file, little-endian throughout:
//   magic   4 bytes ASCII "GMAT"
//   version u32 = 1
//   dtype   1 byte (0 = float32, 1 = float64)
//   rows    u64
//   cols    u64
//   payload rows*cols elements, row-major, IEEE-754
// Roundtrip is bit-exact for both element precisions.
DenseMatrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const DenseMatrix& m);

}  // namespace quantkit
