#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "quantkit/grid.hpp"

namespace quantkit {

// Bit-exact packed container for a quantized layer (the GPTQPACK format).
// Codes are packed LSB-first: the code of column j occupies stream bits
// [j*bits, (j+1)*bits), and stream bit k lives in bit (k % 8) of byte k/8.
// Each row's stream is padded to a byte boundary.
struct PackedWeights {
  uint32_t rows = 0;
  uint32_t cols = 0;
  uint8_t bits = 4;
  uint32_t group_size = 0;          // 0 = whole row
  std::vector<float> scales;        // rows * groups, row-major
  std::vector<uint8_t> zeros;       // rows * groups, row-major
  std::vector<uint8_t> payload;     // rows * row_stride bytes

  std::size_t groups_per_row() const;
  std::size_t row_stride() const {  // ceil(cols * bits / 8)
    return (static_cast<std::size_t>(cols) * bits + 7) / 8;
  }
};

PackedWeights pack(const QuantizedLayer& q);
QuantizedLayer unpack(const PackedWeights& p);

// GPTQPACK container, little-endian: magic "GPQ1"; rows u32; cols u32;
// bits u8; group_size u32; per row per group {scale f32, zero u8}; then
// per row the padded code bitstream.
std::vector<uint8_t> to_bytes(const PackedWeights& p);
PackedWeights from_bytes(std::span<const uint8_t> bytes);

void write_packed(const std::filesystem::path& path, const PackedWeights& p);
PackedWeights read_packed(const std::filesystem::path& path);

// y[r] = sum_c dequant(code[r][c]) * x[c], decoding on the fly, accumulated
// in 64-bit, emitted float32. Parallel across rows up to `threads`
// (per-row accumulation stays sequential, so results are thread-count
// independent).
std::vector<float> qmatvec(const PackedWeights& p, std::span<const float> x,
                           int threads = 1);

struct MatvecBenchReport {
  int trials = 0;
  double qmatvec_seconds = 0.0;        // best-of-trials
  double dense_seconds = 0.0;          // dense float32 matvec baseline
  std::size_t packed_weight_bytes = 0; // payload only
  std::size_t packed_total_bytes = 0;  // payload + grid metadata
  double analytic_ratio = 0.0;         // 16-bit baseline vs packed: 16/bits
  double measured_gbps = 0.0;          // packed bytes / best qmatvec time
};

MatvecBenchReport matvec_bench(const PackedWeights& p, int trials);

}  // namespace quantkit
