#include "quantkit/pack.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <thread>

#include "quantkit/errors.hpp"

namespace quantkit {

namespace {

constexpr char kMagic[4] = {'G', 'P', 'Q', '1'};

void put_bits(std::vector<uint8_t>& stream, std::size_t base_bit,
              uint32_t value, int bits) {
  for (int b = 0; b < bits; ++b) {
    if ((value >> b) & 1u) {
      const std::size_t k = base_bit + static_cast<std::size_t>(b);
      stream[k / 8] |= static_cast<uint8_t>(1u << (k % 8));
    }
  }
}

uint32_t get_bits(const uint8_t* stream, std::size_t base_bit, int bits) {
  uint32_t v = 0;
  for (int b = 0; b < bits; ++b) {
    const std::size_t k = base_bit + static_cast<std::size_t>(b);
    v |= static_cast<uint32_t>((stream[k / 8] >> (k % 8)) & 1u) << b;
  }
  return v;
}

template <typename T>
void put(std::vector<uint8_t>& out, T v) {
  uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get(std::span<const uint8_t> in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) throw IoError("GPTQPACK: truncated header");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

std::size_t PackedWeights::groups_per_row() const {
  const std::size_t g = group_size == 0 ? cols : group_size;
  return (static_cast<std::size_t>(cols) + g - 1) / g;
}

PackedWeights pack(const QuantizedLayer& q) {
  if (!valid_bits(q.bits))
    throw ValidationError("pack: unsupported bit-width " +
                          std::to_string(q.bits));
  PackedWeights p;
  p.rows = static_cast<uint32_t>(q.rows);
  p.cols = static_cast<uint32_t>(q.cols);
  p.bits = static_cast<uint8_t>(q.bits);
  p.group_size = static_cast<uint32_t>(q.grids.group_size);

  const std::size_t groups = q.grids.groups_per_row();
  p.scales.reserve(q.rows * groups);
  p.zeros.reserve(q.rows * groups);
  for (std::size_t r = 0; r < q.rows; ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      const QuantGrid& grid = q.grids.at(r, g);
      p.scales.push_back(grid.scale);
      p.zeros.push_back(static_cast<uint8_t>(grid.zero));
    }
  }

  const std::size_t stride = p.row_stride();
  p.payload.assign(q.rows * stride, 0);
  for (std::size_t r = 0; r < q.rows; ++r) {
    std::vector<uint8_t> row(stride, 0);
    for (std::size_t c = 0; c < q.cols; ++c)
      put_bits(row, c * q.bits, q.code(r, c), q.bits);
    std::memcpy(p.payload.data() + r * stride, row.data(), stride);
  }
  return p;
}

QuantizedLayer unpack(const PackedWeights& p) {
  if (!valid_bits(p.bits))
    throw IoError("GPTQPACK: unsupported bit-width " + std::to_string(p.bits));
  QuantizedLayer q;
  q.rows = p.rows;
  q.cols = p.cols;
  q.bits = p.bits;
  q.grids = make_group_grids(p.rows, p.cols, p.group_size, p.bits);
  const std::size_t groups = q.grids.groups_per_row();
  for (std::size_t r = 0; r < q.rows; ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      q.grids.at(r, g).scale = p.scales[r * groups + g];
      q.grids.at(r, g).zero = p.zeros[r * groups + g];
    }
  }
  const std::size_t stride = p.row_stride();
  q.codes.resize(q.rows * q.cols);
  for (std::size_t r = 0; r < q.rows; ++r) {
    const uint8_t* row = p.payload.data() + r * stride;
    for (std::size_t c = 0; c < q.cols; ++c)
      q.codes[r * q.cols + c] = get_bits(row, c * p.bits, p.bits);
  }
  return q;
}

std::vector<uint8_t> to_bytes(const PackedWeights& p) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put<uint32_t>(out, p.rows);
  put<uint32_t>(out, p.cols);
  put<uint8_t>(out, p.bits);
  put<uint32_t>(out, p.group_size);
  const std::size_t groups = p.groups_per_row();
  for (std::size_t r = 0; r < p.rows; ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      put<float>(out, p.scales[r * groups + g]);
      put<uint8_t>(out, p.zeros[r * groups + g]);
    }
  }
  out.insert(out.end(), p.payload.begin(), p.payload.end());
  return out;
}

PackedWeights from_bytes(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw IoError("GPTQPACK: bad magic");
  std::size_t off = 4;
  PackedWeights p;
  p.rows = get<uint32_t>(bytes, off);
  p.cols = get<uint32_t>(bytes, off);
  p.bits = get<uint8_t>(bytes, off);
  p.group_size = get<uint32_t>(bytes, off);
  if (!valid_bits(p.bits))
    throw IoError("GPTQPACK: unsupported bit-width " + std::to_string(p.bits));
  const std::size_t groups = p.groups_per_row();
  p.scales.resize(p.rows * groups);
  p.zeros.resize(p.rows * groups);
  for (std::size_t r = 0; r < p.rows; ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      p.scales[r * groups + g] = get<float>(bytes, off);
      p.zeros[r * groups + g] = get<uint8_t>(bytes, off);
    }
  }
  const std::size_t expect = p.rows * p.row_stride();
  if (bytes.size() - off != expect)
    throw IoError("GPTQPACK: payload length mismatch (expected " +
                  std::to_string(expect) + " bytes, got " +
                  std::to_string(bytes.size() - off) + ")");
  p.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                   bytes.end());
  return p;
}

void write_packed(const std::filesystem::path& path, const PackedWeights& p) {
  const std::vector<uint8_t> bytes = to_bytes(p);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("GPTQPACK: cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("GPTQPACK: write failed: " + path.string());
}

PackedWeights read_packed(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("GPTQPACK: cannot open: " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

namespace {

void qmatvec_rows(const PackedWeights& p, std::span<const float> x, float* y,
                  std::size_t r0, std::size_t r1) {
  const std::size_t groups = p.groups_per_row();
  const std::size_t gsz = p.group_size == 0 ? p.cols : p.group_size;
  const std::size_t stride = p.row_stride();
  const int bits = p.bits;
  for (std::size_t r = r0; r < r1; ++r) {
    const uint8_t* row = p.payload.data() + r * stride;
    const float* scales = p.scales.data() + r * groups;
    const uint8_t* zeros = p.zeros.data() + r * groups;
    double acc = 0.0;
    for (std::size_t c = 0; c < p.cols; ++c) {
      const uint32_t code = get_bits(row, c * bits, bits);
      const std::size_t g = c / gsz;
      const double w = static_cast<double>(scales[g]) *
                       (static_cast<double>(code) - zeros[g]);
      acc += w * static_cast<double>(x[c]);
    }
    y[r] = static_cast<float>(acc);
  }
}

}  // namespace

std::vector<float> qmatvec(const PackedWeights& p, std::span<const float> x,
                           int threads) {
  if (x.size() != p.cols)
    throw ValidationError("qmatvec: vector length " + std::to_string(x.size()) +
                          " != cols " + std::to_string(p.cols));
  for (float v : x) {
    if (!std::isfinite(v)) throw ValidationError("qmatvec: non-finite input");
  }
  std::vector<float> y(p.rows, 0.0f);
  const std::size_t rows = p.rows;
  if (threads <= 1 || rows < 64) {
    qmatvec_rows(p, x, y.data(), 0, rows);
    return y;
  }
  const std::size_t nt = std::min<std::size_t>(threads, rows);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t r0 = rows * t / nt;
    const std::size_t r1 = rows * (t + 1) / nt;
    pool.emplace_back(
        [&, r0, r1] { qmatvec_rows(p, x, y.data(), r0, r1); });
  }
  for (auto& th : pool) th.join();
  return y;
}

MatvecBenchReport matvec_bench(const PackedWeights& p, int trials) {
  if (trials < 1) throw ValidationError("matvec_bench: trials must be >= 1");
  MatvecBenchReport rep;
  rep.trials = trials;
  rep.packed_weight_bytes = p.payload.size();
  rep.packed_total_bytes = p.payload.size() + p.scales.size() * 5;
  rep.analytic_ratio = 16.0 / p.bits;

  // Fixed deterministic input; only the timings vary run to run.
  std::vector<float> x(p.cols);
  for (std::size_t c = 0; c < p.cols; ++c)
    x[c] = static_cast<float>(std::sin(0.1 * static_cast<double>(c + 1)));

  // Dense float32 baseline on the dequantized matrix.
  const QuantizedLayer q = unpack(p);
  const DenseMatrix wd = dequantize_layer(q);
  std::vector<float> dense(wd.rows() * wd.cols());
  for (std::size_t i = 0; i < dense.size(); ++i)
    dense[i] = static_cast<float>(wd.data()[i]);

  double best_q = std::numeric_limits<double>::infinity();
  double best_d = std::numeric_limits<double>::infinity();
  volatile float sink = 0.0f;
  for (int t = 0; t < trials; ++t) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<float> y = qmatvec(p, x);
    auto t1 = std::chrono::steady_clock::now();
    sink = sink + y[0];
    best_q = std::min(
        best_q, std::chrono::duration<double>(t1 - t0).count());

    t0 = std::chrono::steady_clock::now();
    std::vector<float> yd(p.rows, 0.0f);
    for (std::size_t r = 0; r < p.rows; ++r) {
      const float* row = dense.data() + r * p.cols;
      double acc = 0.0;
      for (std::size_t c = 0; c < p.cols; ++c)
        acc += static_cast<double>(row[c]) * static_cast<double>(x[c]);
      yd[r] = static_cast<float>(acc);
    }
    t1 = std::chrono::steady_clock::now();
    sink = sink + yd[0];
    best_d = std::min(
        best_d, std::chrono::duration<double>(t1 - t0).count());
  }
  rep.qmatvec_seconds = best_q;
  rep.dense_seconds = best_d;
  rep.measured_gbps =
      best_q > 0.0
          ? static_cast<double>(rep.packed_weight_bytes) / best_q / 1e9
          : 0.0;
  return rep;
}

}  // namespace quantkit
