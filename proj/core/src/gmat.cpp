#include "quantkit/gmat.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "quantkit/errors.hpp"

namespace quantkit {

static_assert(std::endian::native == std::endian::little,
              "GMAT I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'G', 'M', 'A', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) throw IoError("GMAT: truncated header");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
  std::string out;
  out.append(kMagic, 4);
  put<uint32_t>(out, kVersion);
  put<uint8_t>(out, static_cast<uint8_t>(m.dtype()));
  put<uint64_t>(out, m.rows());
  put<uint64_t>(out, m.cols());
  if (m.dtype() == Dtype::F32) {
    for (double v : m.data()) put<float>(out, static_cast<float>(v));
  } else {
    for (double v : m.data()) put<double>(out, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("GMAT: cannot open for writing: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("GMAT: write failed: " + path.string());
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("GMAT: cannot open: " + path.string());
  std::string in((std::istreambuf_iterator<char>(f)),
                 std::istreambuf_iterator<char>());

  std::size_t off = 0;
  if (in.size() < 4 || std::memcmp(in.data(), kMagic, 4) != 0)
    throw IoError("GMAT: bad magic in " + path.string());
  off = 4;
  const auto version = get<uint32_t>(in, off);
  if (version != kVersion)
    throw IoError("GMAT: unsupported version " + std::to_string(version));
  const auto dtype_byte = get<uint8_t>(in, off);
  if (dtype_byte > 1)
    throw IoError("GMAT: dtype byte " + std::to_string(dtype_byte) +
                  " not in {0,1}");
  const Dtype dtype = static_cast<Dtype>(dtype_byte);
  const auto rows = get<uint64_t>(in, off);
  const auto cols = get<uint64_t>(in, off);
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  const std::size_t elem = dtype == Dtype::F32 ? 4 : 8;
  if (in.size() - off != n * elem)
    throw IoError("GMAT: truncated payload in " + path.string() +
                  " (expected " + std::to_string(n * elem) + " bytes, got " +
                  std::to_string(in.size() - off) + ")");

  std::vector<double> data(n);
  if (dtype == Dtype::F32) {
    for (std::size_t i = 0; i < n; ++i)
      data[i] = static_cast<double>(get<float>(in, off));
  } else {
    for (std::size_t i = 0; i < n; ++i) data[i] = get<double>(in, off);
  }
  for (double v : data) {
    if (!std::isfinite(v))
      throw IoError("GMAT: non-finite element in " + path.string());
  }
  return DenseMatrix(rows, cols, std::move(data), dtype);
}

}  // namespace quantkit
