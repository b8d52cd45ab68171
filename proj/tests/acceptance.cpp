// Acceptance suite: every criterion prints one PASS/FAIL line; the exit
// code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "quantkit/gptq.hpp"
#include "quantkit/obq.hpp"
#include "quantkit/pack.hpp"
#include "quantkit/pipeline.hpp"

using namespace quantkit;
using qktest::gptq_unbatched_reference;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail = "") {
  std::printf("[%s] %2d. %s%s%s\n", ok ? "PASS" : "FAIL", idx, name,
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) ++g_failures;
}

double now_minus(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

GptqConfig f64_cfg(int bits, std::size_t block = 128, std::size_t group = 0) {
  GptqConfig cfg;
  cfg.bits = bits;
  cfg.block_size = block;
  cfg.group_size = group;
  cfg.precision = Dtype::F64;
  return cfg;
}

DenseMatrix diagonal_calibration(std::size_t dim, SeededRng& rng) {
  DenseMatrix x(dim, dim, Dtype::F64);
  for (std::size_t i = 0; i < dim; ++i) x.at(i, i) = 1.0 + rng.next_uniform();
  return x;
}

// --- criteria -------------------------------------------------------------

void c1_block_invariance() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (uint64_t seed = 0; seed < 10 && ok; ++seed) {
    SeededRng rng(1000 + seed);
    const DenseMatrix w = normal_matrix(64, 64, rng);
    const CholeskyFactor f = cholesky_upper(qktest::random_hinv(64, rng));
    const GptqResult base = gptq_quantize(w, f, f64_cfg(4, 1));
    for (std::size_t b : {8u, 37u, 64u}) {
      ok = ok && (gptq_quantize(w, f, f64_cfg(4, b)).layer.codes ==
                  base.layer.codes);
    }
  }
  const double el = now_minus(t0);
  report(1, "block-size invariance B in {1,8,37,64}, 10 seeds, f64",
         ok && el < 10.0, "elapsed " + std::to_string(el) + " s");
}

void c2_diagonal_is_rtn() {
  bool ok = true;
  for (uint64_t seed = 0; seed < 10 && ok; ++seed) {
    SeededRng rng(1100 + seed);
    const DenseMatrix w = normal_matrix(24, 20, rng);
    const DenseMatrix x = diagonal_calibration(20, rng);
    for (int bits : {2, 3, 4}) {
      const GptqResult res =
          gptq_quantize_with_calibration(w, x, f64_cfg(bits));
      ok = ok && (res.layer.codes == rtn_quantize(w, bits, 0).codes);
    }
  }
  report(2, "diagonal Hessian reduces to RTN at bits 2/3/4, 10 seeds", ok);
}

void c3_cholesky_downdate() {
  bool ok = true;
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    SeededRng rng(1200 + seed);
    const std::size_t dim = 8 + (seed * 3) % 57;  // up to 64
    const DenseMatrix hinv = qktest::random_hinv(dim, rng);
    const CholeskyFactor f = cholesky_upper(hinv);
    DenseMatrix cur = hinv;
    for (std::size_t q = 0; q < dim; ++q) {
      const double s = std::sqrt(cur.at(0, 0));
      for (std::size_t k = 0; k < cur.cols(); ++k) {
        const double rhs = f.t.at(q, q + k);
        const double rel = std::abs(cur.at(0, k) / s - rhs) /
                           std::max(1e-30, std::abs(rhs));
        worst = std::max(worst, rel);
      }
      if (q + 1 < dim) cur = ge_downdate(cur, 0);
    }
  }
  ok = worst <= 1e-8;
  report(3, "Cholesky-downdate equivalence, 20 seeds, rel 1e-8", ok,
         "worst rel " + std::to_string(worst));
}

void c4_unbatched_parity() {
  bool ok = true;
  for (uint64_t seed = 0; seed < 10 && ok; ++seed) {
    SeededRng rng(1300 + seed);
    const DenseMatrix w = normal_matrix(16, 16, rng);
    const DenseMatrix x = normal_matrix(16, 48, rng);
    HessianAccumulator acc(16);
    accumulate(acc, x);
    const DenseMatrix hinv = invert_spd(dampen(acc, 0.01));
    const QuantizedLayer oracle = gptq_unbatched_reference(w, hinv, 3, 0);
    for (std::size_t b : {1u, 5u, 16u}) {
      ok = ok && (gptq_quantize(w, cholesky_upper(hinv), f64_cfg(3, b))
                      .layer.codes == oracle.codes);
    }
  }
  report(4, "unbatched per-column oracle parity, 10 seeded 16x16", ok);
}

void c5_scale_invariance() {
  bool ok = true;
  for (uint64_t seed = 0; seed < 5 && ok; ++seed) {
    SeededRng rng(1400 + seed);
    const DenseMatrix w = normal_matrix(16, 16, rng);
    const DenseMatrix x = normal_matrix(16, 48, rng);
    const GptqResult base = gptq_quantize_with_calibration(w, x, f64_cfg(4));
    for (double c : {0.001, 1000.0}) {
      DenseMatrix xs = x;
      for (double& v : xs.data()) v *= c;
      ok = ok && (gptq_quantize_with_calibration(w, xs, f64_cfg(4))
                      .layer.codes == base.layer.codes);
    }
  }
  report(5, "Hessian scale invariance under X -> cX, c in {1e-3, 1e3}", ok);
}

void c6_error_ordering() {
  int wins = 0;
  double gptq_mean = 0.0, rtn_mean = 0.0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    SeededRng rng(1500 + seed);
    const DenseMatrix w = normal_matrix(32, 32, rng);
    const DenseMatrix x = normal_matrix(32, 128, rng);
    const GptqResult res = gptq_quantize_with_calibration(w, x, f64_cfg(4));
    if (res.report.true_layer_error < res.report.rtn_error) ++wins;
    gptq_mean += res.report.true_layer_error / 100.0;
    rtn_mean += res.report.rtn_error / 100.0;
  }
  const bool ok = wins >= 95 && gptq_mean < rtn_mean;
  report(6, "GPTQ < RTN on >= 95/100 seeds and in the mean", ok,
         "wins " + std::to_string(wins) + ", mean " +
             std::to_string(gptq_mean) + " vs " + std::to_string(rtn_mean));
}

void c7_gptq_vs_obq() {
  double log_sum = 0.0;
  const int n = 50;
  for (uint64_t seed = 0; seed < n; ++seed) {
    SeededRng rng(1600 + seed);
    const DenseMatrix w = normal_matrix(64, 64, rng);
    const DenseMatrix h = qktest::random_spd(64, rng);
    const DenseMatrix hinv = invert_spd(h);

    const GptqResult gp = gptq_quantize(w, cholesky_upper(hinv), f64_cfg(3));
    const QuantizedLayer ob = obq_quantize(w, hinv, 3, 0);

    double ge = 0.0, oe = 0.0;
    for (std::size_t r = 0; r < 64; ++r) {
      ge += row_quadratic_error(w.row(r),
                                {gp.layer.codes.data() + r * 64, 64}, h,
                                gp.layer.grids, r);
      oe += row_quadratic_error(w.row(r), {ob.codes.data() + r * 64, 64}, h,
                                ob.grids, r);
    }
    log_sum += std::log(ge / oe);
  }
  const double geo = std::exp(log_sum / n);
  // Frozen regression value from the first green run; the suite is fully
  // deterministic, so any drift means the solver arithmetic changed.
  const double frozen = 1.126924;
  const bool ok = geo <= 1.5 && std::abs(geo - frozen) < 5e-7;
  report(7, "geometric-mean error ratio GPTQ/OBQ <= 1.5, 50 seeds", ok,
         "measured ratio " + std::to_string(geo) + " (frozen " +
             std::to_string(frozen) + ")");
}

void c8_oracle_chain() {
  bool ok = true;
  for (uint64_t seed = 0; seed < 25 && ok; ++seed) {
    SeededRng rng(1700 + seed);
    const std::size_t d = 2 + seed % 3;  // 2..4 columns
    const DenseMatrix w = normal_matrix(1, d, rng);
    const DenseMatrix h = qktest::random_spd(d, rng);
    const DenseMatrix hinv = invert_spd(h);

    const QuantizedLayer rtn = rtn_quantize(w, 2, 0);
    const ObqRowResult ob = obq_quantize_row(w.row(0), hinv, rtn.grids, 0, 2);
    const GptqResult gp = gptq_quantize(w, cholesky_upper(hinv), f64_cfg(2));
    const ExhaustiveResult opt =
        exhaustive_optimal(w.row(0), h, rtn.grids.at(0, 0), 2);

    const double obe = row_quadratic_error(w.row(0), ob.codes, h, rtn.grids, 0);
    const double gpe = row_quadratic_error(
        w.row(0), {gp.layer.codes.data(), d}, h, gp.layer.grids, 0);
    ok = ok && opt.error <= obe + 1e-12 && opt.error <= gpe + 1e-12;
  }
  // Grid-point instance (scale exactly 1): all quantizers are exact.
  {
    const DenseMatrix w(1, 4, {0, 1, 2, 3});
    const DenseMatrix h = DenseMatrix::identity(4);
    const QuantizedLayer rtn = rtn_quantize(w, 2, 0);
    const ExhaustiveResult opt =
        exhaustive_optimal(w.row(0), h, rtn.grids.at(0, 0), 2);
    const double rte =
        row_quadratic_error(w.row(0), {rtn.codes.data(), 4}, h, rtn.grids, 0);
    ok = ok && opt.error == 0.0 && rte == 0.0;
  }
  report(8, "oracle chain: exhaustive <= OBQ and <= GPTQ on <=4-col instances",
         ok);
}

void c9_pack_roundtrip() {
  bool ok = true;
  int cases = 0;
  SeededRng rng(1800);
  const int widths[4] = {2, 3, 4, 8};
  while (cases < 1000 && ok) {
    const int bits = widths[cases % 4];
    const std::size_t cols = 1 + (cases * 7) % 65;
    const std::size_t group_opts[3] = {0, 32, cols > 1 ? cols - 1 : 0};
    const std::size_t group = group_opts[cases % 3];
    const DenseMatrix w = normal_matrix(3, cols, rng);
    const QuantizedLayer q = rtn_quantize(w, bits, group);
    const QuantizedLayer back = unpack(from_bytes(to_bytes(pack(q))));
    ok = ok && back.codes == q.codes && back.bits == q.bits;
    for (std::size_t i = 0; ok && i < q.grids.grids.size(); ++i)
      ok = back.grids.grids[i].scale == q.grids.grids[i].scale &&
           back.grids.grids[i].zero == q.grids.grids[i].zero;
    ++cases;
  }
  // The documented 3-bit example row.
  QuantizedLayer ex;
  ex.rows = 1;
  ex.cols = 8;
  ex.bits = 3;
  ex.codes = {1, 2, 3, 4, 5, 6, 7, 0};
  ex.grids = make_group_grids(1, 8, 0, 3);
  const PackedWeights p = pack(ex);
  ok = ok && p.payload.size() == 3 && p.payload[0] == 0xD1 &&
       p.payload[1] == 0x58 && p.payload[2] == 0x1F;
  report(9, "pack/unpack bit-exact over 1000 seeded layers + example row", ok,
         std::to_string(cases) + " cases");
}

void c10_qmatvec_parity() {
  bool ok = true;
  int cases = 0;
  SeededRng rng(1900);
  const int widths[4] = {2, 3, 4, 8};
  while (cases < 1000 && ok) {
    const int bits = widths[cases % 4];
    const std::size_t cols = 4 + (cases * 5) % 48;
    const std::size_t rows = 2 + cases % 12;
    const DenseMatrix w = normal_matrix(rows, cols, rng);
    const QuantizedLayer q = rtn_quantize(w, bits, cases % 2 ? 32 : 0);
    const PackedWeights p = pack(q);
    const DenseMatrix wd = dequantize_layer(q);
    std::vector<float> x(cols);
    DenseMatrix xv(cols, 1, Dtype::F64);
    for (std::size_t i = 0; i < cols; ++i) {
      x[i] = static_cast<float>(rng.next_normal());
      xv.at(i, 0) = static_cast<double>(x[i]);
    }
    const DenseMatrix ref = matmul(wd, xv);
    const std::vector<float> y = qmatvec(p, x);
    for (std::size_t r = 0; ok && r < rows; ++r) {
      ok = std::abs(y[r] - ref.at(r, 0)) <=
           1e-5 * std::max(1.0, std::abs(ref.at(r, 0)));
    }
    ++cases;
  }
  std::string ratios;
  for (int bits : widths)
    ratios += std::to_string(16.0 / bits) + " ";
  report(10, "qmatvec parity vs dense oracle, 1000 seeded cases", ok,
         "bytes-touched ratios (16/bits): " + ratios);
}

void c11_propagation() {
  double on = 0.0, off = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Model m;
    SeededRng wrng(2020 + seed);
    for (int i = 0; i < 4; ++i) {
      m.weights.push_back(normal_matrix(64, 64, wrng, Dtype::F32));
      m.relu.push_back(i < 3);
    }
    SeededRng crng(2120 + seed), erng(2220 + seed);
    const DenseMatrix calib = normal_matrix(64, 128, crng);
    const DenseMatrix ev = normal_matrix(64, 64, erng);
    on += quantize_model(m, calib, f64_cfg(3), true, QuantMethod::kGptq, &ev)
              .second.end_to_end_error;
    off += quantize_model(m, calib, f64_cfg(3), false, QuantMethod::kGptq, &ev)
               .second.end_to_end_error;
  }
  report(11, "quantized-input propagation helps on average, 20 paired seeds",
         on <= off,
         "mean on " + std::to_string(on / 20.0) + " vs off " +
             std::to_string(off / 20.0));
}

void c12_scaling() {
  auto time_gptq = [](std::size_t d) {
    SeededRng rng(2300 + d);
    const DenseMatrix w = normal_matrix(d, d, rng, Dtype::F32);
    const DenseMatrix x = normal_matrix(d, 256, rng);
    GptqConfig cfg;
    cfg.bits = 4;
    cfg.block_size = 128;
    const auto t0 = std::chrono::steady_clock::now();
    gptq_quantize_with_calibration(w, x, cfg);
    return now_minus(t0);
  };
  auto time_obq = [](std::size_t d) {
    SeededRng rng(2400 + d);
    const DenseMatrix w = normal_matrix(d, d, rng);
    const DenseMatrix hinv = qktest::random_hinv(d, rng);
    const auto t0 = std::chrono::steady_clock::now();
    obq_quantize(w, hinv, 4, 0);
    return now_minus(t0);
  };

  const double g256 = time_gptq(256);
  const double g1024 = time_gptq(1024);
  const double o128 = time_obq(128);
  const double o256 = time_obq(256);

  const double gptq_factor = g1024 / g256;  // cubic over 4x width = 64
  const double obq_factor = o256 / o128;    // quartic over 2x width = 16
  const bool ok = g1024 < 10.0 && gptq_factor <= 96.0 && obq_factor >= 9.0;
  report(12, "scaling: 1024x1024 < 10 s, GPTQ growth <= cubic, OBQ steeper",
         ok,
         "gptq 1024 " + std::to_string(g1024) + " s, growth x" +
             std::to_string(gptq_factor) + "; obq growth x" +
             std::to_string(obq_factor));
}

void c13_grouping_trend() {
  double mean[3] = {0.0, 0.0, 0.0};
  const std::size_t groups[3] = {0, 64, 32};
  for (uint64_t seed = 0; seed < 100; ++seed) {
    SeededRng rng(2500 + seed);
    const DenseMatrix w = normal_matrix(32, 32, rng);
    const DenseMatrix x = normal_matrix(32, 128, rng);
    for (int gi = 0; gi < 3; ++gi) {
      const GptqResult res = gptq_quantize_with_calibration(
          w, x, f64_cfg(2, 128, groups[gi]));
      mean[gi] += res.report.true_layer_error / 100.0;
    }
  }
  const bool ok = mean[0] >= mean[1] && mean[1] >= mean[2];
  report(13, "2-bit mean error nonincreasing over group sizes {0,64,32}", ok,
         std::to_string(mean[0]) + " >= " + std::to_string(mean[1]) +
             " >= " + std::to_string(mean[2]));
}

}  // namespace

int main() {
  c1_block_invariance();
  c2_diagonal_is_rtn();
  c3_cholesky_downdate();
  c4_unbatched_parity();
  c5_scale_invariance();
  c6_error_ordering();
  c7_gptq_vs_obq();
  c8_oracle_chain();
  c9_pack_roundtrip();
  c10_qmatvec_parity();
  c11_propagation();
  c12_scaling();
  c13_grouping_trend();
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures;
}
