// quantkit: deterministic post-training weight quantization toolbox.
//
// Subcommands:
//   gen       write a seeded MLP fixture tree (manifest + GMAT files)
//   quantize  quantize a model with gptq / rtn / obq into GPTQPACK files
//   eval      report reconstruction errors of a quantized model
//   bench     time the dequantizing matvec against a dense float32 baseline
//
// Exit codes: 0 success, 2 validation, 3 numerical failure, 4 I/O.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quantkit/errors.hpp"
#include "quantkit/gmat.hpp"
#include "quantkit/gptq.hpp"
#include "quantkit/obq.hpp"
#include "quantkit/pack.hpp"
#include "quantkit/pipeline.hpp"
#include "quantkit/rng.hpp"

namespace fs = std::filesystem;
using namespace quantkit;

namespace {

// Seed stream salts: weights use the raw seed; calibration and evaluation
// batches come from disjoint streams.
constexpr uint64_t kCalibSalt = 0x5EEDCA11B0000001ull;
constexpr uint64_t kEvalSalt = 0x5EEDE7A100000002ull;

int default_threads() {
  if (const char* env = std::getenv("QUANTKIT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

struct GlobalOpts {
  std::string precision = "f32";
  int threads = default_threads();
};

Dtype parse_precision(const std::string& p) {
  if (p == "f32") return Dtype::F32;
  if (p == "f64") return Dtype::F64;
  throw ValidationError("precision must be f32 or f64");
}

int cmd_gen(int layers, int dims, int calib_cols, uint64_t seed,
            const std::string& out_dir) {
  fs::create_directories(out_dir);
  ModelManifest m;
  m.name = "mlp" + std::to_string(layers) + "x" + std::to_string(dims);
  m.seed = seed;
  m.calibration = "calib.gmat";

  SeededRng wrng(seed);
  for (int i = 0; i < layers; ++i) {
    const std::string fname = "layer" + std::to_string(i) + ".gmat";
    DenseMatrix w = normal_matrix(dims, dims, wrng, Dtype::F32);
    write_matrix(fs::path(out_dir) / fname, w);
    LayerSpec spec;
    spec.weights = fname;
    spec.rows = static_cast<std::size_t>(dims);
    spec.cols = static_cast<std::size_t>(dims);
    spec.relu = (i + 1 < layers);  // linear head
    m.layers.push_back(spec);
  }
  SeededRng crng(seed ^ kCalibSalt);
  write_matrix(fs::path(out_dir) / m.calibration,
               normal_matrix(dims, calib_cols, crng, Dtype::F32));

  const fs::path manifest_path = fs::path(out_dir) / "manifest.txt";
  save_manifest(manifest_path, m);
  std::cout << manifest_path.string() << "\n";
  return 0;
}

DenseMatrix load_calibration(const ModelManifest& m, int cols) {
  if (!m.calibration.empty()) return read_matrix(m.base_dir / m.calibration);
  SeededRng rng(m.seed ^ kCalibSalt);
  return normal_matrix(m.layers.front().cols, cols, rng, Dtype::F32);
}

int cmd_quantize(const std::string& manifest_path, int bits, int group,
                 int block, double damp, const std::string& method,
                 bool propagate, const std::string& out_dir,
                 const GlobalOpts& g) {
  QuantMethod qm;
  if (method == "gptq") {
    qm = QuantMethod::kGptq;
  } else if (method == "rtn") {
    qm = QuantMethod::kRtn;
  } else if (method == "obq") {
    qm = QuantMethod::kObq;
  } else {
    throw ValidationError("--method must be gptq, rtn or obq");
  }

  const ModelManifest m = load_manifest(manifest_path);
  if (qm == QuantMethod::kObq) {
    for (const LayerSpec& spec : m.layers) {
      if (spec.cols > 256)
        throw ValidationError("obq: layer width " + std::to_string(spec.cols) +
                              " exceeds the 256-column cost guard");
    }
  }

  GptqConfig cfg;
  cfg.bits = bits;
  cfg.group_size = static_cast<std::size_t>(group);
  cfg.block_size = static_cast<std::size_t>(block);
  cfg.damp_fraction = damp;
  cfg.precision = parse_precision(g.precision);

  const Model model = load_model(m);
  const DenseMatrix calib = load_calibration(m, 128);
  SeededRng erng(m.seed ^ kEvalSalt);
  const DenseMatrix eval_x =
      normal_matrix(m.layers.front().cols, 64, erng, Dtype::F32);

  auto [qmodel, report] = quantize_model(model, calib, cfg, propagate, qm,
                                         &eval_x);

  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < qmodel.layers.size(); ++i) {
    write_packed(fs::path(out_dir) / ("layer" + std::to_string(i) + ".gpq"),
                 pack(qmodel.layers[i]));
  }
  std::ofstream rf(fs::path(out_dir) / "report.txt", std::ios::trunc);
  if (!rf) throw IoError("cannot write report in " + out_dir);
  write_report(rf, report);
  write_report(std::cout, report);
  return 0;
}

int cmd_eval(const std::string& manifest_path, const std::string& quantized_dir,
             int eval_cols) {
  const ModelManifest m = load_manifest(manifest_path);
  const Model model = load_model(m);
  QuantizedModel qmodel;
  qmodel.relu.assign(m.layers.size(), false);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const fs::path p =
        fs::path(quantized_dir) / ("layer" + std::to_string(i) + ".gpq");
    qmodel.layers.push_back(unpack(read_packed(p)));
    qmodel.relu[i] = m.layers[i].relu;
  }
  SeededRng erng(m.seed ^ kEvalSalt);
  const DenseMatrix eval_x =
      normal_matrix(m.layers.front().cols, eval_cols, erng, Dtype::F32);
  write_report(std::cout, evaluate(model, qmodel, eval_x));
  return 0;
}

int cmd_bench(const std::string& pack_file, int trials, const GlobalOpts& g) {
  (void)g;
  const PackedWeights p = read_packed(pack_file);
  const MatvecBenchReport rep = matvec_bench(p, trials);
  std::cout << "quantkit-bench v1\n";
  std::cout << "rows = " << p.rows << "\n";
  std::cout << "cols = " << p.cols << "\n";
  std::cout << "bits = " << static_cast<int>(p.bits) << "\n";
  std::cout << "group_size = " << p.group_size << "\n";
  std::cout << "packed_weight_bytes = " << rep.packed_weight_bytes << "\n";
  std::cout << "packed_total_bytes = " << rep.packed_total_bytes << "\n";
  std::cout << "analytic_ratio_vs_16bit = " << rep.analytic_ratio << "\n";
  std::cout << "trials = " << rep.trials << "\n";
  // Timing lines vary run to run; everything above is deterministic.
  std::cout << "qmatvec_seconds(timing) = " << rep.qmatvec_seconds << "\n";
  std::cout << "dense_f32_seconds(timing) = " << rep.dense_seconds << "\n";
  std::cout << "effective_GBps(timing) = " << rep.measured_gbps << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantkit: deterministic weight-quantization toolbox"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--precision", g.precision, "f32 or f64 solver arithmetic")
      ->check(CLI::IsMember({"f32", "f64"}));
  app.add_option("--threads", g.threads, "max internal parallelism")
      ->check(CLI::PositiveNumber);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a seeded MLP fixture tree");
  int layers = 1, dims = 64, calib_cols = 128;
  uint64_t seed = 0;
  std::string out_dir = ".";
  gen->add_option("--layers", layers)->check(CLI::PositiveNumber);
  gen->add_option("--dims", dims)->check(CLI::PositiveNumber);
  gen->add_option("--calib-cols", calib_cols)->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed);
  gen->add_option("--out-dir", out_dir)->required();

  // quantize
  auto* quant = app.add_subcommand("quantize", "quantize a model");
  std::string manifest, method = "gptq", qout_dir = ".";
  int bits = 0, group = 0, block = 128;
  double damp = 0.01;
  bool propagate = false;
  quant->add_option("--manifest", manifest)->required();
  quant->add_option("--bits", bits)->required()->check(CLI::IsMember({2, 3, 4, 8}));
  quant->add_option("--group", group)->check(CLI::NonNegativeNumber);
  quant->add_option("--block", block)->check(CLI::PositiveNumber);
  quant->add_option("--damp", damp)->check(CLI::PositiveNumber);
  quant->add_option("--method", method)->check(CLI::IsMember({"gptq", "rtn", "obq"}));
  quant->add_flag("--propagate", propagate,
                  "build Hessians from quantized-prefix activations");
  quant->add_option("--out-dir", qout_dir)->required();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate quantized layers");
  std::string emanifest, qdir;
  int eval_cols = 64;
  ev->add_option("--manifest", emanifest)->required();
  ev->add_option("--quantized-dir", qdir)->required();
  ev->add_option("--eval-cols", eval_cols)->check(CLI::PositiveNumber);

  // bench
  auto* bench = app.add_subcommand("bench", "time the dequantizing matvec");
  std::string pack_file;
  int trials = 5;
  bench->add_option("--pack-file", pack_file)->required();
  bench->add_option("--trials", trials)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(layers, dims, calib_cols, seed, out_dir);
    if (quant->parsed())
      return cmd_quantize(manifest, bits, group, block, damp, method,
                          propagate, qout_dir, g);
    if (ev->parsed()) return cmd_eval(emanifest, qdir, eval_cols);
    if (bench->parsed()) return cmd_bench(pack_file, trials, g);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
