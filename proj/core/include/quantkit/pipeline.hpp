#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "quantkit/dense.hpp"
#include "quantkit/gptq.hpp"
#include "quantkit/grid.hpp"

namespace quantkit {

struct LayerSpec {
  std::string weights;  // GMAT path, relative to the manifest directory
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool relu = false;
};

// Toy sequential MLP description. Layer i consumes a cols-dim vector and
// produces rows, so layer i's rows must equal layer i+1's cols.
struct ModelManifest {
  std::string name;
  uint64_t seed = 0;
  std::string calibration;  // optional GMAT path with calibration columns
  std::vector<LayerSpec> layers;
  std::filesystem::path base_dir;
};

// Parses and validates: files exist, shapes match declarations, layers chain.
ModelManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const ModelManifest& m);

struct Model {
  std::vector<DenseMatrix> weights;
  std::vector<bool> relu;
};

struct QuantizedModel {
  std::vector<QuantizedLayer> layers;
  std::vector<bool> relu;
};

Model load_model(const ModelManifest& m);

DenseMatrix forward(const Model& m, const DenseMatrix& x);
DenseMatrix forward(const QuantizedModel& m, const DenseMatrix& x);

enum class QuantMethod { kGptq, kRtn, kObq };

struct ModelReport {
  std::vector<QuantizeReport> layers;
  double end_to_end_error = 0.0;
  bool propagate = false;
};

// Quantizes layers in order. With propagate on, layer k's Hessian is built
// from activations produced by the already-quantized layers before it;
// with it off, from full-precision activations. When eval_x is given the
// end-to-end error is filled from it.
std::pair<QuantizedModel, ModelReport> quantize_model(
    const Model& m, const DenseMatrix& calibration, const GptqConfig& cfg,
    bool propagate, QuantMethod method = QuantMethod::kGptq,
    const DenseMatrix* eval_x = nullptr);

// Per-layer reconstruction errors on eval_x activations (full-precision
// prefix) plus the end-to-end composition error. Deterministic.
ModelReport evaluate(const Model& m, const QuantizedModel& qm,
                     const DenseMatrix& eval_x);

// Machine-parseable structured-text report with a stable key order.
// Timings are intentionally not serialized.
void write_report(std::ostream& os, const ModelReport& r);

}  // namespace quantkit
