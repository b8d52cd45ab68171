#include "quantkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "quantkit/errors.hpp"
#include "quantkit/gmat.hpp"
#include "quantkit/hessian.hpp"
#include "quantkit/obq.hpp"

namespace quantkit {

namespace {

constexpr std::size_t kAccumulateChunk = 32;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

DenseMatrix apply_relu(DenseMatrix y) {
  for (double& v : y.data()) v = std::max(v, 0.0);
  return y;
}

}  // namespace

ModelManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("manifest: cannot open: " + path.string());
  ModelManifest m;
  m.base_dir = path.parent_path();

  std::string line;
  bool saw_header = false;
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != "quantkit-manifest v1")
        throw IoError("manifest: bad header line: " + line);
      saw_header = true;
      continue;
    }
    if (line.rfind("layer ", 0) == 0) {
      LayerSpec spec;
      std::istringstream iss(line.substr(6));
      std::string tok;
      while (iss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
          throw IoError("manifest: bad layer token: " + tok);
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "weights") {
          spec.weights = val;
        } else if (key == "rows") {
          spec.rows = std::stoull(val);
        } else if (key == "cols") {
          spec.cols = std::stoull(val);
        } else if (key == "activation") {
          if (val != "none" && val != "relu")
            throw IoError("manifest: unknown activation: " + val);
          spec.relu = (val == "relu");
        } else {
          throw IoError("manifest: unknown layer key: " + key);
        }
      }
      if (spec.weights.empty() || spec.rows == 0 || spec.cols == 0)
        throw IoError("manifest: incomplete layer line: " + line);
      m.layers.push_back(std::move(spec));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError("manifest: unparseable line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "name") {
      m.name = val;
    } else if (key == "seed") {
      m.seed = std::stoull(val);
    } else if (key == "calibration") {
      m.calibration = val;
    } else {
      throw IoError("manifest: unknown key: " + key);
    }
  }
  if (!saw_header) throw IoError("manifest: missing header: " + path.string());
  if (m.layers.empty()) throw IoError("manifest: no layers");

  for (std::size_t i = 0; i + 1 < m.layers.size(); ++i) {
    if (m.layers[i].rows != m.layers[i + 1].cols)
      throw ValidationError("manifest: layer " + std::to_string(i) +
                            " rows != layer " + std::to_string(i + 1) +
                            " cols");
  }
  for (const LayerSpec& spec : m.layers) {
    const auto p = m.base_dir / spec.weights;
    const DenseMatrix w = read_matrix(p);
    if (w.rows() != spec.rows || w.cols() != spec.cols)
      throw ValidationError("manifest: " + spec.weights +
                            " shape does not match declaration");
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const ModelManifest& m) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("manifest: cannot open for writing: " + path.string());
  f << "quantkit-manifest v1\n";
  f << "name = " << m.name << "\n";
  f << "seed = " << m.seed << "\n";
  if (!m.calibration.empty()) f << "calibration = " << m.calibration << "\n";
  for (const LayerSpec& spec : m.layers) {
    f << "layer weights=" << spec.weights << " rows=" << spec.rows
      << " cols=" << spec.cols
      << " activation=" << (spec.relu ? "relu" : "none") << "\n";
  }
  if (!f) throw IoError("manifest: write failed: " + path.string());
}

Model load_model(const ModelManifest& m) {
  Model model;
  for (const LayerSpec& spec : m.layers) {
    model.weights.push_back(read_matrix(m.base_dir / spec.weights));
    model.relu.push_back(spec.relu);
  }
  return model;
}

DenseMatrix forward(const Model& m, const DenseMatrix& x) {
  if (m.weights.empty()) throw ValidationError("forward: empty model");
  if (x.rows() != m.weights.front().cols())
    throw ValidationError("forward: input rows != first layer cols");
  DenseMatrix a = x;
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    a = matmul(m.weights[i], a);
    if (m.relu[i]) a = apply_relu(std::move(a));
  }
  return a;
}

DenseMatrix forward(const QuantizedModel& m, const DenseMatrix& x) {
  if (m.layers.empty()) throw ValidationError("forward: empty model");
  if (x.rows() != m.layers.front().cols)
    throw ValidationError("forward: input rows != first layer cols");
  DenseMatrix a = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    a = matmul(dequantize_layer(m.layers[i]), a);
    if (m.relu[i]) a = apply_relu(std::move(a));
  }
  return a;
}

namespace {

// Same composition as gptq_quantize_with_calibration, but the Hessian is
// streamed in chunks and the method is selectable.
std::pair<QuantizedLayer, QuantizeReport> quantize_layer(
    const DenseMatrix& w, const DenseMatrix& acts, const GptqConfig& cfg,
    QuantMethod method) {
  HessianAccumulator acc(w.cols());
  for (std::size_t c0 = 0; c0 < acts.cols(); c0 += kAccumulateChunk) {
    const std::size_t c1 = std::min(c0 + kAccumulateChunk, acts.cols());
    DenseMatrix chunk(acts.rows(), c1 - c0, Dtype::F64);
    for (std::size_t r = 0; r < acts.rows(); ++r)
      for (std::size_t c = c0; c < c1; ++c)
        chunk.at(r, c - c0) = acts.at(r, c);
    accumulate(acc, chunk);
  }

  QuantizedLayer layer;
  QuantizeReport report;
  if (method == QuantMethod::kRtn) {
    layer = rtn_quantize(w, cfg.bits, cfg.group_size);
  } else {
    DenseMatrix hinv;
    double fraction = cfg.damp_fraction;
    for (;;) {
      try {
        hinv = invert_spd(dampen(acc, fraction));
        break;
      } catch (const NumericError&) {
        if (report.damp_retries == 3) throw;
        ++report.damp_retries;
        fraction *= 10.0;
      }
    }
    if (method == QuantMethod::kObq) {
      layer = obq_quantize(w, hinv, cfg.bits, cfg.group_size);
    } else {
      GptqResult res = gptq_quantize(w, cholesky_upper(hinv), cfg);
      layer = std::move(res.layer);
      report.layer_error_proxy = res.report.layer_error_proxy;
    }
  }

  const DenseMatrix ref = matmul(w, acts);
  report.true_layer_error =
      frobenius_sq_diff(ref, matmul(dequantize_layer(layer), acts));
  const QuantizedLayer rtn = rtn_quantize(w, cfg.bits, cfg.group_size);
  report.rtn_error = frobenius_sq_diff(ref, matmul(dequantize_layer(rtn), acts));
  return {std::move(layer), std::move(report)};
}

}  // namespace

std::pair<QuantizedModel, ModelReport> quantize_model(
    const Model& m, const DenseMatrix& calibration, const GptqConfig& cfg,
    bool propagate, QuantMethod method, const DenseMatrix* eval_x) {
  if (m.weights.empty()) throw ValidationError("quantize_model: empty model");
  if (calibration.rows() != m.weights.front().cols())
    throw ValidationError(
        "quantize_model: calibration rows != first layer cols");

  QuantizedModel qm;
  ModelReport report;
  report.propagate = propagate;
  qm.relu = m.relu;

  DenseMatrix acts = calibration;
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    auto [layer, lrep] = quantize_layer(m.weights[i], acts, cfg, method);
    qm.layers.push_back(std::move(layer));
    report.layers.push_back(lrep);
    if (i + 1 < m.weights.size()) {
      acts = propagate ? matmul(dequantize_layer(qm.layers.back()), acts)
                       : matmul(m.weights[i], acts);
      if (m.relu[i]) acts = apply_relu(std::move(acts));
    }
  }

  if (eval_x != nullptr)
    report.end_to_end_error =
        frobenius_sq_diff(forward(m, *eval_x), forward(qm, *eval_x));
  return {std::move(qm), std::move(report)};
}

ModelReport evaluate(const Model& m, const QuantizedModel& qm,
                     const DenseMatrix& eval_x) {
  if (m.weights.size() != qm.layers.size())
    throw ValidationError("evaluate: layer count mismatch");
  ModelReport report;
  DenseMatrix acts = eval_x;
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    QuantizeReport lrep;
    const DenseMatrix ref = matmul(m.weights[i], acts);
    lrep.true_layer_error =
        frobenius_sq_diff(ref, matmul(dequantize_layer(qm.layers[i]), acts));
    report.layers.push_back(lrep);
    if (i + 1 < m.weights.size()) {
      acts = std::move(ref);
      if (m.relu[i]) acts = apply_relu(std::move(acts));
    }
  }
  report.end_to_end_error =
      frobenius_sq_diff(forward(m, eval_x), forward(qm, eval_x));
  return report;
}

void write_report(std::ostream& os, const ModelReport& r) {
  os << "quantkit-report v1\n";
  os << "layers = " << r.layers.size() << "\n";
  os << "propagate = " << (r.propagate ? "on" : "off") << "\n";
  os.precision(17);
  for (std::size_t i = 0; i < r.layers.size(); ++i) {
    const QuantizeReport& l = r.layers[i];
    os << "layer " << i << " true_error=" << l.true_layer_error
       << " rtn_error=" << l.rtn_error << " proxy=" << l.layer_error_proxy
       << " damp_retries=" << l.damp_retries << "\n";
  }
  os << "end_to_end_error = " << r.end_to_end_error << "\n";
}

}  // namespace quantkit
