#include "promissing/layer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "promissing/errors.hpp"
#include "promissing/kernels.hpp"
#include "text_util.hpp"

namespace promissing {

const char* to_string(Transfer t) {
  switch (t) {
    case Transfer::kLinear: return "linear";
    case Transfer::kTanh: return "tanh";
    case Transfer::kSigmoid: return "sigmoid";
    case Transfer::kRelu: return "relu";
    case Transfer::kSoftmax: return "softmax";
  }
  return "?";
}

const char* to_string(LayerKind k) {
  return k == LayerKind::kDense ? "dense" : "nan_dense";
}

const char* to_string(NanMode m) {
  return m == NanMode::kPromissing ? "promissing" : "m_promissing";
}

Transfer parse_transfer(const std::string& text) {
  const auto t = detail::lower(text);
  if (t == "linear") return Transfer::kLinear;
  if (t == "tanh") return Transfer::kTanh;
  if (t == "sigmoid") return Transfer::kSigmoid;
  if (t == "relu") return Transfer::kRelu;
  if (t == "softmax") return Transfer::kSoftmax;
  throw SpecError("unknown transfer '" + text + "'");
}

LayerKind parse_layer_kind(const std::string& text) {
  if (text == "dense") return LayerKind::kDense;
  if (text == "nan_dense") return LayerKind::kNanDense;
  throw SpecError("unknown layer kind '" + text + "'");
}

NanMode parse_nan_mode(const std::string& text) {
  const auto t = detail::lower(text);
  if (t == "promissing") return NanMode::kPromissing;
  if (t == "m_promissing" || t == "mpromissing") return NanMode::kMPromissing;
  throw SpecError("unknown nan_dense mode '" + text + "'");
}

Layer Layer::dense(std::size_t inputs, std::size_t units, Transfer transfer) {
  if (inputs == 0 || units == 0) throw SpecError("layer widths must be positive");
  Layer l;
  l.kind = LayerKind::kDense;
  l.transfer = transfer;
  l.weights = Matrix(units, inputs);
  l.bias.assign(units, 0.0);
  return l;
}

Layer Layer::nan_dense(std::size_t inputs, std::size_t units, Transfer transfer, NanMode mode) {
  Layer l = dense(inputs, units, transfer);
  l.kind = LayerKind::kNanDense;
  l.mode = mode;
  if (mode == NanMode::kMPromissing) l.compensatory.assign(units, 0.0);
  return l;
}

void Layer::validate() const {
  if (bias.size() != units()) throw ShapeError("bias length differs from unit count");
  if (compensatory.size() != (has_compensatory() ? units() : 0)) {
    throw ShapeError("compensatory weights present iff the layer is mPROMISSING");
  }
}

// ---------------------------------------------------------------- transfers

Matrix apply_transfer(Transfer t, const Matrix& pre) {
  Matrix act = pre;
  auto a = act.flat();
  switch (t) {
    case Transfer::kLinear:
      break;
    case Transfer::kTanh:
      for (auto& v : a) v = std::tanh(v);
      break;
    case Transfer::kSigmoid:
      for (auto& v : a) v = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      break;
    case Transfer::kRelu:
      for (auto& v : a) v = v > 0.0 ? v : 0.0;
      break;
    case Transfer::kSoftmax:
      for (std::size_t i = 0; i < act.rows(); ++i) {
        auto r = act.row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double sum = 0.0;
        for (auto& v : r) {
          v = std::exp(v - mx);
          sum += v;
        }
        for (auto& v : r) v /= sum;
      }
      break;
  }
  return act;
}

Matrix transfer_backward(Transfer t, const Matrix& pre, const Matrix& act, const Matrix& dact) {
  Matrix dpre(dact.rows(), dact.cols());
  const auto a = act.flat();
  const auto z = pre.flat();
  const auto g = dact.flat();
  auto d = dpre.flat();
  switch (t) {
    case Transfer::kLinear:
      std::copy(g.begin(), g.end(), d.begin());
      break;
    case Transfer::kTanh:
      for (std::size_t c = 0; c < d.size(); ++c) d[c] = g[c] * (1.0 - a[c] * a[c]);
      break;
    case Transfer::kSigmoid:
      for (std::size_t c = 0; c < d.size(); ++c) d[c] = g[c] * a[c] * (1.0 - a[c]);
      break;
    case Transfer::kRelu:
      for (std::size_t c = 0; c < d.size(); ++c) d[c] = z[c] > 0.0 ? g[c] : 0.0;
      break;
    case Transfer::kSoftmax:
      for (std::size_t i = 0; i < dact.rows(); ++i) {
        const auto ar = act.row(i);
        const auto gr = dact.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < ar.size(); ++j) dot += ar[j] * gr[j];
        auto dr = dpre.row(i);
        for (std::size_t j = 0; j < ar.size(); ++j) dr[j] = ar[j] * (gr[j] - dot);
      }
      break;
  }
  return dpre;
}

// ---------------------------------------------------------------- nan_dense

Matrix nan_dense_preactivation(const Layer& layer, const MaskedMatrix& batch) {
  if (layer.kind != LayerKind::kNanDense) throw SpecError("layer is not nan_dense");
  if (batch.cols() != layer.inputs()) {
    throw ShapeError("nan_dense expects width " + std::to_string(layer.inputs()) + ", got " +
                     std::to_string(batch.cols()));
  }
  Matrix pre(batch.rows(), layer.units());
  kernels::nan_dense_preactivation(batch, layer.weights, layer.bias, layer.compensatory, pre);
  return pre;
}

Matrix nan_dense_forward(const Layer& layer, const MaskedMatrix& batch, LayerCache* cache) {
  Matrix pre = nan_dense_preactivation(layer, batch);
  Matrix act = apply_transfer(layer.transfer, pre);
  if (cache) {
    cache->input = batch;
    cache->pre = std::move(pre);
    cache->act = act;
    cache->valid = true;
  }
  return act;
}

LayerGradients nan_dense_backward(const Layer& layer, const LayerCache& cache,
                                  const Matrix& upstream) {
  if (!cache.valid) throw StateError("nan_dense backward without a forward cache");
  if (upstream.rows() != cache.act.rows() || upstream.cols() != cache.act.cols()) {
    throw ShapeError("upstream gradient shape differs from the cached activations");
  }
  const Matrix dpre = transfer_backward(layer.transfer, cache.pre, cache.act, upstream);
  LayerGradients g;
  g.dw = Matrix(layer.units(), layer.inputs());
  g.db.assign(layer.units(), 0.0);
  if (layer.has_compensatory()) g.dwc.assign(layer.units(), 0.0);
  kernels::nan_dense_param_grad(cache.input, dpre, g.dw, g.db, g.dwc);
  g.dx = Matrix(cache.input.rows(), cache.input.cols());
  kernels::masked_input_grad(cache.input, dpre, layer.weights, g.dx);
  return g;
}

// ---------------------------------------------------------------- neutralizers

NeutralizerMatrix export_neutralizers(const Layer& layer, double epsilon) {
  if (layer.kind != LayerKind::kNanDense) throw SpecError("only nan_dense layers have neutralizers");
  NeutralizerMatrix u;
  u.epsilon = epsilon;
  u.values = Matrix(layer.units(), layer.inputs());
  const double p = static_cast<double>(layer.inputs());
  for (std::size_t k = 0; k < layer.units(); ++k) {
    for (std::size_t j = 0; j < layer.inputs(); ++j) {
      double w = layer.weights(k, j);
      if (std::abs(w) < epsilon) w = w < 0.0 ? -epsilon : epsilon;
      u.values(k, j) = -layer.bias[k] / (p * w);
    }
  }
  return u;
}

std::string NeutralizerMatrix::to_csv() const {
  std::string out = "neuron,feature,value\n";
  for (std::size_t k = 0; k < values.rows(); ++k) {
    for (std::size_t j = 0; j < values.cols(); ++j) {
      out += std::to_string(k) + "," + std::to_string(j) + "," +
             detail::format_double(values(k, j)) + "\n";
    }
  }
  return out;
}

void NeutralizerMatrix::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv();
}

}  // namespace promissing
