#include "promissing/network.hpp"

#include <algorithm>
#include <cmath>

#include "promissing/errors.hpp"
#include "promissing/kernels.hpp"
#include "promissing/rng.hpp"

namespace promissing {

const char* to_string(NodeType t) {
  switch (t) {
    case NodeType::kInput: return "input";
    case NodeType::kLayer: return "layer";
    case NodeType::kConcat: return "concat";
    case NodeType::kDropout: return "dropout";
  }
  return "?";
}

const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::kBinaryCrossEntropy: return "bce";
    case LossKind::kCategoricalCrossEntropy: return "cce";
    case LossKind::kMeanSquaredError: return "mse";
  }
  return "?";
}

NodeType parse_node_type(const std::string& text) {
  if (text == "input") return NodeType::kInput;
  if (text == "layer") return NodeType::kLayer;
  if (text == "concat") return NodeType::kConcat;
  if (text == "dropout") return NodeType::kDropout;
  throw SpecError("unknown node type '" + text + "'");
}

LossKind parse_loss_kind(const std::string& text) {
  if (text == "bce") return LossKind::kBinaryCrossEntropy;
  if (text == "cce") return LossKind::kCategoricalCrossEntropy;
  if (text == "mse") return LossKind::kMeanSquaredError;
  throw SpecError("unknown loss kind '" + text + "'");
}

// ---------------------------------------------------------------- building

NodeId Network::push(Node node) {
  if (node.name.empty()) node.name = std::string(to_string(node.type)) + std::to_string(nodes_.size());
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId Network::add_input(std::string name, std::size_t width) {
  if (width == 0) throw SpecError("input width must be positive");
  Node n;
  n.type = NodeType::kInput;
  n.name = std::move(name);
  n.width = width;
  n.input_slot = input_nodes_.size();
  n.masked = true;
  const auto id = push(std::move(n));
  input_nodes_.push_back(id);
  return id;
}

NodeId Network::add_layer(NodeId from, Layer layer, std::string name) {
  if (from >= nodes_.size()) throw SpecError("layer input refers to an unknown node");
  const auto& up = nodes_[from];
  layer.validate();
  if (layer.inputs() != up.width) {
    throw SpecError("layer expects width " + std::to_string(layer.inputs()) + " but node '" +
                    up.name + "' has width " + std::to_string(up.width));
  }
  if (layer.kind == LayerKind::kNanDense && !up.masked) {
    throw SpecError("nan_dense layers must be fed directly by an input");
  }
  Node n;
  n.type = NodeType::kLayer;
  n.name = std::move(name);
  n.inputs = {from};
  n.width = layer.units();
  n.layer = std::move(layer);
  return push(std::move(n));
}

NodeId Network::add_concat(std::vector<NodeId> from, std::string name) {
  if (from.empty()) throw SpecError("concat needs at least one input");
  Node n;
  n.type = NodeType::kConcat;
  n.name = std::move(name);
  for (const auto id : from) {
    if (id >= nodes_.size()) throw SpecError("concat refers to an unknown node");
    if (nodes_[id].masked) throw SpecError("concat inputs must be layer outputs");
    n.width += nodes_[id].width;
  }
  n.inputs = std::move(from);
  return push(std::move(n));
}

NodeId Network::add_dropout(NodeId from, double rate, std::string name) {
  if (from >= nodes_.size()) throw SpecError("dropout refers to an unknown node");
  if (!(rate >= 0.0 && rate < 1.0)) throw SpecError("dropout rate must lie in [0, 1)");
  Node n;
  n.type = NodeType::kDropout;
  n.name = std::move(name);
  n.inputs = {from};
  n.width = nodes_[from].width;
  n.rate = rate;
  n.masked = nodes_[from].masked;
  return push(std::move(n));
}

void Network::add_loss_head(NodeId node, LossKind kind, double weight) {
  if (node >= nodes_.size() || nodes_[node].type != NodeType::kLayer) {
    throw SpecError("loss heads attach to layer nodes");
  }
  const auto& l = nodes_[node].layer;
  const bool ok = (kind == LossKind::kBinaryCrossEntropy && l.transfer == Transfer::kSigmoid &&
                   l.units() == 1) ||
                  (kind == LossKind::kCategoricalCrossEntropy &&
                   l.transfer == Transfer::kSoftmax && l.units() >= 2) ||
                  (kind == LossKind::kMeanSquaredError && l.transfer == Transfer::kLinear &&
                   l.units() == 1);
  if (!ok) {
    throw SpecError(std::string("loss '") + to_string(kind) + "' does not fit layer '" +
                    nodes_[node].name + "'");
  }
  if (!(weight >= 0.0)) throw SpecError("loss weight must be >= 0");
  heads_.push_back({node, kind, weight});
}

void Network::set_output(NodeId node) {
  if (node >= nodes_.size()) throw SpecError("output refers to an unknown node");
  if (nodes_[node].masked) throw SpecError("the output must be a layer-derived node");
  output_ = node;
}

std::vector<std::size_t> Network::input_widths() const {
  std::vector<std::size_t> w;
  for (const auto id : input_nodes_) w.push_back(nodes_[id].width);
  return w;
}

std::vector<NodeId> Network::layer_nodes() const {
  std::vector<NodeId> out;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].type == NodeType::kLayer) out.push_back(id);
  }
  return out;
}

void Network::validate() const {
  if (output_ >= nodes_.size()) throw SpecError("network has no output node");
  if (heads_.empty()) throw SpecError("network has no loss head");
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const auto& n = nodes_[id];
    for (const auto in : n.inputs) {
      if (in >= id) throw SpecError("node '" + n.name + "' breaks topological order");
    }
    if (n.type == NodeType::kLayer) {
      n.layer.validate();
      if (n.layer.inputs() != nodes_[n.inputs[0]].width) {
        throw SpecError("layer '" + n.name + "' width mismatch");
      }
      if (n.layer.kind == LayerKind::kNanDense && !nodes_[n.inputs[0]].masked) {
        throw SpecError("nan_dense layer '" + n.name + "' is not fed by an input");
      }
    }
  }
}

void Network::initialize(std::uint64_t seed) {
  auto rng = make_rng(seed, Stream::kInit);
  for (auto& n : nodes_) {
    if (n.type != NodeType::kLayer) continue;
    auto& l = n.layer;
    const double limit = std::sqrt(6.0 / static_cast<double>(l.inputs() + l.units()));
    for (auto& w : l.weights.flat()) w = (2.0 * uniform01(rng) - 1.0) * limit;
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
    std::fill(l.compensatory.begin(), l.compensatory.end(), 0.0);
  }
}

std::size_t Network::parameter_count() const {
  std::size_t c = 0;
  for (const auto& n : nodes_) {
    if (n.type == NodeType::kLayer) c += n.layer.parameter_count();
  }
  return c;
}

std::vector<std::span<double>> Network::parameters() {
  std::vector<std::span<double>> out;
  for (auto& n : nodes_) {
    if (n.type != NodeType::kLayer) continue;
    out.emplace_back(n.layer.weights.flat());
    out.emplace_back(n.layer.bias);
    if (!n.layer.compensatory.empty()) out.emplace_back(n.layer.compensatory);
  }
  return out;
}

std::vector<std::span<const double>> Network::parameters() const {
  std::vector<std::span<const double>> out;
  for (const auto& n : nodes_) {
    if (n.type != NodeType::kLayer) continue;
    out.emplace_back(n.layer.weights.flat());
    out.emplace_back(n.layer.bias);
    if (!n.layer.compensatory.empty()) out.emplace_back(n.layer.compensatory);
  }
  return out;
}

std::vector<std::span<const double>> Network::gradient_views(const NetworkGradients& g) const {
  std::vector<std::span<const double>> out;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const auto& n = nodes_[id];
    if (n.type != NodeType::kLayer) continue;
    const auto& lg = g.layers.at(id);
    out.emplace_back(lg.dw.flat());
    out.emplace_back(lg.db);
    if (!n.layer.compensatory.empty()) out.emplace_back(lg.dwc);
  }
  return out;
}

// ---------------------------------------------------------------- forward

namespace {

const Matrix& as_dense(const NodeValue& v, const std::string& consumer) {
  if (const auto* m = std::get_if<Matrix>(&v)) return *m;
  const auto& mm = std::get<MaskedMatrix>(v);
  if (!mm.complete()) {
    throw MissingNotAllowedError("missing values reach plain dense layer '" + consumer + "'");
  }
  return mm.payloads();
}

Matrix dropout_keep_mask(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed,
                         NodeId node) {
  Matrix keep(rows, cols);
  auto rng = make_rng(seed, Stream::kDropout, node);
  const double scale = 1.0 / (1.0 - rate);
  for (auto& k : keep.flat()) k = uniform01(rng) < rate ? 0.0 : scale;
  return keep;
}

void add_into(Matrix& dst, const Matrix& src) {
  auto d = dst.flat();
  const auto s = src.flat();
  for (std::size_t c = 0; c < d.size(); ++c) d[c] += s[c];
}

}  // namespace

ForwardPass Network::forward(std::span<const MaskedMatrix> inputs,
                             const ForwardOptions& opts) const {
  if (inputs.size() != input_nodes_.size()) {
    throw ShapeError("network takes " + std::to_string(input_nodes_.size()) + " inputs, got " +
                     std::to_string(inputs.size()));
  }
  ForwardPass pass;
  pass.rows = inputs.empty() ? 0 : inputs.front().rows();
  pass.values.reserve(nodes_.size());
  pass.pre.resize(nodes_.size());
  pass.dropout_keep.resize(nodes_.size());

  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const auto& n = nodes_[id];
    switch (n.type) {
      case NodeType::kInput: {
        const auto& x = inputs[n.input_slot];
        if (x.cols() != n.width || x.rows() != pass.rows) {
          throw ShapeError("input '" + n.name + "' expects width " + std::to_string(n.width) +
                           ", got " + std::to_string(x.cols()) + " (rows " +
                           std::to_string(x.rows()) + ")");
        }
        pass.values.emplace_back(x);
        break;
      }
      case NodeType::kDropout: {
        const auto& up = pass.values[n.inputs[0]];
        if (!opts.training || n.rate == 0.0) {
          pass.values.push_back(up);
          break;
        }
        auto keep = dropout_keep_mask(pass.rows, n.width, n.rate, opts.dropout_seed, id);
        if (const auto* mm = std::get_if<MaskedMatrix>(&up)) {
          MaskedMatrix out = *mm;
          for (std::size_t i = 0; i < out.rows(); ++i) {
            for (std::size_t j = 0; j < out.cols(); ++j) {
              if (!out.is_missing(i, j)) out.set(i, j, out.payload(i, j) * keep(i, j));
            }
          }
          pass.values.emplace_back(std::move(out));
        } else {
          Matrix out = std::get<Matrix>(up);
          auto o = out.flat();
          const auto k = keep.flat();
          for (std::size_t c = 0; c < o.size(); ++c) o[c] *= k[c];
          pass.values.emplace_back(std::move(out));
        }
        pass.dropout_keep[id] = std::move(keep);
        break;
      }
      case NodeType::kLayer: {
        const auto& l = n.layer;
        Matrix pre(pass.rows, l.units());
        if (l.kind == LayerKind::kNanDense) {
          const auto& x = std::get<MaskedMatrix>(pass.values[n.inputs[0]]);
          kernels::nan_dense_preactivation(x, l.weights, l.bias, l.compensatory, pre);
        } else {
          const auto& x = as_dense(pass.values[n.inputs[0]], n.name);
          kernels::dense_preactivation(x, l.weights, l.bias, pre);
        }
        pass.values.emplace_back(apply_transfer(l.transfer, pre));
        pass.pre[id] = std::move(pre);
        break;
      }
      case NodeType::kConcat: {
        Matrix out(pass.rows, n.width);
        std::size_t offset = 0;
        for (const auto in : n.inputs) {
          const auto& x = as_dense(pass.values[in], n.name);
          for (std::size_t i = 0; i < pass.rows; ++i) {
            std::copy(x.row(i).begin(), x.row(i).end(), out.row(i).begin() + offset);
          }
          offset += x.cols();
        }
        pass.values.emplace_back(std::move(out));
        break;
      }
    }
  }
  return pass;
}

// ---------------------------------------------------------------- loss

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_target(LossKind kind, double y, std::size_t classes) {
  if (kind == LossKind::kMeanSquaredError) return;
  const bool ok = kind == LossKind::kBinaryCrossEntropy
                      ? (y == 0.0 || y == 1.0)
                      : (y >= 0.0 && y < static_cast<double>(classes) && y == std::floor(y));
  if (!ok) throw SpecError("classification target " + std::to_string(y) + " is not a class label");
}

}  // namespace

double Network::loss(const ForwardPass& pass, std::span<const double> targets) const {
  if (targets.size() != pass.rows) throw ShapeError("target count differs from batch rows");
  const double n = static_cast<double>(pass.rows);
  double total = 0.0;
  for (const auto& h : heads_) {
    const auto& pre = pass.pre[h.node];
    double sum = 0.0;
    for (std::size_t i = 0; i < pass.rows; ++i) {
      const double y = targets[i];
      check_target(h.kind, y, pre.cols());
      switch (h.kind) {
        case LossKind::kBinaryCrossEntropy:
          sum += softplus(pre(i, 0)) - y * pre(i, 0);
          break;
        case LossKind::kCategoricalCrossEntropy: {
          const auto z = pre.row(i);
          const double mx = *std::max_element(z.begin(), z.end());
          double se = 0.0;
          for (const double v : z) se += std::exp(v - mx);
          sum += mx + std::log(se) - z[static_cast<std::size_t>(y)];
          break;
        }
        case LossKind::kMeanSquaredError: {
          const double d = pre(i, 0) - y;
          sum += d * d;
          break;
        }
      }
    }
    total += h.weight * sum / n;
  }
  return total;
}

// ---------------------------------------------------------------- backward

NetworkGradients Network::backward(const ForwardPass& pass,
                                   std::span<const double> targets) const {
  if (pass.values.size() != nodes_.size()) throw StateError("forward pass does not match network");
  if (targets.size() != pass.rows) throw ShapeError("target count differs from batch rows");
  const std::size_t n = pass.rows;
  const double inv_n = 1.0 / static_cast<double>(n);

  NetworkGradients grads;
  grads.loss = loss(pass, targets);
  grads.layers.resize(nodes_.size());

  std::vector<Matrix> dact(nodes_.size());
  std::vector<Matrix> dpre_direct(nodes_.size());
  auto ensure = [&](std::vector<Matrix>& v, NodeId id) -> Matrix& {
    if (v[id].size() == 0) v[id] = Matrix(n, nodes_[id].width);
    return v[id];
  };

  for (const auto& h : heads_) {
    auto& d = ensure(dpre_direct, h.node);
    const auto& act = std::get<Matrix>(pass.values[h.node]);
    const auto& pre = pass.pre[h.node];
    const double scale = h.weight * inv_n;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = targets[i];
      switch (h.kind) {
        case LossKind::kBinaryCrossEntropy:
          d(i, 0) += scale * (act(i, 0) - y);
          break;
        case LossKind::kCategoricalCrossEntropy:
          for (std::size_t c = 0; c < act.cols(); ++c) {
            d(i, c) += scale * (act(i, c) - (static_cast<double>(c) == y ? 1.0 : 0.0));
          }
          break;
        case LossKind::kMeanSquaredError:
          d(i, 0) += scale * 2.0 * (pre(i, 0) - y);
          break;
      }
    }
  }

  for (NodeId id = nodes_.size(); id-- > 0;) {
    const auto& node = nodes_[id];
    switch (node.type) {
      case NodeType::kInput:
        break;
      case NodeType::kDropout: {
        if (node.masked || dact[id].size() == 0) break;
        Matrix g = dact[id];
        if (pass.dropout_keep[id].size() != 0) {
          auto gf = g.flat();
          const auto k = pass.dropout_keep[id].flat();
          for (std::size_t c = 0; c < gf.size(); ++c) gf[c] *= k[c];
        }
        add_into(ensure(dact, node.inputs[0]), g);
        break;
      }
      case NodeType::kConcat: {
        if (dact[id].size() == 0) break;
        std::size_t offset = 0;
        for (const auto in : node.inputs) {
          auto& dst = ensure(dact, in);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dst.cols(); ++j) dst(i, j) += dact[id](i, offset + j);
          }
          offset += dst.cols();
        }
        break;
      }
      case NodeType::kLayer: {
        const auto& l = node.layer;
        const auto& act = std::get<Matrix>(pass.values[id]);
        Matrix dpre(n, l.units());
        if (dact[id].size() != 0) dpre = transfer_backward(l.transfer, pass.pre[id], act, dact[id]);
        if (dpre_direct[id].size() != 0) add_into(dpre, dpre_direct[id]);

        auto& lg = grads.layers[id];
        lg.dw = Matrix(l.units(), l.inputs());
        lg.db.assign(l.units(), 0.0);
        if (l.has_compensatory()) lg.dwc.assign(l.units(), 0.0);
        const auto& up = pass.values[node.inputs[0]];
        if (l.kind == LayerKind::kNanDense) {
          kernels::nan_dense_param_grad(std::get<MaskedMatrix>(up), dpre, lg.dw, lg.db, lg.dwc);
        } else {
          const auto& x = as_dense(up, node.name);
          kernels::dense_param_grad(x, dpre, lg.dw, lg.db);
          if (!nodes_[node.inputs[0]].masked) {
            Matrix dx(n, l.inputs());
            kernels::input_grad(dpre, l.weights, dx);
            add_into(ensure(dact, node.inputs[0]), dx);
          }
        }
        break;
      }
    }
  }
  return grads;
}

// ---------------------------------------------------------------- predict

Matrix Network::predict(std::span<const MaskedMatrix> inputs) const {
  if (output_ >= nodes_.size()) throw StateError("network has no output node");
  auto pass = forward(inputs, {});
  return std::get<Matrix>(std::move(pass.values[output_]));
}

std::vector<double> Network::predict_positive(std::span<const MaskedMatrix> inputs) const {
  const auto out = predict(inputs);
  if (out.cols() != 1 && out.cols() != 2) {
    throw ShapeError("positive-class probability needs a 1- or 2-wide output");
  }
  const std::size_t col = out.cols() == 1 ? 0 : 1;
  std::vector<double> p(out.rows());
  for (std::size_t i = 0; i < out.rows(); ++i) p[i] = out(i, col);
  return p;
}

}  // namespace promissing
