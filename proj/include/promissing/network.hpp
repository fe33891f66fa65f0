#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "promissing/layer.hpp"
#include "promissing/matrix.hpp"

namespace promissing {

using NodeId = std::size_t;

enum class NodeType { kInput, kLayer, kConcat, kDropout };

enum class LossKind { kBinaryCrossEntropy, kCategoricalCrossEntropy, kMeanSquaredError };

const char* to_string(NodeType t);
const char* to_string(LossKind k);
NodeType parse_node_type(const std::string& text);
LossKind parse_loss_kind(const std::string& text);

struct Node {
  NodeType type = NodeType::kInput;
  std::string name;
  std::vector<NodeId> inputs;
  std::size_t width = 0;
  std::size_t input_slot = 0;  // kInput: position in the forward() input list
  double rate = 0.0;           // kDropout
  Layer layer;                 // kLayer
  // True when the node's output can hold missing cells: inputs, and dropout
  // applied directly to them.
  bool masked = false;
};

struct LossHead {
  NodeId node = 0;
  LossKind kind = LossKind::kBinaryCrossEntropy;
  double weight = 1.0;
};

// Output of one node during a forward pass.
using NodeValue = std::variant<MaskedMatrix, Matrix>;

struct ForwardOptions {
  bool training = false;  // dropout active
  std::uint64_t dropout_seed = 0;
};

struct ForwardPass {
  std::vector<NodeValue> values;
  std::vector<Matrix> pre;           // layer nodes only
  std::vector<Matrix> dropout_keep;  // dropout nodes in training mode: 0 or 1/(1-rate)
  std::size_t rows = 0;
};

struct NetworkGradients {
  std::vector<LayerGradients> layers;  // indexed by node; empty for non-layers
  double loss = 0.0;
};

// A feed-forward DAG. Nodes are appended in topological order (every node
// refers only to earlier nodes), so the graph is acyclic by construction.
class Network {
 public:
  NodeId add_input(std::string name, std::size_t width);
  NodeId add_layer(NodeId from, Layer layer, std::string name = {});
  NodeId add_concat(std::vector<NodeId> from, std::string name = {});
  NodeId add_dropout(NodeId from, double rate, std::string name = {});
  void add_loss_head(NodeId node, LossKind kind, double weight = 1.0);
  void set_output(NodeId node);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Node>& mutable_nodes() { return nodes_; }
  const std::vector<LossHead>& loss_heads() const { return heads_; }
  NodeId output() const { return output_; }
  std::size_t input_count() const { return input_nodes_.size(); }
  std::vector<std::size_t> input_widths() const;
  const std::vector<NodeId>& input_nodes() const { return input_nodes_; }
  std::vector<NodeId> layer_nodes() const;

  // Glorot-uniform weights, zero biases and compensatory weights.
  void initialize(std::uint64_t seed);

  std::size_t parameter_count() const;
  // W, b, and (mPROMISSING) wc of every layer, in node order.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::vector<std::span<const double>> gradient_views(const NetworkGradients& g) const;

  ForwardPass forward(std::span<const MaskedMatrix> inputs, const ForwardOptions& opts = {}) const;
  // Sum over heads of weight * (mean per-row loss).
  double loss(const ForwardPass& pass, std::span<const double> targets) const;
  NetworkGradients backward(const ForwardPass& pass, std::span<const double> targets) const;

  // Output node activations with dropout disabled.
  Matrix predict(std::span<const MaskedMatrix> inputs) const;
  // Probability of class 1: the single output column, or column 1 of a
  // softmax pair.
  std::vector<double> predict_positive(std::span<const MaskedMatrix> inputs) const;
  std::vector<double> predict_positive(const MaskedMatrix& input) const {
    return predict_positive(std::span<const MaskedMatrix>(&input, 1));
  }

  // Structural check: widths, heads, output set.
  void validate() const;

 private:
  NodeId push(Node node);

  std::vector<Node> nodes_;
  std::vector<NodeId> input_nodes_;
  std::vector<LossHead> heads_;
  NodeId output_ = static_cast<NodeId>(-1);
};

}  // namespace promissing
