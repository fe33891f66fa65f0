#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "promissing/matrix.hpp"

namespace promissing {

enum class Transfer { kLinear, kTanh, kSigmoid, kRelu, kSoftmax };
enum class LayerKind { kDense, kNanDense };
// PROMISSING rescales the bias by q/p; mPROMISSING adds a per-neuron
// compensatory weight fed with r/p.
enum class NanMode { kPromissing, kMPromissing };

const char* to_string(Transfer t);
const char* to_string(LayerKind k);
const char* to_string(NanMode m);
Transfer parse_transfer(const std::string& text);
LayerKind parse_layer_kind(const std::string& text);
NanMode parse_nan_mode(const std::string& text);

struct Layer {
  LayerKind kind = LayerKind::kDense;
  NanMode mode = NanMode::kPromissing;  // nan_dense only
  Transfer transfer = Transfer::kLinear;
  Matrix weights;                      // units x inputs
  std::vector<double> bias;            // units
  std::vector<double> compensatory;    // units, mPROMISSING only

  static Layer dense(std::size_t inputs, std::size_t units, Transfer transfer);
  static Layer nan_dense(std::size_t inputs, std::size_t units, Transfer transfer, NanMode mode);

  std::size_t inputs() const { return weights.cols(); }
  std::size_t units() const { return weights.rows(); }
  std::size_t parameter_count() const {
    return weights.size() + bias.size() + compensatory.size();
  }
  bool has_compensatory() const { return kind == LayerKind::kNanDense && mode == NanMode::kMPromissing; }

  // Throws ShapeError when the parts disagree in size.
  void validate() const;
};

Matrix apply_transfer(Transfer t, const Matrix& pre);
// dL/dpre from dL/dact.
Matrix transfer_backward(Transfer t, const Matrix& pre, const Matrix& act, const Matrix& dact);

// What a nan_dense backward pass needs from the forward pass.
struct LayerCache {
  MaskedMatrix input;
  Matrix pre;
  Matrix act;
  bool valid = false;
};

// Pre-activations of a nan_dense layer in closed form:
//   promissing:   sum_{i observed} x_i W(k,i) + q b(k) / p
//   m_promissing: sum_{i observed} x_i W(k,i) + (q b(k) + r wc(k)) / p
// Never divides by a weight, so no stabiliser is involved.
Matrix nan_dense_preactivation(const Layer& layer, const MaskedMatrix& batch);
// Transfer applied to the above. Fills `cache` when given.
Matrix nan_dense_forward(const Layer& layer, const MaskedMatrix& batch, LayerCache* cache = nullptr);

struct LayerGradients {
  Matrix dw;
  std::vector<double> db;
  std::vector<double> dwc;  // empty unless mPROMISSING
  Matrix dx;                // zero on missing cells
};

// Gradients summed over the cached rows, given dL/dact. Throws StateError
// if the cache was never filled.
LayerGradients nan_dense_backward(const Layer& layer, const LayerCache& cache,
                                  const Matrix& upstream);

// The learned representation of unknowns: U(k,j) = -b(k) / (p w'),
// w' = W(k,j) unless |W(k,j)| < epsilon, in which case w' = +-epsilon with
// W's sign (zero counts as positive).
struct NeutralizerMatrix {
  Matrix values;  // units x inputs
  double epsilon = 1e-8;

  // Header `neuron,feature,value`, one row per entry.
  void write_csv(const std::filesystem::path& path) const;
  std::string to_csv() const;
};

NeutralizerMatrix export_neutralizers(const Layer& layer, double epsilon = 1e-8);

}  // namespace promissing
