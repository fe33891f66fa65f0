#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "promissing/network.hpp"

namespace promissing {

// How the first (input-facing) layers treat missing values.
enum class FirstLayer { kDense, kPromissing, kMPromissing };

const char* to_string(FirstLayer f);
FirstLayer parse_first_layer(const std::string& text);

enum class Task { kClassification, kRegression };

// input(p) -> first(4, tanh) -> dense(1, sigmoid), BCE.
Network xor_preset(std::size_t p, FirstLayer first);

// input(p) -> first(ceil(p/2), relu) -> dense(2, relu) -> dense(1, sigmoid|linear),
// BCE for classification, MSE for regression.
Network benchmark_preset(std::size_t p, Task task, FirstLayer first);

struct FusionModality {
  std::string name;
  std::size_t width = 0;
  std::size_t representation = 0;
};

struct FusionOptions {
  double dropout = 0.1;
  double head_weight = 1.0;  // each modality-specific head
  double main_weight = 1.0;
  Transfer representation_transfer = Transfer::kTanh;
  std::size_t fusion_units = 5;
};

// Per modality: input -> dropout -> first(representation) -> dropout ->
// dense(2, softmax) head (CCE). All representations and head outputs are
// concatenated -> dropout -> dense(fusion_units, relu) -> dropout ->
// dense(2, softmax) main head (CCE), which is the network output.
Network fusion_preset(const std::vector<FusionModality>& modalities, FirstLayer first,
                      const FusionOptions& options = {});

// Representation width used when none is given: half the modality width,
// clamped to [2, 10].
std::size_t default_representation_size(std::size_t width);

struct ArchitectureSpec {
  std::string preset;  // xor | benchmark | fusion
  FirstLayer first = FirstLayer::kPromissing;
  Task task = Task::kClassification;
  std::vector<std::size_t> input_widths;
  std::vector<std::string> modality_names;          // fusion; optional
  std::vector<std::size_t> representation_sizes;    // fusion; optional
  FusionOptions fusion;
};

// Dispatches to a preset; SpecError when the widths do not fit it.
Network build_network(const ArchitectureSpec& spec);

}  // namespace promissing
