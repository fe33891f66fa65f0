#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promissing/corrupt.hpp"
#include "promissing/impute.hpp"
#include "promissing/presets.hpp"
#include "promissing/train.hpp"

namespace promissing {

// A way of handling missing values. `full` trains a dense network on the
// uncorrupted data and serves as the reference for drops and biases.
struct Method {
  std::string name;
  std::optional<ImputerKind> imputer;  // set for imputation methods
  FirstLayer first = FirstLayer::kDense;
  bool full = false;

  bool consumes_masks() const { return first != FirstLayer::kDense; }
};

// full | zero | mean | knn[:k] | iterative[:cycles[:tol]] | constant:c |
// promissing | m_promissing
Method parse_method(const std::string& name, std::size_t knn_k = 5);
const std::vector<std::string>& known_methods();

struct ExperimentConfig {
  std::string experiment = "xor";  // xor | benchmark | fusion | explain

  // Schema files (`*.schema`) or CSV files whose non-label columns are all
  // continuous. `synthetic:censored` builds the censoring dataset used in
  // the tests.
  std::vector<std::string> datasets;
  std::vector<Mechanism> mechanisms{Mechanism::kMCAR};
  std::vector<double> fractions{0.5};
  std::vector<std::string> methods{"full", "zero", "mean", "knn", "iterative", "promissing",
                                   "m_promissing"};
  std::size_t repetitions = 10;
  std::size_t folds = 2;
  std::uint64_t seed = 0;

  std::size_t epochs = 100;
  std::size_t batch_size = 10;
  std::string optimizer = "sgd";
  double lr = 0.1;
  std::size_t knn_k = 5;

  // xor
  std::size_t xor_rows = 1000;
  double xor_noise = 0.25;
  std::size_t xor_train_rows = 500;

  // benchmark
  std::size_t mcar_features = 1;  // top-MI columns corrupted under MCAR
  double min_auc = 0.6;
  double max_smse = 1.0;

  // fusion
  std::vector<std::size_t> modality_sizes{4, 4, 4, 4, 4};
  std::vector<double> separation{0.6};
  std::size_t fusion_rows = 400;       // training rows before augmentation
  std::size_t fusion_test_rows = 200;
  std::optional<std::size_t> max_removed;  // default M - 1
  std::size_t orders = 20;             // random removal orders
  double dropout = 0.1;
  Transfer representation_transfer = Transfer::kTanh;

  std::filesystem::path out;
  std::filesystem::path plot_out;
  std::size_t threads = 0;  // 0: OpenMP default

  // Built-in defaults per experiment (learning rates, epochs, batch sizes).
  static ExperimentConfig defaults_for(const std::string& experiment);

  // `key=value` lines, `#` comments, lists comma-separated. Unknown keys
  // throw ConfigError.
  static ExperimentConfig parse(const std::string& text,
                                const std::string& experiment = {});
  static ExperimentConfig load(const std::filesystem::path& path,
                               const std::string& experiment = {});
  void set(const std::string& key, const std::string& value);
  std::string serialize() const;

  // Throws ConfigError: repetitions >= 1, fractions in [0, 1], known methods.
  void validate() const;

  OptimizerConfig optimizer_config() const;
  TrainConfig train_config(std::uint64_t seed) const;
  std::vector<Method> parsed_methods() const;
};

// Relative output paths are placed under $PROMISSING_OUT_DIR when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& path);

}  // namespace promissing
