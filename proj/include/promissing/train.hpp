#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promissing/data.hpp"
#include "promissing/matrix.hpp"
#include "promissing/network.hpp"

namespace promissing {

struct OptimizerConfig {
  enum class Kind { kSgd, kAdam };

  Kind kind = Kind::kSgd;
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerConfig sgd(double lr) { return {Kind::kSgd, lr}; }
  static OptimizerConfig adam(double lr) { return {Kind::kAdam, lr}; }

  // Throws SpecError unless lr > 0 and 0 <= beta < 1.
  void validate() const;
};

// Holds per-slot moment estimates for Adam; SGD is stateless.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  // theta <- theta - lr g                                  (sgd)
  // theta <- theta - lr mhat / (sqrt(vhat) + eps)          (adam, bias-corrected)
  // Slots are matched by position; their sizes must stay fixed across calls.
  // Throws DivergenceError (epoch 0) on a non-finite gradient.
  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads);

  std::size_t steps() const { return t_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 10;
  std::uint64_t seed = 0;
  bool shuffle = true;
  // Glorot-initialise before the first epoch. Off to continue training.
  bool initialize = true;
};

struct TrainHistory {
  std::vector<double> loss;                   // mean per-row loss, per epoch
  std::vector<std::optional<double>> metric;  // from the epoch hook
};

struct TrainingData {
  std::vector<MaskedMatrix> inputs;  // one per network input
  std::vector<double> targets;

  std::size_t rows() const { return targets.size(); }
  TrainingData select_rows(std::span<const std::size_t> indices) const;

  static TrainingData single(MaskedMatrix x, std::vector<double> y);
  static TrainingData modal(const ModalDataset& md);
};

// Called after every epoch; whatever it returns lands in TrainHistory::metric.
using EpochHook = std::function<std::optional<double>(const Network&, std::size_t epoch)>;

// Mini-batch training. Every random choice (initialisation, shuffling,
// dropout) is derived from cfg.seed, so equal inputs give bit-identical
// parameters. Throws DivergenceError when an epoch's loss is not finite.
TrainHistory train(Network& net, const TrainingData& data, const OptimizerConfig& opt,
                   const TrainConfig& cfg, const EpochHook& hook = {});

}  // namespace promissing
