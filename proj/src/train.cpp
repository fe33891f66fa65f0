#include "promissing/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "promissing/errors.hpp"
#include "promissing/rng.hpp"

namespace promissing {

TrainingData TrainingData::select_rows(std::span<const std::size_t> indices) const {
  TrainingData out;
  for (const auto& x : inputs) out.inputs.push_back(x.select_rows(indices));
  out.targets.reserve(indices.size());
  for (const auto i : indices) out.targets.push_back(targets.at(i));
  return out;
}

TrainingData TrainingData::single(MaskedMatrix x, std::vector<double> y) {
  TrainingData d;
  d.inputs.push_back(std::move(x));
  d.targets = std::move(y);
  return d;
}

TrainingData TrainingData::modal(const ModalDataset& md) {
  TrainingData d;
  d.inputs = md.inputs();
  d.targets = md.target;
  return d;
}

TrainHistory train(Network& net, const TrainingData& data, const OptimizerConfig& opt,
                   const TrainConfig& cfg, const EpochHook& hook) {
  net.validate();
  if (data.inputs.size() != net.input_count()) {
    throw ShapeError("training data has " + std::to_string(data.inputs.size()) +
                     " inputs, network takes " + std::to_string(net.input_count()));
  }
  const auto widths = net.input_widths();
  for (std::size_t s = 0; s < widths.size(); ++s) {
    if (data.inputs[s].cols() != widths[s] || data.inputs[s].rows() != data.rows()) {
      throw ShapeError("training input " + std::to_string(s) + " has the wrong shape");
    }
  }
  if (cfg.batch_size == 0) throw SpecError("batch size must be positive");
  if (data.rows() == 0) throw SpecError("no training rows");

  if (cfg.initialize) net.initialize(cfg.seed);
  Optimizer optimizer(opt);
  auto shuffle_rng = make_rng(cfg.seed, Stream::kShuffle);
  auto dropout_rng = make_rng(cfg.seed, Stream::kDropout);

  TrainHistory history;
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const auto batch = data.select_rows(idx);
      const auto pass = net.forward(batch.inputs, {true, dropout_rng()});
      const auto grads = net.backward(pass, batch.targets);
      if (!std::isfinite(grads.loss)) throw DivergenceError(epoch, "loss is not finite");
      loss_sum += grads.loss * static_cast<double>(idx.size());
      try {
        const auto params = net.parameters();
        const auto views = net.gradient_views(grads);
        optimizer.step(params, views);
      } catch (const DivergenceError&) {
        throw DivergenceError(epoch, "non-finite gradient");
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(data.rows());
    if (!std::isfinite(epoch_loss)) throw DivergenceError(epoch, "loss is not finite");
    history.loss.push_back(epoch_loss);
    history.metric.push_back(hook ? hook(net, epoch) : std::nullopt);
  }
  return history;
}

}  // namespace promissing
