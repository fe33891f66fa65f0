#include <cmath>

#include "promissing/errors.hpp"
#include "promissing/train.hpp"

namespace promissing {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw SpecError("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw SpecError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw SpecError("Adam epsilon must be > 0");
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) { config_.validate(); }

void Optimizer::step(std::span<const std::span<double>> params,
                     std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) throw ShapeError("parameter and gradient slot counts differ");
  for (std::size_t s = 0; s < params.size(); ++s) {
    if (params[s].size() != grads[s].size()) throw ShapeError("gradient slot size mismatch");
    for (const double g : grads[s]) {
      if (!std::isfinite(g)) throw DivergenceError(0, "non-finite gradient");
    }
  }
  ++t_;
  if (config_.kind == OptimizerConfig::Kind::kSgd) {
    for (std::size_t s = 0; s < params.size(); ++s) {
      for (std::size_t c = 0; c < params[s].size(); ++c) params[s][c] -= config_.lr * grads[s][c];
    }
    return;
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ShapeError("optimizer slot layout changed");
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t s = 0; s < params.size(); ++s) {
    for (std::size_t c = 0; c < params[s].size(); ++c) {
      const double g = grads[s][c];
      m_[s][c] = b1 * m_[s][c] + (1.0 - b1) * g;
      v_[s][c] = b2 * v_[s][c] + (1.0 - b2) * g * g;
      const double mhat = m_[s][c] / c1;
      const double vhat = v_[s][c] / c2;
      params[s][c] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

}  // namespace promissing
