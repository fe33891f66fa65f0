#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "promissing/layer.hpp"
#include "promissing/matrix.hpp"

namespace testutil {

using promissing::Matrix;
using promissing::MaskedMatrix;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed * 7919 + 17); }

inline double unif(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Matrix random_matrix(std::mt19937_64& g, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.flat()) v = unif(g, -scale, scale);
  return m;
}

// Each cell missing with probability p_missing.
inline MaskedMatrix random_masked(std::mt19937_64& g, std::size_t r, std::size_t c,
                                  double p_missing, double scale = 1.0) {
  MaskedMatrix x(random_matrix(g, r, c, scale));
  std::bernoulli_distribution miss(p_missing);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      if (miss(g)) x.set_missing(i, j);
    }
  }
  return x;
}

inline promissing::Layer random_layer(std::mt19937_64& g, std::size_t inputs, std::size_t units,
                                      promissing::LayerKind kind, promissing::NanMode mode,
                                      promissing::Transfer t = promissing::Transfer::kLinear) {
  auto l = kind == promissing::LayerKind::kDense
               ? promissing::Layer::dense(inputs, units, t)
               : promissing::Layer::nan_dense(inputs, units, t, mode);
  for (auto& v : l.weights.flat()) v = unif(g, -1, 1);
  for (auto& v : l.bias) v = unif(g, -1, 1);
  for (auto& v : l.compensatory) v = unif(g, -1, 1);
  return l;
}

inline double rel_err(double a, double b, double floor = 1e-4) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testutil
