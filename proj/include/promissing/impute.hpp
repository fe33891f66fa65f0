#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "promissing/matrix.hpp"

namespace promissing {

struct ImputerKind {
  enum class Type { kConstant, kMean, kKnn, kIterative };

  Type type = Type::kMean;
  double constant = 0.0;
  std::size_t k = 5;
  std::size_t max_cycles = 10;
  double tol = 1e-3;

  static ImputerKind zero() { return {Type::kConstant, 0.0}; }
  static ImputerKind constant_value(double c) { return {Type::kConstant, c}; }
  static ImputerKind mean() { return {Type::kMean}; }
  static ImputerKind knn(std::size_t k) { return {Type::kKnn, 0.0, k}; }
  static ImputerKind iterative(std::size_t max_cycles = 10, double tol = 1e-3) {
    return {Type::kIterative, 0.0, 5, max_cycles, tol};
  }

  // zero | constant:<c> | mean | knn:<k> | iterative[:<cycles>[:<tol>]]
  static ImputerKind parse(const std::string& text);
  std::string to_string() const;
};

// One chained-equation regression: column := intercept + coef . (other columns).
struct ColumnRegression {
  std::size_t column = 0;
  std::vector<std::size_t> predictors;
  double intercept = 0.0;
  std::vector<double> coef;
};

class Imputer {
 public:
  Imputer() = default;

  bool fitted() const { return fitted_; }
  const ImputerKind& kind() const { return kind_; }
  std::size_t width() const { return width_; }

  // Observed-cell column means (mean, iterative).
  const std::vector<double>& means() const { return means_; }

  // Iterative only.
  std::size_t cycles_run() const { return cycles_run_; }
  bool converged() const { return converged_; }
  double last_change() const { return last_change_; }
  const std::vector<ColumnRegression>& regressions() const { return regressions_; }

  // Returns a copy of x with every missing cell filled and an empty mask.
  // Observed cells are copied bit for bit.
  MaskedMatrix apply(const MaskedMatrix& x) const;

  friend Imputer fit_imputer(const ImputerKind& kind, const MaskedMatrix& train);

 private:
  bool fitted_ = false;
  ImputerKind kind_;
  std::size_t width_ = 0;
  std::vector<double> means_;
  MaskedMatrix train_;  // knn donors
  std::vector<ColumnRegression> regressions_;  // every cycle, in fit order
  std::size_t cycles_run_ = 0;
  bool converged_ = false;
  double last_change_ = 0.0;
};

Imputer fit_imputer(const ImputerKind& kind, const MaskedMatrix& train);
inline MaskedMatrix apply_imputer(const Imputer& imp, const MaskedMatrix& x) { return imp.apply(x); }

}  // namespace promissing
