#include "promissing/impute.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "promissing/errors.hpp"
#include "promissing/kernels.hpp"
#include "text_util.hpp"

namespace promissing {

namespace {

constexpr double kRidge = 1e-6;

std::vector<double> observed_means(const MaskedMatrix& x) {
  std::vector<double> means(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto obs = x.observed_column(j);
    if (obs.empty()) throw FitError("column " + std::to_string(j) + " has no observed cells");
    means[j] = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
  }
  return means;
}

Matrix mean_filled(const MaskedMatrix& x, const std::vector<double>& means) {
  Matrix out = x.payloads();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (x.is_missing(i, j)) out(i, j) = means[j];
    }
  }
  return out;
}

// Ridge-damped least squares of column `target` on `predictors` over the
// rows where `target` is observed. The intercept is not penalised.
ColumnRegression fit_regression(const Matrix& filled, const MaskedMatrix& mask_source,
                                std::size_t target, const std::vector<std::size_t>& predictors) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < filled.rows(); ++i) {
    if (!mask_source.is_missing(i, target)) rows.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(predictors.size());
  Eigen::MatrixXd a(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) a(r, c) = filled(rows[r], predictors[c]);
    y(r) = filled(rows[r], target);
  }
  const Eigen::RowVectorXd x_mean = a.colwise().mean();
  const double y_mean = y.mean();
  a.rowwise() -= x_mean;
  y.array() -= y_mean;

  Eigen::MatrixXd gram = a.transpose() * a;
  gram.diagonal().array() += kRidge;
  const Eigen::VectorXd beta = gram.ldlt().solve(a.transpose() * y);

  ColumnRegression reg;
  reg.column = target;
  reg.predictors = predictors;
  reg.coef.assign(beta.data(), beta.data() + beta.size());
  reg.intercept = y_mean - x_mean.dot(beta);
  return reg;
}

// Overwrites the cells of reg.column that are missing in `mask_source`;
// returns the largest absolute change.
double apply_regression(const ColumnRegression& reg, const MaskedMatrix& mask_source,
                        Matrix& filled) {
  double change = 0.0;
  for (std::size_t i = 0; i < filled.rows(); ++i) {
    if (!mask_source.is_missing(i, reg.column)) continue;
    double v = reg.intercept;
    for (std::size_t c = 0; c < reg.predictors.size(); ++c) {
      v += reg.coef[c] * filled(i, reg.predictors[c]);
    }
    change = std::max(change, std::abs(v - filled(i, reg.column)));
    filled(i, reg.column) = v;
  }
  return change;
}

}  // namespace

ImputerKind ImputerKind::parse(const std::string& text) {
  const auto parts = detail::split(detail::lower(text), ':');
  const auto& head = parts.front();
  auto number = [&](std::size_t idx) {
    const auto v = detail::parse_double(parts.at(idx));
    if (!v) throw ConfigError("bad number in imputer spec '" + text + "'");
    return *v;
  };
  if (head == "zero" && parts.size() == 1) return zero();
  if (head == "constant" && parts.size() == 2) return constant_value(number(1));
  if (head == "mean" && parts.size() == 1) return mean();
  if (head == "knn" && parts.size() <= 2) {
    const double k = parts.size() == 2 ? number(1) : 5.0;
    if (k < 1 || k != std::floor(k)) throw ConfigError("knn needs an integer k >= 1");
    return knn(static_cast<std::size_t>(k));
  }
  if (head == "iterative" && parts.size() <= 3) {
    const double cycles = parts.size() >= 2 ? number(1) : 10.0;
    const double tol = parts.size() == 3 ? number(2) : 1e-3;
    if (cycles < 1 || cycles != std::floor(cycles)) {
      throw ConfigError("iterative needs an integer cycle count >= 1");
    }
    return iterative(static_cast<std::size_t>(cycles), tol);
  }
  throw ConfigError("unknown imputer '" + text + "'");
}

std::string ImputerKind::to_string() const {
  switch (type) {
    case Type::kConstant:
      return constant == 0.0 ? "zero" : "constant:" + detail::format_double(constant);
    case Type::kMean: return "mean";
    case Type::kKnn: return "knn:" + std::to_string(k);
    case Type::kIterative:
      return "iterative:" + std::to_string(max_cycles) + ":" + detail::format_double(tol);
  }
  return "?";
}

Imputer fit_imputer(const ImputerKind& kind, const MaskedMatrix& train) {
  Imputer imp;
  imp.kind_ = kind;
  imp.width_ = train.cols();
  switch (kind.type) {
    case ImputerKind::Type::kConstant:
      break;
    case ImputerKind::Type::kMean:
      imp.means_ = observed_means(train);
      break;
    case ImputerKind::Type::kKnn: {
      if (kind.k == 0) throw FitError("knn needs k >= 1");
      for (std::size_t j = 0; j < train.cols(); ++j) {
        if (train.missing_in_col(j) == train.rows()) {
          throw FitError("column " + std::to_string(j) + " has no observed cells");
        }
      }
      imp.train_ = train;
      break;
    }
    case ImputerKind::Type::kIterative: {
      imp.means_ = observed_means(train);
      std::vector<std::size_t> order;
      for (std::size_t j = 0; j < train.cols(); ++j) {
        if (train.missing_in_col(j) > 0) order.push_back(j);
      }
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return train.missing_in_col(a) < train.missing_in_col(b);
      });
      Matrix filled = mean_filled(train, imp.means_);
      for (std::size_t cycle = 1; cycle <= kind.max_cycles; ++cycle) {
        double change = 0.0;
        for (const auto j : order) {
          std::vector<std::size_t> predictors;
          for (std::size_t c = 0; c < train.cols(); ++c) {
            if (c != j) predictors.push_back(c);
          }
          auto reg = fit_regression(filled, train, j, predictors);
          change = std::max(change, apply_regression(reg, train, filled));
          imp.regressions_.push_back(std::move(reg));
        }
        imp.cycles_run_ = cycle;
        imp.last_change_ = change;
        if (change < kind.tol) {
          imp.converged_ = true;
          break;
        }
      }
      break;
    }
  }
  imp.fitted_ = true;
  return imp;
}

MaskedMatrix Imputer::apply(const MaskedMatrix& x) const {
  if (!fitted_) throw StateError("imputer applied before fit");
  if (x.cols() != width_) {
    throw ShapeError("imputer fitted on " + std::to_string(width_) + " columns, got " +
                     std::to_string(x.cols()));
  }
  switch (kind_.type) {
    case ImputerKind::Type::kConstant: {
      Matrix out = x.payloads();
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
          if (x.is_missing(i, j)) out(i, j) = kind_.constant;
        }
      }
      return MaskedMatrix(std::move(out));
    }
    case ImputerKind::Type::kMean:
      return MaskedMatrix(mean_filled(x, means_));
    case ImputerKind::Type::kKnn: {
      Matrix out(x.rows(), x.cols());
      kernels::knn_fill(train_, x, kind_.k, out);
      return MaskedMatrix(std::move(out));
    }
    case ImputerKind::Type::kIterative: {
      Matrix filled = mean_filled(x, means_);
      for (const auto& reg : regressions_) apply_regression(reg, x, filled);
      return MaskedMatrix(std::move(filled));
    }
  }
  throw StateError("unknown imputer kind");
}

}  // namespace promissing
