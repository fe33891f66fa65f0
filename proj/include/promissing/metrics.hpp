#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace promissing {

// Probability that a random positive scores above a random negative, ties
// counting one half. Labels are 0/1. Throws MetricError when only one class
// is present or the lengths differ.
double auc(std::span<const double> scores, std::span<const double> labels);

// Mean squared error over the population variance of the targets.
// Throws MetricError for fewer than two items or constant targets.
double smse(std::span<const double> preds, std::span<const double> targets);

struct RankSumResult {
  double u = 0.0;  // Mann-Whitney U of the first sample
  double z = 0.0;
  double p = 1.0;  // two-sided
};

// Wilcoxon rank-sum / Mann-Whitney U with midranks, tie-corrected normal
// approximation and continuity correction. Needs at least 5 items per side.
RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b);

enum class MetricKind { kAuc, kSmse };

const char* to_string(MetricKind k);
MetricKind parse_metric_kind(const std::string& text);

struct EvalReport {
  MetricKind kind = MetricKind::kAuc;
  double value = 0.0;
  std::size_t n = 0;
  std::string method;
  std::string dataset;
  std::size_t repetition = 0;
  std::string mechanism;
  double fraction = 0.0;

  // Throws MetricError when the value is outside its range.
  void validate() const;
};

// auc for classification, smse for regression.
EvalReport evaluate(MetricKind kind, std::span<const double> preds, std::span<const double> targets);

}  // namespace promissing
