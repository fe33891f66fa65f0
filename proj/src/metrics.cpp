#include "promissing/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "promissing/errors.hpp"

namespace promissing {

namespace {

// 1-based midranks of `values`; `tie_term` gets sum(t^3 - t) over tie groups.
std::vector<double> midranks(std::span<const double> values, double* tie_term) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  double ties = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    const double t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  if (tie_term) *tie_term = ties;
  return ranks;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw MetricError("auc: scores and labels differ in length");
  for (const double s : scores) {
    if (std::isnan(s)) throw MetricError("auc: NaN score");
  }
  double n_pos = 0.0;
  double n_neg = 0.0;
  for (const double y : labels) {
    if (y == 1.0) {
      n_pos += 1.0;
    } else if (y == 0.0) {
      n_neg += 1.0;
    } else {
      throw MetricError("auc: labels must be 0 or 1");
    }
  }
  if (n_pos == 0.0 || n_neg == 0.0) throw MetricError("auc: both classes must be present");
  const auto ranks = midranks(scores, nullptr);
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (labels[i] == 1.0) pos_rank_sum += ranks[i];
  }
  const double u = pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

double smse(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) throw MetricError("smse: lengths differ");
  if (targets.size() < 2) throw MetricError("smse: need at least two items");
  const double n = static_cast<double>(targets.size());
  const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
  double var = 0.0;
  double mse = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    var += (targets[i] - mean) * (targets[i] - mean);
    mse += (preds[i] - targets[i]) * (preds[i] - targets[i]);
  }
  if (var == 0.0) throw MetricError("smse: targets are constant");
  return mse / var;
}

RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 5 || b.size() < 5) throw MetricError("rank_sum_test: each sample needs >= 5 items");
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  for (const double v : all) {
    if (std::isnan(v)) throw MetricError("rank_sum_test: NaN in sample");
  }
  double ties = 0.0;
  const auto ranks = midranks(all, &ties);
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  double r1 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r1 += ranks[i];

  RankSumResult res;
  res.u = r1 - n1 * (n1 + 1.0) / 2.0;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  const double num = std::abs(res.u - mu) - 0.5;
  if (var <= 0.0 || num <= 0.0) {
    res.z = 0.0;
    res.p = 1.0;
    return res;
  }
  res.z = num / std::sqrt(var);
  res.p = std::min(1.0, std::erfc(res.z / std::sqrt(2.0)));
  // erfc underflows to 0 for |z| > ~38; keep p in (0, 1].
  if (res.p <= 0.0) res.p = std::numeric_limits<double>::min();
  return res;
}

const char* to_string(MetricKind k) { return k == MetricKind::kAuc ? "auc" : "smse"; }

MetricKind parse_metric_kind(const std::string& text) {
  if (text == "auc") return MetricKind::kAuc;
  if (text == "smse") return MetricKind::kSmse;
  throw ConfigError("unknown metric '" + text + "'");
}

void EvalReport::validate() const {
  if (kind == MetricKind::kAuc && !(value >= 0.0 && value <= 1.0)) {
    throw MetricError("auc outside [0, 1]");
  }
  if (kind == MetricKind::kSmse && !(value >= 0.0)) throw MetricError("smse below 0");
}

EvalReport evaluate(MetricKind kind, std::span<const double> preds,
                    std::span<const double> targets) {
  EvalReport r;
  r.kind = kind;
  r.n = targets.size();
  r.value = kind == MetricKind::kAuc ? auc(preds, targets) : smse(preds, targets);
  return r;
}

}  // namespace promissing
