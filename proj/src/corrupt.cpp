#include "promissing/corrupt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "promissing/errors.hpp"
#include "promissing/rng.hpp"
#include "text_util.hpp"

namespace promissing {

const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::kMCAR: return "mcar";
    case Mechanism::kMAR: return "mar";
    case Mechanism::kMNAR: return "mnar";
  }
  return "?";
}

Mechanism parse_mechanism(const std::string& text) {
  const auto t = detail::lower(text);
  if (t == "mcar") return Mechanism::kMCAR;
  if (t == "mar") return Mechanism::kMAR;
  if (t == "mnar") return Mechanism::kMNAR;
  throw SpecError("unknown missingness mechanism '" + text + "'");
}

std::string CorruptionReport::csv_header() {
  return "mechanism,feature,cond_feature,lower_pct,upper_pct,fraction,rows_masked";
}

std::string CorruptionReport::csv_row() const {
  std::string out = std::string(to_string(mechanism)) + "," + std::to_string(target_feature) + ",";
  if (cond_feature) out += std::to_string(*cond_feature);
  out += ",";
  if (window) {
    out += detail::format_double(window->lower_pct) + "," +
           detail::format_double(window->upper_pct);
  } else {
    out += ",";
  }
  out += "," + detail::format_double(fraction) + "," + std::to_string(rows_masked.size());
  return out;
}

double percentile_midpoint(const std::vector<double>& sorted, double pct) {
  if (sorted.empty()) throw SpecError("percentile of an empty sample");
  const double pos = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return 0.5 * (sorted[std::min(lo, sorted.size() - 1)] + sorted[std::min(hi, sorted.size() - 1)]);
}

Corrupted corrupt(const MaskedMatrix& x, const MissingSpec& spec) {
  const std::size_t n = x.rows();
  if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) {
    throw SpecError("missing fraction must lie in [0, 1]");
  }
  if (spec.target_feature >= x.cols()) throw SpecError("target feature out of range");
  if (spec.mechanism == Mechanism::kMAR) {
    if (!spec.cond_feature) throw SpecError("MAR needs a conditioning feature");
    if (*spec.cond_feature >= x.cols()) throw SpecError("conditioning feature out of range");
    if (*spec.cond_feature == spec.target_feature) {
      throw SpecError("MAR conditioning feature must differ from the target feature");
    }
  }
  if (x.missing_in_col(spec.target_feature) != 0) {
    throw SpecError("target feature already has missing cells");
  }
  if (spec.fraction > 0.0 && spec.fraction * static_cast<double>(n) < 1.0) {
    throw TooFewRowsError("fraction " + detail::format_double(spec.fraction) + " of " +
                          std::to_string(n) + " rows masks nothing");
  }

  Corrupted out{x, {}};
  auto& report = out.report;
  report.mechanism = spec.mechanism;
  report.target_feature = spec.target_feature;
  report.fraction = spec.fraction;
  if (spec.mechanism == Mechanism::kMAR) report.cond_feature = spec.cond_feature;
  if (spec.fraction == 0.0) return out;

  auto rng = make_rng(spec.seed, Stream::kCorrupt);
  if (spec.mechanism == Mechanism::kMCAR) {
    const auto count = static_cast<std::size_t>(std::llround(spec.fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    report.rows_masked.assign(order.begin(), order.begin() + count);
  } else {
    const std::size_t driver =
        spec.mechanism == Mechanism::kMAR ? *spec.cond_feature : spec.target_feature;
    auto sorted = x.observed_column(driver);
    if (sorted.empty()) throw SpecError("driving feature has no observed values");
    std::sort(sorted.begin(), sorted.end());
    PercentileWindow w;
    const double width = 100.0 * spec.fraction;
    w.lower_pct = uniform01(rng) * (100.0 - width);
    w.upper_pct = std::min(100.0, w.lower_pct + width);
    w.lower_value = percentile_midpoint(sorted, w.lower_pct);
    w.upper_value = percentile_midpoint(sorted, w.upper_pct);
    for (std::size_t i = 0; i < n; ++i) {
      if (!x.is_missing(i, driver) && w.contains(x.payload(i, driver))) {
        report.rows_masked.push_back(i);
      }
    }
    report.window = w;
  }
  std::sort(report.rows_masked.begin(), report.rows_masked.end());
  for (const auto i : report.rows_masked) out.matrix.set_missing(i, spec.target_feature);
  return out;
}

// ---------------------------------------------------------------- mutual information

std::vector<std::size_t> equal_frequency_bins(const std::vector<double>& values,
                                              std::size_t bins) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> bin(n);
  std::size_t first_of_run = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r > 0 && values[order[r]] != values[order[r - 1]]) first_of_run = r;
    bin[order[r]] = first_of_run * bins / n;
  }
  return bin;
}

namespace {

bool is_binary(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0 || x == 1.0; });
}

std::vector<std::size_t> discretize_target(const std::vector<double>& y, std::size_t bins) {
  std::map<double, std::size_t> classes;
  for (const double v : y) classes.emplace(v, 0);
  if (classes.size() <= bins) {
    std::size_t next = 0;
    for (auto& [v, id] : classes) id = next++;
    std::vector<std::size_t> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = classes[y[i]];
    return out;
  }
  return equal_frequency_bins(y, bins);
}

double plugin_mi(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const std::size_t na = *std::max_element(a.begin(), a.end()) + 1;
  const std::size_t nb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<double> joint(na * nb, 0.0);
  std::vector<double> pa(na, 0.0);
  std::vector<double> pb(nb, 0.0);
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[a[i] * nb + b[i]] += 1.0;
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
  }
  double mi = 0.0;
  for (std::size_t u = 0; u < na; ++u) {
    for (std::size_t v = 0; v < nb; ++v) {
      const double c = joint[u * nb + v];
      if (c > 0.0) mi += c / n * std::log(c * n / (pa[u] * pb[v]));
    }
  }
  return std::max(0.0, mi);
}

}  // namespace

std::vector<FeatureScore> rank_features_mi(const MaskedMatrix& x, const std::vector<double>& y,
                                           std::size_t bins) {
  if (x.cols() == 0) throw RankError("no columns to rank");
  if (bins < 2) throw RankError("need at least 2 bins");
  if (y.size() != x.rows() || y.empty()) throw RankError("target length differs from rows");
  const auto target_bins = discretize_target(y, bins);

  std::vector<FeatureScore> scores;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (x.missing_in_col(j) != 0) {
      throw RankError("column " + std::to_string(j) + " has missing cells");
    }
    const auto col = x.observed_column(j);
    std::vector<std::size_t> binned;
    if (is_binary(col)) {
      binned.reserve(col.size());
      for (const double v : col) binned.push_back(static_cast<std::size_t>(v));
    } else {
      binned = equal_frequency_bins(col, bins);
    }
    scores.push_back({j, plugin_mi(binned, target_bins)});
  }
  std::stable_sort(scores.begin(), scores.end(), [](const FeatureScore& a, const FeatureScore& b) {
    return a.mutual_information > b.mutual_information;
  });
  return scores;
}

// ---------------------------------------------------------------- augmentation

std::size_t augmented_row_count(std::size_t modality_count, std::size_t n,
                                std::size_t max_removed) {
  std::size_t total = 0;
  std::size_t binom = 1;  // C(M, 0)
  for (std::size_t m = 0; m <= max_removed && m <= modality_count; ++m) {
    total += binom * n;
    binom = binom * (modality_count - m) / (m + 1);
  }
  return total;
}

std::vector<std::vector<std::size_t>> modality_subsets(std::size_t m_count,
                                                       std::size_t max_size) {
  std::vector<std::vector<std::size_t>> out{{}};
  for (std::size_t size = 1; size <= max_size && size <= m_count; ++size) {
    std::vector<std::size_t> comb(size);
    std::iota(comb.begin(), comb.end(), 0);
    while (true) {
      out.push_back(comb);
      // Advance to the next combination in lexicographic order.
      std::size_t i = size;
      while (i > 0 && comb[i - 1] == m_count - size + i - 1) --i;
      if (i == 0) break;
      ++comb[i - 1];
      for (std::size_t k = i; k < size; ++k) comb[k] = comb[k - 1] + 1;
    }
  }
  return out;
}

ModalDataset augment_modalities(const ModalDataset& md, std::size_t max_removed) {
  const std::size_t m_count = md.modality_count();
  if (max_removed >= m_count) {
    throw AugmentError("max_removed must be below the modality count (" +
                       std::to_string(m_count) + ")");
  }
  const auto subsets = modality_subsets(m_count, max_removed);
  const std::size_t n = md.rows();

  ModalDataset out;
  for (const auto& m : md.modalities) out.modalities.push_back({m.name, {}});
  for (std::size_t m = 0; m < m_count; ++m) {
    const auto& src = md.modalities[m].features;
    MaskedMatrix dst(n * subsets.size(), src.cols());
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      const bool removed =
          std::find(subsets[s].begin(), subsets[s].end(), m) != subsets[s].end();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < src.cols(); ++j) {
          if (removed || src.is_missing(i, j)) {
            dst.set_missing(s * n + i, j);
          } else {
            dst.set(s * n + i, j, src.payload(i, j));
          }
        }
      }
    }
    out.modalities[m].features = std::move(dst);
  }
  out.target.reserve(n * subsets.size());
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    out.target.insert(out.target.end(), md.target.begin(), md.target.end());
  }
  return out;
}

}  // namespace promissing
