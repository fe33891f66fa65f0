#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "promissing/data.hpp"
#include "promissing/matrix.hpp"

namespace promissing {

enum class Mechanism { kMCAR, kMAR, kMNAR };

const char* to_string(Mechanism m);
Mechanism parse_mechanism(const std::string& text);

struct MissingSpec {
  Mechanism mechanism = Mechanism::kMCAR;
  // Share of rows whose target_feature gets removed.
  double fraction = 0.0;
  // Column that loses values.
  std::size_t target_feature = 0;
  // MAR only: column whose percentile window decides which rows lose values.
  std::optional<std::size_t> cond_feature;
  std::uint64_t seed = 0;
};

struct PercentileWindow {
  double lower_pct = 0.0;
  double upper_pct = 0.0;
  // Values at those percentiles; rows with lower_value <= v <= upper_value
  // fall inside the window.
  double lower_value = 0.0;
  double upper_value = 0.0;

  bool contains(double v) const { return v >= lower_value && v <= upper_value; }
};

struct CorruptionReport {
  Mechanism mechanism = Mechanism::kMCAR;
  std::size_t target_feature = 0;
  std::optional<std::size_t> cond_feature;
  double fraction = 0.0;
  std::vector<std::size_t> rows_masked;  // ascending
  std::optional<PercentileWindow> window;  // none for MCAR

  static std::string csv_header();
  // mechanism,feature,cond_feature,lower_pct,upper_pct,fraction,rows_masked
  std::string csv_row() const;
};

struct Corrupted {
  MaskedMatrix matrix;
  CorruptionReport report;
};

// Percentile of sorted values by midpoint interpolation: position
// pct/100 * (n-1), averaging the two neighbouring order statistics.
double percentile_midpoint(const std::vector<double>& sorted, double pct);

// MCAR masks round(f*n) uniformly chosen rows. MAR and MNAR draw a lower
// percentile l ~ U(0, 100 - 100f) and mask the rows whose driving value
// (cond_feature for MAR, target_feature itself for MNAR) lies in
// [pct(l), pct(l + 100f)], boundaries included.
Corrupted corrupt(const MaskedMatrix& x, const MissingSpec& spec);

struct FeatureScore {
  std::size_t column = 0;
  double mutual_information = 0.0;  // nats
};

// Plug-in mutual information between each column (binned into `bins`
// equal-frequency bins unless it is already 0/1) and the target (used as
// classes when it has at most `bins` distinct values, else binned too).
// Sorted by descending MI, ties by ascending column.
std::vector<FeatureScore> rank_features_mi(const MaskedMatrix& x, const std::vector<double>& y,
                                           std::size_t bins = 10);

// Equal-frequency bin index per value; equal values share a bin.
std::vector<std::size_t> equal_frequency_bins(const std::vector<double>& values,
                                              std::size_t bins);

// Row count produced by augment_modalities: sum_{m=0}^{max_removed} C(M, m) * n.
std::size_t augmented_row_count(std::size_t modality_count, std::size_t n,
                                std::size_t max_removed);

// Appends, for every modality subset of size 1..max_removed (by size, then
// lexicographically), a copy of all rows with those modalities masked.
// Size 0 is the original data and comes first.
ModalDataset augment_modalities(const ModalDataset& md, std::size_t max_removed);

// Every subset of {0..m_count-1} with size <= max_size, in the order used by
// augment_modalities.
std::vector<std::vector<std::size_t>> modality_subsets(std::size_t m_count,
                                                       std::size_t max_size);

}  // namespace promissing
