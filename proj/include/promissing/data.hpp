#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "promissing/matrix.hpp"

namespace promissing {

enum class FeatureKind { kContinuous, kBinary, kCategorical };

const char* to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& text);

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  // Categorical only; cells hold the category's index in this list.
  std::vector<std::string> categories;
};

struct Dataset {
  std::string name;
  MaskedMatrix features;
  std::vector<double> target;
  std::vector<FeatureMeta> feature_meta;

  std::size_t rows() const { return features.rows(); }
  // Throws SchemaError when the parts disagree.
  void validate() const;
};

// Column schema of a CSV file, read from a line-oriented `key=value` file:
//
//   name=breast_cancer
//   target=label
//   column.radius=continuous
//   column.smoker=binary
//   column.site=categorical            # categories in first-seen order
//   column.grade=categorical:low,mid,high
//
// Blank lines and `#` comments are ignored.
struct Schema {
  std::string name;
  std::string target;
  std::vector<FeatureMeta> columns;

  static Schema parse(const std::string& text);
  static Schema load(const std::filesystem::path& path);
  // All non-target columns continuous, in header order.
  static Schema continuous_from_header(const std::filesystem::path& csv,
                                       const std::string& target);

  std::string serialize() const;
};

Dataset load_csv(const std::filesystem::path& path, const Schema& schema);
// Missing cells are written as empty fields, numbers with %.17g. The target
// column is called `label`.
void write_csv(const Dataset& ds, const std::filesystem::path& path);
// Schema matching what write_csv produces for ds.
Schema schema_of(const Dataset& ds);

// Plain numeric CSV with a header and no target, e.g. rows to predict on.
struct NumericTable {
  std::vector<std::string> header;
  MaskedMatrix values;
};

NumericTable read_numeric_csv(const std::filesystem::path& path);
void write_numeric_csv(const NumericTable& table, const std::filesystem::path& path);

// Maps each source feature to its block of encoded columns.
struct EncodedBlock {
  std::size_t source = 0;
  std::size_t offset = 0;
  std::size_t width = 0;
  FeatureKind kind = FeatureKind::kContinuous;
};

struct EncodingMap {
  std::vector<EncodedBlock> blocks;
  std::size_t encoded_width = 0;

  // Encoded columns holding continuous features.
  std::vector<std::size_t> continuous_columns() const;
  // Category index of an observed one-hot block, or nullopt if the block is
  // missing in that row.
  std::optional<std::size_t> decode_category(const MaskedMatrix& encoded, std::size_t row,
                                             std::size_t source) const;
};

struct Encoded {
  MaskedMatrix matrix;
  EncodingMap map;
};

// Categorical columns become one-hot blocks; a missing categorical source
// cell marks its whole block missing.
Encoded encode(const Dataset& ds);

struct StandardizerStats {
  std::vector<std::size_t> columns;
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> constant;
};

struct Standardized {
  MaskedMatrix train;
  std::vector<MaskedMatrix> others;
  StandardizerStats stats;
};

// Fits mean and population std on the observed cells of `train` and applies
// (v - mean) / std to observed cells of every matrix. Constant columns are
// flagged and use std = 1.
Standardized standardize(const MaskedMatrix& train, const std::vector<MaskedMatrix>& others,
                         const std::vector<std::size_t>& columns);
MaskedMatrix apply_standardizer(const MaskedMatrix& x, const StandardizerStats& stats);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct FoldPlan {
  std::vector<Fold> folds;
  std::uint64_t seed = 0;
};

// Shuffled partition of 0..n-1 into k folds; the first n % k folds get one
// extra row.
FoldPlan split_kfold(std::size_t n, std::size_t k, std::uint64_t seed);

// Keeps every index once and tops up the minority class with draws (with
// replacement) from its own indices until both classes have equal counts.
// The result is shuffled.
std::vector<std::size_t> rebalance(const std::vector<double>& labels,
                                   const std::vector<std::size_t>& indices,
                                   std::uint64_t seed);

// Two features around the XOR centers (+-1, +-1), label 1 iff the center's
// signs differ. Rows cycle through the four centers, so each class holds
// n/2 rows (within one).
Dataset simulate_xor(std::size_t n, double noise_var, std::uint64_t seed);

struct Modality {
  std::string name;
  MaskedMatrix features;
};

struct ModalDataset {
  std::vector<Modality> modalities;
  std::vector<double> target;

  std::size_t rows() const { return target.size(); }
  std::size_t modality_count() const { return modalities.size(); }
  std::vector<std::size_t> widths() const;
  void validate() const;

  ModalDataset select_rows(std::span<const std::size_t> indices) const;
  // All modalities side by side, in modality order.
  MaskedMatrix concatenated() const;
  // Splits a concatenated matrix back into this dataset's modality layout.
  std::vector<MaskedMatrix> split_like(const MaskedMatrix& concatenated) const;
  std::vector<MaskedMatrix> inputs() const;
};

// Groups columns named `<modality>.<feature>` into modalities, in order of
// first appearance. Columns without a dot form their own modality.
ModalDataset to_modal(const Dataset& ds);
Dataset from_modal(const ModalDataset& md, const std::string& name);

struct MultimodalSpec {
  std::vector<std::size_t> sizes;
  std::vector<std::string> names;  // optional; defaults to m0, m1, ...
  std::size_t n = 0;
  // Distance between class-conditional means, per feature, in units of the
  // (unit) noise standard deviation. Either one value for all modalities or
  // one per modality.
  std::vector<double> separation{1.0};
  // Share of rows labelled 1.
  double positive_fraction = 0.5;
};

// Class-conditional Gaussians: feature j of modality m is
// N(±separation_m / 2 * d_j, 1) with a random direction d_j in {-1, +1}.
ModalDataset simulate_multimodal(const MultimodalSpec& spec, std::uint64_t seed);

}  // namespace promissing
