#include "promissing/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "promissing/errors.hpp"
#include "promissing/rng.hpp"
#include "text_util.hpp"

namespace promissing {

const char* to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kContinuous: return "continuous";
    case FeatureKind::kBinary: return "binary";
    case FeatureKind::kCategorical: return "categorical";
  }
  return "?";
}

FeatureKind parse_feature_kind(const std::string& text) {
  const auto t = detail::lower(text);
  if (t == "continuous") return FeatureKind::kContinuous;
  if (t == "binary") return FeatureKind::kBinary;
  if (t == "categorical") return FeatureKind::kCategorical;
  throw SchemaError("unknown feature kind '" + text + "'");
}

void Dataset::validate() const {
  if (target.size() != features.rows()) {
    throw SchemaError("target length " + std::to_string(target.size()) +
                      " != feature rows " + std::to_string(features.rows()));
  }
  if (feature_meta.size() != features.cols()) {
    throw SchemaError("feature metadata does not cover every column");
  }
  for (const auto& m : feature_meta) {
    if (m.kind == FeatureKind::kCategorical && m.categories.size() < 2) {
      throw SchemaError("categorical column '" + m.name + "' needs at least 2 categories");
    }
  }
}

// ---------------------------------------------------------------- schema

Schema Schema::parse(const std::string& text) {
  Schema s;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& raw : detail::lines_of(text)) {
    ++line_no;
    auto line = detail::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw SchemaError("schema line " + std::to_string(line_no) + " lacks '='");
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key == "name") {
      s.name = value;
    } else if (key == "target") {
      s.target = value;
    } else if (key.rfind("column.", 0) == 0) {
      FeatureMeta meta;
      meta.name = key.substr(7);
      if (meta.name.empty() || !seen.insert(meta.name).second) {
        throw SchemaError("bad or duplicate column '" + meta.name + "'");
      }
      const auto colon = value.find(':');
      meta.kind = parse_feature_kind(detail::trim(value.substr(0, colon)));
      if (colon != std::string::npos) {
        if (meta.kind != FeatureKind::kCategorical) {
          throw SchemaError("only categorical columns take a category list");
        }
        meta.categories = detail::split(value.substr(colon + 1), ',');
        if (meta.categories.size() < 2) {
          throw SchemaError("column '" + meta.name + "' lists fewer than 2 categories");
        }
      }
      s.columns.push_back(std::move(meta));
    } else {
      throw SchemaError("unknown schema key '" + key + "'");
    }
  }
  if (s.target.empty()) throw SchemaError("schema names no target column");
  return s;
}

Schema Schema::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path.string()));
}

Schema Schema::continuous_from_header(const std::filesystem::path& csv,
                                      const std::string& target) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  Schema s;
  s.name = csv.stem().string();
  s.target = target;
  bool found = false;
  for (auto& col : detail::split(header, ',')) {
    if (col == target) {
      found = true;
      continue;
    }
    s.columns.push_back({col, FeatureKind::kContinuous, {}});
  }
  if (!found) throw SchemaError("target column '" + target + "' not in header");
  return s;
}

std::string Schema::serialize() const {
  std::string out;
  if (!name.empty()) out += "name=" + name + "\n";
  out += "target=" + target + "\n";
  for (const auto& c : columns) {
    out += "column." + c.name + "=" + to_string(c.kind);
    if (!c.categories.empty()) {
      out += ":";
      for (std::size_t i = 0; i < c.categories.size(); ++i) {
        out += (i ? "," : "") + c.categories[i];
      }
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- csv

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  const auto lines = detail::lines_of(detail::read_file(path.string()));
  if (lines.empty()) throw SchemaError(path.string() + " is empty");
  const auto header = detail::split(lines.front(), ',');

  std::map<std::string, const FeatureMeta*> by_name;
  for (const auto& c : schema.columns) by_name[c.name] = &c;

  // Header order decides feature order.
  std::optional<std::size_t> target_pos;
  std::vector<std::size_t> feature_pos;
  Dataset ds;
  ds.name = schema.name.empty() ? path.stem().string() : schema.name;
  std::set<std::string> header_seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!header_seen.insert(header[c]).second) {
      throw SchemaError("duplicate header column '" + header[c] + "'");
    }
    if (header[c] == schema.target) {
      target_pos = c;
      continue;
    }
    auto it = by_name.find(header[c]);
    if (it == by_name.end()) {
      throw SchemaError("header column '" + header[c] + "' not in schema");
    }
    feature_pos.push_back(c);
    ds.feature_meta.push_back(*it->second);
  }
  if (!target_pos) throw SchemaError("target column '" + schema.target + "' not in header");
  if (feature_pos.size() != schema.columns.size()) {
    throw SchemaError("schema lists columns absent from the header");
  }

  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (detail::trim(lines[r]).empty()) continue;
    auto fields = detail::split(lines[r], ',');
    if (fields.size() != header.size()) {
      throw ParseError(rows.size(), fields.size(),
                       "expected " + std::to_string(header.size()) + " fields");
    }
    rows.push_back(std::move(fields));
  }

  const std::size_t n = rows.size();
  const std::size_t p = feature_pos.size();
  ds.features = MaskedMatrix(n, p);
  ds.target.resize(n);
  for (std::size_t j = 0; j < p; ++j) {
    auto& meta = ds.feature_meta[j];
    const bool discover = meta.kind == FeatureKind::kCategorical && meta.categories.empty();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& field = rows[i][feature_pos[j]];
      if (detail::is_missing_token(field)) {
        ds.features.set_missing(i, j);
        continue;
      }
      if (meta.kind == FeatureKind::kCategorical) {
        auto it = std::find(meta.categories.begin(), meta.categories.end(), field);
        if (it == meta.categories.end()) {
          if (!discover) {
            throw UnknownCategoryError("value '" + field + "' of column '" + meta.name +
                                       "' is not a declared category");
          }
          meta.categories.push_back(field);
          it = meta.categories.end() - 1;
        }
        ds.features.set(i, j, static_cast<double>(it - meta.categories.begin()));
        continue;
      }
      const auto v = detail::parse_double(field);
      if (!v) throw ParseError(i, feature_pos[j], "'" + field + "' is not a number");
      if (meta.kind == FeatureKind::kBinary && *v != 0.0 && *v != 1.0) {
        throw ParseError(i, feature_pos[j], "binary column holds " + field);
      }
      ds.features.set(i, j, *v);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& field = rows[i][*target_pos];
    if (detail::is_missing_token(field)) {
      throw TargetMissingError("row " + std::to_string(i) + " has no target value");
    }
    const auto v = detail::parse_double(field);
    if (!v) throw ParseError(i, *target_pos, "'" + field + "' is not a number");
    ds.target[i] = *v;
  }
  ds.validate();
  return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& m : ds.feature_meta) out << m.name << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (std::size_t j = 0; j < ds.features.cols(); ++j) {
      if (!ds.features.is_missing(i, j)) {
        const double v = ds.features.payload(i, j);
        const auto& meta = ds.feature_meta[j];
        if (meta.kind == FeatureKind::kCategorical) {
          out << meta.categories.at(static_cast<std::size_t>(v));
        } else {
          out << detail::format_double(v);
        }
      }
      out << ',';
    }
    out << detail::format_double(ds.target[i]) << '\n';
  }
}

Schema schema_of(const Dataset& ds) {
  Schema s;
  s.name = ds.name;
  s.target = "label";
  s.columns = ds.feature_meta;
  return s;
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  const auto lines = detail::lines_of(detail::read_file(path.string()));
  if (lines.empty()) throw SchemaError(path.string() + " is empty");
  NumericTable t;
  t.header = detail::split(lines.front(), ',');
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (detail::trim(lines[r]).empty()) continue;
    auto fields = detail::split(lines[r], ',');
    if (fields.size() != t.header.size()) {
      throw ParseError(rows.size(), fields.size(),
                       "expected " + std::to_string(t.header.size()) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  t.values = MaskedMatrix(rows.size(), t.header.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      if (detail::is_missing_token(rows[i][j])) {
        t.values.set_missing(i, j);
        continue;
      }
      const auto v = detail::parse_double(rows[i][j]);
      if (!v) throw ParseError(i, j, "not a number: '" + rows[i][j] + "'");
      t.values.set(i, j, *v);
    }
  }
  return t;
}

void write_numeric_csv(const NumericTable& table, const std::filesystem::path& path) {
  if (table.header.size() != table.values.cols()) throw SchemaError("header width mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t j = 0; j < table.header.size(); ++j) out << (j ? "," : "") << table.header[j];
  out << '\n';
  for (std::size_t i = 0; i < table.values.rows(); ++i) {
    for (std::size_t j = 0; j < table.values.cols(); ++j) {
      if (j) out << ',';
      if (!table.values.is_missing(i, j)) out << detail::format_double(table.values.payload(i, j));
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------- encoding

std::vector<std::size_t> EncodingMap::continuous_columns() const {
  std::vector<std::size_t> out;
  for (const auto& b : blocks) {
    if (b.kind == FeatureKind::kContinuous) out.push_back(b.offset);
  }
  return out;
}

std::optional<std::size_t> EncodingMap::decode_category(const MaskedMatrix& encoded,
                                                        std::size_t row,
                                                        std::size_t source) const {
  const auto& b = blocks.at(source);
  if (b.kind != FeatureKind::kCategorical) {
    throw SchemaError("source feature " + std::to_string(source) + " is not categorical");
  }
  if (encoded.is_missing(row, b.offset)) return std::nullopt;
  for (std::size_t c = 0; c < b.width; ++c) {
    if (encoded.at(row, b.offset + c) == 1.0) return c;
  }
  throw UnknownCategoryError("one-hot block of feature " + std::to_string(source) +
                             " has no hot cell");
}

Encoded encode(const Dataset& ds) {
  Encoded out;
  std::size_t offset = 0;
  for (std::size_t j = 0; j < ds.feature_meta.size(); ++j) {
    const auto& m = ds.feature_meta[j];
    const std::size_t width = m.kind == FeatureKind::kCategorical ? m.categories.size() : 1;
    out.map.blocks.push_back({j, offset, width, m.kind});
    offset += width;
  }
  out.map.encoded_width = offset;
  out.matrix = MaskedMatrix(ds.rows(), offset);
  for (const auto& b : out.map.blocks) {
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      if (ds.features.is_missing(i, b.source)) {
        for (std::size_t c = 0; c < b.width; ++c) out.matrix.set_missing(i, b.offset + c);
        continue;
      }
      const double v = ds.features.payload(i, b.source);
      if (b.kind != FeatureKind::kCategorical) {
        out.matrix.set(i, b.offset, v);
        continue;
      }
      if (v < 0 || v >= static_cast<double>(b.width) || v != std::floor(v)) {
        throw UnknownCategoryError("row " + std::to_string(i) + " of '" +
                                   ds.feature_meta[b.source].name +
                                   "' holds an undeclared category");
      }
      for (std::size_t c = 0; c < b.width; ++c) {
        out.matrix.set(i, b.offset + c, c == static_cast<std::size_t>(v) ? 1.0 : 0.0);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- standardize

MaskedMatrix apply_standardizer(const MaskedMatrix& x, const StandardizerStats& stats) {
  MaskedMatrix out = x;
  for (std::size_t c = 0; c < stats.columns.size(); ++c) {
    const std::size_t j = stats.columns[c];
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (!x.is_missing(i, j)) out.set(i, j, (x.payload(i, j) - stats.mean[c]) / stats.std[c]);
    }
  }
  return out;
}

Standardized standardize(const MaskedMatrix& train, const std::vector<MaskedMatrix>& others,
                         const std::vector<std::size_t>& columns) {
  StandardizerStats stats;
  stats.columns = columns;
  for (const std::size_t j : columns) {
    if (j >= train.cols()) throw ShapeError("standardize: column out of range");
    const auto obs = train.observed_column(j);
    if (obs.empty()) {
      throw EmptyColumnError("column " + std::to_string(j) + " has no observed cells");
    }
    const double n = static_cast<double>(obs.size());
    const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / n;
    double ss = 0.0;
    for (const double v : obs) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    const bool constant = !(sd > 0.0);
    stats.mean.push_back(mean);
    stats.std.push_back(constant ? 1.0 : sd);
    stats.constant.push_back(constant);
  }
  Standardized out;
  out.train = apply_standardizer(train, stats);
  for (const auto& o : others) {
    if (o.cols() != train.cols()) throw ShapeError("standardize: width mismatch");
    out.others.push_back(apply_standardizer(o, stats));
  }
  out.stats = std::move(stats);
  return out;
}

// ---------------------------------------------------------------- splitting

FoldPlan split_kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw SplitError("k-fold needs 2 <= k <= n (k=" + std::to_string(k) +
                     ", n=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, Stream::kSplit);
  std::shuffle(order.begin(), order.end(), rng);

  FoldPlan plan;
  plan.seed = seed;
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    Fold fold;
    fold.test.assign(order.begin() + start, order.begin() + start + size);
    std::sort(fold.test.begin(), fold.test.end());
    start += size;
    plan.folds.push_back(std::move(fold));
  }
  for (auto& fold : plan.folds) {
    std::vector<char> in_test(n, 0);
    for (const auto i : fold.test) in_test[i] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_test[i]) fold.train.push_back(i);
    }
  }
  return plan;
}

std::vector<std::size_t> rebalance(const std::vector<double>& labels,
                                   const std::vector<std::size_t>& indices,
                                   std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (const auto i : indices) {
    const double y = labels.at(i);
    if (y == 1.0) {
      pos.push_back(i);
    } else if (y == 0.0) {
      neg.push_back(i);
    } else {
      throw RebalanceError("label " + std::to_string(y) + " is not 0/1");
    }
  }
  if (pos.empty() || neg.empty()) throw RebalanceError("only one class present");

  auto rng = make_rng(seed, Stream::kRebalance);
  std::vector<std::size_t> out(indices.begin(), indices.end());
  const auto& minority = pos.size() < neg.size() ? pos : neg;
  const std::size_t deficit =
      std::max(pos.size(), neg.size()) - std::min(pos.size(), neg.size());
  std::uniform_int_distribution<std::size_t> pick(0, minority.size() - 1);
  for (std::size_t d = 0; d < deficit; ++d) out.push_back(minority[pick(rng)]);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

// ---------------------------------------------------------------- generators

Dataset simulate_xor(std::size_t n, double noise_var, std::uint64_t seed) {
  if (n < 4) throw SpecError("simulate_xor needs n >= 4");
  if (!(noise_var >= 0.0)) throw SpecError("noise variance must be >= 0");
  static constexpr double kCenters[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};

  auto rng = make_rng(seed, Stream::kXor);
  std::vector<std::size_t> cluster(n);
  for (std::size_t i = 0; i < n; ++i) cluster[i] = i % 4;
  std::shuffle(cluster.begin(), cluster.end(), rng);

  std::normal_distribution<double> noise(0.0, noise_var > 0.0 ? std::sqrt(noise_var) : 1.0);
  Dataset ds;
  ds.name = "xor";
  ds.features = MaskedMatrix(n, 2);
  ds.target.resize(n);
  ds.feature_meta = {{"x1", FeatureKind::kContinuous, {}}, {"x2", FeatureKind::kContinuous, {}}};
  for (std::size_t i = 0; i < n; ++i) {
    const auto* c = kCenters[cluster[i]];
    for (std::size_t j = 0; j < 2; ++j) {
      ds.features.set(i, j, c[j] + (noise_var > 0.0 ? noise(rng) : 0.0));
    }
    ds.target[i] = (c[0] > 0) != (c[1] > 0) ? 1.0 : 0.0;
  }
  return ds;
}

std::vector<std::size_t> ModalDataset::widths() const {
  std::vector<std::size_t> w;
  for (const auto& m : modalities) w.push_back(m.features.cols());
  return w;
}

void ModalDataset::validate() const {
  std::set<std::string> names;
  for (const auto& m : modalities) {
    if (m.features.rows() != target.size()) {
      throw SchemaError("modality '" + m.name + "' row count differs from target length");
    }
    if (!names.insert(m.name).second) {
      throw SchemaError("duplicate modality name '" + m.name + "'");
    }
  }
}

ModalDataset ModalDataset::select_rows(std::span<const std::size_t> indices) const {
  ModalDataset out;
  for (const auto& m : modalities) out.modalities.push_back({m.name, m.features.select_rows(indices)});
  out.target.reserve(indices.size());
  for (const auto i : indices) out.target.push_back(target.at(i));
  return out;
}

MaskedMatrix ModalDataset::concatenated() const {
  const auto blocks = inputs();
  return hstack(blocks);
}

std::vector<MaskedMatrix> ModalDataset::split_like(const MaskedMatrix& concatenated) const {
  std::vector<MaskedMatrix> out;
  std::size_t offset = 0;
  for (const auto& m : modalities) {
    std::vector<std::size_t> cols(m.features.cols());
    std::iota(cols.begin(), cols.end(), offset);
    out.push_back(concatenated.select_cols(cols));
    offset += cols.size();
  }
  if (offset != concatenated.cols()) throw ShapeError("split_like: width mismatch");
  return out;
}

std::vector<MaskedMatrix> ModalDataset::inputs() const {
  std::vector<MaskedMatrix> out;
  for (const auto& m : modalities) out.push_back(m.features);
  return out;
}

ModalDataset to_modal(const Dataset& ds) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t j = 0; j < ds.feature_meta.size(); ++j) {
    const auto& name = ds.feature_meta[j].name;
    const auto dot = name.find('.');
    const auto group = dot == std::string::npos ? name : name.substr(0, dot);
    if (!groups.count(group)) order.push_back(group);
    groups[group].push_back(j);
  }
  ModalDataset md;
  for (const auto& g : order) md.modalities.push_back({g, ds.features.select_cols(groups[g])});
  md.target = ds.target;
  md.validate();
  return md;
}

Dataset from_modal(const ModalDataset& md, const std::string& name) {
  Dataset ds;
  ds.name = name;
  ds.features = md.concatenated();
  ds.target = md.target;
  for (const auto& m : md.modalities) {
    for (std::size_t j = 0; j < m.features.cols(); ++j) {
      ds.feature_meta.push_back({m.name + ".f" + std::to_string(j), FeatureKind::kContinuous, {}});
    }
  }
  return ds;
}

ModalDataset simulate_multimodal(const MultimodalSpec& spec, std::uint64_t seed) {
  const std::size_t m_count = spec.sizes.size();
  if (m_count < 2) throw SpecError("simulate_multimodal needs at least 2 modalities");
  if (std::any_of(spec.sizes.begin(), spec.sizes.end(), [](auto s) { return s == 0; })) {
    throw SpecError("every modality needs at least one feature");
  }
  if (spec.n < 2) throw SpecError("simulate_multimodal needs n >= 2");
  if (!spec.names.empty() && spec.names.size() != m_count) {
    throw SpecError("modality names do not match modality count");
  }
  if (spec.separation.size() != 1 && spec.separation.size() != m_count) {
    throw SpecError("separation must have 1 or M entries");
  }
  if (!(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0)) {
    throw SpecError("positive_fraction must lie in (0, 1)");
  }

  auto rng = make_rng(seed, Stream::kMultimodal);
  ModalDataset md;
  const auto positives =
      static_cast<std::size_t>(std::llround(spec.positive_fraction * static_cast<double>(spec.n)));
  md.target.assign(spec.n, 0.0);
  std::fill(md.target.begin(), md.target.begin() + std::min(positives, spec.n), 1.0);
  std::shuffle(md.target.begin(), md.target.end(), rng);

  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t m = 0; m < m_count; ++m) {
    const double sep = spec.separation.size() == 1 ? spec.separation[0] : spec.separation[m];
    std::vector<double> direction(spec.sizes[m]);
    for (auto& d : direction) d = (rng() & 1) ? 1.0 : -1.0;
    MaskedMatrix x(spec.n, spec.sizes[m]);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const double sign = md.target[i] == 1.0 ? 0.5 : -0.5;
      for (std::size_t j = 0; j < spec.sizes[m]; ++j) {
        x.set(i, j, sign * sep * direction[j] + noise(rng));
      }
    }
    md.modalities.push_back(
        {spec.names.empty() ? "m" + std::to_string(m) : spec.names[m], std::move(x)});
  }
  md.validate();
  return md;
}

}  // namespace promissing
