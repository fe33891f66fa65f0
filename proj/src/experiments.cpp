#include "promissing/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "promissing/corrupt.hpp"
#include "promissing/errors.hpp"
#include "promissing/impute.hpp"
#include "promissing/metrics.hpp"
#include "promissing/rng.hpp"
#include "promissing/train.hpp"
#include "harness_util.hpp"

namespace promissing {

namespace detail {

std::uint64_t cell_seed(std::uint64_t rep_seed, Mechanism m, double fraction, std::uint64_t extra) {
  return mix_seed(rep_seed ^ mix_seed(static_cast<std::uint64_t>(m) + 1) ^
                  mix_seed(std::bit_cast<std::uint64_t>(fraction)) ^ mix_seed(extra + 0x9e37));
}

}  // namespace detail

namespace {

bool is_binary_target(const std::vector<double>& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

}  // namespace

Dataset simulate_censored(std::size_t n, std::uint64_t seed) {
  if (n < 6) throw SpecError("simulate_censored needs n >= 6");
  auto rng = make_rng(seed, Stream::kMultimodal, 0xce);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset ds;
  ds.name = "censored";
  ds.features = MaskedMatrix(n, 3);
  ds.target.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = gauss(rng);
    const double y = x0 > 0.0 ? 1.0 : 0.0;
    ds.features.set(i, 0, x0);
    ds.features.set(i, 1, (y - 0.5) + gauss(rng));
    ds.features.set(i, 2, gauss(rng));
    ds.target[i] = y;
  }
  ds.feature_meta = {{"x0", FeatureKind::kContinuous, {}},
                     {"x1", FeatureKind::kContinuous, {}},
                     {"x2", FeatureKind::kContinuous, {}}};
  return ds;
}

Dataset load_dataset_source(const std::string& source, std::uint64_t seed) {
  if (source == "synthetic:censored") return simulate_censored(600, seed);
  if (source == "synthetic:xor") return simulate_xor(1000, 0.25, seed);
  if (source.rfind("synthetic:", 0) == 0) throw ConfigError("unknown synthetic dataset " + source);
  std::filesystem::path p(source);
  if (p.extension() == ".schema") {
    const auto schema = Schema::load(p);
    auto csv = p;
    csv.replace_extension(".csv");
    auto ds = load_csv(csv, schema);
    if (ds.name.empty()) ds.name = p.stem().string();
    return ds;
  }
  auto schema_path = p;
  schema_path.replace_extension(".schema");
  const auto schema = std::filesystem::exists(schema_path)
                          ? Schema::load(schema_path)
                          : Schema::continuous_from_header(p, "label");
  auto ds = load_csv(p, schema);
  if (ds.name.empty()) ds.name = p.stem().string();
  return ds;
}

ResultTable run_xor_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto methods = cfg.parsed_methods();
  struct Job {
    std::size_t rep, mech, frac, method;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    for (std::size_t m = 0; m < cfg.mechanisms.size(); ++m) {
      for (std::size_t f = 0; f < cfg.fractions.size(); ++f) {
        for (std::size_t k = 0; k < methods.size(); ++k) jobs.push_back({r, m, f, k});
      }
    }
  }

  auto tables = detail::run_jobs(jobs.size(), cfg.threads, [&](std::size_t j) {
    const auto& job = jobs[j];
    const auto& method = methods[job.method];
    const Mechanism mech = cfg.mechanisms[job.mech];
    const double fraction = cfg.fractions[job.frac];
    const std::uint64_t seed = repetition_seed(cfg.seed, job.rep);
    try {
      const auto ds = simulate_xor(cfg.xor_rows, cfg.xor_noise, seed);
      MissingSpec spec;
      spec.mechanism = mech;
      spec.fraction = fraction;
      spec.target_feature = 0;
      if (mech == Mechanism::kMAR) spec.cond_feature = 1;
      spec.seed = detail::cell_seed(seed, mech, fraction, 0);
      const auto corrupted = corrupt(ds.features, spec).matrix;

      std::vector<std::size_t> perm(ds.rows());
      std::iota(perm.begin(), perm.end(), 0);
      auto split_rng = make_rng(seed, Stream::kSplit);
      std::shuffle(perm.begin(), perm.end(), split_rng);
      const std::vector<std::size_t> tr(perm.begin(), perm.begin() + cfg.xor_train_rows);
      const std::vector<std::size_t> te(perm.begin() + cfg.xor_train_rows, perm.end());
      std::vector<double> ytr, yte;
      for (const auto i : tr) ytr.push_back(ds.target[i]);
      for (const auto i : te) yte.push_back(ds.target[i]);
      const auto xte_clean = ds.features.select_rows(te);
      MaskedMatrix xtr;
      MaskedMatrix xte_corrupted = corrupted.select_rows(te);
      if (method.full) {
        xtr = ds.features.select_rows(tr);
      } else if (method.imputer) {
        const auto imp = fit_imputer(*method.imputer, corrupted.select_rows(tr));
        xtr = imp.apply(corrupted.select_rows(tr));
        xte_corrupted = imp.apply(xte_corrupted);
      } else {
        xtr = corrupted.select_rows(tr);
      }

      ResultTable out;
      auto row = [&](std::size_t epoch, const char* metric, double value) {
        out.rows.push_back({"xor", "xor", to_string(mech), fraction, method.name, job.rep, 0,
                            epoch + 1, metric, value, seed});
      };
      auto net = xor_preset(2, method.first);
      train(net, TrainingData::single(xtr, ytr), cfg.optimizer_config(), cfg.train_config(seed),
            [&](const Network& n, std::size_t epoch) -> std::optional<double> {
              const double clean = auc(n.predict_positive(xte_clean), yte);
              row(epoch, "auc_clean", clean);
              if (!method.full) row(epoch, "auc_corrupted", auc(n.predict_positive(xte_corrupted), yte));
              return clean;
            });
      return out;
    } catch (const Error& e) {
      throw Error(std::string("xor repetition ") + std::to_string(job.rep) + " (seed " +
                  std::to_string(seed) + ", " + to_string(mech) + ", f=" +
                  std::to_string(fraction) + ", " + method.name + "): " + e.what());
    }
  });
  ResultTable all;
  for (const auto& t : tables) all.append(t);
  return all;
}

namespace {

struct PreparedDataset {
  std::string name;
  MaskedMatrix x;
  std::vector<double> y;
  Task task = Task::kClassification;
  std::vector<std::size_t> continuous;
  std::vector<FeatureScore> ranking;
  EncodingMap map;
  bool has_categorical = false;
};

const char* metric_name(Task t) { return t == Task::kClassification ? "auc" : "smse"; }
const char* change_name(Task t) { return t == Task::kClassification ? "auc_drop" : "smse_increase"; }

// Standardise, train the benchmark preset and score the test rows.
double fit_and_score(const PreparedDataset& d, const MaskedMatrix& xtr, const std::vector<double>& ytr,
                     const MaskedMatrix& xte, const std::vector<double>& yte, FirstLayer first,
                     const ExperimentConfig& cfg, std::uint64_t seed) {
  MaskedMatrix tr = xtr;
  MaskedMatrix te = xte;
  if (!d.continuous.empty()) {
    auto st = standardize(xtr, {xte}, d.continuous);
    tr = std::move(st.train);
    te = std::move(st.others[0]);
  }
  auto net = benchmark_preset(tr.cols(), d.task, first);
  train(net, TrainingData::single(tr, ytr), cfg.optimizer_config(), cfg.train_config(seed));
  if (d.task == Task::kClassification) return auc(net.predict_positive(te), yte);
  const auto pred = net.predict(std::span<const MaskedMatrix>(&te, 1));
  return smse(pred.flat(), yte);
}

// Masks the rest of a one-hot block whenever one of its columns was masked.
void widen_to_blocks(MaskedMatrix& x, const EncodingMap& map) {
  for (const auto& b : map.blocks) {
    if (b.width < 2) continue;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      bool any = false;
      for (std::size_t c = b.offset; c < b.offset + b.width; ++c) any = any || x.is_missing(i, c);
      if (!any) continue;
      for (std::size_t c = b.offset; c < b.offset + b.width; ++c) {
        if (!x.is_missing(i, c)) x.set_missing(i, c);
      }
    }
  }
}

MaskedMatrix corrupt_for_benchmark(const PreparedDataset& d, Mechanism mech, double fraction,
                                   std::size_t mcar_features, std::uint64_t seed) {
  MaskedMatrix x = d.x;
  MissingSpec spec;
  spec.mechanism = mech;
  spec.fraction = fraction;
  spec.target_feature = d.ranking.at(0).column;
  if (mech == Mechanism::kMCAR) {
    const std::size_t count = std::min(std::max<std::size_t>(mcar_features, 1), d.ranking.size());
    for (std::size_t i = 0; i < count; ++i) {
      spec.target_feature = d.ranking[i].column;
      spec.seed = detail::cell_seed(seed, mech, fraction, i);
      if (x.missing_in_col(spec.target_feature) > 0) continue;  // already masked as a block
      x = corrupt(x, spec).matrix;
    }
  } else {
    if (mech == Mechanism::kMAR) {
      if (d.ranking.size() < 2) throw SpecError("MAR needs at least two features");
      spec.cond_feature = d.ranking[1].column;
    }
    spec.seed = detail::cell_seed(seed, mech, fraction, 0);
    x = corrupt(x, spec).matrix;
  }
  widen_to_blocks(x, d.map);
  return x;
}

}  // namespace

BenchmarkResult run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.datasets.empty()) throw ConfigError("benchmark needs at least one dataset");
  const auto methods = cfg.parsed_methods();
  BenchmarkResult result;

  std::vector<PreparedDataset> prepared;
  for (const auto& src : cfg.datasets) {
    const auto ds = load_dataset_source(src, cfg.seed);
    PreparedDataset d;
    d.name = ds.name;
    auto enc = encode(ds);
    d.x = std::move(enc.matrix);
    d.map = std::move(enc.map);
    d.y = ds.target;
    d.task = is_binary_target(d.y) ? Task::kClassification : Task::kRegression;
    d.continuous = d.map.continuous_columns();
    d.has_categorical = std::any_of(d.map.blocks.begin(), d.map.blocks.end(),
                                    [](const auto& b) { return b.kind == FeatureKind::kCategorical; });
    if (!d.x.complete()) {
      result.excluded.push_back({d.name, "dataset already has missing values"});
      continue;
    }
    d.ranking = rank_features_mi(d.x, d.y);
    prepared.push_back(std::move(d));
  }

  // Baseline pass: full model per (dataset, repetition, fold).
  const std::size_t reps = cfg.repetitions;
  std::vector<std::vector<double>> baseline(prepared.size() * reps);
  {
    auto tables = detail::run_jobs(prepared.size() * reps, cfg.threads, [&](std::size_t j) {
      const auto& d = prepared[j / reps];
      const std::size_t rep = j % reps;
      const std::uint64_t seed = repetition_seed(cfg.seed, rep);
      const auto plan = split_kfold(d.x.rows(), cfg.folds, seed);
      std::vector<double> scores;
      for (const auto& fold : plan.folds) {
        std::vector<double> ytr, yte;
        for (const auto i : fold.train) ytr.push_back(d.y[i]);
        for (const auto i : fold.test) yte.push_back(d.y[i]);
        scores.push_back(fit_and_score(d, d.x.select_rows(fold.train), ytr,
                                       d.x.select_rows(fold.test), yte, FirstLayer::kDense, cfg,
                                       seed));
      }
      baseline[j] = scores;
      return ResultTable{};
    });
  }
  std::vector<bool> keep(prepared.size(), true);
  for (std::size_t di = 0; di < prepared.size(); ++di) {
    std::vector<double> all;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& s = baseline[di * reps + r];
      all.insert(all.end(), s.begin(), s.end());
    }
    const double m = mean(all);
    const auto& d = prepared[di];
    if (d.task == Task::kClassification && !(m >= cfg.min_auc)) {
      keep[di] = false;
      result.excluded.push_back(
          {d.name, "baseline auc " + std::to_string(m) + " below " + std::to_string(cfg.min_auc)});
    } else if (d.task == Task::kRegression && !(m <= cfg.max_smse)) {
      keep[di] = false;
      result.excluded.push_back(
          {d.name, "baseline smse " + std::to_string(m) + " above " + std::to_string(cfg.max_smse)});
    }
  }
  for (const auto& ex : result.excluded) {
    std::cerr << "excluded " << ex.dataset << ": " << ex.reason << '\n';
  }

  struct Job {
    std::size_t dataset, rep, mech, frac;
  };
  std::vector<Job> jobs;
  for (std::size_t di = 0; di < prepared.size(); ++di) {
    if (!keep[di]) continue;
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t m = 0; m < cfg.mechanisms.size(); ++m) {
        for (std::size_t f = 0; f < cfg.fractions.size(); ++f) jobs.push_back({di, r, m, f});
      }
    }
  }
  auto tables = detail::run_jobs(jobs.size(), cfg.threads, [&](std::size_t j) {
    const auto& job = jobs[j];
    const auto& d = prepared[job.dataset];
    const Mechanism mech = cfg.mechanisms[job.mech];
    const double fraction = cfg.fractions[job.frac];
    const std::uint64_t seed = repetition_seed(cfg.seed, job.rep);
    const auto& base = baseline[job.dataset * reps + job.rep];
    ResultTable out;
    try {
      const auto x = corrupt_for_benchmark(d, mech, fraction, cfg.mcar_features, seed);
      const auto plan = split_kfold(d.x.rows(), cfg.folds, seed);
      for (std::size_t fi = 0; fi < plan.folds.size(); ++fi) {
        const auto& fold = plan.folds[fi];
        std::vector<double> ytr, yte;
        for (const auto i : fold.train) ytr.push_back(d.y[i]);
        for (const auto i : fold.test) yte.push_back(d.y[i]);
        const auto xtr = x.select_rows(fold.train);
        const auto xte = x.select_rows(fold.test);
        for (const auto& method : methods) {
          double score = 0.0;
          if (method.full) {
            score = base[fi];
          } else if (method.imputer) {
            auto kind = *method.imputer;
            if (kind.type == ImputerKind::Type::kKnn && d.has_categorical) kind.k = 1;
            const auto imp = fit_imputer(kind, xtr);
            score = fit_and_score(d, imp.apply(xtr), ytr, imp.apply(xte), yte, FirstLayer::kDense,
                                  cfg, seed);
          } else {
            score = fit_and_score(d, xtr, ytr, xte, yte, method.first, cfg, seed);
          }
          const double change = d.task == Task::kClassification ? base[fi] - score : score - base[fi];
          out.rows.push_back({"benchmark", d.name, to_string(mech), fraction, method.name, job.rep,
                              fi, 0, metric_name(d.task), score, seed});
          out.rows.push_back({"benchmark", d.name, to_string(mech), fraction, method.name, job.rep,
                              fi, 0, change_name(d.task), change, seed});
        }
      }
    } catch (const Error& e) {
      throw Error("benchmark " + d.name + " repetition " + std::to_string(job.rep) + " (seed " +
                  std::to_string(seed) + ", " + to_string(mech) + ", f=" +
                  std::to_string(fraction) + "): " + e.what());
    }
    return out;
  });
  for (const auto& t : tables) result.table.append(t);

  // Summary: fold mean per dataset, median across datasets, then mean over
  // repetitions.
  using CellKey = std::tuple<std::string, std::string, double, std::string, std::size_t>;
  std::map<CellKey, std::map<std::string, std::vector<double>>> cells;
  std::map<std::size_t, std::uint64_t> rep_seed;
  for (const auto& r : result.table.rows) {
    if (r.metric != "auc_drop" && r.metric != "smse_increase") continue;
    cells[{r.metric, r.mechanism, r.fraction, r.method, r.repetition}][r.dataset].push_back(r.value);
    rep_seed[r.repetition] = r.seed;
  }
  using SummaryKey = std::tuple<std::string, std::string, double, std::string>;
  std::map<SummaryKey, std::vector<double>> per_rep;
  std::vector<ResultRow> summary;
  for (const auto& [key, by_dataset] : cells) {
    const auto& [metric, mech, fraction, method, rep] = key;
    std::vector<double> fold_means;
    for (const auto& [name, v] : by_dataset) fold_means.push_back(mean(v));
    const double med = median(fold_means);
    summary.push_back({"benchmark", "summary", mech, fraction, method, rep, 0, 0,
                       metric + "_median", med, rep_seed[rep]});
    per_rep[{metric, mech, fraction, method}].push_back(med);
  }
  for (const auto& [key, v] : per_rep) {
    const auto& [metric, mech, fraction, method] = key;
    summary.push_back({"benchmark", "summary", mech, fraction, method, reps, 0, 0,
                       metric + "_median_mean", mean(v), cfg.seed});
  }
  result.table.rows.insert(result.table.rows.end(), summary.begin(), summary.end());
  return result;
}

}  // namespace promissing
