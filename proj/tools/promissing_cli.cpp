#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "promissing/config.hpp"
#include "promissing/corrupt.hpp"
#include "promissing/data.hpp"
#include "promissing/errors.hpp"
#include "promissing/experiments.hpp"
#include "promissing/impute.hpp"
#include "promissing/layer.hpp"
#include "promissing/metrics.hpp"
#include "promissing/model_io.hpp"
#include "promissing/presets.hpp"
#include "promissing/results.hpp"
#include "promissing/train.hpp"

namespace fs = std::filesystem;
using namespace promissing;

namespace {

// Thrown for bad arguments found after parsing; exits with 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void write_dataset(const Dataset& ds, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_csv(ds, path);
  auto schema = path;
  schema.replace_extension(".schema");
  write_text(schema, schema_of(ds).serialize());
}

// Options shared by the experiment subcommands: a config file, generic
// key=value overrides, and flags that are shorthands for config keys.
struct ExperimentArgs {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::pair<CLI::Option*, std::string>> flags;
  std::map<std::string, std::string> values;
  std::string plot;

  void flag(CLI::App* sub, const std::string& name, const std::string& key,
            const std::string& help) {
    flags.emplace_back(sub->add_option(name, values[key], help), key);
  }

  ExperimentConfig build(const std::string& experiment) const {
    auto cfg = config.empty() ? ExperimentConfig::defaults_for(experiment)
                              : ExperimentConfig::load(config, experiment);
    for (const auto& [opt, key] : flags) {
      if (opt->count() > 0) cfg.set(key, values.at(key));
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    cfg.out = resolve_output(cfg.out);
    cfg.plot_out = resolve_output(cfg.plot_out);
    return cfg;
  }
};

void add_experiment_options(CLI::App* sub, ExperimentArgs& a) {
  sub->add_option("-c,--config", a.config, "key=value config file")->check(CLI::ExistingFile);
  sub->add_option("--set", a.sets, "override a config key (key=value), repeatable");
  a.flag(sub, "--seed", "seed", "master seed");
  a.flag(sub, "--reps", "repetitions", "number of repetitions");
  a.flag(sub, "--methods", "methods", "comma-separated methods");
  a.flag(sub, "--epochs", "epochs", "training epochs");
  a.flag(sub, "--lr", "lr", "learning rate");
  a.flag(sub, "--threads", "threads", "OpenMP threads for independent jobs");
  a.flag(sub, "-o,--out", "out", "results CSV");
}

// Splits numeric columns into the network's inputs. One input takes every
// column; several inputs are matched by the `<input>.` column prefix.
std::vector<MaskedMatrix> split_for_network(const Network& net, const NumericTable& t,
                                            std::vector<std::size_t> cols) {
  const auto widths = net.input_widths();
  if (widths.size() == 1) {
    if (cols.size() != widths[0]) {
      throw ShapeError("model takes " + std::to_string(widths[0]) + " columns, file has " +
                       std::to_string(cols.size()));
    }
    return {t.values.select_cols(cols)};
  }
  std::vector<MaskedMatrix> out;
  for (std::size_t s = 0; s < widths.size(); ++s) {
    const auto& name = net.nodes()[net.input_nodes()[s]].name;
    std::vector<std::size_t> mine;
    for (const auto c : cols) {
      if (t.header[c].rfind(name + ".", 0) == 0) mine.push_back(c);
    }
    if (mine.size() != widths[s]) {
      throw ShapeError("input '" + name + "' expects " + std::to_string(widths[s]) +
                       " columns named " + name + ".*, found " + std::to_string(mine.size()));
    }
    out.push_back(t.values.select_cols(mine));
  }
  return out;
}

bool is_classifier(const Network& net) {
  const auto& out = net.nodes()[net.output()];
  return out.layer.transfer == Transfer::kSigmoid || out.layer.transfer == Transfer::kSoftmax;
}

std::vector<double> network_scores(const Network& net, const std::vector<MaskedMatrix>& inputs) {
  if (is_classifier(net)) return net.predict_positive(inputs);
  const auto pred = net.predict(inputs);
  return {pred.flat().begin(), pred.flat().end()};
}

std::string summarize_final_epoch(const ResultTable& t) {
  std::map<std::tuple<std::string, double, std::string, std::string>, std::vector<double>> cells;
  std::size_t last = 0;
  for (const auto& r : t.rows) last = std::max(last, r.step);
  for (const auto& r : t.rows) {
    if (r.step == last) cells[{r.mechanism, r.fraction, r.method, r.metric}].push_back(r.value);
  }
  std::ostringstream out;
  for (const auto& [k, v] : cells) {
    out << std::get<0>(k) << " f=" << std::get<1>(k) << ' ' << std::get<2>(k) << ' '
        << std::get<3>(k) << " median=" << median(v) << '\n';
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promissing: neural networks that learn what missing values mean"};
  app.require_subcommand(1);

  // simulate
  std::string sim_kind = "xor";
  std::size_t sim_n = 1000;
  double sim_noise = 0.25;
  std::vector<std::size_t> sim_sizes{4, 4, 4, 4, 4};
  std::vector<double> sim_sep{0.6};
  std::uint64_t sim_seed = 0;
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "write a synthetic dataset (CSV plus schema)");
  sim->add_option("--kind", sim_kind, "xor | multimodal | censored")
      ->check(CLI::IsMember({"xor", "multimodal", "censored"}));
  sim->add_option("-n,--rows", sim_n, "rows");
  sim->add_option("--noise", sim_noise, "xor noise variance");
  sim->add_option("--sizes", sim_sizes, "multimodal feature counts per modality")->delimiter(',');
  sim->add_option("--separation", sim_sep, "multimodal class separation")->delimiter(',');
  sim->add_option("--seed", sim_seed, "seed");
  sim->add_option("-o,--out", sim_out, "output CSV")->required();

  // corrupt
  std::string cor_in, cor_out, cor_report, cor_mech = "mcar";
  double cor_fraction = 0.0;
  std::size_t cor_feature = 0;
  std::optional<std::size_t> cor_cond;
  std::uint64_t cor_seed = 0;
  auto* cor = app.add_subcommand("corrupt", "remove values from one column");
  cor->add_option("-i,--in", cor_in, "input CSV")->required()->check(CLI::ExistingFile);
  cor->add_option("--mechanism", cor_mech, "mcar | mar | mnar")
      ->check(CLI::IsMember({"mcar", "mar", "mnar"}));
  cor->add_option("--fraction", cor_fraction, "share of rows affected")->required();
  cor->add_option("--feature", cor_feature, "column that loses values");
  cor->add_option("--cond", cor_cond, "MAR: column whose percentile window drives removal");
  cor->add_option("--seed", cor_seed, "seed");
  cor->add_option("-o,--out", cor_out, "output CSV")->required();
  cor->add_option("--report", cor_report, "corruption report CSV");

  // impute
  std::string imp_in, imp_fit, imp_out, imp_kind = "mean";
  auto* imp = app.add_subcommand("impute", "fill missing cells");
  imp->add_option("-i,--in", imp_in, "CSV to fill")->required()->check(CLI::ExistingFile);
  imp->add_option("--fit-on", imp_fit, "CSV to fit the imputer on (default: --in)")
      ->check(CLI::ExistingFile);
  imp->add_option("--imputer", imp_kind, "zero | constant:c | mean | knn:k | iterative[:cycles[:tol]]");
  imp->add_option("-o,--out", imp_out, "output CSV")->required();

  // train
  std::string tr_in, tr_model, tr_preset = "benchmark", tr_first = "promissing", tr_opt = "sgd";
  std::size_t tr_epochs = 100, tr_batch = 10;
  double tr_lr = 0.1;
  std::uint64_t tr_seed = 0;
  auto* trn = app.add_subcommand("train", "train a preset network on a CSV");
  trn->add_option("-i,--in", tr_in, "training CSV")->required()->check(CLI::ExistingFile);
  trn->add_option("--preset", tr_preset, "xor | benchmark | fusion")
      ->check(CLI::IsMember({"xor", "benchmark", "fusion"}));
  trn->add_option("--first", tr_first, "dense | promissing | m_promissing")
      ->check(CLI::IsMember({"dense", "promissing", "m_promissing"}));
  trn->add_option("--epochs", tr_epochs, "epochs");
  trn->add_option("--batch", tr_batch, "mini-batch size");
  trn->add_option("--lr", tr_lr, "learning rate");
  trn->add_option("--optimizer", tr_opt, "sgd | adam")->check(CLI::IsMember({"sgd", "adam"}));
  trn->add_option("--seed", tr_seed, "seed");
  trn->add_option("-m,--model", tr_model, "model file to write")->required();

  // predict
  std::string pr_model, pr_in, pr_out;
  auto* prd = app.add_subcommand("predict", "score rows with a saved model");
  prd->add_option("-m,--model", pr_model, "model file")->required()->check(CLI::ExistingFile);
  prd->add_option("-i,--in", pr_in, "numeric CSV; a `label` column is ignored")
      ->required()
      ->check(CLI::ExistingFile);
  prd->add_option("-o,--out", pr_out, "predictions CSV (default stdout)");

  // experiments
  ExperimentArgs xa, ba, fa;
  auto* xr = app.add_subcommand("xor", "XOR learning-curve experiment");
  add_experiment_options(xr, xa);
  xa.flag(xr, "--mechanism", "mechanisms", "comma-separated mcar,mar,mnar");
  xa.flag(xr, "--fraction", "fractions", "comma-separated missing fractions");
  xr->add_option("--plot", xa.plot, "learning-curve CSV (curve_id,x,y,y_std)");

  auto* bn = app.add_subcommand("bench", "imputation benchmark on CSV datasets");
  add_experiment_options(bn, ba);
  ba.flag(bn, "--datasets", "datasets", "comma-separated schema or CSV paths");
  ba.flag(bn, "--mechanism", "mechanisms", "comma-separated mcar,mar,mnar");
  ba.flag(bn, "--fraction", "fractions", "comma-separated missing fractions");
  ba.flag(bn, "--folds", "folds", "cross-validation folds");

  std::string fu_traj, fu_models;
  auto* fu = app.add_subcommand("fusion", "multimodal fusion experiment with modality removal");
  add_experiment_options(fu, fa);
  fa.flag(fu, "--sizes", "modality_sizes", "comma-separated modality widths");
  fa.flag(fu, "--orders", "orders", "random removal orders");
  fu->add_option("--trajectories", fu_traj, "trajectory CSV");
  fu->add_option("--model-dir", fu_models, "directory for the trained networks");

  // explain
  std::string ex_model, ex_row, ex_unit = "modality", ex_out;
  auto* ex = app.add_subcommand("explain", "counterfactual attribution by masking units");
  ex->add_option("-m,--model", ex_model, "model file")->required()->check(CLI::ExistingFile);
  ex->add_option("--row", ex_row, "CSV holding the sample (first data row is used)")
      ->required()
      ->check(CLI::ExistingFile);
  ex->add_option("--unit", ex_unit, "modality | feature")
      ->check(CLI::IsMember({"modality", "feature"}));
  ex->add_option("-o,--out", ex_out, "attribution CSV (default stdout)");

  // export-neutralizers
  std::string ne_model, ne_out, ne_layer;
  double ne_eps = 1e-8;
  auto* ne = app.add_subcommand("export-neutralizers", "write the neutralizer matrix of missing-aware layers");
  ne->add_option("-m,--model", ne_model, "model file")->required()->check(CLI::ExistingFile);
  ne->add_option("--layer", ne_layer, "layer name (default: every missing-aware layer)");
  ne->add_option("--epsilon", ne_eps, "floor for |w| in the denominator");
  ne->add_option("-o,--out", ne_out, "CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  try {
    if (sim->parsed()) {
      Dataset ds;
      if (sim_kind == "xor") {
        ds = simulate_xor(sim_n, sim_noise, sim_seed);
      } else if (sim_kind == "censored") {
        ds = simulate_censored(sim_n, sim_seed);
      } else {
        MultimodalSpec spec;
        spec.sizes = sim_sizes;
        spec.n = sim_n;
        spec.separation = sim_sep;
        ds = from_modal(simulate_multimodal(spec, sim_seed), "multimodal");
      }
      write_dataset(ds, resolve_output(sim_out));
    } else if (cor->parsed()) {
      auto ds = load_dataset_source(cor_in);
      MissingSpec spec;
      spec.mechanism = parse_mechanism(cor_mech);
      spec.fraction = cor_fraction;
      spec.target_feature = cor_feature;
      spec.cond_feature = cor_cond;
      spec.seed = cor_seed;
      auto res = corrupt(ds.features, spec);
      ds.features = std::move(res.matrix);
      write_dataset(ds, resolve_output(cor_out));
      if (!cor_report.empty()) {
        write_text(resolve_output(cor_report),
                   CorruptionReport::csv_header() + "\n" + res.report.csv_row() + "\n");
      }
    } else if (imp->parsed()) {
      auto ds = load_dataset_source(imp_in);
      const auto fit_ds = imp_fit.empty() ? ds : load_dataset_source(imp_fit);
      const auto imputer = fit_imputer(ImputerKind::parse(imp_kind), fit_ds.features);
      ds.features = imputer.apply(ds.features);
      for (std::size_t j = 0; j < ds.feature_meta.size(); ++j) {
        const auto& m = ds.feature_meta[j];
        if (m.kind == FeatureKind::kContinuous) continue;
        for (std::size_t i = 0; i < ds.rows(); ++i) {
          const double v = ds.features.payload(i, j);
          const double limit = m.kind == FeatureKind::kBinary ? 1.0 : m.categories.size() - 1.0;
          if (v != std::floor(v) || v < 0.0 || v > limit) {
            throw SpecError("imputer filled column '" + m.name +
                            "' with a value that is not a category; use knn:1 or a constant");
          }
        }
      }
      write_dataset(ds, resolve_output(imp_out));
    } else if (trn->parsed()) {
      const auto ds = load_dataset_source(tr_in);
      const bool binary = std::all_of(ds.target.begin(), ds.target.end(),
                                      [](double v) { return v == 0.0 || v == 1.0; });
      const auto first = parse_first_layer(tr_first);
      Network net;
      TrainingData data;
      if (tr_preset == "fusion") {
        if (!binary) throw SpecError("fusion preset needs a 0/1 target");
        const auto md = to_modal(ds);
        std::vector<FusionModality> layout;
        for (const auto& m : md.modalities) {
          layout.push_back({m.name, m.features.cols(), default_representation_size(m.features.cols())});
        }
        net = fusion_preset(layout, first);
        data = TrainingData::modal(md);
      } else {
        auto x = encode(ds).matrix;
        net = tr_preset == "xor" ? xor_preset(x.cols(), first)
                                 : benchmark_preset(x.cols(),
                                                    binary ? Task::kClassification : Task::kRegression,
                                                    first);
        data = TrainingData::single(std::move(x), ds.target);
      }
      TrainConfig tc;
      tc.epochs = tr_epochs;
      tc.batch_size = tr_batch;
      tc.seed = tr_seed;
      const auto opt = tr_opt == "adam" ? OptimizerConfig::adam(tr_lr) : OptimizerConfig::sgd(tr_lr);
      const auto hist = train(net, data, opt, tc);
      const auto path = resolve_output(tr_model);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      save_network(net, path);
      std::cout << "final loss " << hist.loss.back() << '\n';
    } else if (prd->parsed()) {
      const auto net = load_network(pr_model);
      const auto table = read_numeric_csv(pr_in);
      std::vector<std::size_t> cols;
      std::optional<std::size_t> label;
      for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c] == "label") {
          label = c;
        } else {
          cols.push_back(c);
        }
      }
      const auto inputs = split_for_network(net, table, cols);
      const auto scores = network_scores(net, inputs);
      std::ostringstream out;
      out << "row,prediction\n";
      char buf[32];
      for (std::size_t i = 0; i < scores.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", scores[i]);
        out << i << ',' << buf << '\n';
      }
      write_text(resolve_output(pr_out), out.str());
      if (label) {
        std::vector<double> y;
        for (std::size_t i = 0; i < table.values.rows(); ++i) y.push_back(table.values.at(i, *label));
        std::cerr << (is_classifier(net) ? "auc " : "smse ")
                  << (is_classifier(net) ? auc(scores, y) : smse(scores, y)) << '\n';
      }
    } else if (xr->parsed()) {
      const auto cfg = xa.build("xor");
      const auto table = run_xor_experiment(cfg);
      if (!cfg.out.empty()) table.write(cfg.out);
      const auto plot = xa.plot.empty() ? cfg.plot_out : resolve_output(xa.plot);
      if (!plot.empty()) write_plot_csv(learning_curves(table), plot);
      std::cout << summarize_final_epoch(table);
    } else if (bn->parsed()) {
      const auto cfg = ba.build("benchmark");
      const auto res = run_benchmark(cfg);
      if (!cfg.out.empty()) res.table.write(cfg.out);
      for (const auto& r : res.table.rows) {
        if (r.dataset == "summary" && r.repetition == cfg.repetitions) {
          std::cout << r.mechanism << " f=" << r.fraction << ' ' << r.method << ' ' << r.metric
                    << ' ' << r.value << '\n';
        }
      }
    } else if (fu->parsed()) {
      const auto cfg = fa.build("fusion");
      const auto run = run_fusion_experiment(cfg);
      if (!cfg.out.empty()) run.table.write(cfg.out);
      if (!fu_traj.empty()) write_text(resolve_output(fu_traj), trajectories_csv(run));
      if (!fu_models.empty()) {
        const auto dir = resolve_output(fu_models);
        fs::create_directories(dir);
        for (std::size_t k = 0; k < run.nets.size(); ++k) {
          save_network(run.nets[k], dir / (run.methods[k] + ".model"));
        }
      }
      for (const auto& r : run.table.rows) {
        if (r.metric == "all_missing_spread" && r.repetition == 0) {
          std::cout << r.method << " all-missing spread " << r.value << '\n';
        }
      }
    } else if (ex->parsed()) {
      const auto net = load_network(ex_model);
      const auto table = read_numeric_csv(ex_row);
      if (table.values.rows() == 0) throw SpecError("row file has no data rows");
      std::vector<std::size_t> cols;
      for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c] != "label") cols.push_back(c);
      }
      const std::vector<std::size_t> first_row{0};
      NumericTable one{table.header, table.values.select_rows(first_row)};
      const auto inputs = split_for_network(net, one, cols);
      const auto res = counterfactual_interpret(net, inputs, parse_unit(ex_unit));
      write_text(resolve_output(ex_out), interpretation_csv(res));
    } else if (ne->parsed()) {
      const auto net = load_network(ne_model);
      std::ostringstream out;
      out << "layer,neuron,feature,value\n";
      bool found = false;
      for (const auto& n : net.nodes()) {
        if (n.type != NodeType::kLayer || n.layer.kind != LayerKind::kNanDense) continue;
        if (!ne_layer.empty() && n.name != ne_layer) continue;
        found = true;
        const auto csv = export_neutralizers(n.layer, ne_eps).to_csv();
        std::istringstream lines(csv);
        std::string line;
        std::getline(lines, line);  // header
        while (std::getline(lines, line)) out << n.name << ',' << line << '\n';
      }
      if (!found) throw SpecError("model has no matching missing-aware layer");
      write_text(resolve_output(ne_out), out.str());
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
