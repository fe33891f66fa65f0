#include "promissing/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "promissing/errors.hpp"
#include "text_util.hpp"

namespace promissing {

namespace {

double to_double(const std::string& key, const std::string& v) {
  const auto d = detail::parse_double(v);
  if (!d) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return *d;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] != '-') {
      const auto u = std::stoull(v, &pos);
      if (pos == v.size()) return u;
    }
  } catch (const std::logic_error&) {
  }
  throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
}

std::vector<std::string> list_of(const std::string& v) {
  std::vector<std::string> out;
  if (detail::trim(v).empty()) return out;
  for (auto& s : detail::split(v, ',')) {
    if (s.empty()) throw ConfigError("empty list item in '" + v + "'");
    out.push_back(std::move(s));
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string out;
  for (const auto& x : v) out += (out.empty() ? "" : ",") + f(x);
  return out;
}

}  // namespace

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m = {"full", "zero",       "mean",        "knn",
                                             "iterative", "promissing", "m_promissing"};
  return m;
}

Method parse_method(const std::string& name, std::size_t knn_k) {
  Method m;
  m.name = name;
  if (name == "full") {
    m.full = true;
  } else if (name == "zero") {
    m.imputer = ImputerKind::zero();
  } else if (name == "mean") {
    m.imputer = ImputerKind::mean();
  } else if (name == "knn") {
    m.imputer = ImputerKind::knn(knn_k);
  } else if (name == "iterative") {
    m.imputer = ImputerKind::iterative();
  } else if (name.rfind("knn:", 0) == 0 || name.rfind("iterative:", 0) == 0 ||
             name.rfind("constant:", 0) == 0) {
    m.imputer = ImputerKind::parse(name);
  } else if (name == "promissing") {
    m.first = FirstLayer::kPromissing;
  } else if (name == "m_promissing") {
    m.first = FirstLayer::kMPromissing;
  } else {
    throw ConfigError("unknown method '" + name + "'");
  }
  return m;
}

ExperimentConfig ExperimentConfig::defaults_for(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "xor") {
    c.fractions = {0.5};
  } else if (experiment == "benchmark") {
    c.mechanisms = {Mechanism::kMCAR, Mechanism::kMAR, Mechanism::kMNAR};
    c.fractions = {0.1, 0.25, 0.5, 0.9};
  } else if (experiment == "fusion" || experiment == "explain") {
    c.methods = {"knn", "promissing", "m_promissing"};
    c.optimizer = "adam";
    c.lr = 0.001;
    c.epochs = 60;
    c.batch_size = 32;
    c.repetitions = 1;
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& experiment) {
  // The experiment key picks the defaults, so find it first.
  std::string exp = experiment;
  std::vector<std::pair<std::string, std::string>> kv;
  std::size_t ln = 0;
  for (const auto& raw : detail::lines_of(text)) {
    ++ln;
    auto line = raw.substr(0, raw.find('#'));
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(ln) + ": expected key=value");
    }
    kv.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    if (kv.back().first == "experiment" && experiment.empty()) exp = kv.back().second;
  }
  auto c = defaults_for(exp.empty() ? "xor" : exp);
  for (const auto& [k, v] : kv) {
    if (k == "experiment") {
      if (!experiment.empty() && v != experiment) {
        throw ConfigError("config is for '" + v + "', not '" + experiment + "'");
      }
      continue;
    }
    c.set(k, v);
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path,
                                        const std::string& experiment) {
  return parse(detail::read_file(path.string()), experiment);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto& v = value;
  if (key == "experiment") {
    experiment = v;
  } else if (key == "datasets") {
    datasets = list_of(v);
  } else if (key == "mechanisms") {
    mechanisms.clear();
    for (const auto& s : list_of(v)) mechanisms.push_back(parse_mechanism(detail::lower(s)));
  } else if (key == "fractions") {
    fractions.clear();
    for (const auto& s : list_of(v)) fractions.push_back(to_double(key, s));
  } else if (key == "methods") {
    methods = list_of(v);
  } else if (key == "repetitions") {
    repetitions = to_uint(key, v);
  } else if (key == "folds") {
    folds = to_uint(key, v);
  } else if (key == "seed") {
    seed = to_uint(key, v);
  } else if (key == "epochs") {
    epochs = to_uint(key, v);
  } else if (key == "batch_size") {
    batch_size = to_uint(key, v);
  } else if (key == "optimizer") {
    if (v != "sgd" && v != "adam") throw ConfigError("optimizer must be sgd or adam");
    optimizer = v;
  } else if (key == "lr") {
    lr = to_double(key, v);
  } else if (key == "knn_k") {
    knn_k = to_uint(key, v);
  } else if (key == "xor_rows") {
    xor_rows = to_uint(key, v);
  } else if (key == "xor_noise") {
    xor_noise = to_double(key, v);
  } else if (key == "xor_train_rows") {
    xor_train_rows = to_uint(key, v);
  } else if (key == "mcar_features") {
    mcar_features = to_uint(key, v);
  } else if (key == "min_auc") {
    min_auc = to_double(key, v);
  } else if (key == "max_smse") {
    max_smse = to_double(key, v);
  } else if (key == "modality_sizes") {
    modality_sizes.clear();
    for (const auto& s : list_of(v)) modality_sizes.push_back(to_uint(key, s));
  } else if (key == "separation") {
    separation.clear();
    for (const auto& s : list_of(v)) separation.push_back(to_double(key, s));
  } else if (key == "fusion_rows") {
    fusion_rows = to_uint(key, v);
  } else if (key == "fusion_test_rows") {
    fusion_test_rows = to_uint(key, v);
  } else if (key == "max_removed") {
    if (v.empty() || v == "auto") {
      max_removed.reset();
    } else {
      max_removed = to_uint(key, v);
    }
  } else if (key == "orders") {
    orders = to_uint(key, v);
  } else if (key == "dropout") {
    dropout = to_double(key, v);
  } else if (key == "representation_transfer") {
    representation_transfer = parse_transfer(v);
  } else if (key == "out") {
    out = v;
  } else if (key == "plot_out") {
    plot_out = v;
  } else if (key == "threads") {
    threads = to_uint(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string ExperimentConfig::serialize() const {
  auto num = [](double d) { return detail::format_double(d); };
  auto u = [](std::size_t x) { return std::to_string(x); };
  auto str = [](const std::string& s) { return s; };
  std::ostringstream o;
  o << "experiment=" << experiment << '\n'
    << "datasets=" << join(datasets, str) << '\n'
    << "mechanisms=" << join(mechanisms, [](Mechanism m) { return std::string(to_string(m)); })
    << '\n'
    << "fractions=" << join(fractions, num) << '\n'
    << "methods=" << join(methods, str) << '\n'
    << "repetitions=" << repetitions << '\n'
    << "folds=" << folds << '\n'
    << "seed=" << seed << '\n'
    << "epochs=" << epochs << '\n'
    << "batch_size=" << batch_size << '\n'
    << "optimizer=" << optimizer << '\n'
    << "lr=" << num(lr) << '\n'
    << "knn_k=" << knn_k << '\n'
    << "xor_rows=" << xor_rows << '\n'
    << "xor_noise=" << num(xor_noise) << '\n'
    << "xor_train_rows=" << xor_train_rows << '\n'
    << "mcar_features=" << mcar_features << '\n'
    << "min_auc=" << num(min_auc) << '\n'
    << "max_smse=" << num(max_smse) << '\n'
    << "modality_sizes=" << join(modality_sizes, u) << '\n'
    << "separation=" << join(separation, num) << '\n'
    << "fusion_rows=" << fusion_rows << '\n'
    << "fusion_test_rows=" << fusion_test_rows << '\n'
    << "max_removed=" << (max_removed ? u(*max_removed) : std::string("auto")) << '\n'
    << "orders=" << orders << '\n'
    << "dropout=" << num(dropout) << '\n'
    << "representation_transfer=" << to_string(representation_transfer) << '\n'
    << "out=" << out.string() << '\n'
    << "plot_out=" << plot_out.string() << '\n'
    << "threads=" << threads << '\n';
  return o.str();
}

void ExperimentConfig::validate() const {
  if (experiment != "xor" && experiment != "benchmark" && experiment != "fusion" &&
      experiment != "explain") {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (knn_k < 1) throw ConfigError("knn_k must be >= 1");
  for (const double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in [0, 1]");
  }
  if (methods.empty()) throw ConfigError("no methods given");
  for (const auto& m : methods) parse_method(m, knn_k);
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (xor_train_rows >= xor_rows) throw ConfigError("xor_train_rows must be < xor_rows");
}

OptimizerConfig ExperimentConfig::optimizer_config() const {
  return optimizer == "adam" ? OptimizerConfig::adam(lr) : OptimizerConfig::sgd(lr);
}

TrainConfig ExperimentConfig::train_config(std::uint64_t s) const {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.seed = s;
  return t;
}

std::vector<Method> ExperimentConfig::parsed_methods() const {
  std::vector<Method> out;
  for (const auto& m : methods) out.push_back(parse_method(m, knn_k));
  return out;
}

std::filesystem::path resolve_output(const std::filesystem::path& path) {
  if (path.empty() || path.is_absolute()) return path;
  if (const char* dir = std::getenv("PROMISSING_OUT_DIR"); dir && *dir) {
    return std::filesystem::path(dir) / path;
  }
  return path;
}

}  // namespace promissing
