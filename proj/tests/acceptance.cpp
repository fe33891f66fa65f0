// One line per acceptance criterion. Exit status is non-zero if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "promissing/config.hpp"
#include "promissing/corrupt.hpp"
#include "promissing/experiments.hpp"
#include "promissing/impute.hpp"
#include "promissing/layer.hpp"
#include "promissing/metrics.hpp"
#include "promissing/presets.hpp"
#include "promissing/results.hpp"

using namespace promissing;
namespace fs = std::filesystem;

namespace {

using Rng = std::mt19937_64;

double unif(Rng& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }

Matrix random_matrix(Rng& g, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.flat()) v = unif(g, -scale, scale);
  return m;
}

MaskedMatrix random_masked(Rng& g, std::size_t r, std::size_t c, double p_missing) {
  MaskedMatrix x(random_matrix(g, r, c));
  std::bernoulli_distribution miss(p_missing);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      if (miss(g)) x.set_missing(i, j);
    }
  }
  return x;
}

Layer random_nan_layer(Rng& g, std::size_t p, std::size_t s, NanMode mode) {
  auto l = Layer::nan_dense(p, s, Transfer::kLinear, mode);
  for (auto& v : l.weights.flat()) v = unif(g, -1, 1);
  for (auto& v : l.bias) v = unif(g, -1, 1);
  for (auto& v : l.compensatory) v = unif(g, -1, 1);
  return l;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= budget_s;
  const bool ok = out.pass && in_time;
  if (!ok) ++failures;
  std::printf("[%s] criterion %d: %s: %s (%.1fs of %.0fs%s)\n", ok ? "PASS" : "FAIL", id, name.c_str(),
              out.detail.c_str(), secs, budget_s, in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---- 1, 2 ---------------------------------------------------------------

Outcome propositions() {
  Rng g(1);
  double worst_zero = 0.0, worst_dense = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t p = 1 + g() % 12, s = 1 + g() % 6;
    const auto mode = t % 2 ? NanMode::kMPromissing : NanMode::kPromissing;
    const auto l = random_nan_layer(g, p, s, mode);
    MaskedMatrix x(random_matrix(g, 2, p, 10.0));
    for (std::size_t j = 0; j < p; ++j) x.set_missing(0, j);
    const auto pre = nan_dense_preactivation(l, x);
    for (std::size_t k = 0; k < s; ++k) {
      if (mode == NanMode::kPromissing) worst_zero = std::max(worst_zero, std::abs(pre(0, k)));
      double dense = l.bias[k];
      for (std::size_t j = 0; j < p; ++j) dense += x.at(1, j) * l.weights(k, j);
      worst_dense = std::max(worst_dense, std::abs(pre(1, k) - dense));
    }
  }
  return {worst_zero <= 1e-12 && worst_dense <= 1e-12,
          "max |all-missing pre| " + fmt(worst_zero) + ", max |complete - dense| " + fmt(worst_dense)};
}

Outcome substitution() {
  Rng g(2);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t p = 1 + g() % 12, s = 1 + g() % 6;
    auto l = random_nan_layer(g, p, s, NanMode::kPromissing);
    // |W| log-uniform in [1e-6, 1]
    for (auto& w : l.weights.flat()) w = (g() % 2 ? 1.0 : -1.0) * std::pow(10.0, unif(g, -6, 0));
    const auto x = random_masked(g, 4, p, 0.4);
    const auto u = export_neutralizers(l, 1e-8);
    const auto pre = nan_dense_preactivation(l, x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t k = 0; k < s; ++k) {
        double acc = l.bias[k];
        for (std::size_t j = 0; j < p; ++j) {
          acc += (x.is_missing(i, j) ? u.values(k, j) : x.at(i, j)) * l.weights(k, j);
        }
        worst = std::max(worst, std::abs(acc - pre(i, k)));
      }
    }
  }
  return {worst <= 1e-9, "max |substituted - closed form| " + fmt(worst)};
}

// ---- 3 -------------------------------------------------------------------

double gradient_worst(Network& net, const std::vector<MaskedMatrix>& in, const std::vector<double>& y,
                      std::uint64_t dropout_seed) {
  const double h = 1e-6;
  const ForwardOptions opts{true, dropout_seed};
  const auto grads = net.backward(net.forward(in, opts), y);
  const auto params = net.parameters();
  const auto views = net.gradient_views(grads);
  double worst = 0.0;
  for (std::size_t s = 0; s < params.size(); ++s) {
    for (std::size_t c = 0; c < params[s].size(); ++c) {
      const double keep = params[s][c];
      params[s][c] = keep + h;
      const double up = net.loss(net.forward(in, opts), y);
      params[s][c] = keep - h;
      const double down = net.loss(net.forward(in, opts), y);
      params[s][c] = keep;
      worst = std::max(worst, rel_err((up - down) / (2 * h), views[s][c]));
    }
  }
  return worst;
}

Outcome gradients() {
  Rng g(3);
  std::map<std::string, double> worst;
  const auto randomize = [&](Network& net) {
    for (auto slot : net.parameters()) {
      for (auto& v : slot) v = unif(g, -0.8, 0.8);
    }
  };
  const auto labels = [&](std::size_t n) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(i % 2);
    return y;
  };
  for (const auto first : {FirstLayer::kPromissing, FirstLayer::kMPromissing}) {
    for (int rep = 0; rep < 3; ++rep) {
      auto x = xor_preset(2, first);
      randomize(x);
      worst["xor"] = std::max(worst["xor"], gradient_worst(x, {random_masked(g, 10, 2, 0.3)}, labels(10), 0));

      for (const auto task : {Task::kClassification, Task::kRegression}) {
        auto b = benchmark_preset(7, task, first);
        randomize(b);
        auto y = labels(12);
        if (task == Task::kRegression) {
          for (auto& v : y) v = unif(g, -2, 2);
        }
        worst["benchmark"] =
            std::max(worst["benchmark"], gradient_worst(b, {random_masked(g, 12, 7, 0.3)}, y, 0));
      }

      const std::vector<FusionModality> mods{{"a", 4, 2}, {"b", 2, 2}, {"c", 5, 3}, {"d", 1, 2}};
      auto f = fusion_preset(mods, first);
      randomize(f);
      std::vector<MaskedMatrix> in;
      for (const auto& m : mods) in.push_back(random_masked(g, 9, m.width, 0.3));
      in[3].set_missing(0, 0);
      worst["fusion"] = std::max(worst["fusion"], gradient_worst(f, in, labels(9), 17 + rep));
    }
  }
  double all = 0.0;
  std::string detail = "max relative error";
  for (const auto& [k, v] : worst) {
    all = std::max(all, v);
    detail += " " + k + " " + fmt(v);
  }
  return {all <= 1e-5, detail};
}

// ---- 4, 5 ----------------------------------------------------------------

std::map<std::pair<std::string, std::size_t>, double> final_values(const ResultTable& t,
                                                                   const std::string& metric,
                                                                   std::size_t last_step) {
  std::map<std::pair<std::string, std::size_t>, double> out;
  for (const auto& r : t.rows) {
    if (r.metric == metric && r.step == last_step) out[{r.method, r.repetition}] = r.value;
  }
  return out;
}

Outcome xor_full() {
  auto cfg = ExperimentConfig::defaults_for("xor");
  cfg.methods = {"full"};
  cfg.repetitions = 10;
  const auto t = run_xor_experiment(cfg);
  std::vector<double> aucs;
  for (const auto& [key, v] : final_values(t, "auc_clean", cfg.epochs)) aucs.push_back(v);
  const double med = median(aucs);
  return {aucs.size() == 10 && med >= 0.97, "median clean-test AUC " + fmt(med) + " over " +
                                                std::to_string(aucs.size()) + " seeds"};
}

Outcome xor_mnar() {
  auto cfg = ExperimentConfig::defaults_for("xor");
  cfg.mechanisms = {Mechanism::kMNAR};
  cfg.fractions = {0.5};
  cfg.methods = {"mean", "promissing"};
  cfg.repetitions = 10;
  const auto t = run_xor_experiment(cfg);
  const auto clean = final_values(t, "auc_clean", cfg.epochs);
  const auto corr = final_values(t, "auc_corrupted", cfg.epochs);
  std::vector<double> gaps;
  int wins = 0;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const double gp = clean.at({"promissing", rep}) - corr.at({"promissing", rep});
    const double gm = clean.at({"mean", rep}) - corr.at({"mean", rep});
    gaps.push_back(gp);
    wins += gp < gm;
  }
  const double med = median(gaps);
  return {med <= 0.03 && wins >= 8, "promissing median test bias " + fmt(med) +
                                        ", smaller than mean imputer in " + std::to_string(wins) + "/10"};
}

// ---- 6 -------------------------------------------------------------------

Outcome indecisiveness() {
  auto cfg = ExperimentConfig::defaults_for("fusion");
  cfg.methods = {"m_promissing"};
  const auto run = run_fusion_experiment(cfg);
  const std::size_t M = cfg.modality_sizes.size();
  std::set<double> values;
  for (const auto& tr : run.trajectories) values.insert(tr.probabilities[M]);
  const double v = values.empty() ? std::nan("") : *values.begin();
  const bool exact = values.size() == 1;
  return {M == 5 && exact && v >= 0.45 && v <= 0.55,
          "M=" + std::to_string(M) + ", " + std::to_string(values.size()) +
              " distinct all-missing prediction(s), value " + fmt(v)};
}

// ---- 7 -------------------------------------------------------------------

Outcome oracles() {
  Rng g(7);
  int auc_ok = 0, knn_ok = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + g() % 60;
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = t % 2 ? static_cast<double>(g() % 5) : unif(g, 0, 1);
      y[i] = static_cast<double>(g() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    double num = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (y[i] == 1 && y[j] == 0) {
          pairs += 1;
          num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
      }
    }
    auc_ok += auc(s, y) == num / pairs;
  }
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 5 + g() % 40, p = 2 + g() % 4;
    auto x = random_masked(g, n, p, 0.25);
    for (std::size_t i = 0; i < n; ++i) x.set(i, g() % p, unif(g, -1, 1));
    const auto out = fit_imputer(ImputerKind::knn(1), x).apply(x);
    bool same = true;
    for (std::size_t i = 0; i < n && same; ++i) {
      for (std::size_t j = 0; j < p && same; ++j) {
        if (!x.is_missing(i, j)) continue;
        double best = std::numeric_limits<double>::infinity();
        double value = std::nan("");
        for (std::size_t d = 0; d < n; ++d) {
          if (x.is_missing(d, j)) continue;
          double sq = 0;
          std::size_t co = 0;
          for (std::size_t c = 0; c < p; ++c) {
            if (x.is_missing(i, c) || x.is_missing(d, c)) continue;
            sq += (x.at(i, c) - x.at(d, c)) * (x.at(i, c) - x.at(d, c));
            ++co;
          }
          if (co == 0) continue;
          const double dist = static_cast<double>(p) / static_cast<double>(co) * sq;
          if (dist < best) {
            best = dist;
            value = x.at(d, j);
          }
        }
        same = out.at(i, j) == value;
      }
    }
    knn_ok += same;
  }
  return {auc_ok == 100 && knn_ok == 100, "auc exact on " + std::to_string(auc_ok) +
                                              "/100, knn(k=1) exact on " + std::to_string(knn_ok) + "/100"};
}

// ---- 8 -------------------------------------------------------------------

double oracle_percentile(std::vector<double> v, double pct) {
  std::sort(v.begin(), v.end());
  const double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
  return 0.5 * (v[static_cast<std::size_t>(std::floor(pos))] + v[static_cast<std::size_t>(std::ceil(pos))]);
}

Outcome corruption() {
  int mcar = 0, mar = 0, mnar = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng g(seed + 1000);
    const std::size_t n = 50 + g() % 400;
    const MaskedMatrix x(random_matrix(g, n, 3));
    const double f = unif(g, 0.05, 0.9);

    const auto a = corrupt(x, {Mechanism::kMCAR, f, 1, std::nullopt, seed});
    mcar += a.matrix.missing_in_col(1) == static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));

    for (const auto mech : {Mechanism::kMAR, Mechanism::kMNAR}) {
      const std::size_t driver = mech == Mechanism::kMAR ? 2 : 0;
      const auto out = corrupt(x, {mech, f, 0, mech == Mechanism::kMAR ? std::optional<std::size_t>(2)
                                                                       : std::nullopt, seed});
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = x.at(i, driver);
      const auto& w = *out.report.window;
      const double lo = oracle_percentile(col, w.lower_pct), hi = oracle_percentile(col, w.upper_pct);
      bool same = w.lower_pct >= 0 && w.upper_pct <= 100.0 + 1e-9;
      for (std::size_t i = 0; i < n; ++i) same = same && (out.matrix.is_missing(i, 0) == (col[i] >= lo && col[i] <= hi));
      (mech == Mechanism::kMAR ? mar : mnar) += same;
    }
  }
  return {mcar == 100 && mar == 100 && mnar == 100,
          "exact on MCAR " + std::to_string(mcar) + "/100, MAR " + std::to_string(mar) +
              "/100, MNAR " + std::to_string(mnar) + "/100 seeds"};
}

// ---- 9 -------------------------------------------------------------------

Outcome determinism() {
  const auto dir = fs::temp_directory_path() / ("promissing_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto sh = [&](const std::string& args) {
    const std::string cmd = "cd '" + dir.string() + "' && '" PROMISSING_CLI "' " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  };
  const auto slurp = [&](const std::string& name) {
    std::ifstream in(dir / name, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string wine = std::string(PROMISSING_DATA_DIR) + "/wine.schema";
  // {command with @ for the run index, outputs}
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
      {"simulate --kind multimodal -n 150 --sizes 3,2,4 --seed 3 --out sim@.csv", {"sim@.csv", "sim@.schema"}},
      {"corrupt --in sim1.csv --mechanism mar --fraction 0.3 --feature 0 --cond 1 --seed 7 --out cor@.csv "
       "--report rep@.csv",
       {"cor@.csv", "rep@.csv"}},
      {"impute --in cor1.csv --imputer iterative --out imp@.csv", {"imp@.csv"}},
      {"train --in cor1.csv --preset fusion --first m_promissing --epochs 5 --seed 2 --model m@.model",
       {"m@.model"}},
      {"predict --model m1.model --in cor1.csv --out pred@.csv", {"pred@.csv"}},
      {"explain --model m1.model --row row.csv --unit feature --out ex@.csv", {"ex@.csv"}},
      {"export-neutralizers --model m1.model --out neu@.csv", {"neu@.csv"}},
      {"xor --mechanism mnar --fraction 0.5 --reps 2 --epochs 5 --out xor@.csv --plot xplot@.csv",
       {"xor@.csv", "xplot@.csv"}},
      {"fusion --sizes 3,2,4 --orders 2 --epochs 3 --set fusion_rows=80 --set fusion_test_rows=20 "
       "--out fus@.csv --trajectories traj@.csv",
       {"fus@.csv", "traj@.csv"}},
      {"bench --datasets '" + wine + "' --mechanism mar --fraction 0.25 --reps 1 --epochs 5 --out bench@.csv",
       {"bench@.csv"}},
  };
  int same = 0;
  std::string bad;
  for (const auto& [cmd, outputs] : cases) {
    bool ok = true;
    for (const char* run : {"1", "2"}) {
      auto c = cmd;
      for (auto p = c.find('@'); p != std::string::npos; p = c.find('@')) c.replace(p, 1, run);
      ok = ok && sh(c) == 0;
      if (cmd.rfind("corrupt", 0) == 0 && std::string(run) == "1") {
        std::ifstream in(dir / "sim1.csv");
        std::string header, first;
        std::getline(in, header);
        std::getline(in, first);
        std::ofstream(dir / "row.csv") << header.substr(0, header.rfind(',')) << '\n'
                                       << first.substr(0, first.rfind(',')) << '\n';
      }
    }
    for (const auto& o : outputs) {
      auto a = o, b = o;
      a.replace(a.find('@'), 1, "1");
      b.replace(b.find('@'), 1, "2");
      ok = ok && !slurp(a).empty() && slurp(a) == slurp(b);
    }
    if (ok) {
      ++same;
    } else {
      bad += " " + cmd.substr(0, cmd.find(' '));
    }
  }
  fs::remove_all(dir);
  return {same == static_cast<int>(cases.size()),
          std::to_string(same) + "/" + std::to_string(cases.size()) + " subcommands byte-identical" +
              (bad.empty() ? "" : ", differing:" + bad)};
}

// ---- 10 ------------------------------------------------------------------

Outcome benchmark_trend() {
  auto cfg = ExperimentConfig::defaults_for("benchmark");
  const std::string dir = PROMISSING_DATA_DIR;
  cfg.datasets = {dir + "/breast_cancer.schema", dir + "/wine.schema", dir + "/iris.schema"};
  cfg.mechanisms = {Mechanism::kMCAR};
  cfg.fractions = {0.1, 0.5};
  cfg.methods = {"full", "zero", "mean", "knn", "iterative", "m_promissing"};
  const auto res = run_benchmark(cfg);
  const std::size_t used = cfg.datasets.size() - res.excluded.size();
  bool ok = used >= 3;
  std::string detail = std::to_string(used) + " datasets;";
  for (const double f : cfg.fractions) {
    double best = std::numeric_limits<double>::infinity(), mine = std::nan("");
    for (const auto& r : res.table.rows) {
      if (r.metric != "auc_drop_median_mean" || r.fraction != f) continue;
      if (r.method == "m_promissing") {
        mine = r.value;
      } else if (r.method != "full") {
        best = std::min(best, r.value);
      }
    }
    ok = ok && std::isfinite(mine) && mine - best <= 0.05;
    detail += " f=" + fmt(f) + " m_promissing " + fmt(mine) + " vs best imputer " + fmt(best) + ";";
  }
  detail.pop_back();
  return {ok, detail};
}

}  // namespace

int main() {
  criterion(1, "propositions 1-3", 5, propositions);
  criterion(2, "neutralizer substitution", 5, substitution);
  criterion(3, "gradient checks", 30, gradients);
  criterion(4, "xor full-data AUC", 120, xor_full);
  criterion(5, "xor MNAR test bias", 300, xor_mnar);
  criterion(6, "fusion indecisiveness", 300, indecisiveness);
  criterion(7, "oracle equivalences", 30, oracles);
  criterion(8, "corruption contracts", 10, corruption);
  criterion(9, "CLI determinism", 120, determinism);
  criterion(10, "benchmark trend", 900, benchmark_trend);
  return failures == 0 ? 0 : 1;
}
