#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "harness_util.hpp"
#include "promissing/corrupt.hpp"
#include "promissing/errors.hpp"
#include "promissing/experiments.hpp"
#include "promissing/impute.hpp"
#include "promissing/metrics.hpp"
#include "promissing/rng.hpp"
#include "promissing/train.hpp"
#include "text_util.hpp"

namespace promissing {

namespace {

void mask_modality(ModalDataset& md, std::size_t m) {
  auto& x = md.modalities[m].features;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) x.set_missing(i, j);
  }
}

bool both_classes(const std::vector<double>& y) {
  const bool has1 = std::find(y.begin(), y.end(), 1.0) != y.end();
  const bool has0 = std::find(y.begin(), y.end(), 0.0) != y.end();
  return has0 && has1;
}

}  // namespace

FusionRun run_fusion_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t m_count = cfg.modality_sizes.size();
  if (m_count < 3) throw ConfigError("fusion needs at least 3 modalities");
  const auto methods = cfg.parsed_methods();
  for (const auto& m : methods) {
    if (m.full) throw ConfigError("method 'full' has no meaning in the fusion experiment");
  }
  const std::size_t max_removed = cfg.max_removed.value_or(m_count - 1);

  MultimodalSpec spec;
  spec.sizes = cfg.modality_sizes;
  for (std::size_t m = 0; m < m_count; ++m) spec.names.push_back("m" + std::to_string(m));
  spec.n = cfg.fusion_rows + cfg.fusion_test_rows;
  spec.separation = cfg.separation;
  const auto md = simulate_multimodal(spec, cfg.seed);

  std::vector<std::size_t> perm(md.rows());
  std::iota(perm.begin(), perm.end(), 0);
  auto split_rng = make_rng(cfg.seed, Stream::kSplit);
  std::shuffle(perm.begin(), perm.end(), split_rng);
  const std::vector<std::size_t> tr(perm.begin(), perm.begin() + cfg.fusion_rows);
  const std::vector<std::size_t> te(perm.begin() + cfg.fusion_rows, perm.end());
  const auto train_md = md.select_rows(rebalance(md.target, tr, cfg.seed));
  const auto test_md = md.select_rows(te);
  const auto augmented = augment_modalities(train_md, max_removed);

  std::vector<FusionModality> layout;
  for (std::size_t m = 0; m < m_count; ++m) {
    const std::size_t w = cfg.modality_sizes[m];
    layout.push_back({spec.names[m], w, default_representation_size(w)});
  }
  FusionOptions options;
  options.dropout = cfg.dropout;
  options.representation_transfer = cfg.representation_transfer;

  FusionRun run;
  run.modality_names = spec.names;
  run.nets.resize(methods.size());
  std::vector<Imputer> imputers(methods.size());
  detail::run_jobs(methods.size(), cfg.threads, [&](std::size_t k) {
    const auto& method = methods[k];
    auto net = fusion_preset(layout, method.first, options);
    if (method.imputer) {
      imputers[k] = fit_imputer(*method.imputer, train_md.concatenated());
      train(net, TrainingData::modal(train_md), cfg.optimizer_config(), cfg.train_config(cfg.seed));
    } else {
      train(net, TrainingData::modal(augmented), cfg.optimizer_config(), cfg.train_config(cfg.seed));
    }
    run.nets[k] = std::move(net);
    return ResultTable{};
  });
  for (const auto& m : methods) run.methods.push_back(m.name);

  std::vector<std::vector<std::size_t>> orders;
  for (std::size_t o = 0; o < cfg.orders; ++o) {
    std::vector<std::size_t> order(m_count);
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(cfg.seed, Stream::kTrajectory, o);
    std::shuffle(order.begin(), order.end(), rng);
    orders.push_back(std::move(order));
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n_test = test_md.rows();
  for (std::size_t k = 0; k < methods.size(); ++k) {
    const auto& method = methods[k];
    const auto& net = run.nets[k];
    for (std::size_t o = 0; o < orders.size(); ++o) {
      std::vector<Trajectory> traj(n_test);
      for (std::size_t i = 0; i < n_test; ++i) {
        traj[i] = {method.name, o, te[i], orders[o], std::vector<double>(m_count + 1, nan)};
      }
      ModalDataset current = test_md;
      for (std::size_t step = 0; step <= m_count; ++step) {
        if (step > 0) mask_modality(current, orders[o][step - 1]);
        std::vector<double> probs;
        if (!method.imputer) {
          probs = net.predict_positive(current.inputs());
        } else if (step < m_count) {
          const auto filled = imputers[k].apply(current.concatenated());
          probs = net.predict_positive(current.split_like(filled));
        }
        if (probs.empty()) continue;
        for (std::size_t i = 0; i < n_test; ++i) traj[i].probabilities[step] = probs[i];

        const double frac = static_cast<double>(step) / static_cast<double>(m_count);
        auto row = [&](const char* metric, double value) {
          run.table.rows.push_back({"fusion", "synthetic", "removal", frac, method.name, o, 0, step,
                                    metric, value, cfg.seed});
        };
        row("mean_probability", mean(probs));
        if (both_classes(test_md.target)) row("auc", auc(probs, test_md.target));
        if (step == m_count) {
          const auto [lo, hi] = std::minmax_element(probs.begin(), probs.end());
          row("all_missing_spread", *hi - *lo);
        }
      }
      run.trajectories.insert(run.trajectories.end(), traj.begin(), traj.end());
    }
  }
  return run;
}

std::string trajectories_csv(const FusionRun& run) {
  std::ostringstream out;
  out << "method,order,row,step,removed,probability\n";
  for (const auto& t : run.trajectories) {
    for (std::size_t s = 0; s < t.probabilities.size(); ++s) {
      out << t.method << ',' << t.order_id << ',' << t.test_row << ',' << s << ','
          << (s == 0 ? std::string() : run.modality_names.at(t.removal_order[s - 1])) << ','
          << detail::format_double(t.probabilities[s]) << '\n';
    }
  }
  return out.str();
}

}  // namespace promissing
