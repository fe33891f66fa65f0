#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "promissing/config.hpp"
#include "promissing/data.hpp"
#include "promissing/network.hpp"
#include "promissing/results.hpp"

namespace promissing {

// Seeds: repetition r of a run with master seed s uses
// repetition_seed(s, r). Every random step inside a repetition draws from
// that seed through its own stream, so any subset of repetitions can be
// re-run on its own and gives the same rows.

// Dataset sources understood by the harness:
//   path/to/name.schema    schema next to path/to/name.csv
//   path/to/name.csv       uses name.schema when present, else every
//                          column except `label` is continuous
//   synthetic:censored     see simulate_censored
//   synthetic:xor          simulate_xor(1000, 0.25)
Dataset load_dataset_source(const std::string& source, std::uint64_t seed = 0);

// Binary task decided by the sign of x0, the column an MNAR window censors.
// Mean imputation moves censored rows onto the decision boundary, while the
// censored window itself is skewed towards one class. x1 carries a weak
// signal, x2 is noise.
Dataset simulate_censored(std::size_t n, std::uint64_t seed);

// XOR learning curves. Per repetition: simulate, corrupt all rows, split
// into train/test, train the xor preset per method and record, after each
// epoch, auc_clean (complete test rows) and auc_corrupted (the same rows
// with their missing cells; imputation methods impute them first).
// Rows: metric auc_clean / auc_corrupted, step = epoch (1-based).
ResultTable run_xor_experiment(const ExperimentConfig& cfg);

struct BenchmarkExclusion {
  std::string dataset;
  std::string reason;
};

struct BenchmarkResult {
  ResultTable table;
  std::vector<BenchmarkExclusion> excluded;
};

// Per dataset, mechanism, fraction, method and repetition: corrupt the
// encoded features, run k-fold CV with the benchmark preset and record the
// metric (auc or smse) and its change against the `full` model trained on
// the same folds with the same seed (auc_drop = full - method,
// smse_increase = method - full). Summary rows (dataset `summary`) hold,
// per repetition, the median over datasets of the fold-averaged change,
// and a `mean` row over repetitions with repetition = repetitions.
BenchmarkResult run_benchmark(const ExperimentConfig& cfg);

struct Trajectory {
  std::string method;
  std::size_t order_id = 0;
  std::size_t test_row = 0;
  std::vector<std::size_t> removal_order;
  // Index 0: all modalities, index M: none. NaN where a prediction is not
  // possible (imputers with nothing left to impute from).
  std::vector<double> probabilities;
};

struct FusionRun {
  std::vector<std::string> methods;
  std::vector<Network> nets;  // one per method
  std::vector<std::string> modality_names;
  std::vector<Trajectory> trajectories;
  ResultTable table;
};

// Synthetic multimodal data, training rows augmented with every subset of
// up to max_removed modalities removed. Trajectories remove modalities one
// by one in `orders` random orders shared by all methods.
FusionRun run_fusion_experiment(const ExperimentConfig& cfg);

// method,order,row,step,removed,probability (removed is the modality
// dropped at that step, empty at step 0).
std::string trajectories_csv(const FusionRun& run);

enum class Unit { kModality, kFeature };

Unit parse_unit(const std::string& text);
const char* to_string(Unit u);

struct Attribution {
  std::string unit;
  std::size_t input = 0;    // network input (modality)
  std::size_t feature = 0;  // column within the input; 0 for modality units
  double delta = 0.0;       // base - prediction with the unit masked
  bool already_missing = false;
};

struct Interpretation {
  double base = 0.0;
  std::vector<Attribution> attributions;  // by |delta| descending
};

// Masks each unit of a single-row sample in turn and records how the
// positive-class probability moves. Units that are already fully missing
// get delta 0 and the already_missing flag. Deltas are not additive.
Interpretation counterfactual_interpret(const Network& net, const std::vector<MaskedMatrix>& row,
                                        Unit unit);

// unit,input,feature,delta,already_missing with the base prediction as the
// first row (unit `base`).
std::string interpretation_csv(const Interpretation& in);

}  // namespace promissing
