#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "floodcast/floodgen/dataset.hpp"
#include "floodcast/nn/model.hpp"

namespace floodcast {

// Evaluation of one trained model on a test set.
struct RunRecord {
  double weight = 0.0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double max_f = 0.0;
  double f_area = 0.0;
  double pr_area = 0.0;
  double phi_c = 0.0;
  double max_accuracy = 0.0;
  double accuracy_at_half = 0.0;
  double precision_at_half = 0.0;
  double recall_at_half = 0.0;
  double accuracy_at_phi_c = 0.0;
  std::size_t epochs = 0;
  double seconds_per_epoch = 0.0;
  std::vector<double> f_curve;  // F at every grid threshold
};

// Mean over the successful runs of one weight.
struct WeightSummary {
  double weight = 0.0;
  std::size_t runs = 0;
  std::size_t succeeded = 0;
  double mean_max_f = 0.0;
  double mean_f_area = 0.0;
  double mean_pr_area = 0.0;
  double mean_max_accuracy = 0.0;
  double mean_precision_at_half = 0.0;
  double mean_recall_at_half = 0.0;
  double mean_seconds_per_epoch = 0.0;
  std::vector<double> mean_f_curve;
  // Argmax of the mean F curve, ties to the smallest threshold.
  double phi_c = 0.0;

  bool all_failed() const { return succeeded == 0; }
};

struct SweepReport {
  std::vector<double> grid;
  std::vector<WeightSummary> rows;  // in the order of the requested weights
  std::vector<RunRecord> runs;      // sorted by (weight index, run)
  // Largest mean max-F; ties go to the smaller weight. Empty if every weight failed.
  std::optional<std::size_t> best;

  double best_weight() const;
  double best_phi_c() const;
};

struct SweepOptions {
  std::vector<double> weights;
  std::size_t runs = 10;
  // Worker threads; 0 uses the hardware concurrency.
  std::size_t threads = 0;
  std::function<void(const RunRecord&)> on_run;
};

// Paper grid: 1..10 step 1 and 15..100 step 5, plus 0.1 and 0.5 when `with_fractions`.
std::vector<double> default_weight_grid(bool with_fractions = true);

// Seed of run r, shared by every weight so weights are compared on the same
// initialisations and mini-batch orders.
std::uint64_t run_seed(std::uint64_t base, std::size_t run);

// Trains one model and scores it on `test`.
RunRecord evaluate_run(const ModelConfig& cfg, const Dataset& train, const Dataset& val, const Dataset& test);

// Groups raw runs into per-weight rows and picks the best weight.
SweepReport aggregate_sweep(const std::vector<double>& weights, std::vector<RunRecord> runs,
                            std::vector<double> grid);

// Trains `runs` models per weight on `train`/`val` and scores them on `test`.
// A failed run is recorded with its error and excluded from the means.
SweepReport monte_carlo_sweep(const ModelConfig& base, const Dataset& train, const Dataset& val, const Dataset& test,
                              const SweepOptions& options);

struct VariantRow {
  Variant variant = Variant::Hybrid;
  std::size_t runs = 0;
  std::size_t succeeded = 0;
  double max_accuracy = 0.0;
  double max_f = 0.0;
  double f_area = 0.0;
  double pr_area = 0.0;
  double seconds_per_epoch = 0.0;
};

// Mean metrics per model variant at the base configuration's weight.
std::vector<VariantRow> compare_variants(const ModelConfig& base, const std::vector<Variant>& variants,
                                         const Dataset& train, const Dataset& val, const Dataset& test,
                                         std::size_t runs, std::size_t threads = 0);

// Runs job(i) for i in [0, n) on a pool of worker threads.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job);

}  // namespace floodcast
