#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "floodcast/eval/sweep.hpp"
#include "floodcast/nn/train.hpp"

namespace floodcast {

// "config_hash=<16 hex digits> seed=<n>"; written as the first line of every table, prefixed by "# ".
std::string table_comment(std::uint64_t config_hash, std::uint64_t seed);

// weight,runs,succeeded,max_f_measure,f_measure_curve_area,pr_curve_area,phi_c,
// precision_at_0.5,recall_at_0.5,status
std::string sweep_table_csv(const SweepReport& report, const std::string& comment);
// One row per (weight, run) with the raw values behind the means.
std::string sweep_runs_csv(const SweepReport& report, const std::string& comment);
// weight,run,threshold,f_measure for every successful run.
std::string sweep_f_curves_csv(const SweepReport& report, const std::string& comment);
// best_weight,phi_c
std::string sweep_best_csv(const SweepReport& report, const std::string& comment);

// metric,<variant>... with rows max_accuracy, max_f_measure, f_measure_curve_area,
// pr_curve_area, seconds_per_epoch.
std::string variant_table_csv(const std::vector<VariantRow>& rows, const std::string& comment);

// epoch,train_loss,train_accuracy,val_loss,val_accuracy,seconds
std::string epoch_report_csv(const TrainReport& report, const std::string& comment);

}  // namespace floodcast
