#pragma once

#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "floodcast/cli/config.hpp"
#include "floodcast/floodgen/dataset.hpp"
#include "floodcast/floodgen/simulate.hpp"

namespace floodcast {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitIo = 2, kExitNumeric = 3 };

// Maps a library exception onto the process exit code.
int exit_code_for(const std::exception& e);

struct CommandArgs {
  RunConfig config;
  std::string out_dir = "floodcast-out";
  std::optional<std::string> model_path;
  bool resume = false;

  // data_dir, or out_dir when data_dir is empty.
  std::string data_dir() const;
  std::string comment() const;
};

// File names inside the data and output directories.
inline constexpr const char* kGraphFile = "graph.csv";
inline constexpr const char* kEdgesFile = "edges.csv";
inline constexpr const char* kEventsDir = "events";
inline constexpr const char* kTrainSetFile = "train.fcds";
inline constexpr const char* kValSetFile = "val.fcds";
inline constexpr const char* kTestSetFile = "test.fcds";
inline constexpr const char* kDatasetSummaryFile = "dataset_summary.csv";
inline constexpr const char* kModelFile = "model.fcm";
inline constexpr const char* kTrainReportFile = "train_report.csv";
inline constexpr const char* kSweepTableFile = "sweep_table.csv";
inline constexpr const char* kSweepRunsFile = "sweep_runs.csv";
inline constexpr const char* kSweepCurvesFile = "sweep_f_curves.csv";
inline constexpr const char* kSweepBestFile = "sweep_best.csv";
inline constexpr const char* kEvaluationFile = "evaluation.csv";
inline constexpr const char* kVariantsFile = "variants.csv";
inline constexpr const char* kPredictionsFile = "predictions.csv";

// Windows the traces into packed train/val/test sets under `out` and writes a summary table.
void write_datasets(const CommandArgs& args, const SensorGraph& graph, const std::vector<EventTrace>& train_traces,
                    const std::vector<EventTrace>& test_traces, std::ostream& log);

int cmd_simulate(const CommandArgs& args, std::ostream& log);
int cmd_prepare(const CommandArgs& args, std::ostream& log);
int cmd_train(const CommandArgs& args, std::ostream& log);
int cmd_sweep(const CommandArgs& args, std::ostream& log);
int cmd_evaluate(const CommandArgs& args, std::ostream& log);
int cmd_predict(const CommandArgs& args, std::ostream& log);

// Full command line handling; returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace floodcast
