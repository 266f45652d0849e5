#include "floodcast/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "floodcast/errors.hpp"
#include "floodcast/eval/metrics.hpp"
#include "floodcast/eval/report.hpp"
#include "floodcast/eval/sweep.hpp"
#include "floodcast/floodgen/csv.hpp"
#include "floodcast/floodgen/scenario.hpp"
#include "floodcast/floodgen/timestamp.hpp"
#include "floodcast/nn/serialize.hpp"
#include "floodcast/nn/train.hpp"

namespace floodcast {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

std::string summary_row(const std::string& name, const DatasetSummary& s) {
  return name + "," + std::to_string(s.samples) + "," + std::to_string(s.positives) + "," +
         std::to_string(s.negatives) + "," + s.ratio() + "\n";
}

// Windowing options shared by prepare, simulate and predict.
DatasetOptions dataset_options(const RunConfig& cfg) {
  DatasetOptions o;
  o.window = cfg.model.window;
  o.stride = cfg.window_stride;
  o.zero_future_rain = cfg.zero_future_rain;
  return o;
}

std::vector<int> labels_of(const Dataset& data) {
  std::vector<int> y;
  y.reserve(data.size());
  for (const auto& s : data) y.push_back(s.label);
  return y;
}

bool has_positive(const Dataset& data) {
  return std::any_of(data.begin(), data.end(), [](const Sample& s) { return s.label == 1; });
}

std::string base_name(const std::string& trace_name) { return trace_name.substr(0, trace_name.find('#')); }

std::string model_path_for(const CommandArgs& args) {
  return args.model_path ? *args.model_path : join(args.out_dir, kModelFile);
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ContractError*>(&e)) return kExitUsage;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const WindowError*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e)) {
    return kExitIo;
  }
  if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const UndefinedMetricError*>(&e)) return kExitNumeric;
  return kExitUsage;
}

std::string CommandArgs::data_dir() const { return config.data_dir.empty() ? out_dir : config.data_dir; }

std::string CommandArgs::comment() const { return table_comment(config.hash(), config.seed); }

void write_datasets(const CommandArgs& args, const SensorGraph& graph, const std::vector<EventTrace>& train_traces,
                    const std::vector<EventTrace>& test_traces, std::ostream& log) {
  const auto& cfg = args.config;
  if (cfg.val_fraction <= 0.0 || cfg.val_fraction >= 1.0) throw ConfigError("val_fraction must lie in (0, 1)");
  const auto opts = dataset_options(cfg);
  Dataset pool = build_dataset(graph, train_traces, opts);
  Dataset test = build_dataset(graph, test_traces, opts);
  if (pool.empty()) throw ConfigError("training events produced no samples");
  RngState split_rng = RngState(cfg.seed).split(7);
  auto [train_set, val_set] = split_train_val(std::move(pool), cfg.val_fraction, split_rng);

  ensure_dir(args.out_dir);
  save_dataset(join(args.out_dir, kTrainSetFile), train_set);
  save_dataset(join(args.out_dir, kValSetFile), val_set);
  save_dataset(join(args.out_dir, kTestSetFile), test);

  const auto s_train = summarize(train_set), s_val = summarize(val_set), s_test = summarize(test);
  write_text_file(join(args.out_dir, kDatasetSummaryFile),
                  "# " + args.comment() + "\nset,samples,positives,negatives,ratio\n" + summary_row("train", s_train) +
                      summary_row("val", s_val) + summary_row("test", s_test));
  log << "train: " << s_train.describe() << "\n"
      << "val:   " << s_val.describe() << "\n"
      << "test:  " << s_test.describe() << "\n";
}

int cmd_simulate(const CommandArgs& args, std::ostream& log) {
  const auto& cfg = args.config;
  const Scenario sc = simulate_scenario(cfg.scenario, cfg.seed);
  ensure_dir(args.out_dir);
  const std::string comment = args.comment();
  write_graph_csv(sc.graph, join(args.out_dir, kGraphFile), join(args.out_dir, kEdgesFile), comment);
  const std::string events = join(args.out_dir, kEventsDir);
  for (const auto* group : {&sc.train, &sc.test}) {
    for (const auto& tr : *group) write_event_csv(sc.graph, tr, join(events, tr.name), comment);
  }
  log << "simulated " << sc.graph.size() << " sensors, " << sc.train.size() << " training and " << sc.test.size()
      << " test events (storm scale " << format_double(sc.train_intensity_scale) << " / "
      << format_double(sc.test_intensity_scale) << ")\n";
  write_datasets(args, sc.graph, sc.train, sc.test, log);
  return kExitOk;
}

int cmd_prepare(const CommandArgs& args, std::ostream& log) {
  const auto& cfg = args.config;
  const std::string dir = args.data_dir();
  std::vector<std::string> dirs;
  for (const auto* names : {&cfg.train_event_names, &cfg.test_event_names})
    for (const auto& n : *names) dirs.push_back(join(join(dir, kEventsDir), n));
  auto ingest = ingest_csv(join(dir, kGraphFile), join(dir, kEdgesFile), dirs);
  std::vector<EventTrace> train_traces, test_traces;
  for (auto& tr : ingest.traces) {
    const std::string b = base_name(tr.name);
    const bool is_test =
        std::find(cfg.test_event_names.begin(), cfg.test_event_names.end(), b) != cfg.test_event_names.end();
    (is_test ? test_traces : train_traces).push_back(std::move(tr));
  }
  log << "ingested " << ingest.graph.size() << " sensors, " << train_traces.size() << " training and "
      << test_traces.size() << " test traces\n";
  write_datasets(args, ingest.graph, train_traces, test_traces, log);
  return kExitOk;
}

int cmd_train(const CommandArgs& args, std::ostream& log) {
  const auto& cfg = args.config;
  const std::string dir = args.data_dir();
  const Dataset train_set = load_dataset(join(dir, kTrainSetFile));
  const Dataset val_set = load_dataset(join(dir, kValSetFile));

  TrainOptions opts;
  std::optional<SavedModel> previous;
  if (args.resume) {
    previous = load_model(model_path_for(args));
    check_params(cfg.model, previous->params);
    if (previous->config.variant != cfg.model.variant) {
      throw DimensionError(std::string("resume: model file declares variant ") +
                           variant_name(previous->config.variant) + ", config asks for " +
                           variant_name(cfg.model.variant));
    }
    opts.initial = &previous->params;
    opts.epoch_offset = previous->trained_epochs;
    opts.fit_scaler = false;
    log << "resuming after epoch " << previous->trained_epochs << "\n";
  }
  opts.on_epoch = [&log](const EpochRecord& e) {
    log << "epoch " << e.epoch << " loss " << format_double(e.train_loss) << " acc "
        << format_double(e.train_accuracy) << " val_loss " << format_double(e.val_loss) << " val_acc "
        << format_double(e.val_accuracy) << "\n";
  };
  TrainResult result = train(cfg.model, train_set, val_set, opts);

  SavedModel saved;
  saved.config = cfg.model;
  saved.trained_epochs = result.report.stopped_epoch;
  if (has_positive(val_set)) {
    const auto scores = predict_scores(result.params, cfg.model, val_set);
    const auto y = labels_of(val_set);
    saved.threshold = f_curve_and_critical(scores, y).phi_c;
  }
  saved.params = std::move(result.params);
  ensure_dir(args.out_dir);
  save_model(saved, join(args.out_dir, kModelFile));
  write_text_file(join(args.out_dir, kTrainReportFile), epoch_report_csv(result.report, args.comment()));
  log << "stopped at epoch " << result.report.stopped_epoch << ", best epoch " << result.report.best_epoch
      << " (val loss " << format_double(result.report.best_val_loss) << "), threshold "
      << format_double(saved.threshold) << "\n";
  return kExitOk;
}

int cmd_sweep(const CommandArgs& args, std::ostream& log) {
  const auto& cfg = args.config;
  const std::string dir = args.data_dir();
  const Dataset train_set = load_dataset(join(dir, kTrainSetFile));
  const Dataset val_set = load_dataset(join(dir, kValSetFile));
  const Dataset test_set = load_dataset(join(dir, kTestSetFile));

  SweepOptions opts;
  opts.weights = cfg.sweep_weights;
  opts.runs = cfg.sweep_runs;
  opts.threads = cfg.threads;
  opts.on_run = [&log](const RunRecord& r) {
    log << "w=" << format_double(r.weight) << " run " << r.run;
    if (r.ok) log << " max_f " << format_double(r.max_f) << " phi_c " << format_double(r.phi_c) << "\n";
    else log << " failed: " << r.error << "\n";
  };
  const SweepReport report = monte_carlo_sweep(cfg.model, train_set, val_set, test_set, opts);

  ensure_dir(args.out_dir);
  const std::string comment = args.comment();
  write_text_file(join(args.out_dir, kSweepTableFile), sweep_table_csv(report, comment));
  write_text_file(join(args.out_dir, kSweepRunsFile), sweep_runs_csv(report, comment));
  write_text_file(join(args.out_dir, kSweepCurvesFile), sweep_f_curves_csv(report, comment));
  write_text_file(join(args.out_dir, kSweepBestFile), sweep_best_csv(report, comment));

  const bool any_complete = std::any_of(report.rows.begin(), report.rows.end(),
                                        [](const WeightSummary& w) { return w.succeeded == w.runs; });
  if (report.best) {
    log << "best weight " << format_double(report.best_weight()) << " at phi_c " << format_double(report.best_phi_c())
        << "\n";
  }
  if (!any_complete) {
    log << "no weight completed all of its runs\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_evaluate(const CommandArgs& args, std::ostream& log) {
  const auto& cfg = args.config;
  const std::string dir = args.data_dir();
  const Dataset test_set = load_dataset(join(dir, kTestSetFile));
  ensure_dir(args.out_dir);

  if (!args.model_path) {
    const Dataset train_set = load_dataset(join(dir, kTrainSetFile));
    const Dataset val_set = load_dataset(join(dir, kValSetFile));
    const auto rows =
        compare_variants(cfg.model, cfg.compare_variants, train_set, val_set, test_set, cfg.compare_runs, cfg.threads);
    write_text_file(join(args.out_dir, kVariantsFile), variant_table_csv(rows, args.comment()));
    for (const auto& r : rows) {
      log << variant_name(r.variant) << ": " << r.succeeded << "/" << r.runs << " runs, max_f "
          << format_double(r.max_f) << "\n";
    }
    return kExitOk;
  }

  const SavedModel model = load_model(*args.model_path);
  const auto scores = predict_scores(model.params, model.config, test_set);
  const auto y = labels_of(test_set);
  const auto fc = f_curve_and_critical(scores, y);
  const auto pr = pr_curve(scores, y);
  const auto cm = confusion_at(scores, y, model.threshold);
  const auto pr_at = precision_recall(cm);

  std::ostringstream t;
  t << "# " << args.comment() << "\nmetric,value\n";
  auto row = [&t](const char* name, const std::string& v) { t << name << "," << v << "\n"; };
  row("variant", variant_name(model.config.variant));
  row("samples", std::to_string(test_set.size()));
  row("positives", std::to_string(cm.tp + cm.fn));
  row("threshold", format_double(model.threshold));
  row("accuracy_at_threshold", format_double(accuracy(cm)));
  row("precision_at_threshold", format_double(pr_at.precision));
  row("recall_at_threshold", format_double(pr_at.recall));
  row("f_measure_at_threshold", format_double(f_measure(pr_at.precision, pr_at.recall)));
  row("max_accuracy", format_double(max_accuracy(scores, y)));
  row("max_f_measure", format_double(fc.f_max));
  row("phi_c", format_double(fc.phi_c));
  row("f_measure_curve_area", format_double(fc.area));
  row("pr_curve_area", format_double(pr.area));
  row("pr_baseline", format_double(pr.baseline));
  write_text_file(join(args.out_dir, kEvaluationFile), t.str());
  log << "max F " << format_double(fc.f_max) << " at phi_c " << format_double(fc.phi_c) << ", accuracy at "
      << format_double(model.threshold) << " " << format_double(accuracy(cm)) << "\n";
  return kExitOk;
}

int cmd_predict(const CommandArgs& args, std::ostream& log) {
  const auto& cfg = args.config;
  if (cfg.predict_interval == 0) throw ConfigError("predict_interval must be positive");
  const SavedModel model = load_model(model_path_for(args));
  const double phi = cfg.predict_threshold >= 0.0 ? cfg.predict_threshold : model.threshold;
  if (phi > 1.0) throw ConfigError("predict_threshold must lie in [0, 1]");

  const std::string dir = args.data_dir();
  const auto ingest =
      ingest_csv(join(dir, kGraphFile), join(dir, kEdgesFile), {join(join(dir, kEventsDir), cfg.predict_event)});
  const auto& graph = ingest.graph;
  if (model.config.num_variables != kNumVariables) {
    throw DimensionError("model expects " + std::to_string(model.config.num_variables) + " variables, data has " +
                         std::to_string(kNumVariables));
  }
  DatasetOptions opts = dataset_options(cfg);
  opts.window = model.config.window;

  Dataset rows;
  for (const auto& tr : ingest.traces) {
    if (tr.steps() < opts.window + opts.horizon) continue;
    for (std::size_t s = 0; s < graph.size(); ++s) {
      for (std::size_t t = opts.window - 1; t + opts.horizon < tr.steps(); t += cfg.predict_interval) {
        Sample smp;
        smp.features = derive_features(graph, tr, s, t, opts);
        smp.label = overflow_label(graph, tr, s, t, opts.horizon);
        smp.sensor_id = graph.node(s).id;
        smp.window_end = tr.time_at(t);
        rows.push_back(std::move(smp));
      }
    }
  }
  if (rows.empty()) throw WindowError("event " + cfg.predict_event + " is too short for one prediction window");
  const auto scores = predict_scores(model.params, model.config, rows);

  std::ostringstream t;
  t << "# " << args.comment() << "\nsensor_id,time,probability,predicted,actual\n";
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int predicted = scores[i] > phi ? 1 : 0;
    flagged += static_cast<std::size_t>(predicted);
    t << csv_escape(rows[i].sensor_id) << "," << format_timestamp(rows[i].window_end) << ","
      << format_double(scores[i]) << "," << predicted << "," << rows[i].label << "\n";
  }
  ensure_dir(args.out_dir);
  write_text_file(join(args.out_dir, kPredictionsFile), t.str());
  log << rows.size() << " predictions at threshold " << format_double(phi) << ", " << flagged << " flagged\n";
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flood forecasting for channel sensor networks", "floodcast"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  CommandArgs args;
  std::string model_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Flat key=value settings file");
    cmd->add_option("--seed", seed, "Seed for data, initialisation and shuffling");
    cmd->add_option("--out", args.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--set", overrides, "Override one setting, key=value (repeatable)");
  };
  add_common(&app);

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const CommandArgs&, std::ostream&);
  };
  const Command commands[] = {
      {"simulate", "Generate a synthetic sensor network, events and packed datasets", cmd_simulate},
      {"prepare", "Build packed datasets from sensor CSV files", cmd_prepare},
      {"train", "Train one model", cmd_train},
      {"sweep", "Monte Carlo sweep over loss weights", cmd_sweep},
      {"evaluate", "Score a trained model, or compare model variants", cmd_evaluate},
      {"predict", "Per-sensor flood probabilities for one event", cmd_predict},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    if (std::string(c.name) == "train") {
      sub->add_option("--model", model_path, "Model to resume from (default <out>/model.fcm)");
      sub->add_flag("--resume", args.resume, "Continue training an existing model");
    } else if (std::string(c.name) == "evaluate" || std::string(c.name) == "predict") {
      sub->add_option("--model", model_path, "Model file");
    }
    subs.push_back(sub);
  }

  try {
    std::vector<std::string> rev;
    for (int i = argc - 1; i > 0; --i) rev.emplace_back(argv[i]);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!config_path.empty()) args.config.apply_file(config_path);
    if (seed) args.config.set("seed", std::to_string(*seed));
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      args.config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!model_path.empty()) args.model_path = model_path;
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return commands[i].run(args, out);
    }
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace floodcast
