#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <sstream>

#include "floodcast/cli/commands.hpp"
#include "floodcast/cli/config.hpp"
#include "floodcast/errors.hpp"
#include "floodcast/floodgen/csv.hpp"
#include "floodcast/floodgen/simulate.hpp"
#include "floodcast/nn/serialize.hpp"

using namespace floodcast;
namespace fs = std::filesystem;

namespace {

const fs::path& root() {
  static const fs::path p = [] {
    const auto d = fs::temp_directory_path() / "floodcast_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

std::string path(const std::string& name) { return (root() / name).string(); }

// Small enough to train in seconds, large enough to learn something.
const char* kSmallConfig =
    "# test config\n"
    "n_sensors = 12\n"
    "train_events = 2\n"
    "train_event_names = train1,train2\n"
    "window_stride = 4\n"
    "hidden_size = 8\n"
    "conv_channels = 8,16,8\n"
    "kernel_sizes = 5,3,3\n"
    "max_epochs = 25\n"
    "patience = 6\n";

std::string config_file() {
  static const std::string p = [] {
    const auto f = path("small.cfg");
    write_text_file(f, kSmallConfig);
    return f;
  }();
  return p;
}

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "floodcast");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Run cli_small(const std::string& cmd, const std::string& out, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{cmd, "--config", config_file(), "--seed", "3", "--out", path(out)};
  args.insert(args.end(), extra.begin(), extra.end());
  return cli(args);
}

// Simulated data plus a trained model, shared by the later cases.
const std::string& trained() {
  static const std::string dir = [] {
    const auto sim = cli_small("simulate", "data");
    REQUIRE_MESSAGE(sim.code == 0, sim.err);
    const auto tr = cli_small("train", "data");
    REQUIRE_MESSAGE(tr.code == 0, tr.err);
    return path("data");
  }();
  return dir;
}

std::vector<std::vector<std::string>> read_table(const std::string& file) {
  std::istringstream in(read_text_file(file));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line[0] != '#') rows.push_back(split_csv_line(line, file, no));
  }
  return rows;
}

}  // namespace

TEST_CASE("config text") {
  RunConfig c;
  c.apply_text("# comment\nseed = 7\nhidden_size=4\nsweep_weights = 1, 10,100\nvariant = fcn-only\n");
  CHECK(c.seed == 7);
  CHECK(c.model.hidden_size == 4);
  CHECK(c.sweep_weights == std::vector<double>{1, 10, 100});
  CHECK(c.model.variant == Variant::FcnOnly);
  CHECK_THROWS_AS(c.apply_text("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(c.apply_text("seed\n"), ConfigError);
  CHECK_THROWS_AS(c.set("hidden_size", "-3"), ConfigError);
  CHECK_THROWS_AS(c.apply_file(path("missing.cfg")), IoError);

  RunConfig d;
  d.apply_text(c.canonical_text());
  CHECK(d.canonical_text() == c.canonical_text());
  CHECK(d.hash() == c.hash());
  d.set("seed", "8");
  CHECK(d.hash() != c.hash());
  for (const auto& k : RunConfig::keys()) CHECK(c.canonical_text().find(k + "=") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"bogus"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"simulate", "--set", "nonsense"}).code == 1);
  const auto one = cli_small("simulate", "one", {"--set", "n_sensors=1"});
  CHECK(one.code == 1);
  CHECK(one.err.find("error:") != std::string::npos);
  CHECK(cli_small("train", "nothing_here").code == 2);
  CHECK(cli_small("evaluate", "nothing_here", {"--model", path("none.fcm")}).code == 2);
}

TEST_CASE("simulate is reproducible for a fixed seed") {
  REQUIRE(cli_small("simulate", "sim_a").code == 0);
  REQUIRE(cli_small("simulate", "sim_b").code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(path("sim_a"))) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), path("sim_a"));
    const auto other = fs::path(path("sim_b")) / rel;
    REQUIRE(fs::exists(other));
    CHECK_MESSAGE(read_text_file(e.path().string()) == read_text_file(other.string()), rel.string());
    ++files;
  }
  CHECK(files > 12 * 3);
  CHECK(fs::exists(fs::path(path("sim_a")) / kTrainSetFile));
  CHECK(fs::exists(fs::path(path("sim_a")) / kEventsDir / "test1"));

  REQUIRE(cli({"simulate", "--config", config_file(), "--seed", "4", "--out", path("sim_c")}).code == 0);
  CHECK(read_text_file(path("sim_c/graph.csv")) != read_text_file(path("sim_a/graph.csv")));
}

TEST_CASE("train writes a model and a report, and resumes") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& dir = trained();
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::minutes(5));
  const auto m = load_model(dir + "/" + kModelFile);
  CHECK(m.config.hidden_size == 8);
  CHECK(m.threshold >= 0.0);
  CHECK(m.threshold <= 1.0);
  const auto report = read_table(dir + "/" + kTrainReportFile);
  REQUIRE(report.size() >= 2);
  CHECK(report[0][0] == "epoch");
  const std::size_t epochs = report.size() - 1;
  CHECK(m.trained_epochs == epochs);

  // Resuming from a copy continues the epoch count.
  fs::create_directories(path("resume"));
  fs::copy_file(dir + "/" + kModelFile, path("resume/") + kModelFile, fs::copy_options::overwrite_existing);
  const auto r = cli_small("train", "resume", {"--resume", "--set", "data_dir=" + dir, "--set", "max_epochs=2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto resumed = read_table(path("resume/") + kTrainReportFile);
  REQUIRE(resumed.size() >= 2);
  std::size_t prev = epochs;
  for (std::size_t i = 1; i < resumed.size(); ++i) {
    const auto e = std::stoul(resumed[i][0]);
    CHECK(e == prev + 1);
    prev = e;
  }
  CHECK(load_model(path("resume/") + kModelFile).trained_epochs == prev);

  const auto mismatch =
      cli_small("train", "resume", {"--resume", "--set", "data_dir=" + dir, "--set", "hidden_size=4"});
  CHECK(mismatch.code == 2);
}

TEST_CASE("single-branch models declare their variant") {
  const auto& dir = trained();
  const auto r = cli_small("train", "fcn_only",
                           {"--set", "data_dir=" + dir, "--set", "variant=fcn-only", "--set", "max_epochs=2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto m = load_model(path("fcn_only/") + kModelFile);
  CHECK(m.config.variant == Variant::FcnOnly);
  CHECK_FALSE(m.params.fastgrnn.has_value());

  const auto ev = cli_small("evaluate", "fcn_only", {"--set", "data_dir=" + dir, "--model", path("fcn_only/") + kModelFile});
  REQUIRE_MESSAGE(ev.code == 0, ev.err);
  const auto rows = read_table(path("fcn_only/") + kEvaluationFile);
  CHECK(rows[0] == std::vector<std::string>{"metric", "value"});
  CHECK(rows[1] == std::vector<std::string>{"variant", "fcn-only"});
}

TEST_CASE("sweep writes one row per weight") {
  const auto& dir = trained();
  const auto r = cli_small("sweep", "sweep", {"--set", "data_dir=" + dir, "--set", "sweep_weights=1", "--set",
                                              "sweep_runs=2", "--set", "max_epochs=2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto table = read_table(path("sweep/") + kSweepTableFile);
  CHECK(table.size() == 2);
  CHECK(std::stod(table[1][0]) == 1.0);
  CHECK(read_table(path("sweep/") + kSweepRunsFile).size() == 3);
}

TEST_CASE("predictions respect the threshold and track overflow") {
  const auto& dir = trained();
  const auto r = cli_small("predict", "pred", {"--set", "data_dir=" + dir, "--set", "predict_interval=1", "--model",
                                               dir + "/" + kModelFile});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const double phi = load_model(dir + "/" + kModelFile).threshold;
  const auto rows = read_table(path("pred/") + kPredictionsFile);
  REQUIRE(rows.size() > 1);
  CHECK(rows[0] == std::vector<std::string>{"sensor_id", "time", "probability", "predicted", "actual"});
  std::size_t flagged = 0, flagged_hit = 0, quiet = 0, quiet_hit = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double p = std::stod(rows[i][2]);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    const bool predicted = rows[i][3] == "1";
    CHECK(predicted == (p > phi));
    const bool actual = rows[i][4] == "1";
    (predicted ? flagged : quiet)++;
    (predicted ? flagged_hit : quiet_hit) += actual;
  }
  REQUIRE(flagged > 0);
  REQUIRE(quiet > 0);
  const double flagged_rate = static_cast<double>(flagged_hit) / static_cast<double>(flagged);
  const double quiet_rate = static_cast<double>(quiet_hit) / static_cast<double>(quiet);
  MESSAGE("overflow rate flagged " << flagged_rate << ", unflagged " << quiet_rate);
  CHECK(flagged_rate > quiet_rate);
}

TEST_CASE("a dry event gives low probabilities") {
  const auto& dir = trained();
  const auto graph = read_graph_csv(dir + "/" + kGraphFile, dir + "/" + kEdgesFile);
  EventSpec spec;
  spec.name = "dry";
  spec.start = make_timestamp(2021, 9, 1);
  spec.steps = 192;
  RngState rng(77);
  const auto trace = simulate_event(graph, spec, HydroParams{}, rng);
  write_event_csv(graph, trace, dir + "/" + kEventsDir + "/dry", "config_hash=0 seed=77");
  const auto r = cli_small("predict", "dry", {"--set", "data_dir=" + dir, "--set", "predict_event=dry", "--model",
                                              dir + "/" + kModelFile});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rows = read_table(path("dry/") + kPredictionsFile);
  REQUIRE(rows.size() > 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][2]) < 0.5);
    CHECK(rows[i][4] == "0");
  }
}

TEST_CASE("every table starts with a comment and a header") {
  trained();
  std::size_t tables = 0;
  for (const auto& e : fs::recursive_directory_iterator(root())) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    const auto text = read_text_file(e.path().string());
    const auto nl = text.find('\n');
    REQUIRE(nl != std::string::npos);
    CHECK_MESSAGE(text.rfind("# config_hash=", 0) == 0, e.path().string());
    const auto second = text.substr(nl + 1, text.find('\n', nl + 1) - nl - 1);
    CHECK_MESSAGE((!second.empty() && second[0] != '#' && second.find_first_of("0123456789") != 0), e.path().string());
    ++tables;
  }
  CHECK(tables > 10);
}
