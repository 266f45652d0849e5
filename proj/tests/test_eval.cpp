#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "floodcast/errors.hpp"
#include "floodcast/eval/metrics.hpp"
#include "floodcast/eval/report.hpp"
#include "floodcast/eval/sweep.hpp"
#include "floodcast/floodgen/csv.hpp"
#include "metric_oracle.hpp"
#include "support.hpp"

using namespace floodcast;
namespace oracle = floodcast::oracle;

namespace {

struct Instance {
  std::vector<double> s;
  std::vector<int> y;
};

// Scores partly on the grid so ties with thresholds are exercised.
Instance random_instance(RngState& rng, std::size_t n, bool force_positive = true) {
  Instance in;
  for (std::size_t i = 0; i < n; ++i) {
    in.s.push_back(rng.uniform() < 0.3 ? static_cast<double>(rng.below(101)) / 100.0 : rng.uniform());
    in.y.push_back(rng.uniform() < 0.3 ? 1 : 0);
  }
  if (force_positive) in.y[rng.below(n)] = 1;
  return in;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(split_csv_line(line, "table", no));
  }
  return rows;
}

}  // namespace

TEST_CASE("confusion examples") {
  const std::vector<double> s{0.9, 0.1};
  const std::vector<int> y{1, 0};
  CHECK(confusion_at(s, y, 0.5) == ConfusionMatrix{1, 0, 0, 1});
  const auto none = confusion_at(s, y, 1.0);
  CHECK(none.tp == 0);
  CHECK(none.fp == 0);
  // Strictly greater: a score equal to the threshold is not flagged.
  const std::vector<double> at{0.5};
  const std::vector<int> pos{1};
  CHECK(confusion_at(at, pos, 0.5).tp == 0);
  const std::vector<int> short_y{1};
  CHECK_THROWS_AS(confusion_at(s, short_y, 0.5), ContractError);
  const std::vector<double> bad{1.5, 0.1};
  CHECK_THROWS_AS(confusion_at(bad, y, 0.5), ContractError);
  const std::vector<int> bad_y{2, 0};
  CHECK_THROWS_AS(confusion_at(s, bad_y, 0.5), ContractError);
}

TEST_CASE("confusion matches a brute-force recount") {
  RngState rng(1);
  const auto in = random_instance(rng, 1000);
  for (double phi : {0.0, 0.13, 0.5, 0.77, 1.0}) {
    const auto c = confusion_at(in.s, in.y, phi);
    const auto o = oracle::count(in.s, in.y, phi);
    CHECK(c.tp == o.tp);
    CHECK(c.fp == o.fp);
    CHECK(c.fn == o.fn);
    CHECK(c.tn == o.tn);
    CHECK(c.total() == 1000);
  }
}

TEST_CASE("accuracy precision recall F examples") {
  CHECK(accuracy({50, 0, 0, 50}) == 1.0);
  CHECK(accuracy({1, 2, 1, 96}) == doctest::Approx(0.97).epsilon(1e-15));
  CHECK_THROWS_AS(accuracy({}), UndefinedMetricError);
  const auto pr = precision_recall({8, 2, 2, 0});
  CHECK(pr.precision == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(pr.recall == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(precision_recall({0, 0, 5, 5}).precision == 0.0);
  CHECK(precision_recall({0, 5, 0, 5}).recall == 0.0);
  CHECK(f_measure(0.5, 0.5) == 0.5);
  CHECK(f_measure(1.0, 0.0) == 0.0);
  CHECK(f_measure(0.0, 0.0) == 0.0);
  CHECK(f_measure(0.6, 0.8) == doctest::Approx(0.6857).epsilon(1e-4));
  CHECK(f_measure(0.6, 0.8) == doctest::Approx(0.96 / 1.4).epsilon(1e-15));
}

TEST_CASE("metric bounds on random matrices") {
  RngState rng(2);
  for (int i = 0; i < 1000; ++i) {
    ConfusionMatrix c{rng.below(20), rng.below(20), rng.below(20), rng.below(20)};
    if (c.total() == 0) continue;
    const auto pr = precision_recall(c);
    const oracle::Counts o{c.tp, c.fp, c.fn, c.tn};
    CHECK(pr.precision == oracle::precision(o));
    CHECK(pr.recall == oracle::recall(o));
    const double f = f_measure(pr.precision, pr.recall);
    for (double v : {accuracy(c), pr.precision, pr.recall, f}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(f <= 2.0 * std::min(pr.precision, pr.recall) + 1e-15);
    CHECK(f <= std::max(pr.precision, pr.recall) + 1e-15);
  }
}

TEST_CASE("threshold grid") {
  const auto g = threshold_grid();
  REQUIRE(g.size() == 101);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == i / 100.0);
}

TEST_CASE("pr curve examples") {
  const std::vector<double> perfect{1, 1, 0, 0, 0};
  const std::vector<int> y{1, 1, 0, 0, 0};
  CHECK(std::abs(pr_curve(perfect, y).area - 1.0) < 1e-9);

  const std::vector<double> flat(10, 0.5);
  const std::vector<int> balanced{1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  const auto c = pr_curve(flat, balanced);
  CHECK(c.baseline == 0.5);
  for (const auto& p : c.points) {
    if (p.threshold < 0.5) CHECK(p.precision == 0.5);
    else CHECK_FALSE(p.defined);
  }
  CHECK(c.area == doctest::Approx(0.5).epsilon(1e-12));

  const std::vector<int> negatives(5, 0);
  CHECK_THROWS_AS(pr_curve(perfect, negatives), UndefinedMetricError);
  CHECK_THROWS_AS(f_curve_and_critical(perfect, negatives), UndefinedMetricError);
}

TEST_CASE("pr curve invariants") {
  RngState rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const auto in = random_instance(rng, 200);
    const auto c = pr_curve(in.s, in.y);
    const auto positives = static_cast<std::size_t>(std::count(in.y.begin(), in.y.end(), 1));
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const auto& p = c.points[i];
      CHECK(p.precision >= 0.0);
      CHECK(p.precision <= 1.0);
      CHECK(p.recall >= 0.0);
      CHECK(p.recall <= 1.0);
      const auto cm = confusion_at(in.s, in.y, p.threshold);
      CHECK(cm.tp + cm.fn == positives);
      if (i > 0) {
        CHECK(p.threshold > c.points[i - 1].threshold);
        CHECK(p.recall <= c.points[i - 1].recall);
      }
    }
    CHECK(std::abs(c.area - oracle::pr_area(in.s, in.y)) < 1e-12);
  }
}

TEST_CASE("pr area of an uninformed classifier approaches the positive rate") {
  RngState rng(4);
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 10000; ++i) {
    s.push_back(rng.uniform());
    y.push_back(rng.uniform() < 0.2 ? 1 : 0);
  }
  const auto c = pr_curve(s, y);
  CHECK(std::abs(c.area - c.baseline) < 0.05);
}

TEST_CASE("F curve and critical threshold") {
  const std::vector<double> perfect{1, 1, 0, 0, 0};
  const std::vector<int> y{1, 1, 0, 0, 0};
  const auto fc = f_curve_and_critical(perfect, y);
  CHECK(fc.f_max == 1.0);
  CHECK(fc.phi_c == 0.0);
  RngState rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto in = random_instance(rng, 200);
    const auto f = f_curve_and_critical(in.s, in.y);
    const auto o = oracle::f_scan(in.s, in.y);
    CHECK(f.phi_c == o.phi_c);
    CHECK(f.f_max == o.f_max);
    CHECK(std::abs(f.area - o.area) < 1e-12);
    const auto g = threshold_grid();
    CHECK(std::find(g.begin(), g.end(), f.phi_c) != g.end());
  }
}

TEST_CASE("every metric equals brute-force recomputation") {
  RngState rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    const auto in = random_instance(rng, 1 + rng.below(50));
    const auto g = threshold_grid();
    for (double phi : g) {
      const auto c = confusion_at(in.s, in.y, phi);
      const auto o = oracle::count(in.s, in.y, phi);
      CHECK((c.tp == o.tp && c.fp == o.fp && c.fn == o.fn && c.tn == o.tn));
      const auto pr = precision_recall(c);
      CHECK(std::abs(pr.precision - oracle::precision(o)) < 1e-12);
      CHECK(std::abs(pr.recall - oracle::recall(o)) < 1e-12);
      CHECK(std::abs(f_measure(pr.precision, pr.recall) -
                     oracle::fmeasure(oracle::precision(o), oracle::recall(o))) < 1e-12);
    }
    CHECK(std::abs(pr_curve(in.s, in.y).area - oracle::pr_area(in.s, in.y)) < 1e-12);
    CHECK(std::abs(f_curve_and_critical(in.s, in.y).area - oracle::f_scan(in.s, in.y).area) < 1e-12);
    CHECK(std::abs(max_accuracy(in.s, in.y) - oracle::max_accuracy(in.s, in.y)) < 1e-12);
  }
}

TEST_CASE("grid validation and trapezoid") {
  const std::vector<double> s{0.2, 0.8};
  const std::vector<int> y{0, 1};
  const std::vector<double> descending{0.5, 0.2};
  CHECK_THROWS_AS(pr_curve(s, y, descending), ContractError);
  const std::vector<double> outside{0.5, 1.5};
  CHECK_THROWS_AS(pr_curve(s, y, outside), ContractError);
  const std::vector<double> x{0, 1, 3}, fx{1, 1, 0};
  CHECK(trapezoid(x, fx) == 2.0);
}

TEST_CASE("weight grid") {
  const auto g = default_weight_grid(false);
  CHECK(g.size() == 28);
  CHECK(g.front() == 1.0);
  CHECK(g[9] == 10.0);
  CHECK(g[10] == 15.0);
  CHECK(g.back() == 100.0);
  const auto f = default_weight_grid(true);
  CHECK(f.size() == 30);
  CHECK(f[0] == 0.1);
  CHECK(f[1] == 0.5);
  CHECK(run_seed(3, 0) != run_seed(3, 1));
  CHECK(run_seed(3, 2) == run_seed(3, 2));
}

namespace {

RunRecord fake_run(double w, std::size_t run, RngState& rng, std::size_t grid) {
  RunRecord r;
  r.weight = w;
  r.run = run;
  r.ok = true;
  r.max_f = rng.uniform();
  r.f_area = rng.uniform();
  r.pr_area = rng.uniform();
  r.max_accuracy = rng.uniform();
  r.precision_at_half = rng.uniform();
  r.recall_at_half = rng.uniform();
  r.seconds_per_epoch = rng.uniform();
  for (std::size_t i = 0; i < grid; ++i) r.f_curve.push_back(rng.uniform());
  return r;
}

}  // namespace

TEST_CASE("sweep aggregation") {
  RngState rng(7);
  const std::vector<double> weights{1, 10, 100};
  const auto grid = threshold_grid();
  std::vector<RunRecord> runs;
  for (std::size_t r = 0; r < 4; ++r)
    for (double w : weights) runs.push_back(fake_run(w, r, rng, grid.size()));
  runs[5].ok = false;  // weight 100, run 1
  runs[5].error = "boom";
  const auto rep = aggregate_sweep(weights, runs, grid);
  REQUIRE(rep.rows.size() == 3);
  for (std::size_t wi = 0; wi < 3; ++wi) {
    double mf = 0, fa = 0, pa = 0;
    std::size_t n = 0;
    std::vector<double> curve(grid.size(), 0.0);
    for (const auto& r : runs) {
      if (r.weight != weights[wi] || !r.ok) continue;
      ++n;
      mf += r.max_f;
      fa += r.f_area;
      pa += r.pr_area;
      for (std::size_t i = 0; i < grid.size(); ++i) curve[i] += r.f_curve[i];
    }
    const auto& row = rep.rows[wi];
    CHECK(row.runs == 4);
    CHECK(row.succeeded == n);
    CHECK(std::abs(row.mean_max_f - mf / n) < 1e-12);
    CHECK(std::abs(row.mean_f_area - fa / n) < 1e-12);
    CHECK(std::abs(row.mean_pr_area - pa / n) < 1e-12);
    const auto top = std::max_element(curve.begin(), curve.end()) - curve.begin();
    CHECK(row.phi_c == grid[static_cast<std::size_t>(top)]);
  }
  CHECK(rep.rows[2].succeeded == 3);
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (rep.rows[i].mean_max_f > rep.rows[best].mean_max_f) best = i;
  CHECK(rep.best_weight() == weights[best]);
  // Sorted by weight index then run.
  for (std::size_t i = 1; i < rep.runs.size(); ++i) {
    const auto a = std::find(weights.begin(), weights.end(), rep.runs[i - 1].weight);
    const auto b = std::find(weights.begin(), weights.end(), rep.runs[i].weight);
    CHECK((a < b || (a == b && rep.runs[i - 1].run < rep.runs[i].run)));
  }
}

TEST_CASE("sweep ties, failures and degenerate runs") {
  RngState rng(8);
  const auto grid = threshold_grid();
  auto a = fake_run(5, 0, rng, grid.size()), b = fake_run(2, 0, rng, grid.size());
  b.max_f = a.max_f;
  const auto tie = aggregate_sweep({5, 2}, {a, b}, grid);
  CHECK(tie.best_weight() == 2.0);

  auto dead = fake_run(3, 0, rng, grid.size());
  dead.ok = false;
  const auto failed = aggregate_sweep({3, 2}, {dead, b}, grid);
  CHECK(failed.rows[0].all_failed());
  CHECK(failed.best_weight() == 2.0);
  CHECK_FALSE(aggregate_sweep({3}, {dead}, grid).best.has_value());

  const auto single = aggregate_sweep({2}, {b}, grid);
  CHECK(single.rows[0].mean_max_f == b.max_f);
  CHECK(single.rows[0].mean_pr_area == b.pr_area);
}

TEST_CASE("monte carlo sweep on a tiny problem") {
  ModelConfig cfg;
  cfg.window = 12;
  cfg.hidden_size = 4;
  cfg.conv_channels = {4, 4, 4};
  cfg.kernel_sizes = {3, 3, 3};
  cfg.max_epochs = 2;
  const Dataset d = test::separable_toy(9, 12, 4, 1);
  SweepOptions opt;
  opt.weights = {1.0};
  opt.runs = 2;
  opt.threads = 1;
  std::size_t seen = 0;
  opt.on_run = [&](const RunRecord&) { ++seen; };
  const auto rep = monte_carlo_sweep(cfg, d, d, d, opt);
  CHECK(rep.rows.size() == 1);
  CHECK(rep.runs.size() == 2);
  CHECK(seen == 2);
  CHECK(rep.runs[0].seed == run_seed(cfg.seed, 0));

  opt.weights = {1.0, 1.0};
  CHECK_THROWS_AS(monte_carlo_sweep(cfg, d, d, d, opt), ConfigError);
  opt.weights = {0.0};
  CHECK_THROWS_AS(monte_carlo_sweep(cfg, d, d, d, opt), ConfigError);
  opt.weights = {1.0};
  opt.runs = 0;
  CHECK_THROWS_AS(monte_carlo_sweep(cfg, d, d, d, opt), ConfigError);

  // A failing run is recorded, not thrown.
  opt.runs = 1;
  Dataset no_positive = d;
  for (auto& s : no_positive) s.label = 0;
  const auto bad = monte_carlo_sweep(cfg, d, d, no_positive, opt);
  CHECK_FALSE(bad.runs[0].ok);
  CHECK(bad.rows[0].all_failed());
}

TEST_CASE("report tables") {
  RngState rng(9);
  const auto grid = threshold_grid();
  const std::vector<double> weights{0.5, 1, 20};
  std::vector<RunRecord> runs;
  for (double w : weights)
    for (std::size_t r = 0; r < 2; ++r) runs.push_back(fake_run(w, r, rng, grid.size()));
  const auto rep = aggregate_sweep(weights, runs, grid);
  const std::string comment = table_comment(0xabcdef, 7);
  CHECK(comment == "config_hash=0000000000abcdef seed=7");

  const std::string table = sweep_table_csv(rep, comment);
  CHECK(table.rfind("# " + comment + "\n", 0) == 0);
  const auto rows = csv_rows(table);
  REQUIRE(rows.size() == weights.size() + 1);
  CHECK(rows[0][0] == "weight");
  CHECK(rows[0][3] == "max_f_measure");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    CHECK(std::stod(rows[i + 1][0]) == weights[i]);
    CHECK(std::stod(rows[i + 1][3]) == rep.rows[i].mean_max_f);
    CHECK(std::stod(rows[i + 1][5]) == rep.rows[i].mean_pr_area);
  }
  CHECK(csv_rows(sweep_runs_csv(rep, comment)).size() == runs.size() + 1);
  CHECK(csv_rows(sweep_f_curves_csv(rep, comment)).size() == runs.size() * grid.size() + 1);
  const auto best = csv_rows(sweep_best_csv(rep, comment));
  CHECK(std::stod(best[1][0]) == rep.best_weight());

  std::vector<VariantRow> vr{{Variant::Hybrid, 2, 2, 0.9, 0.7, 0.5, 0.6, 1.5}, {Variant::FcnOnly, 2, 2, 0.8, 0.6, 0.4, 0.5, 1.0}};
  const auto vt = csv_rows(variant_table_csv(vr, comment));
  CHECK(vt[0] == std::vector<std::string>{"metric", "hybrid", "fcn-only"});
  CHECK(vt.size() == 6);

  TrainReport tr;
  tr.epochs.push_back({1, 0.5, 0.7, 0.4, 0.8, 1.0});
  const auto et = csv_rows(epoch_report_csv(tr, comment));
  CHECK(et.size() == 2);
}
