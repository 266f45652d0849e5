#include "floodcast/eval/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "floodcast/errors.hpp"
#include "floodcast/eval/metrics.hpp"
#include "floodcast/nn/train.hpp"

namespace floodcast {

double SweepReport::best_weight() const {
  if (!best) throw UndefinedMetricError("sweep has no successful weight");
  return rows[*best].weight;
}

double SweepReport::best_phi_c() const {
  if (!best) throw UndefinedMetricError("sweep has no successful weight");
  return rows[*best].phi_c;
}

std::vector<double> default_weight_grid(bool with_fractions) {
  std::vector<double> w;
  if (with_fractions) w = {0.1, 0.5};
  for (int i = 1; i <= 10; ++i) w.push_back(i);
  for (int i = 15; i <= 100; i += 5) w.push_back(i);
  return w;
}

std::uint64_t run_seed(std::uint64_t base, std::size_t run) { return RngState(base).split(run).next_u64(); }

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

RunRecord evaluate_run(const ModelConfig& cfg, const Dataset& train_set, const Dataset& val, const Dataset& test) {
  RunRecord r;
  r.weight = cfg.loss_weight;
  r.seed = cfg.seed;
  const auto result = train(cfg, train_set, val);
  const auto scores = predict_scores(result.params, cfg, test);
  std::vector<int> labels;
  labels.reserve(test.size());
  for (const auto& s : test) labels.push_back(s.label);

  const auto fc = f_curve_and_critical(scores, labels);
  const auto pc = pr_curve(scores, labels);
  r.max_f = fc.f_max;
  r.f_area = fc.area;
  r.pr_area = pc.area;
  r.phi_c = fc.phi_c;
  r.f_curve = fc.f;
  r.max_accuracy = max_accuracy(scores, labels);
  const auto half = confusion_at(scores, labels, 0.5);
  const auto pr = precision_recall(half);
  r.accuracy_at_half = accuracy(half);
  r.precision_at_half = pr.precision;
  r.recall_at_half = pr.recall;
  r.accuracy_at_phi_c = accuracy(confusion_at(scores, labels, fc.phi_c));
  r.epochs = result.report.epochs.size();
  r.seconds_per_epoch = result.report.mean_epoch_seconds();
  r.ok = true;
  return r;
}

SweepReport aggregate_sweep(const std::vector<double>& weights, std::vector<RunRecord> runs,
                            std::vector<double> grid) {
  SweepReport rep;
  rep.grid = std::move(grid);
  auto weight_index = [&](double w) {
    const auto it = std::find(weights.begin(), weights.end(), w);
    if (it == weights.end()) throw ContractError("run with a weight outside the sweep grid");
    return static_cast<std::size_t>(it - weights.begin());
  };
  std::stable_sort(runs.begin(), runs.end(), [&](const RunRecord& a, const RunRecord& b) {
    const auto ia = weight_index(a.weight), ib = weight_index(b.weight);
    return ia != ib ? ia < ib : a.run < b.run;
  });
  for (double w : weights) {
    WeightSummary s;
    s.weight = w;
    s.mean_f_curve.assign(rep.grid.size(), 0.0);
    for (const auto& r : runs) {
      if (r.weight != w) continue;
      ++s.runs;
      if (!r.ok) continue;
      ++s.succeeded;
      s.mean_max_f += r.max_f;
      s.mean_f_area += r.f_area;
      s.mean_pr_area += r.pr_area;
      s.mean_max_accuracy += r.max_accuracy;
      s.mean_precision_at_half += r.precision_at_half;
      s.mean_recall_at_half += r.recall_at_half;
      s.mean_seconds_per_epoch += r.seconds_per_epoch;
      if (r.f_curve.size() != rep.grid.size()) throw ContractError("F curve length differs from the grid");
      for (std::size_t i = 0; i < rep.grid.size(); ++i) s.mean_f_curve[i] += r.f_curve[i];
    }
    if (s.succeeded > 0) {
      const double n = static_cast<double>(s.succeeded);
      for (double* v : {&s.mean_max_f, &s.mean_f_area, &s.mean_pr_area, &s.mean_max_accuracy,
                        &s.mean_precision_at_half, &s.mean_recall_at_half, &s.mean_seconds_per_epoch}) {
        *v /= n;
      }
      double best = -1.0;
      for (std::size_t i = 0; i < rep.grid.size(); ++i) {
        s.mean_f_curve[i] /= n;
        if (s.mean_f_curve[i] > best) {
          best = s.mean_f_curve[i];
          s.phi_c = rep.grid[i];
        }
      }
    }
    rep.rows.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    if (r.all_failed()) continue;
    if (!rep.best || r.mean_max_f > rep.rows[*rep.best].mean_max_f ||
        (r.mean_max_f == rep.rows[*rep.best].mean_max_f && r.weight < rep.rows[*rep.best].weight)) {
      rep.best = i;
    }
  }
  rep.runs = std::move(runs);
  return rep;
}

SweepReport monte_carlo_sweep(const ModelConfig& base, const Dataset& train_set, const Dataset& val,
                              const Dataset& test, const SweepOptions& options) {
  if (options.weights.empty()) throw ConfigError("sweep needs at least one weight");
  if (options.runs == 0) throw ConfigError("sweep needs at least one run per weight");
  for (std::size_t i = 0; i < options.weights.size(); ++i) {
    if (!(options.weights[i] > 0.0)) throw ConfigError("sweep weights must be positive");
    for (std::size_t j = 0; j < i; ++j)
      if (options.weights[j] == options.weights[i]) throw ConfigError("sweep weights must be distinct");
  }
  if (test.empty()) throw ConfigError("test set is empty");
  base.validate();

  const std::size_t jobs = options.weights.size() * options.runs;
  std::vector<RunRecord> records(jobs);
  std::mutex report_mutex;
  parallel_for(jobs, options.threads, [&](std::size_t j) {
    const std::size_t wi = j / options.runs, run = j % options.runs;
    ModelConfig cfg = base;
    cfg.loss_weight = options.weights[wi];
    cfg.seed = run_seed(base.seed, run);
    RunRecord r;
    try {
      r = evaluate_run(cfg, train_set, val, test);
    } catch (const Error& e) {
      r = RunRecord{};
      r.ok = false;
      r.error = e.what();
    }
    r.weight = cfg.loss_weight;
    r.run = run;
    r.seed = cfg.seed;
    records[j] = r;
    if (options.on_run) {
      std::lock_guard lock(report_mutex);
      options.on_run(r);
    }
  });
  return aggregate_sweep(options.weights, std::move(records), threshold_grid());
}

std::vector<VariantRow> compare_variants(const ModelConfig& base, const std::vector<Variant>& variants,
                                         const Dataset& train_set, const Dataset& val, const Dataset& test,
                                         std::size_t runs, std::size_t threads) {
  if (variants.empty() || runs == 0) throw ConfigError("variant comparison needs variants and runs");
  const std::size_t jobs = variants.size() * runs;
  std::vector<RunRecord> records(jobs);
  parallel_for(jobs, threads, [&](std::size_t j) {
    ModelConfig cfg = base;
    cfg.variant = variants[j / runs];
    cfg.seed = run_seed(base.seed, j % runs);
    try {
      records[j] = evaluate_run(cfg, train_set, val, test);
    } catch (const Error& e) {
      records[j].ok = false;
      records[j].error = e.what();
    }
  });
  std::vector<VariantRow> out;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    VariantRow row;
    row.variant = variants[v];
    row.runs = runs;
    for (std::size_t r = 0; r < runs; ++r) {
      const auto& rec = records[v * runs + r];
      if (!rec.ok) continue;
      ++row.succeeded;
      row.max_accuracy += rec.max_accuracy;
      row.max_f += rec.max_f;
      row.f_area += rec.f_area;
      row.pr_area += rec.pr_area;
      row.seconds_per_epoch += rec.seconds_per_epoch;
    }
    if (row.succeeded > 0) {
      const double n = static_cast<double>(row.succeeded);
      for (double* x : {&row.max_accuracy, &row.max_f, &row.f_area, &row.pr_area, &row.seconds_per_epoch}) *x /= n;
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace floodcast
