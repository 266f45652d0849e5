#include "floodcast/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "floodcast/errors.hpp"

namespace floodcast {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ContractError("scores and labels differ in length (" + std::to_string(scores.size()) + " vs " +
                        std::to_string(labels.size()) + ")");
  }
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0)) throw ContractError("scores must lie in [0, 1]");
  for (int y : labels)
    if (y != 0 && y != 1) throw ContractError("labels must be 0 or 1");
}

std::vector<double> resolve_grid(std::span<const double> grid) {
  std::vector<double> g = grid.empty() ? threshold_grid() : std::vector<double>(grid.begin(), grid.end());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g[i] >= 0.0 && g[i] <= 1.0)) throw ContractError("thresholds must lie in [0, 1]");
    if (i > 0 && !(g[i] > g[i - 1])) throw ContractError("thresholds must be strictly increasing");
  }
  return g;
}

void require_positive(std::span<const int> labels) {
  if (std::find(labels.begin(), labels.end(), 1) == labels.end()) {
    throw UndefinedMetricError("curve undefined: no positive labels");
  }
}

}  // namespace

ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels, double phi) {
  check_inputs(scores, labels);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] > phi;
    if (labels[i]) (pred ? cm.tp : cm.fn)++;
    else (pred ? cm.fp : cm.tn)++;
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UndefinedMetricError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

PrecisionRecall precision_recall(const ConfusionMatrix& cm) {
  PrecisionRecall pr;
  if (cm.tp + cm.fp > 0) pr.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  if (cm.tp + cm.fn > 0) pr.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  return pr;
}

double f_measure(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

std::vector<double> threshold_grid() {
  std::vector<double> g(101);
  for (std::size_t i = 0; i <= 100; ++i) g[i] = static_cast<double>(i) / 100.0;
  return g;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("trapezoid: length mismatch");
  double a = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) a += (x[i] - x[i - 1]) * (y[i] + y[i - 1]) / 2.0;
  return a;
}

double pr_curve_area(std::span<const PRPoint> points) {
  std::vector<std::pair<double, double>> rp;
  for (const auto& p : points)
    if (p.defined) rp.emplace_back(p.recall, p.precision);
  if (rp.empty()) return 0.0;
  std::sort(rp.begin(), rp.end());
  std::vector<double> r, pr;
  for (std::size_t i = 0; i < rp.size();) {
    std::size_t j = i;
    double s = 0.0;
    while (j < rp.size() && rp[j].first == rp[i].first) s += rp[j++].second;
    r.push_back(rp[i].first);
    pr.push_back(s / static_cast<double>(j - i));
    i = j;
  }
  if (r.front() > 0.0) {
    r.insert(r.begin(), 0.0);
    pr.insert(pr.begin(), pr.front());
  }
  return trapezoid(r, pr);
}

PRCurve pr_curve(std::span<const double> scores, std::span<const int> labels, std::span<const double> grid) {
  check_inputs(scores, labels);
  require_positive(labels);
  const auto g = resolve_grid(grid);
  PRCurve c;
  for (double phi : g) {
    const auto cm = confusion_at(scores, labels, phi);
    const auto pr = precision_recall(cm);
    c.points.push_back({phi, pr.precision, pr.recall, cm.tp + cm.fp > 0});
  }
  c.area = pr_curve_area(c.points);
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  c.baseline = positives / static_cast<double>(labels.size());
  return c;
}

FCurve f_curve_and_critical(std::span<const double> scores, std::span<const int> labels,
                            std::span<const double> grid) {
  check_inputs(scores, labels);
  require_positive(labels);
  FCurve c;
  c.thresholds = resolve_grid(grid);
  c.f_max = -1.0;
  for (double phi : c.thresholds) {
    const auto pr = precision_recall(confusion_at(scores, labels, phi));
    const double f = f_measure(pr.precision, pr.recall);
    c.f.push_back(f);
    if (f > c.f_max) {
      c.f_max = f;
      c.phi_c = phi;
    }
  }
  c.area = trapezoid(c.thresholds, c.f);
  return c;
}

double max_accuracy(std::span<const double> scores, std::span<const int> labels, std::span<const double> grid) {
  check_inputs(scores, labels);
  double best = 0.0;
  for (double phi : resolve_grid(grid)) best = std::max(best, accuracy(confusion_at(scores, labels, phi)));
  return best;
}

}  // namespace floodcast
