#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace floodcast {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// A sample is predicted flooded iff score > phi.
ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels, double phi);

// (tp + tn) / total; UndefinedMetricError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

struct PrecisionRecall {
  double precision = 0.0;  // 0 when nothing is predicted positive
  double recall = 0.0;     // 0 when there are no positives
};

PrecisionRecall precision_recall(const ConfusionMatrix& cm);
// Harmonic mean; 0 when p + r == 0.
double f_measure(double precision, double recall);

// 0.00, 0.01, ..., 1.00 (each point is i / 100.0).
std::vector<double> threshold_grid();

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  // False when nothing is predicted positive at this threshold.
  bool defined = false;
};

struct PRCurve {
  std::vector<PRPoint> points;
  // Trapezoid over recall of the defined points, duplicate recalls averaged,
  // extended flat to recall 0 from the lowest-recall point.
  double area = 0.0;
  // Positive rate: the precision of a classifier with no skill.
  double baseline = 0.0;
};

// UndefinedMetricError if no label is positive.
PRCurve pr_curve(std::span<const double> scores, std::span<const int> labels,
                 std::span<const double> grid = {});
double pr_curve_area(std::span<const PRPoint> points);

struct FCurve {
  std::vector<double> thresholds;
  std::vector<double> f;
  double phi_c = 0.0;  // argmax, ties to the smallest threshold
  double f_max = 0.0;
  double area = 0.0;   // trapezoid over the thresholds
};

FCurve f_curve_and_critical(std::span<const double> scores, std::span<const int> labels,
                            std::span<const double> grid = {});

// Largest accuracy over the grid.
double max_accuracy(std::span<const double> scores, std::span<const int> labels, std::span<const double> grid = {});

// Trapezoid rule over strictly increasing x.
double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace floodcast
