#include "floodcast/eval/report.hpp"

#include <cstdio>

#include "floodcast/floodgen/csv.hpp"

namespace floodcast {

namespace {

std::string open_table(const std::string& comment, const char* header) {
  return "# " + comment + "\n" + header + "\n";
}

const char* status(const WeightSummary& s) {
  if (s.all_failed()) return "all_failed";
  return s.succeeded == s.runs ? "ok" : "partial";
}

}  // namespace

std::string table_comment(std::uint64_t config_hash, std::uint64_t seed) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "config_hash=%016llx seed=%llu", static_cast<unsigned long long>(config_hash),
                static_cast<unsigned long long>(seed));
  return buf;
}

std::string sweep_table_csv(const SweepReport& report, const std::string& comment) {
  std::string out = open_table(comment,
                               "weight,runs,succeeded,max_f_measure,f_measure_curve_area,pr_curve_area,phi_c,"
                               "precision_at_0.5,recall_at_0.5,status");
  for (const auto& r : report.rows) {
    out += format_double(r.weight) + ',' + std::to_string(r.runs) + ',' + std::to_string(r.succeeded) + ',' +
           format_double(r.mean_max_f) + ',' + format_double(r.mean_f_area) + ',' + format_double(r.mean_pr_area) +
           ',' + format_double(r.phi_c) + ',' + format_double(r.mean_precision_at_half) + ',' +
           format_double(r.mean_recall_at_half) + ',' + status(r) + '\n';
  }
  return out;
}

std::string sweep_runs_csv(const SweepReport& report, const std::string& comment) {
  std::string out = open_table(comment,
                               "weight,run,seed,status,max_f_measure,f_measure_curve_area,pr_curve_area,phi_c,"
                               "max_accuracy,accuracy_at_0.5,precision_at_0.5,recall_at_0.5,accuracy_at_phi_c,"
                               "epochs,seconds_per_epoch,error");
  for (const auto& r : report.runs) {
    out += format_double(r.weight) + ',' + std::to_string(r.run) + ',' + std::to_string(r.seed) + ',' +
           (r.ok ? "ok" : "failed") + ',' + format_double(r.max_f) + ',' + format_double(r.f_area) + ',' +
           format_double(r.pr_area) + ',' + format_double(r.phi_c) + ',' + format_double(r.max_accuracy) + ',' +
           format_double(r.accuracy_at_half) + ',' + format_double(r.precision_at_half) + ',' +
           format_double(r.recall_at_half) + ',' + format_double(r.accuracy_at_phi_c) + ',' +
           std::to_string(r.epochs) + ',' + format_double(r.seconds_per_epoch) + ',' + csv_escape(r.error) + '\n';
  }
  return out;
}

std::string sweep_f_curves_csv(const SweepReport& report, const std::string& comment) {
  std::string out = open_table(comment, "weight,run,threshold,f_measure");
  for (const auto& r : report.runs) {
    if (!r.ok) continue;
    for (std::size_t i = 0; i < r.f_curve.size() && i < report.grid.size(); ++i) {
      out += format_double(r.weight) + ',' + std::to_string(r.run) + ',' + format_double(report.grid[i]) + ',' +
             format_double(r.f_curve[i]) + '\n';
    }
  }
  return out;
}

std::string sweep_best_csv(const SweepReport& report, const std::string& comment) {
  std::string out = open_table(comment, "best_weight,phi_c");
  if (report.best) out += format_double(report.best_weight()) + ',' + format_double(report.best_phi_c()) + '\n';
  return out;
}

std::string variant_table_csv(const std::vector<VariantRow>& rows, const std::string& comment) {
  std::string header = "metric";
  for (const auto& r : rows) header += std::string(",") + variant_name(r.variant);
  std::string out = open_table(comment, header.c_str());
  auto row = [&](const char* name, double VariantRow::*field) {
    out += name;
    for (const auto& r : rows) out += ',' + (r.succeeded ? format_double(r.*field) : std::string("nan"));
    out += '\n';
  };
  row("max_accuracy", &VariantRow::max_accuracy);
  row("max_f_measure", &VariantRow::max_f);
  row("f_measure_curve_area", &VariantRow::f_area);
  row("pr_curve_area", &VariantRow::pr_area);
  row("seconds_per_epoch", &VariantRow::seconds_per_epoch);
  return out;
}

std::string epoch_report_csv(const TrainReport& report, const std::string& comment) {
  std::string out = open_table(comment, "epoch,train_loss,train_accuracy,val_loss,val_accuracy,seconds");
  for (const auto& e : report.epochs) {
    out += std::to_string(e.epoch) + ',' + format_double(e.train_loss) + ',' + format_double(e.train_accuracy) + ',' +
           format_double(e.val_loss) + ',' + format_double(e.val_accuracy) + ',' + format_double(e.seconds) + '\n';
  }
  return out;
}

}  // namespace floodcast
