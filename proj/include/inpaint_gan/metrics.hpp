#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace inpaint_gan {

/// Binary classification metrics with malignant as the positive class.
struct MetricsReport {
  double acc = 0.0;
  double sen = 0.0;  ///< tp / (tp + fn); 0 when there are no positives
  double spe = 0.0;  ///< tn / (tn + fp); 0 when there are no negatives
  double auc = 0.0;
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t n = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

/// Area under the ROC curve by the trapezoidal rule over tied score groups. Equals the Mann-Whitney
/// probability P(pos > neg) + P(tie) / 2 exactly: the area is accumulated in integers and divided once.
/// `labels` are 1 for positive, 0 for negative. Throws ValidationError unless both classes occur.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Thresholded confusion counts (positive when score >= threshold) plus the threshold-free AUC.
MetricsReport metrics_from_scores(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// 0-based index of the first maximum.
std::size_t select_best_epoch(std::span<const double> validation_aucs);

/// Field-wise mean and population standard deviation of a set of reports (counts are averaged and rounded).
MetricsReport mean_report(std::span<const MetricsReport> reports);
MetricsReport spread_report(std::span<const MetricsReport> reports);

struct TableRow {
  std::string name;
  MetricsReport metrics;
};

struct TableSection {
  std::string title;
  std::vector<TableRow> rows;
  MetricsReport mean;
};

/// Plain-text table with ACC, SEN, SPE, AUC columns, one titled block per section ending in a Mean row.
std::string format_metrics_table(std::span<const TableSection> sections);

}  // namespace inpaint_gan
