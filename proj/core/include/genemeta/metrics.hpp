#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace genemeta {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// Precision/recall/F1 are macro averages over the two classes. A ratio with
// an empty denominator is 0, and so is the F1 of a class whose precision and
// recall are both 0.
struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Average precision; absent when the evaluated labels hold no positive.
  std::optional<double> pr_auc;
  Confusion counts;
  std::size_t n_samples = 0;
};

struct ClassScores {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// A score at or above `threshold` counts as a positive prediction.
Confusion confusion(std::span<const double> scores, std::span<const int> labels,
                    double threshold = 0.5);

ClassScores positive_class_scores(const Confusion& c);
ClassScores negative_class_scores(const Confusion& c);

MetricsReport classification_metrics(const Confusion& c);

// Step-wise average precision. Tied scores form one threshold group.
// Throws MetricError when no label is positive.
double pr_auc(std::span<const double> scores, std::span<const int> labels);

// Classification metrics plus PR-AUC when defined.
MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                              double threshold = 0.5);

// Arithmetic mean of each metric over the reports. PR-AUC is averaged over the
// reports that define it. Counts and sample totals are summed.
MetricsReport average_reports(std::span<const MetricsReport> reports);

// Per-report rows followed by a `mean` row.
void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> folds,
                       const MetricsReport& mean);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsReport> folds,
                       const MetricsReport& mean);

// Table-style summary: model, accuracy, f1, precision, recall, prauc.
void write_summary_csv(std::ostream& out, const std::string& model, const MetricsReport& report);
void write_summary_csv(const std::filesystem::path& path, const std::string& model,
                       const MetricsReport& report);

}  // namespace genemeta
