#include "genemeta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "genemeta/error.hpp"

namespace genemeta {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

void require_finite(std::span<const double> scores, const char* where) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]))
      throw NumericalError(std::string(where) + ": non-finite score at index " + std::to_string(i));
  }
}

}  // namespace

Confusion confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) {
    throw DimensionError("confusion: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(labels.size()) + " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

ClassScores positive_class_scores(const Confusion& c) {
  const double p = ratio(c.tp, c.tp + c.fp);
  const double r = ratio(c.tp, c.tp + c.fn);
  return {p, r, harmonic(p, r)};
}

ClassScores negative_class_scores(const Confusion& c) {
  const double p = ratio(c.tn, c.tn + c.fn);
  const double r = ratio(c.tn, c.tn + c.fp);
  return {p, r, harmonic(p, r)};
}

MetricsReport classification_metrics(const Confusion& c) {
  if (c.total() == 0) throw MetricError("metrics need at least one sample");
  const ClassScores pos = positive_class_scores(c);
  const ClassScores neg = negative_class_scores(c);
  MetricsReport r;
  r.counts = c;
  r.n_samples = c.total();
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.precision = 0.5 * (pos.precision + neg.precision);
  r.recall = 0.5 * (pos.recall + neg.recall);
  r.f1 = 0.5 * (pos.f1 + neg.f1);
  return r;
}

double pr_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("pr_auc: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(labels.size()) + " labels");
  }
  require_finite(scores, "pr_auc");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0) throw MetricError("pr_auc is undefined without positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t group_tp = 0, j = i;
    for (; j < order.size() && scores[order[j]] == scores[order[i]]; ++j) {
      labels[order[j]] == 1 ? ++group_tp : ++fp;
    }
    tp += group_tp;
    if (group_tp) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += precision * static_cast<double>(group_tp) / static_cast<double>(positives);
    }
    i = j;
  }
  return ap;
}

MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                              double threshold) {
  require_finite(scores, "evaluate_scores");
  MetricsReport r = classification_metrics(confusion(scores, labels, threshold));
  if (std::find(labels.begin(), labels.end(), 1) != labels.end()) r.pr_auc = pr_auc(scores, labels);
  return r;
}

MetricsReport average_reports(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw MetricError("cannot average zero reports");
  MetricsReport out;
  double auc_sum = 0.0;
  std::size_t auc_n = 0;
  for (const auto& r : reports) {
    out.accuracy += r.accuracy;
    out.precision += r.precision;
    out.recall += r.recall;
    out.f1 += r.f1;
    if (r.pr_auc) {
      auc_sum += *r.pr_auc;
      ++auc_n;
    }
    out.counts.tp += r.counts.tp;
    out.counts.fp += r.counts.fp;
    out.counts.tn += r.counts.tn;
    out.counts.fn += r.counts.fn;
    out.n_samples += r.n_samples;
  }
  const double n = static_cast<double>(reports.size());
  out.accuracy /= n;
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  if (auc_n) out.pr_auc = auc_sum / static_cast<double>(auc_n);
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> folds,
                       const MetricsReport& mean) {
  out << "fold,accuracy,precision,recall,f1,pr_auc,tp,fp,tn,fn,n_samples\n";
  auto row = [&](const std::string& id, const MetricsReport& r) {
    out << id << ',' << fmt(r.accuracy) << ',' << fmt(r.precision) << ',' << fmt(r.recall) << ','
        << fmt(r.f1) << ',' << fmt(r.pr_auc) << ',' << r.counts.tp << ',' << r.counts.fp << ','
        << r.counts.tn << ',' << r.counts.fn << ',' << r.n_samples << '\n';
  };
  for (std::size_t i = 0; i < folds.size(); ++i) row(std::to_string(i), folds[i]);
  row("mean", mean);
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsReport> folds,
                       const MetricsReport& mean) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_metrics_csv(out, folds, mean);
}

void write_summary_csv(std::ostream& out, const std::string& model, const MetricsReport& r) {
  out << "model,accuracy,f1,precision,recall,prauc\n";
  out << model << ',' << fmt(r.accuracy) << ',' << fmt(r.f1) << ',' << fmt(r.precision) << ','
      << fmt(r.recall) << ',' << fmt(r.pr_auc) << '\n';
}

void write_summary_csv(const std::filesystem::path& path, const std::string& model,
                       const MetricsReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_summary_csv(out, model, report);
}

}  // namespace genemeta
