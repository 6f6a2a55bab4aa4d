#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Binary classification metrics. The positive class (label 1) is
// out-of-body throughout.
namespace oobnet::metrics {

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const std::uint8_t> truth,
                          std::span<const std::uint8_t> predicted);

struct PrecisionRecallF1 {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Zero denominators yield 0 for the affected metric.
PrecisionRecallF1 precision_recall_f1(const ConfusionMatrix& cm);

// Mann-Whitney statistic: fraction of (positive, negative) pairs ranked
// correctly, ties counting one half. Requires both classes.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Step-wise area under the precision-recall curve, one cut point per
// distinct score. Requires at least one positive.
double average_precision(std::span<const double> scores,
                         std::span<const std::uint8_t> labels);

struct MeanSd {
  double mean = 0;
  double sd = 0;  // sample SD (n - 1); 0 when n == 1
  std::size_t n = 0;
};

MeanSd aggregate(std::span<const double> values);

// Decimal rounding for presentation, ties away from zero. Inputs that sit a
// hair below a decimal tie because of binary representation (96.095 is
// stored as 96.09499...) still round up.
double round_half_up(double value, int decimals);
std::string format_fixed(double value, int decimals);

struct MetricValues {
  std::optional<double> roc_auc;  // empty when only one class is present
  std::optional<double> average_precision;  // empty without positives
  double f1 = 0;
  double precision = 0;
  double recall = 0;
};

struct ScoredFrames {
  std::vector<double> scores;
  std::vector<std::uint8_t> truth;
  std::vector<std::uint8_t> predicted;
};

// Confusion matrix plus the five metrics for one pool of frames. Degenerate
// AUC/AP become empty instead of throwing.
MetricValues compute_metrics(const ScoredFrames& frames, ConfusionMatrix* cm_out = nullptr);

struct MetricAggregate {
  MeanSd roc_auc;
  MeanSd average_precision;
  MeanSd f1;
  MeanSd precision;
  MeanSd recall;
};

// Mean and sample SD of each metric across members (e.g. the centers of a
// group). Members with an empty AUC/AP are left out of that metric only.
MetricAggregate aggregate_metrics(std::span<const MetricValues> members);

}  // namespace oobnet::metrics
