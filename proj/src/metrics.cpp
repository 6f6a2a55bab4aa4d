#include "oobnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "oobnet/error.hpp"

namespace oobnet::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + ": lengths " + std::to_string(a) + " and " +
                    std::to_string(b) + " differ");
  }
}

void check_scores(std::span<const double> scores, const char* what) {
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kNonFinite, std::string(what) + ": non-finite score");
    }
  }
}

// Indices sorted by descending score; ties keep input order.
std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

}  // namespace

ConfusionMatrix confusion(std::span<const std::uint8_t> truth,
                          std::span<const std::uint8_t> predicted) {
  check_lengths(truth.size(), predicted.size(), "confusion");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] != 0;
    const bool p = predicted[i] != 0;
    if (t && p) {
      ++cm.tp;
    } else if (!t && p) {
      ++cm.fp;
    } else if (!t && !p) {
      ++cm.tn;
    } else {
      ++cm.fn;
    }
  }
  return cm;
}

PrecisionRecallF1 precision_recall_f1(const ConfusionMatrix& cm) {
  PrecisionRecallF1 r;
  if (cm.tp + cm.fp > 0) r.precision = static_cast<double>(cm.tp) / (cm.tp + cm.fp);
  if (cm.tp + cm.fn > 0) r.recall = static_cast<double>(cm.tp) / (cm.tp + cm.fn);
  if (r.precision + r.recall > 0) {
    r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size(), "roc_auc");
  check_scores(scores, "roc_auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Work in half-pair units so ties stay integral.
  std::uint64_t twice_correct = 0;
  std::uint64_t neg_below = 0;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos : neg) += 1;
      ++j;
    }
    twice_correct += pos * (2 * neg_below + neg);
    neg_below += neg;
    n_pos += pos;
    n_neg += neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::kSingleClass, "roc_auc needs both classes");
  }
  return static_cast<double>(twice_correct) /
         (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(std::span<const double> scores,
                         std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size(), "average_precision");
  check_scores(scores, "average_precision");
  const auto n_pos = static_cast<std::int64_t>(
      std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
  if (n_pos == 0) {
    throw Error(ErrorCode::kSingleClass, "average_precision needs a positive");
  }
  const auto order = descending_order(scores);
  double ap = 0.0;
  std::int64_t tp = 0, fp = 0, prev_tp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp) += 1;
      ++j;
    }
    ap += static_cast<double>(tp - prev_tp) / static_cast<double>(n_pos) *
          (static_cast<double>(tp) / static_cast<double>(tp + fp));
    prev_tp = tp;
    i = j;
  }
  return ap;
}

MeanSd aggregate(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "aggregate: no values");
  }
  MeanSd r;
  r.n = values.size();
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(r.n);
  if (r.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(r.n - 1));
  }
  return r;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = std::abs(value) * scale;
  const double rounded =
      std::floor(scaled + 0.5 + 1e-9 * std::max(1.0, scaled)) / scale;
  return std::copysign(rounded, value);
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, round_half_up(value, decimals));
  return buf;
}

MetricValues compute_metrics(const ScoredFrames& frames, ConfusionMatrix* cm_out) {
  check_lengths(frames.scores.size(), frames.truth.size(), "compute_metrics");
  const ConfusionMatrix cm = confusion(frames.truth, frames.predicted);
  const auto prf = precision_recall_f1(cm);
  MetricValues m;
  m.precision = prf.precision;
  m.recall = prf.recall;
  m.f1 = prf.f1;
  const bool has_pos = cm.tp + cm.fn > 0;
  const bool has_neg = cm.tn + cm.fp > 0;
  if (has_pos && has_neg) m.roc_auc = roc_auc(frames.scores, frames.truth);
  if (has_pos) m.average_precision = average_precision(frames.scores, frames.truth);
  if (cm_out) *cm_out = cm;
  return m;
}

MetricAggregate aggregate_metrics(std::span<const MetricValues> members) {
  std::vector<double> auc, ap, f1, p, r;
  for (const auto& m : members) {
    if (m.roc_auc) auc.push_back(*m.roc_auc);
    if (m.average_precision) ap.push_back(*m.average_precision);
    f1.push_back(m.f1);
    p.push_back(m.precision);
    r.push_back(m.recall);
  }
  MetricAggregate a;
  if (!auc.empty()) a.roc_auc = aggregate(auc);
  if (!ap.empty()) a.average_precision = aggregate(ap);
  if (!f1.empty()) {
    a.f1 = aggregate(f1);
    a.precision = aggregate(p);
    a.recall = aggregate(r);
  }
  return a;
}

}  // namespace oobnet::metrics
