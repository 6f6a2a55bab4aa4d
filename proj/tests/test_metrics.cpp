#include <gtest/gtest.h>

#include "oobnet/error.hpp"
#include "oobnet/metrics.hpp"
#include "oobnet/rng.hpp"
#include "test_support.hpp"

using namespace oobnet;
using namespace oobnet::metrics;
namespace ot = oobnet::testing;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

// Both classes present; coarse score grids make ties common.
Instance random_instance(Rng& rng) {
  Instance in;
  const std::size_t n = 2 + rng.below(299);
  const std::uint64_t levels = rng.below(2) ? 5 : 1000000;
  for (std::size_t i = 0; i < n; ++i) {
    in.scores.push_back(static_cast<double>(rng.below(levels)) / static_cast<double>(levels));
    in.labels.push_back(rng.below(3) == 0);
  }
  in.labels[0] = 1;
  in.labels[1] = 0;
  return in;
}

ConfusionMatrix counting_oracle(std::span<const std::uint8_t> t, std::span<const std::uint8_t> p) {
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == 1 && p[i] == 1) cm.tp++;
    if (t[i] == 0 && p[i] == 1) cm.fp++;
    if (t[i] == 0 && p[i] == 0) cm.tn++;
    if (t[i] == 1 && p[i] == 0) cm.fn++;
  }
  return cm;
}

std::string pct(double fraction_percent) { return format_fixed(fraction_percent, 2); }

}  // namespace

TEST(Confusion, Example) {
  const std::vector<std::uint8_t> t{1, 1, 0, 0, 1, 0};
  const std::vector<std::uint8_t> p{1, 0, 0, 1, 1, 0};
  const ConfusionMatrix cm = confusion(t, p);
  EXPECT_EQ(cm, (ConfusionMatrix{2, 1, 2, 1}));
  EXPECT_EQ(cm.total(), 6);
  EXPECT_THROW(confusion(t, std::vector<std::uint8_t>{1}), Error);
}

TEST(Confusion, MatchesCountingOracle) {
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    std::vector<std::uint8_t> t, p;
    const auto n = rng.below(200);
    for (std::uint64_t i = 0; i < n; ++i) {
      t.push_back(rng.below(2));
      p.push_back(rng.below(2));
    }
    EXPECT_EQ(confusion(t, p), counting_oracle(t, p));
  }
}

TEST(PrecisionRecallF1, ReportedOperatingPoint) {
  // Harmonic mean of 99.69% precision and 99.31% recall.
  const double p = 0.9969, r = 0.9931;
  EXPECT_EQ(pct(100 * 2 * p * r / (p + r)), "99.50");
}

TEST(PrecisionRecallF1, Edges) {
  const auto perfect = precision_recall_f1({5, 0, 7, 0});
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  const auto none = precision_recall_f1({0, 3, 4, 2});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  const auto empty = precision_recall_f1({0, 0, 4, 0});
  EXPECT_EQ(empty.f1, 0.0);
  const auto mixed = precision_recall_f1({3, 1, 0, 2});
  EXPECT_DOUBLE_EQ(mixed.precision, 0.75);
  EXPECT_DOUBLE_EQ(mixed.recall, 0.6);
  EXPECT_DOUBLE_EQ(mixed.f1, 6.0 / 9.0);
}

TEST(RocAuc, SeparatedAndTied) {
  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y), 0.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y), 0.5);
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y), 0.75);
}

TEST(RocAuc, SingleClassThrows) {
  EXPECT_EQ([] {
    try {
      roc_auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1});
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  }(), ErrorCode::kSingleClass);
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{0, 0}), Error);
}

TEST(AveragePrecision, Examples) {
  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  EXPECT_EQ(average_precision(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y), 1.0);
  // One positive scored below every negative: precision at its cut is 1/n.
  std::vector<double> s{0.9, 0.8, 0.7, 0.6, 0.1};
  std::vector<std::uint8_t> last{0, 0, 0, 0, 1};
  EXPECT_DOUBLE_EQ(average_precision(s, last), 1.0 / 5.0);
  // All tied: precision equals the prevalence.
  EXPECT_DOUBLE_EQ(average_precision(std::vector<double>(4, 0.3), y), 0.5);
  EXPECT_THROW(average_precision(std::vector<double>{0.1}, std::vector<std::uint8_t>{0}), Error);
}

TEST(Metrics, RankingMetricsMatchOraclesExactly) {
  Rng rng(2024);
  for (int k = 0; k < 300; ++k) {
    const Instance in = random_instance(rng);
    EXPECT_EQ(roc_auc(in.scores, in.labels), ot::oracle_roc_auc(in.scores, in.labels));
    EXPECT_EQ(average_precision(in.scores, in.labels),
              ot::oracle_average_precision(in.scores, in.labels));
  }
}

TEST(Metrics, InvariantUnderMonotoneTransformAndPermutation) {
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    Instance in = random_instance(rng);
    const double auc = roc_auc(in.scores, in.labels);
    const double ap = average_precision(in.scores, in.labels);
    std::vector<double> mapped;
    for (double s : in.scores) mapped.push_back(std::exp(3 * s) - 7);
    EXPECT_EQ(roc_auc(mapped, in.labels), auc);
    EXPECT_EQ(average_precision(mapped, in.labels), ap);

    std::vector<std::size_t> order = ot::all_entries(in.scores.size());
    rng.shuffle(order);
    Instance perm;
    for (auto i : order) {
      perm.scores.push_back(in.scores[i]);
      perm.labels.push_back(in.labels[i]);
    }
    EXPECT_EQ(roc_auc(perm.scores, perm.labels), auc);
    EXPECT_EQ(average_precision(perm.scores, perm.labels), ap);

    std::vector<double> neg;
    for (double s : in.scores) neg.push_back(-s);
    EXPECT_NEAR(auc + roc_auc(neg, in.labels), 1.0, 1e-12);
  }
}

TEST(Aggregate, SampleStatistics) {
  const auto one = aggregate(std::vector<double>{0.42});
  EXPECT_EQ(one.mean, 0.42);
  EXPECT_EQ(one.sd, 0.0);
  EXPECT_EQ(one.n, 1u);
  const auto two = aggregate(std::vector<double>{1.0, 3.0});
  EXPECT_EQ(two.mean, 2.0);
  EXPECT_DOUBLE_EQ(two.sd, std::sqrt(2.0));
  EXPECT_THROW(aggregate(std::vector<double>{}), Error);
}

TEST(Aggregate, MissingRankingMetricsAreSkipped) {
  std::vector<MetricValues> members(3);
  members[0].roc_auc = 0.9;
  members[1].roc_auc = 0.7;
  members[0].f1 = 0.5;
  members[2].f1 = 1.0;
  const MetricAggregate agg = aggregate_metrics(members);
  EXPECT_EQ(agg.roc_auc.n, 2u);
  EXPECT_DOUBLE_EQ(agg.roc_auc.mean, 0.8);
  EXPECT_EQ(agg.average_precision.n, 0u);
  EXPECT_EQ(agg.f1.n, 3u);
  EXPECT_DOUBLE_EQ(agg.f1.mean, 0.5);
}

// Per-center rows (AUC, AP, F1, precision, recall in percent) and the
// mean +/- SD reported for each procedure across its centers.
TEST(Aggregate, ReportedCrossCenterRows) {
  struct Group {
    std::vector<std::array<double, 5>> centers;
    std::array<const char*, 5> mean;
    std::array<const char*, 5> sd;
  };
  const Group bypass{{{99.99, 99.60, 97.18, 97.82, 96.55}, {99.89, 99.23, 95.01, 98.96, 91.36}},
                     {"99.94", "99.42", "96.10", "98.39", "93.96"},
                     {"0.07", "0.26", "1.53", "0.81", "3.67"}};
  const Group chole{{{99.83, 99.00, 92.78, 87.20, 99.12},
                     {99.92, 98.93, 96.27, 97.79, 94.80},
                     {99.12, 96.85, 92.98, 96.95, 89.33},
                     {99.97, 99.85, 96.93, 99.79, 94.22}},
                    {"99.71", "98.66", "94.74", "95.43", "94.37"},
                    // AP SD recomputes to 1.2755, so 1.28 here.
                    {"0.40", "1.28", "2.17", "5.62", "4.01"}};
  for (const Group* g : {&bypass, &chole}) {
    std::vector<MetricValues> members;
    for (const auto& c : g->centers) {
      MetricValues m;
      m.roc_auc = c[0];
      m.average_precision = c[1];
      m.f1 = c[2];
      m.precision = c[3];
      m.recall = c[4];
      members.push_back(m);
    }
    const MetricAggregate agg = aggregate_metrics(members);
    const MeanSd cols[5] = {agg.roc_auc, agg.average_precision, agg.f1, agg.precision,
                            agg.recall};
    for (int k = 0; k < 5; ++k) {
      EXPECT_EQ(pct(cols[k].mean), g->mean[k]) << k;
      EXPECT_EQ(pct(cols[k].sd), g->sd[k]) << k;
    }
  }
}

TEST(Rounding, HalfUp) {
  EXPECT_EQ(round_half_up(96.095, 2), 96.10);
  EXPECT_EQ(round_half_up(0.125, 2), 0.13);
  EXPECT_EQ(round_half_up(2.5, 0), 3.0);
  EXPECT_EQ(round_half_up(2.4999, 0), 2.0);
  EXPECT_EQ(round_half_up(-1.005, 2), -1.01);
  EXPECT_EQ(format_fixed(99.415, 2), "99.42");
  EXPECT_EQ(format_fixed(0.0, 2), "0.00");
  // 557 missed out-of-body frames among 111,974.
  EXPECT_EQ(format_fixed(100.0 * 557 / 111974, 2), "0.50");
}

TEST(ComputeMetrics, DegenerateRankingMetricsAreEmpty) {
  ScoredFrames f;
  f.scores = {0.1, 0.2, 0.3};
  f.truth = {0, 0, 0};
  f.predicted = {0, 0, 1};
  ConfusionMatrix cm;
  const MetricValues m = compute_metrics(f, &cm);
  EXPECT_FALSE(m.roc_auc.has_value());
  EXPECT_FALSE(m.average_precision.has_value());
  EXPECT_EQ(cm, (ConfusionMatrix{0, 1, 2, 0}));
  EXPECT_EQ(m.f1, 0.0);

  f.truth = {0, 1, 1};
  const MetricValues m2 = compute_metrics(f);
  ASSERT_TRUE(m2.roc_auc.has_value());
  EXPECT_EQ(*m2.roc_auc, 1.0);
  EXPECT_DOUBLE_EQ(m2.recall, 0.5);
}
