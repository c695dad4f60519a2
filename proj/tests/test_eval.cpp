#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mmlang/eval/metrics.hpp"
#include "mmlang/eval/reporting.hpp"
#include "paper_values.hpp"

using namespace mmlang;

namespace {

TaskSpec three_class() { return {"t3", {"a", "b", "c"}, MetricMode::macro, std::nullopt}; }

// Independent oracle: full confusion matrix, then per-class scores from its
// rows and columns.
MetricsReport oracle(const std::vector<int>& gold, const std::vector<int>& pred, const TaskSpec& t) {
  const int k = static_cast<int>(t.num_classes());
  std::vector<std::vector<long>> cm(k, std::vector<long>(k, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) cm[gold[i]][pred[i]]++;
  MetricsReport r;
  long diag = 0;
  std::vector<double> p(k), rc(k), f(k);
  for (int c = 0; c < k; ++c) {
    long row = 0, col = 0;
    for (int j = 0; j < k; ++j) {
      row += cm[c][j];
      col += cm[j][c];
    }
    diag += cm[c][c];
    p[c] = col ? double(cm[c][c]) / col : 0.0;
    rc[c] = row ? double(cm[c][c]) / row : 0.0;
    f[c] = p[c] + rc[c] > 0 ? 2 * p[c] * rc[c] / (p[c] + rc[c]) : 0.0;
  }
  r.accuracy = double(diag) / double(gold.size());
  if (t.metric_mode == MetricMode::binary_positive) {
    const int c = *t.positive_class;
    r.precision = p[c];
    r.recall = rc[c];
    r.f1 = f[c];
  } else {
    for (int c = 0; c < k; ++c) {
      r.precision += p[c] / k;
      r.recall += rc[c] / k;
      r.f1 += f[c] / k;
    }
  }
  return r;
}

}  // namespace

TEST(Metrics, MacroHandExample) {
  const std::vector<int> gold{0, 0, 1, 2}, pred{0, 1, 1, 2};
  const auto r = compute_metrics(gold, pred, three_class());
  EXPECT_NEAR(r.per_class[0].f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.per_class[1].f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.per_class[2].f1, 1.0, 1e-12);
  EXPECT_NEAR(r.f1, 7.0 / 9.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
}

TEST(Metrics, BinaryPositiveHandExample) {
  const std::vector<int> gold{0, 1, 1, 0}, pred{1, 1, 0, 0};
  const auto r = compute_metrics(gold, pred, tasks::fake_news());
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_EQ(r.positive_class, 1);
}

TEST(Metrics, PerfectPredictionsAndErrors) {
  const std::vector<int> y{0, 1, 2, 2};
  const auto r = compute_metrics(y, y, three_class());
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_THROW(compute_metrics(std::vector<int>{0, 1}, std::vector<int>{0}, three_class()),
               ValidationError);
  EXPECT_THROW(compute_metrics(std::vector<int>{0, 3}, std::vector<int>{0, 1}, three_class()),
               ValidationError);
  EXPECT_THROW(compute_metrics(std::vector<int>{}, std::vector<int>{}, three_class()),
               ValidationError);
}

TEST(Metrics, AbsentClassScoresZero) {
  // Class 2 never appears in gold or predictions and still counts in the mean.
  const std::vector<int> y{0, 1};
  EXPECT_NEAR(compute_metrics(y, y, three_class()).f1, 2.0 / 3.0, 1e-12);
}

TEST(Metrics, MatchesConfusionMatrixOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 4);
    const int n = 1 + static_cast<int>(rng() % 50);
    TaskSpec t;
    t.name = "rand";
    for (int c = 0; c < k; ++c) t.classes.push_back("c" + std::to_string(c));
    if (trial % 2) {
      t.metric_mode = MetricMode::binary_positive;
      t.positive_class = static_cast<int>(rng() % static_cast<unsigned>(k));
    }
    std::vector<int> gold(n), pred(n);
    for (int i = 0; i < n; ++i) {
      gold[i] = static_cast<int>(rng() % static_cast<unsigned>(k));
      pred[i] = rng() % 3 ? gold[i] : static_cast<int>(rng() % static_cast<unsigned>(k));
    }
    const auto got = compute_metrics(gold, pred, t);
    const auto want = oracle(gold, pred, t);
    ASSERT_NEAR(got.f1, want.f1, 1e-9) << "trial " << trial;
    ASSERT_NEAR(got.precision, want.precision, 1e-9);
    ASSERT_NEAR(got.recall, want.recall, 1e-9);
    ASSERT_NEAR(got.accuracy, want.accuracy, 1e-9);
  }
}

TEST(Aggregate, MeansAndRunCount) {
  const std::vector<int> y{0, 1, 2};
  auto a = compute_metrics(y, y, three_class());
  auto b = a;
  b.f1 = 0.6;
  a.f1 = 0.8;
  const std::vector<MetricsReport> two{a, b};
  const auto m = aggregate_runs(two);
  EXPECT_NEAR(m.f1, 0.7, 1e-12);
  EXPECT_EQ(m.n_runs, 2);
  std::vector<MetricsReport> ten(10, a);
  EXPECT_EQ(aggregate_runs(ten).n_runs, 10);
  EXPECT_NEAR(aggregate_runs(ten).f1, 0.8, 1e-12);
  EXPECT_THROW(aggregate_runs(std::span<const MetricsReport>{}), ValidationError);
  auto other = compute_metrics(std::vector<int>{0, 1}, std::vector<int>{0, 1}, tasks::fake_news());
  const std::vector<MetricsReport> mixed{a, other};
  EXPECT_THROW(aggregate_runs(mixed), ValidationError);
}

TEST(Rmsd, PaperExamples) {
  EXPECT_NEAR(rmsd_en(0.70, {{Language::es, 0.62}, {Language::fr, 0.68}, {Language::pt, 0.66},
                             {Language::zh, 0.62}, {Language::hi, 0.47}}),
              0.1164, 5e-5);
  EXPECT_NEAR(rmsd_en(0.71, {{Language::es, 0.64}, {Language::fr, 0.69}, {Language::pt, 0.67},
                             {Language::zh, 0.65}, {Language::hi, 0.63}}),
              0.0581, 5e-5);
}

TEST(Rmsd, ReproducesPublishedChartValues) {
  for (const auto& row : paper::disparity_rows()) {
    // Oracle: direct formula on the array.
    double s = 0;
    for (std::size_t i = 1; i < 6; ++i) s += (row.f1[0] - row.f1[i]) * (row.f1[0] - row.f1[i]);
    const double want = std::sqrt(s / 5);
    const double got = rmsd_en(paper::as_map(row.f1));
    EXPECT_NEAR(got, want, 1e-12) << row.label;
    if (row.label == "multilingual text crisis") {
      // The rounded table yields 0.1164, outside the +-0.005 band around the
      // printed 0.11; the acceptance run reports this row as a failure.
      EXPECT_NEAR(got, 0.1164, 5e-5);
    } else {
      EXPECT_NEAR(got, row.rmsd, 0.005) << row.label;
    }
  }
}

TEST(Rmsd, HumanSubsetTextValueDiffersFromPublished) {
  // Three of the four published values follow from the rounded table; the
  // multilingual text-only one does not (0.13 computed vs 0.15 printed).
  const auto& rows = paper::human_subset_rows();
  for (std::size_t i : {0u, 1u, 3u})
    EXPECT_NEAR(rmsd_en(paper::as_map(rows[i].f1)), rows[i].rmsd, 0.005) << rows[i].label;
  const double computed = rmsd_en(paper::as_map(rows[2].f1));
  EXPECT_NEAR(computed, 0.1308, 5e-4);
  EXPECT_GT(std::abs(computed - rows[2].rmsd), 0.01);
}

TEST(Rmsd, PropertiesAndErrors) {
  std::map<Language, double> same;
  for (auto l : kNonEnglish) same[l] = 0.6;
  EXPECT_DOUBLE_EQ(rmsd_en(0.6, same), 0.0);
  // Monotone in each deviation.
  double prev = 0;
  for (double d = 0; d <= 0.5; d += 0.05) {
    auto m = same;
    m[Language::zh] = 0.6 - d;
    const double v = rmsd_en(0.6, m);
    EXPECT_GE(v, prev);
    prev = v;
  }
  auto missing = same;
  missing.erase(Language::hi);
  EXPECT_THROW(rmsd_en(0.6, missing), ValidationError);
  auto bad = same;
  bad[Language::fr] = 1.2;
  EXPECT_THROW(rmsd_en(0.6, bad), ValidationError);
  EXPECT_THROW(rmsd_en(-0.1, same), ValidationError);
}

TEST(Trend, ExactLineAndConstant) {
  std::map<Language, double> f1, flat;
  for (auto l : kAllLanguages) {
    f1[l] = 0.80 - 0.02 * corpus_rank(l);
    flat[l] = 0.5;
  }
  const auto t = trend_slope(f1);
  EXPECT_NEAR(t.slope, -0.02, 1e-12);
  EXPECT_NEAR(t.intercept, 0.80, 1e-12);
  EXPECT_EQ(t.order.front(), Language::en);
  EXPECT_EQ(t.order[1], Language::fr);
  EXPECT_EQ(t.order.back(), Language::hi);
  EXPECT_NEAR(trend_slope(flat).slope, 0.0, 1e-12);
  f1.erase(Language::pt);
  EXPECT_THROW(trend_slope(f1), ValidationError);
}

TEST(Reporting, PredictionLogRoundTrip) {
  const std::vector<PredictionRecord> recs{{"a-1", 0, 1, {0.25f, 0.75f}},
                                           {"b-2", 1, 1, {0.123456789f, 0.876543211f}}};
  const auto text = write_prediction_log(recs);
  EXPECT_EQ(parse_prediction_log(text), recs);
  EXPECT_THROW(parse_prediction_log("nope\n"), ParseError);
  EXPECT_THROW(parse_prediction_log("id\tgold\tpred\tscores\nx\t1\n"), ParseError);
}

TEST(Reporting, MetricsJsonRoundTripAndRounding) {
  const std::vector<int> gold{0, 0, 1, 2}, pred{0, 1, 1, 2};
  const auto r = compute_metrics(gold, pred, three_class());
  EXPECT_EQ(metrics_from_json(to_json(r)), r);
  EXPECT_EQ(format_fixed(0.7777), "0.78");
  EXPECT_EQ(format_fixed(-0.001), "0.00");
  const auto d = make_disparity_report("crisis", "multilingual", "text",
                                       paper::as_map(paper::disparity_rows()[6].f1));
  EXPECT_EQ(format_fixed(d.rmsd), "0.12");
}
