#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "qsbd/core/rng.hpp"
#include "qsbd/eval/metrics.hpp"
#include "qsbd/eval/report.hpp"
#include "qsbd/eval/splits.hpp"
#include "oracles.hpp"

using namespace qsbd;
using namespace qsbd::eval;

using Case = oracle::PredCase;
using oracle::pairwise_auroc;
using oracle::random_pred_case;
using oracle::scan_oracle;

TEST(Threshold, WorkedExample) {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.1};
  const std::vector<int> y{1, 0, 1, 0};
  const auto r = pr_best_f1_threshold(s, y);
  EXPECT_EQ(r.threshold, 0.7);
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 0.8);
}

TEST(Threshold, SeparatedPicksLargestThreshold) {
  const std::vector<double> s{0.95, 0.9, 0.3, 0.2};
  const std::vector<int> y{1, 1, 0, 0};
  const auto r = pr_best_f1_threshold(s, y);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.threshold, 0.9);
}

TEST(Threshold, MatchesExhaustiveScan) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const Case c = random_pred_case(rng);
    const auto got = pr_best_f1_threshold(c.scores, c.labels);
    const auto want = scan_oracle(c);
    ASSERT_EQ(got.threshold, want.threshold) << "case " << t;
    ASSERT_EQ(got.precision, want.precision);
    ASSERT_EQ(got.recall, want.recall);
    ASSERT_EQ(got.f1, want.f1);
    ASSERT_EQ(got.confusion, want.confusion);
  }
}

TEST(Threshold, SingleClassRejected) {
  const std::vector<double> s{0.1, 0.2};
  const std::vector<int> y{0, 0};
  EXPECT_THROW(pr_best_f1_threshold(s, y), Error);
  try {
    auroc(s, y);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSingleClassEvalSet);
  }
}

TEST(Auroc, SimpleCases) {
  EXPECT_EQ(auroc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), 1.0);
  EXPECT_EQ(auroc(std::vector<double>{0.4, 0.4, 0.4}, std::vector<int>{1, 0, 1}), 0.5);
}

TEST(Auroc, MatchesPairwiseOracle) {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const Case c = random_pred_case(rng);
    ASSERT_NEAR(auroc(c.scores, c.labels), pairwise_auroc(c), 1e-9) << "case " << t;
  }
}

TEST(Auroc, InvariantUnderIncreasingTransform) {
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    Case c = random_pred_case(rng);
    const double a = auroc(c.scores, c.labels);
    for (auto& s : c.scores) s = std::exp(3.0 * s) + 7.0;
    EXPECT_NEAR(auroc(c.scores, c.labels), a, 1e-12);
  }
}

TEST(Kappa, FormulaOracle) {
  const Confusion c{9, 1, 2, 88};
  const double n = 100.0, po = (9.0 + 88.0) / n;
  const double pe = ((9.0 + 1.0) / n) * ((9.0 + 2.0) / n) + ((2.0 + 88.0) / n) * ((1.0 + 88.0) / n);
  EXPECT_NEAR(cohen_kappa(c), (po - pe) / (1.0 - pe), 1e-12);
  EXPECT_EQ(cohen_kappa({1, 1, 1, 1}), 0.0);
  EXPECT_EQ(cohen_kappa({5, 0, 0, 7}), 1.0);
}

TEST(Kappa, DegenerateAndSymmetric) {
  EXPECT_EQ(cohen_kappa({4, 0, 0, 0}), 1.0);
  EXPECT_EQ(cohen_kappa({0, 0, 0, 4}), 1.0);
  EXPECT_THROW(cohen_kappa({0, 0, 0, 0}), Error);
  Rng rng(14);
  for (int t = 0; t < 100; ++t) {
    const Confusion c{long(rng.index(20)) + 1, long(rng.index(20)), long(rng.index(20)), long(rng.index(20)) + 1};
    const Confusion swapped{c.tn, c.fn, c.fp, c.tp};
    EXPECT_NEAR(cohen_kappa(c), cohen_kappa(swapped), 1e-12);
    EXPECT_GE(cohen_kappa(c), -1.0);
    EXPECT_LE(cohen_kappa(c), 1.0);
  }
}

TEST(Metrics, RatesAndF1Identity) {
  Rng rng(15);
  for (int t = 0; t < 100; ++t) {
    const Case c = random_pred_case(rng);
    const auto r = report_at(c.scores, c.labels, rng.uniform());
    EXPECT_GE(r.precision, 0.0);
    EXPECT_LE(r.precision, 1.0);
    EXPECT_LE(r.recall, 1.0);
    EXPECT_EQ(r.confusion.total(), static_cast<long>(c.scores.size()));
    if (r.precision + r.recall > 0) {
      EXPECT_DOUBLE_EQ(r.f1, 2 * r.precision * r.recall / (r.precision + r.recall));
    } else {
      EXPECT_EQ(r.f1, 0.0);
    }
  }
}

TEST(KFold, ExactCountsWhenDivisible) {
  std::vector<int> y(110, 0);
  for (int i = 0; i < 10; ++i) y[i * 11] = 1;
  const auto folds = stratified_kfold(y, 5, 3);
  ASSERT_EQ(folds.size(), 5u);
  std::vector<int> seen(y.size(), 0);
  for (const auto& f : folds) {
    long pos = 0;
    for (auto i : f.test) {
      pos += y[i];
      ++seen[i];
    }
    EXPECT_EQ(pos, 2);
    EXPECT_EQ(f.test.size(), 22u);
    EXPECT_EQ(f.train.size() + f.test.size(), y.size());
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(KFold, DeviationAndDeterminism) {
  Rng rng(16);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> y(20 + rng.index(300));
    for (auto& v : y) v = rng.uniform() < 0.1 ? 1 : 0;
    for (int i = 0; i < 5; ++i) y[i] = 1;
    for (int i = 5; i < 10; ++i) y[i] = 0;
    long total = 0;
    for (int v : y) total += v;
    const auto a = stratified_kfold(y, 5, t);
    const auto b = stratified_kfold(y, 5, t);
    for (std::size_t f = 0; f < 5; ++f) {
      EXPECT_EQ(a[f].test, b[f].test);
      long pos = 0;
      for (auto i : a[f].test) pos += y[i];
      EXPECT_LE(std::abs(double(pos) - double(total) / 5.0), 1.0);
    }
  }
}

TEST(KFold, TooFewPerClass) {
  std::vector<int> y{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  try {
    stratified_kfold(y, 5, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTooFewPerClass);
  }
}

TEST(Loco, OneSplitPerCityAndPurity) {
  std::vector<std::string> cities;
  for (int i = 0; i < 100; ++i) cities.push_back("c" + std::to_string(i % 5));
  const auto splits = leave_one_city_out(cities);
  ASSERT_EQ(splits.size(), 5u);
  std::vector<int> covered(cities.size(), 0);
  for (const auto& s : splits) {
    for (auto i : s.test) {
      EXPECT_EQ(cities[i], s.name);
      ++covered[i];
    }
    for (auto i : s.train) EXPECT_NE(cities[i], s.name);
  }
  for (int c : covered) EXPECT_EQ(c, 1);
  EXPECT_THROW(leave_one_city_out({"a", "a"}), Error);
}

TEST(Aggregate, HandStatistics) {
  std::vector<EvalReport> reports;
  for (double f : {0.88, 0.89, 0.89, 0.88, 0.89}) {
    EvalReport r;
    r.f1 = f;
    reports.push_back(r);
  }
  const auto agg = aggregate_folds(reports);
  EXPECT_NEAR(agg.at("f1").mean, 0.886, 1e-12);
  EXPECT_NEAR(agg.at("f1").std, std::sqrt(120e-6 / 4.0), 1e-12);
  EXPECT_EQ(format_pm(agg.at("f1")), "0.886 ± 0.005");
  EXPECT_EQ(agg.at("auroc").std, 0.0);
  std::swap(reports[0], reports[3]);
  std::swap(reports[1], reports[4]);
  EXPECT_NEAR(aggregate_folds(reports).at("f1").mean, 0.886, 1e-12);
}

TEST(Report, PredictionsCsv) {
  const std::vector<PredictionRecord> p{{"b1", "x", 0.25, 1}, {"b2", "y", 0.5, 0}};
  EXPECT_EQ(format_predictions_csv(p), "building_id,city,score,label\nb1,x,0.25,1\nb2,y,0.5,0\n");
}
