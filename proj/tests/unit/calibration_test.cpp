#include "phrasemuf/calibration.hpp"

#include <cmath>
#include <gtest/gtest.h>
#include <sstream>

#include "oracles.hpp"
#include "test_util.hpp"
#include "phrasemuf/error.hpp"
#include "phrasemuf/text.hpp"

namespace phrasemuf {
namespace {

const std::vector<double> k210{2, 1, 0};

std::vector<double> random_scores(SplitMix64& rng, std::size_t max_n = 30, double spread = 5.0) {
  std::vector<double> a(1 + rng.next_below(max_n));
  for (auto& x : a) x = spread * rng.next_signed_unit();
  return a;
}

double top(const std::vector<double>& a) { return *std::max_element(a.begin(), a.end()); }

TEST(ConfidenceTest, WorkedExamples) {
  // 50-digit reference values.
  EXPECT_NEAR(confidence(2, k210, 1.0), 0.66524095577482189, 1e-15);
  EXPECT_NEAR(confidence(ConfidenceInput{2, k210, 1.0}), 0.665241, 1e-6);
  EXPECT_DOUBLE_EQ(confidence(0.5, std::vector<double>{0.5, 0.5, 0.5, 0.5}, 3.7), 0.25);
  EXPECT_NEAR(confidence(2, k210, 0.1), 0.99995460007033109, 1e-15);
}

TEST(ConfidenceTest, Errors) {
  EXPECT_THROW(confidence(2, k210, 0.0), InputError);
  EXPECT_THROW(confidence(2, k210, -1.0), InputError);
  EXPECT_THROW(confidence(2, std::vector<double>{}, 1.0), InputError);
  EXPECT_THROW(confidence(1, k210, 1.0), InvariantError);
}

TEST(ConfidenceTest, NoOverflowAtTinyTemperature) {
  const double c = confidence(900, std::vector<double>{900, 899, -50}, 1e-3);
  EXPECT_TRUE(std::isfinite(c));
  EXPECT_DOUBLE_EQ(c, 1.0);
}

TEST(ConfidenceTest, MatchesHighPrecisionOracle) {
  SplitMix64 rng(1);
  for (int i = 0; i < 500; ++i) {
    auto a = random_scores(rng);
    const double t = std::pow(10.0, 2.0 * rng.next_signed_unit());
    const double ref = oracle::softmax_confidence(a, t);
    ASSERT_NEAR(confidence(top(a), a, t), ref, 1e-9 * ref);
  }
}

TEST(ConfidenceTest, ShiftInvariance) {
  SplitMix64 rng(2);
  for (int i = 0; i < 300; ++i) {
    auto a = random_scores(rng);
    const double c = 10.0 * rng.next_signed_unit();
    auto shifted = a;
    for (auto& x : shifted) x += c;
    const double t = 0.5 + rng.next_below(100) / 10.0;
    ASSERT_NEAR(confidence(top(a), a, t), confidence(top(shifted), shifted, t), 1e-12);
  }
}

TEST(ConfidenceTest, HighTemperatureLimit) {
  SplitMix64 rng(3);
  for (int i = 0; i < 100; ++i) {
    auto a = random_scores(rng, 30, 1.0);
    ASSERT_NEAR(confidence(top(a), a, 1e9), 1.0 / static_cast<double>(a.size()), 1e-6);
  }
}

TEST(ConfidenceTest, ArgmaxUnchangedByTemperature) {
  // Softmax is strictly monotone in the score, so the most probable entry is
  // the same at every temperature.
  SplitMix64 rng(4);
  for (int i = 0; i < 200; ++i) {
    auto a = random_scores(rng);
    std::size_t expected = std::max_element(a.begin(), a.end()) - a.begin();
    for (double t : {0.01, 1.0, 100.0}) {
      std::vector<double> probs;
      double z = 0;
      for (double x : a) z += std::exp((x - top(a)) / t);
      for (double x : a) probs.push_back(std::exp((x - top(a)) / t) / z);
      ASSERT_EQ(static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin()), expected);
    }
  }
}

TEST(ConfidenceGradientTest, WorkedExamples) {
  // Central finite difference of the 50-digit confidence with h = 1e-6.
  EXPECT_NEAR(confidence_gradient(2, k210, 1.0), -0.28258745, 1e-8);
  EXPECT_EQ(confidence_gradient(0.5, std::vector<double>{0.5, 0.5, 0.5}, 2.0), 0.0);
  EXPECT_LT(confidence_gradient(ConfidenceInput{1, {1, 0.999}, 3.0}), 0.0);
}

TEST(ConfidenceGradientTest, MatchesCentralDifferences) {
  SplitMix64 rng(5);
  for (int i = 0; i < 500; ++i) {
    auto a = random_scores(rng);
    a.push_back(top(a) - 0.5);  // guarantees a non-uniform set
    const double t = 0.2 + 5.0 * (rng.next_signed_unit() + 1.0);
    const double g = confidence_gradient(top(a), a, t);
    const double fd = oracle::central_difference(
        [&](double tt) { return oracle::softmax_confidence(a, tt); }, t, 1e-6 * t);
    ASSERT_LT(g, 0.0);
    ASSERT_NEAR(g, fd, 1e-5 * std::abs(fd) + 1e-14);
  }
}

TEST(BinPredictionsTest, WorkedExample) {
  std::vector<LabeledPrediction> preds{{0.4, true}, {0.4, false}, {0.8, true}, {0.6, true}};
  auto bins = bin_predictions(preds, 2);
  ASSERT_EQ(bins.bin_count(), 2u);
  EXPECT_EQ(bins.total(), 4u);
  EXPECT_EQ(bins.bins[0].count, 2u);
  EXPECT_DOUBLE_EQ(bins.bins[0].mean_confidence(), 0.4);
  EXPECT_DOUBLE_EQ(bins.bins[0].accuracy(), 0.5);
  EXPECT_EQ(bins.bins[1].count, 2u);
  EXPECT_DOUBLE_EQ(bins.bins[1].mean_confidence(), 0.7);
  EXPECT_DOUBLE_EQ(bins.bins[1].accuracy(), 1.0);
}

TEST(BinPredictionsTest, EdgesAndErrors) {
  EXPECT_EQ(bin_of(1.0, 10), 9u);
  EXPECT_EQ(bin_of(0.1, 10), 1u);
  EXPECT_EQ(bin_of(0.3, 10), 3u);
  EXPECT_EQ(bin_of(0.7, 10), 7u);
  EXPECT_EQ(bin_of(std::nextafter(0.5, 0.0), 2), 0u);
  EXPECT_EQ(bin_of(0.5, 2), 1u);
  auto empty = bin_predictions({}, 4);
  EXPECT_EQ(empty.total(), 0u);
  for (const auto& b : empty.bins) EXPECT_EQ(b.count, 0u);
  EXPECT_THROW(bin_predictions({}, 0), InputError);
  EXPECT_THROW(bin_predictions(std::vector<LabeledPrediction>{{0.0, true}}, 2), InvariantError);
  EXPECT_THROW(bin_predictions(std::vector<LabeledPrediction>{{1.5, true}}, 2), InvariantError);
}

TEST(BinPredictionsTest, EveryBinHoldsItsRange) {
  SplitMix64 rng(6);
  std::vector<LabeledPrediction> preds;
  for (int i = 0; i < 2000; ++i) preds.push_back({(rng.next_below(1000) + 1) / 1000.0, rng.next_below(2) == 1});
  for (std::size_t n : {1u, 3u, 7u, 10u, 15u}) {
    auto bins = bin_predictions(preds, n);
    std::size_t total = 0;
    for (std::size_t j = 0; j < preds.size(); ++j) {
      const auto& b = bins.bins[bins.assignment[j]];
      ASSERT_GE(preds[j].confidence, b.lo);
      if (bins.assignment[j] + 1 < n) ASSERT_LT(preds[j].confidence, b.hi);
    }
    for (const auto& b : bins.bins) total += b.count;
    ASSERT_EQ(total, preds.size());
  }
}

TEST(EceTest, WorkedExample) {
  std::vector<LabeledPrediction> preds{{0.4, true}, {0.4, false}, {0.8, true}, {0.6, true}};
  EXPECT_NEAR(ece_squared(bin_predictions(preds, 2)), 0.050, 1e-15);
}

TEST(EceTest, Extremes) {
  std::vector<LabeledPrediction> calibrated{{0.25, true}, {0.25, false}, {0.25, false}, {0.25, false}};
  EXPECT_EQ(ece_squared(bin_predictions(calibrated, 4)), 0.0);
  EXPECT_EQ(ece_squared(bin_predictions(std::vector<LabeledPrediction>{{1.0, false}}, 1)), 1.0);
  EXPECT_THROW(ece_squared(bin_predictions({}, 3)), InputError);
}

TEST(EceTest, BoundedInUnitInterval) {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LabeledPrediction> preds(1 + rng.next_below(50));
    for (auto& p : preds) p = {(rng.next_below(1000) + 1) / 1000.0, rng.next_below(2) == 1};
    const double e = ece_squared(bin_predictions(preds, 1 + rng.next_below(20)));
    ASSERT_GE(e, 0.0);
    ASSERT_LE(e, 1.0);
    ASSERT_LE(e, ece_absolute(bin_predictions(preds, 1)) + 1.0);
  }
}

TEST(EceGradientTest, WorkedExamples) {
  std::vector<LabeledPrediction> one{{0.8, false, -0.2}};
  EXPECT_NEAR(ece_gradient(bin_predictions(one, 1), one), -0.32, 1e-15);

  std::vector<LabeledPrediction> calibrated{{0.5, true, -0.3}, {0.5, false, -0.1}};
  EXPECT_EQ(ece_gradient(bin_predictions(calibrated, 2), calibrated), 0.0);
}

TEST(EceGradientTest, InconsistentInputs) {
  std::vector<LabeledPrediction> preds{{0.8, false, -0.2}, {0.3, true, -0.1}};
  auto bins = bin_predictions(preds, 2);
  EXPECT_THROW(ece_gradient(bins, std::span(preds).first(1)), InvariantError);
  bins.bins[0].count = 5;
  EXPECT_THROW(ece_gradient(bins, preds), InvariantError);
}

std::vector<CalibrationSample> overconfident(std::size_t n, std::uint64_t seed) {
  return testutil::overconfident_set(n, seed);
}

TEST(EceGradientTest, MatchesFixedBinFiniteDifference) {
  // With bin membership frozen, the analytic gradient is the exact
  // derivative of the squared ECE.
  auto samples = overconfident(200, 8);
  for (double t : {0.3, 1.0, 2.0}) {
    auto labeled = label_predictions(samples, t);
    auto bins = bin_predictions(labeled, 10);
    auto frozen_ece = [&](double tt) {
      auto moved = label_predictions(samples, tt);
      auto b = bins;
      for (auto& bin : b.bins) {
        bin.confidence_sum = 0;
      }
      for (std::size_t j = 0; j < moved.size(); ++j) b.bins[b.assignment[j]].confidence_sum += moved[j].confidence;
      return ece_squared(b);
    };
    const double fd = oracle::central_difference(frozen_ece, t, 1e-6 * t);
    const double g = ece_gradient(bins, labeled);
    EXPECT_NEAR(g, fd, 1e-5 * std::abs(fd) + 1e-12) << "t=" << t;
  }
  // Overconfident: raising T lowers ECE, so the gradient is negative at small T.
  auto labeled = label_predictions(samples, 2.0);
  EXPECT_LT(ece_gradient(bin_predictions(labeled, 10), labeled), 0.0);
}

TEST(CalibrateTemperatureTest, OverconfidentSetMovesUp) {
  auto samples = overconfident(500, 9);
  const auto result = calibrate_temperature(samples, {});
  EXPECT_GT(result.temperature, 0.1);
  EXPECT_LT(result.ece, result.initial_ece);
  // Best decade from a coarse grid over 10^-2 .. 10^4.
  double best_t = 0, best_e = 2;
  for (int i = -2; i <= 4; ++i) {
    const double e = ece_at(samples, std::pow(10.0, i), 10);
    if (e < best_e) {
      best_e = e;
      best_t = std::pow(10.0, i);
    }
  }
  EXPECT_GE(result.temperature, best_t / 10.0);
  EXPECT_LE(result.temperature, best_t * 10.0);
}

TEST(CalibrateTemperatureTest, DegenerateCases) {
  auto samples = overconfident(50, 10);
  CalibrationOptions zero_step;
  zero_step.step = 0;
  const auto r = calibrate_temperature(samples, zero_step);
  EXPECT_EQ(r.temperature, 0.1);
  EXPECT_THROW(calibrate_temperature({}, {}), InputError);
  CalibrationOptions bad;
  bad.t0 = 0;
  EXPECT_THROW(calibrate_temperature(samples, bad), InputError);
}

TEST(CalibrateTemperatureTest, NeverWorseThanStart) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CalibrationSample> samples;
    for (int i = 0; i < 100; ++i) {
      auto a = random_scores(rng, 10, 2.0);
      const double c = confidence(top(a), a, 1.0);
      samples.push_back({top(a), a, (rng.next_below(1000) / 1000.0) < c});
    }
    CalibrationOptions opts;
    opts.t0 = 1.0;
    const auto r = calibrate_temperature(samples, opts);
    ASSERT_LE(r.ece, r.initial_ece);
    ASSERT_GE(r.temperature, opts.t_min);
    ASSERT_LE(r.temperature, opts.t_max);
  }
}

TEST(ReliabilityTest, RowsAndCsv) {
  std::vector<LabeledPrediction> preds{{0.4, true}, {0.4, false}, {0.8, true}, {0.6, true}};
  auto rows = reliability_report(bin_predictions(preds, 2));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].bin_lo, 0.0);
  EXPECT_EQ(rows[0].bin_hi, 0.5);
  EXPECT_EQ(rows[0].count, 2u);
  EXPECT_DOUBLE_EQ(rows[1].mean_confidence, 0.7);
  std::ostringstream os;
  write_reliability_csv(rows, os);
  EXPECT_EQ(os.str(),
            "bin_lo,bin_hi,count,mean_confidence,accuracy\n"
            "0.000000,0.500000,2,0.400000,0.500000\n"
            "0.500000,1.000000,2,0.700000,1.000000\n");

  auto empty_rows = reliability_report(bin_predictions({}, 3));
  for (const auto& r : empty_rows) {
    EXPECT_EQ(r.count, 0u);
    EXPECT_EQ(r.mean_confidence, 0.0);
    EXPECT_EQ(r.accuracy, 0.0);
  }
}

}  // namespace
}  // namespace phrasemuf
