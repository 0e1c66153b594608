#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace phrasemuf {

/// Softmax confidence inputs for one prediction: the winning score and the
/// top-k score set it was drawn from (p_max must equal max(a_k)).
struct ConfidenceInput {
  double p_max = 0.0;
  std::vector<double> a_k;
  double temperature = 1.0;
};

/// exp(p_max/T) / sum_{p in a_k} exp(p/T), evaluated with the max-shift
/// exp((p - p_max)/T) so no term can overflow. Result lies in (0, 1].
double confidence(double p_max, std::span<const double> a_k, double temperature);
double confidence(const ConfidenceInput& input);

/// d confidence / dT = C * (mean_w(a_k) - p_max) / T^2 where mean_w is the
/// softmax-weighted mean. Never positive.
double confidence_gradient(double p_max, std::span<const double> a_k, double temperature);
double confidence_gradient(const ConfidenceInput& input);

struct ConfidenceAndGradient {
  double confidence = 0.0;
  double gradient = 0.0;
};
ConfidenceAndGradient confidence_with_gradient(double p_max, std::span<const double> a_k, double temperature);

struct LabeledPrediction {
  double confidence = 0.0;
  bool correct = false;
  double conf_gradient = 0.0;
};

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::size_t correct = 0;
  double confidence_sum = 0.0;

  double mean_confidence() const noexcept { return count ? confidence_sum / static_cast<double>(count) : 0.0; }
  double accuracy() const noexcept {
    return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0;
  }
};

/// Bin i (0-based) holds confidences in [i/N, (i+1)/N); the last bin also
/// takes 1.0. `assignment[j]` is the bin of prediction j.
struct CalibrationBinSet {
  std::vector<CalibrationBin> bins;
  std::vector<std::size_t> assignment;

  std::size_t bin_count() const noexcept { return bins.size(); }
  std::size_t total() const noexcept { return assignment.size(); }
};

std::size_t bin_of(double confidence, std::size_t bin_count);

/// Throws InputError for bin_count < 1 and InvariantError for a confidence
/// outside (0, 1].
CalibrationBinSet bin_predictions(std::span<const LabeledPrediction> preds, std::size_t bin_count);

/// sum_i (|B_i| / K) (conf(B_i) - acc(B_i))^2. Throws InputError when K = 0.
double ece_squared(const CalibrationBinSet& bins);

/// The absolute-gap ECE, for reliability diagnostics only.
double ece_absolute(const CalibrationBinSet& bins);

/// 2 sum_i (|B_i| / K) (conf(B_i) - acc(B_i)) * mean_{j in B_i} g_j, with bin
/// membership held fixed. Empty bins are skipped.
double ece_gradient(const CalibrationBinSet& bins, std::span<const LabeledPrediction> preds);

/// One held-out prediction: its confidence support and whether it was right.
struct CalibrationSample {
  double p_max = 0.0;
  std::vector<double> a_k;
  bool correct = false;
};

struct CalibrationOptions {
  double t0 = 0.1;
  double step = 1e2;
  std::size_t max_iters = 100;
  std::size_t bin_count = 10;
  double t_min = 1e-3;
  double t_max = 1e6;
  double tolerance = 1e-10;
};

struct CalibrationStep {
  double temperature = 0.0;
  double ece = 0.0;
  double gradient = 0.0;
};

struct CalibrationResult {
  double temperature = 0.0;  // lowest-ECE temperature seen
  double ece = 0.0;
  double initial_ece = 0.0;
  std::size_t iterations = 0;
  std::vector<CalibrationStep> trajectory;
};

/// Confidences and their T-gradients for every sample at one temperature.
std::vector<LabeledPrediction> label_predictions(std::span<const CalibrationSample> samples, double temperature);

/// ECE of the samples at temperature T (full rebinning).
double ece_at(std::span<const CalibrationSample> samples, double temperature, std::size_t bin_count);

/// Gradient descent on the squared ECE: T <- clamp(T - step * dECE/dT),
/// recomputing confidences, gradients and bins every iteration. Stops after
/// max_iters or once |delta ECE| < tolerance, and returns the best T seen.
CalibrationResult calibrate_temperature(std::span<const CalibrationSample> samples,
                                        const CalibrationOptions& options = {});

struct ReliabilityRow {
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

std::vector<ReliabilityRow> reliability_report(const CalibrationBinSet& bins);

/// Header `bin_lo,bin_hi,count,mean_confidence,accuracy`, reals as %.6f.
void write_reliability_csv(std::span<const ReliabilityRow> rows, std::ostream& out);

}  // namespace phrasemuf
