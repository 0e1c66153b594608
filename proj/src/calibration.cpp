#include "phrasemuf/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "phrasemuf/error.hpp"

namespace phrasemuf {

namespace {

void check_inputs(double p_max, std::span<const double> a_k, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InputError("temperature must be positive and finite");
  }
  if (a_k.empty()) throw InputError("confidence needs a non-empty score set");
  const double top = *std::max_element(a_k.begin(), a_k.end());
  if (p_max != top) throw InvariantError("p_max must equal the maximum of the score set");
}

}  // namespace

ConfidenceAndGradient confidence_with_gradient(double p_max, std::span<const double> a_k, double temperature) {
  check_inputs(p_max, a_k, temperature);
  double denom = 0.0;
  double weighted_gap = 0.0;  // sum w_i (p_i - p_max), always <= 0
  for (double p : a_k) {
    const double gap = p - p_max;
    const double w = std::exp(gap / temperature);
    denom += w;
    weighted_gap += w * gap;
  }
  const double conf = 1.0 / denom;
  return {conf, conf * (weighted_gap / denom) / (temperature * temperature)};
}

double confidence(double p_max, std::span<const double> a_k, double temperature) {
  check_inputs(p_max, a_k, temperature);
  double denom = 0.0;
  for (double p : a_k) denom += std::exp((p - p_max) / temperature);
  return 1.0 / denom;
}

double confidence(const ConfidenceInput& input) { return confidence(input.p_max, input.a_k, input.temperature); }

double confidence_gradient(double p_max, std::span<const double> a_k, double temperature) {
  return confidence_with_gradient(p_max, a_k, temperature).gradient;
}

double confidence_gradient(const ConfidenceInput& input) {
  return confidence_gradient(input.p_max, input.a_k, input.temperature);
}

std::size_t bin_of(double confidence, std::size_t bin_count) {
  const double n = static_cast<double>(bin_count);
  auto idx = static_cast<std::size_t>(std::min(std::floor(confidence * n), n - 1.0));
  // Correct for rounding in confidence * n against the exact edges i / N.
  if (idx > 0 && confidence < static_cast<double>(idx) / n) --idx;
  if (idx + 1 < bin_count && confidence >= static_cast<double>(idx + 1) / n) ++idx;
  return idx;
}

CalibrationBinSet bin_predictions(std::span<const LabeledPrediction> preds, std::size_t bin_count) {
  if (bin_count < 1) throw InputError("bin count must be at least 1");
  CalibrationBinSet set;
  set.bins.resize(bin_count);
  for (std::size_t i = 0; i < bin_count; ++i) {
    set.bins[i].lo = static_cast<double>(i) / static_cast<double>(bin_count);
    set.bins[i].hi = static_cast<double>(i + 1) / static_cast<double>(bin_count);
  }
  set.assignment.reserve(preds.size());
  for (const auto& p : preds) {
    if (!(p.confidence > 0.0 && p.confidence <= 1.0)) {
      throw InvariantError("confidence " + std::to_string(p.confidence) + " outside (0, 1]");
    }
    const auto b = bin_of(p.confidence, bin_count);
    auto& bin = set.bins[b];
    ++bin.count;
    bin.confidence_sum += p.confidence;
    if (p.correct) ++bin.correct;
    set.assignment.push_back(b);
  }
  return set;
}

double ece_squared(const CalibrationBinSet& bins) {
  if (bins.total() == 0) throw InputError("ECE is undefined for zero predictions");
  const double k = static_cast<double>(bins.total());
  double ece = 0.0;
  for (const auto& b : bins.bins) {
    if (b.count == 0) continue;
    const double gap = b.mean_confidence() - b.accuracy();
    ece += static_cast<double>(b.count) / k * gap * gap;
  }
  return ece;
}

double ece_absolute(const CalibrationBinSet& bins) {
  if (bins.total() == 0) throw InputError("ECE is undefined for zero predictions");
  const double k = static_cast<double>(bins.total());
  double ece = 0.0;
  for (const auto& b : bins.bins) {
    if (b.count == 0) continue;
    ece += static_cast<double>(b.count) / k * std::abs(b.mean_confidence() - b.accuracy());
  }
  return ece;
}

double ece_gradient(const CalibrationBinSet& bins, std::span<const LabeledPrediction> preds) {
  if (bins.total() != preds.size()) {
    throw InvariantError("bin set covers " + std::to_string(bins.total()) + " predictions, got " +
                         std::to_string(preds.size()));
  }
  if (preds.empty()) throw InputError("ECE gradient is undefined for zero predictions");
  std::vector<double> grad_sum(bins.bin_count(), 0.0);
  std::vector<std::size_t> seen(bins.bin_count(), 0);
  for (std::size_t j = 0; j < preds.size(); ++j) {
    const auto b = bins.assignment[j];
    if (b >= bins.bin_count()) throw InvariantError("prediction assigned to a nonexistent bin");
    grad_sum[b] += preds[j].conf_gradient;
    ++seen[b];
  }
  const double k = static_cast<double>(preds.size());
  double grad = 0.0;
  for (std::size_t i = 0; i < bins.bin_count(); ++i) {
    const auto& b = bins.bins[i];
    if (seen[i] != b.count) throw InvariantError("bin counts disagree with the prediction assignment");
    if (b.count == 0) continue;
    const double n = static_cast<double>(b.count);
    grad += n / k * (b.mean_confidence() - b.accuracy()) * (grad_sum[i] / n);
  }
  return 2.0 * grad;
}

std::vector<LabeledPrediction> label_predictions(std::span<const CalibrationSample> samples, double temperature) {
  std::vector<LabeledPrediction> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const auto cg = confidence_with_gradient(s.p_max, s.a_k, temperature);
    out.push_back({cg.confidence, s.correct, cg.gradient});
  }
  return out;
}

double ece_at(std::span<const CalibrationSample> samples, double temperature, std::size_t bin_count) {
  const auto labeled = label_predictions(samples, temperature);
  return ece_squared(bin_predictions(labeled, bin_count));
}

CalibrationResult calibrate_temperature(std::span<const CalibrationSample> samples,
                                        const CalibrationOptions& options) {
  if (samples.empty()) throw InputError("temperature calibration needs at least one labeled prediction");
  if (!(options.t0 > 0.0)) throw InputError("initial temperature must be positive");
  if (!(options.step >= 0.0)) throw InputError("step size must be non-negative");
  if (!(options.t_min > 0.0 && options.t_min <= options.t_max)) throw InputError("invalid temperature bounds");

  auto evaluate = [&](double t) {
    const auto labeled = label_predictions(samples, t);
    const auto bins = bin_predictions(labeled, options.bin_count);
    return CalibrationStep{t, ece_squared(bins), ece_gradient(bins, labeled)};
  };

  CalibrationResult result;
  auto current = evaluate(std::clamp(options.t0, options.t_min, options.t_max));
  result.trajectory.push_back(current);
  result.initial_ece = current.ece;
  result.temperature = current.temperature;
  result.ece = current.ece;

  for (std::size_t it = 0; it < options.max_iters; ++it) {
    const double next_t = std::clamp(current.temperature - options.step * current.gradient, options.t_min, options.t_max);
    const auto next = evaluate(next_t);
    result.trajectory.push_back(next);
    ++result.iterations;
    if (next.ece < result.ece) {
      result.ece = next.ece;
      result.temperature = next.temperature;
    }
    const bool converged = std::abs(next.ece - current.ece) < options.tolerance;
    current = next;
    if (converged) break;
  }
  return result;
}

std::vector<ReliabilityRow> reliability_report(const CalibrationBinSet& bins) {
  std::vector<ReliabilityRow> rows;
  rows.reserve(bins.bin_count());
  for (const auto& b : bins.bins) rows.push_back({b.lo, b.hi, b.count, b.mean_confidence(), b.accuracy()});
  return rows;
}

void write_reliability_csv(std::span<const ReliabilityRow> rows, std::ostream& out) {
  out << "bin_lo,bin_hi,count,mean_confidence,accuracy\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%zu,%.6f,%.6f\n", r.bin_lo, r.bin_hi, r.count, r.mean_confidence,
                  r.accuracy);
    out << buf;
  }
}

}  // namespace phrasemuf
