#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phrasemuf/batch.hpp"
#include "phrasemuf/bm25.hpp"
#include "phrasemuf/calibration.hpp"
#include "phrasemuf/fusion.hpp"
#include "phrasemuf/retrieval.hpp"

namespace phrasemuf {

/// With one gold passage and one prediction per query, precision, recall
/// and F1 all equal top-1 accuracy, so a single column carries both.
inline constexpr const char* kAccuracyMetric = "F1/acc@1";

/// One line of the report CSV: `dataset,model,metric,value,n_queries,seed`.
struct EvalRow {
  std::string dataset;
  std::string model;
  std::string metric = kAccuracyMetric;
  double value = 0.0;
  std::size_t n_queries = 0;
  std::uint64_t seed = 0;
};

/// Percentage of queries whose top-1 prediction is the gold passage.
double model_accuracy(const RetrievalModel& model, const EvalSplit& split);

EvalRow evaluate_model(const RetrievalModel& model, const EvalSplit& split);

struct MufOutcome {
  EvalRow row;
  std::vector<FusedPrediction> predictions;  // aligned with split.queries
};

MufOutcome evaluate_model(const ModelSet& models, const EvalSplit& split, const FusionOptions& options = {});

enum class Bm25Protocol {
  Batch,        // best BM25 score among the 30 candidates
  WholeCorpus,  // top-1 over the entire corpus
};

EvalRow evaluate_model(const Bm25Index& bm25, const EvalSplit& split, Bm25Protocol protocol);

/// Control: a model that picks a uniformly random candidate.
EvalRow evaluate_random_guess(std::span<const CandidateBatch> batches, std::uint64_t seed);

/// Held-out predictions of one model, ready for temperature calibration.
std::vector<CalibrationSample> collect_calibration_samples(const RetrievalModel& model, const EvalSplit& split);

/// Calibrates every active member on `calib` and stores its temperature.
std::vector<CalibrationResult> calibrate_models(ModelSet& models, const EvalSplit& calib,
                                                const CalibrationOptions& options);

struct SweepRow {
  double t0 = 0.0;
  std::optional<double> muf_accuracy;  // empty when calibration failed
  std::vector<double> temperatures;    // per active member
  std::string error;
};

/// For every t0: recalibrate each active model starting from t0 (all other
/// options fixed) and evaluate MUF. A failing grid point is reported in its
/// row and the sweep continues.
std::vector<SweepRow> sweep_t0(const ModelSet& models, std::span<const double> grid, const EvalSplit& calib,
                               const EvalSplit& eval, const CalibrationOptions& base);

inline constexpr double kDefaultT0Grid[] = {0.01, 0.1, 1.0, 10.0, 100.0};

struct EvalReport {
  std::string dataset;
  std::vector<EvalRow> rows;  // single models, MUF, BM25 (both protocols)
  std::optional<double> muf_minus_best_single;
  std::size_t k = 0;
  std::size_t bin_count = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> temperatures;  // per model label
  std::vector<std::string> active_models;
  std::string bm25_protocol_note;

  const EvalRow* find(const std::string& model) const;
};

/// Fills muf_minus_best_single from the MUF row and the single-model rows.
void compute_delta(EvalReport& report);

/// Report rows plus config echo rows (metric `temperature`, `k`, `bins`, ...)
/// and the `delta_vs_best_single` row, all in the report CSV dialect.
void write_report_csv(std::span<const EvalReport> reports, std::ostream& out);

/// Plain-text pivots: granularities (1, 3, 5, MUF) x datasets, and
/// BM25 / DPR / MUF x datasets.
std::string render_phrase_table(std::span<const EvalReport> reports);
std::string render_baseline_table(std::span<const EvalReport> reports);

/// `query_id,chosen_granularity,passage_id,confidence,correct` dump.
void write_fused_predictions_csv(const EvalSplit& split, std::span<const FusedPrediction> predictions,
                                 std::ostream& out);

}  // namespace phrasemuf
