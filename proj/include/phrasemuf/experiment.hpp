#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "phrasemuf/batch.hpp"
#include "phrasemuf/bm25.hpp"
#include "phrasemuf/calibration.hpp"
#include "phrasemuf/corpus.hpp"
#include "phrasemuf/eval.hpp"
#include "phrasemuf/fusion.hpp"

namespace phrasemuf {

enum class CalibSplit {
  Dev,   // calibrate on the dev split (also used for model ranking)
  Eval,  // calibrate on the evaluation queries themselves
};

struct ExperimentConfig {
  std::filesystem::path passages;
  std::filesystem::path queries;
  /// Holds `queries.phem` and `phrases_n<N>.phem` for every granularity.
  std::filesystem::path embeddings_dir;
  std::string dataset = "dataset";
  std::vector<std::size_t> granularities{1, 3, 5, 0};
  RetrievalConfig retrieval;
  std::uint64_t seed = 13;
  BatchConfig batch;
  Bm25Params bm25;
  CalibrationOptions calibration;
  double dev_fraction = 0.5;
  CalibSplit calib_split = CalibSplit::Dev;
  std::size_t keep = 3;
};

/// Everything loaded for one run. Splits point into `query_store`, so the
/// object is move-only.
struct Experiment {
  ExperimentConfig config;
  Corpus corpus;
  std::vector<QueryRecord> queries;
  Bm25Index bm25;
  std::unique_ptr<EmbeddingStore> query_store;
  ModelSet models;
  EvalSplit dev;
  EvalSplit eval;

  Experiment() = default;
  Experiment(Experiment&&) = default;
  Experiment& operator=(Experiment&&) = default;
};

std::filesystem::path query_store_path(const std::filesystem::path& dir);
std::filesystem::path phrase_store_path(const std::filesystem::path& dir, std::size_t granularity);

/// Loads corpus, queries, embeddings and builds phrase indexes, BM25, batches
/// and a seeded dev/eval split of the queries.
Experiment load_experiment(const ExperimentConfig& config);

struct ExperimentResult {
  EvalReport report;
  std::vector<FusedPrediction> fused;  // aligned with experiment.eval.queries
  std::vector<CalibrationResult> calibration;
};

/// Ranks models on dev, calibrates the active ones, evaluates every single
/// model, MUF and BM25 on the eval split.
ExperimentResult run_experiment(Experiment& experiment);

/// Writes `queries.phem` and `phrases_n<N>.phem` with the lexical test
/// embedder, the same layout load_experiment expects.
void write_test_embeddings(const Corpus& corpus, const std::vector<QueryRecord>& queries,
                           const std::vector<std::size_t>& granularities, std::size_t dim, std::uint64_t seed,
                           const std::filesystem::path& dir);

}  // namespace phrasemuf
