#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phrasemuf/embedding.hpp"
#include "phrasemuf/segmenter.hpp"

namespace phrasemuf {

/// Which scores make up a prediction's top-k confidence support.
enum class AkSource {
  Phrase,   // top-k over every phrase score in the candidate pool
  Passage,  // top-k over per-passage maxima
};

struct RetrievalConfig {
  std::size_t k = 30;
  AkSource ak_source = AkSource::Phrase;
};

struct PassageScore {
  std::string passage_id;
  double score = 0.0;
  std::size_t best_phrase_ordinal = 0;
};

struct ScoredPrediction {
  std::string passage_id;
  std::size_t candidate_index = 0;
  std::size_t best_phrase_ordinal = 0;
  double p_max = 0.0;
  std::vector<double> a_k;  // descending; a_k.front() == p_max
};

/// Dense phrase retriever M_n: a passage scores the maximum normalized inner
/// product over its phrases. Granularity 0 is plain whole-passage retrieval.
class RetrievalModel {
 public:
  /// Phrase rows are looked up by phrase_key(passage_id, ordinal); in
  /// whole-passage mode a bare passage id is accepted as well. Throws
  /// InputError if any indexed phrase lacks a row.
  RetrievalModel(std::shared_ptr<const PhraseIndex> phrases, std::shared_ptr<const EmbeddingStore> embeddings,
                 RetrievalConfig config = {}, std::shared_ptr<const ScoreBackend> backend = nullptr);

  std::size_t granularity() const noexcept { return phrases_->granularity(); }
  /// "M1", "M3", "M0", ...
  std::string label() const;

  const PhraseIndex& phrase_index() const noexcept { return *phrases_; }
  const EmbeddingStore& embeddings() const noexcept { return *embeddings_; }
  const RetrievalConfig& config() const noexcept { return config_; }
  std::size_t dim() const noexcept { return embeddings_->dim(); }

  double temperature() const noexcept { return temperature_; }
  bool calibrated() const noexcept { return calibrated_; }
  /// Throws InputError unless t > 0 and finite.
  void set_temperature(double t);

  bool covers(std::string_view passage_id) const;
  const std::vector<std::size_t>& phrase_rows(std::string_view passage_id) const;

  std::vector<PassageScore> score_passages(std::span<const float> query, std::span<const std::string> candidates) const;

  /// Ties between passages go to the earlier candidate; within a passage to
  /// the lowest phrase ordinal.
  ScoredPrediction predict(std::span<const float> query, std::span<const std::string> candidates) const;

 private:
  void check_query(std::span<const float> query) const;

  std::shared_ptr<const PhraseIndex> phrases_;
  std::shared_ptr<const EmbeddingStore> embeddings_;
  std::shared_ptr<const ScoreBackend> backend_;
  RetrievalConfig config_;
  std::unordered_map<std::string, std::vector<std::size_t>> rows_;
  double temperature_ = 1.0;
  bool calibrated_ = false;
};

}  // namespace phrasemuf
