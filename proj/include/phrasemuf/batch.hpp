#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phrasemuf/bm25.hpp"
#include "phrasemuf/corpus.hpp"
#include "phrasemuf/embedding.hpp"

namespace phrasemuf {

/// 1 positive + 9 BM25 hard negatives + 20 random negatives = 30.
struct BatchConfig {
  std::size_t hard_negatives = 9;
  std::size_t random_negatives = 20;

  std::size_t batch_size() const noexcept { return 1 + hard_negatives + random_negatives; }
};

struct CandidateBatch {
  std::string query_id;
  std::string positive;
  std::vector<std::string> hard_negatives;
  std::vector<std::string> random_negatives;
  std::uint64_t rng_seed = 0;
  /// All candidates in a seeded random order; this is what models score, so
  /// candidate-order tie-breaks carry no positional bias.
  std::vector<std::string> candidates;

  std::size_t size() const noexcept { return candidates.size(); }
};

/// Deterministic for a given (corpus, query, seed). Throws InputError when
/// the corpus is smaller than the batch.
CandidateBatch build_batch(const Corpus& corpus, const QueryRecord& query, const Bm25Index& bm25, std::uint64_t seed,
                           const BatchConfig& config = {});

std::vector<CandidateBatch> build_batches(const Corpus& corpus, std::span<const QueryRecord> queries,
                                          const Bm25Index& bm25, std::uint64_t seed, const BatchConfig& config = {});

/// Queries with their aligned batches and the store holding query vectors.
struct EvalSplit {
  std::vector<QueryRecord> queries;
  std::vector<CandidateBatch> batches;
  const EmbeddingStore* query_store = nullptr;

  std::size_t size() const noexcept { return queries.size(); }
};

/// Throws InputError naming every query id without a vector, and on
/// misaligned queries/batches.
void check_split(const EvalSplit& split);

std::span<const float> query_vector(const EmbeddingStore& store, std::string_view query_id);

}  // namespace phrasemuf
