#include "phrasemuf/batch.hpp"

#include <algorithm>
#include <unordered_set>

#include "phrasemuf/error.hpp"
#include "phrasemuf/text.hpp"

namespace phrasemuf {

CandidateBatch build_batch(const Corpus& corpus, const QueryRecord& query, const Bm25Index& bm25, std::uint64_t seed,
                           const BatchConfig& config) {
  const std::size_t size = config.batch_size();
  if (corpus.size() < size) {
    throw InputError("corpus of " + std::to_string(corpus.size()) + " passages is smaller than the batch size " +
                     std::to_string(size));
  }
  if (bm25.doc_count() != corpus.size()) throw InvariantError("BM25 index does not match the corpus");
  const auto positive = corpus.ordinal_of(query.positive_passage_id);
  if (!positive) {
    throw InputError("query '" + query.id + "' references unknown passage '" + query.positive_passage_id + "'");
  }

  CandidateBatch batch;
  batch.query_id = query.id;
  batch.positive = query.positive_passage_id;
  batch.rng_seed = seed ^ fnv1a64(query.id);
  batch.hard_negatives = mine_hard_negatives(bm25, query, config.hard_negatives);

  std::unordered_set<std::size_t> taken{*positive};
  for (const auto& id : batch.hard_negatives) taken.insert(*corpus.ordinal_of(id));

  SplitMix64 rng(batch.rng_seed);
  batch.random_negatives.reserve(config.random_negatives);
  while (batch.random_negatives.size() < config.random_negatives) {
    const auto ord = static_cast<std::size_t>(rng.next_below(corpus.size()));
    if (taken.insert(ord).second) batch.random_negatives.push_back(corpus.at(ord).id);
  }

  batch.candidates.reserve(size);
  batch.candidates.push_back(batch.positive);
  batch.candidates.insert(batch.candidates.end(), batch.hard_negatives.begin(), batch.hard_negatives.end());
  batch.candidates.insert(batch.candidates.end(), batch.random_negatives.begin(), batch.random_negatives.end());
  for (std::size_t i = batch.candidates.size(); i > 1; --i) {
    std::swap(batch.candidates[i - 1], batch.candidates[rng.next_below(i)]);
  }
  return batch;
}

std::vector<CandidateBatch> build_batches(const Corpus& corpus, std::span<const QueryRecord> queries,
                                          const Bm25Index& bm25, std::uint64_t seed, const BatchConfig& config) {
  std::vector<CandidateBatch> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(build_batch(corpus, q, bm25, seed, config));
  return out;
}

void check_split(const EvalSplit& split) {
  if (split.queries.size() != split.batches.size()) throw InputError("queries and batches are not aligned");
  for (std::size_t i = 0; i < split.queries.size(); ++i) {
    if (split.queries[i].id != split.batches[i].query_id) {
      throw InputError("batch " + std::to_string(i) + " belongs to query '" + split.batches[i].query_id +
                       "', expected '" + split.queries[i].id + "'");
    }
  }
  if (!split.query_store) throw InputError("no query embeddings supplied");
  std::string missing;
  std::size_t n_missing = 0;
  for (const auto& q : split.queries) {
    if (!split.query_store->find(q.id)) {
      if (n_missing++ < 10) missing += " " + q.id;
    }
  }
  if (n_missing) {
    throw InputError("missing query embeddings for " + std::to_string(n_missing) + " query id(s):" + missing +
                     (n_missing > 10 ? " ..." : ""));
  }
}

std::span<const float> query_vector(const EmbeddingStore& store, std::string_view query_id) {
  const auto row = store.find(query_id);
  if (!row) throw InputError("missing query embedding for '" + std::string(query_id) + "'");
  return store.row(*row);
}

}  // namespace phrasemuf
