#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phrasemuf/corpus.hpp"

namespace phrasemuf {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  std::uint32_t ordinal = 0;
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

struct RankedPassage {
  std::string passage_id;
  std::size_t ordinal = 0;
  double score = 0.0;
};

/// Okapi BM25 over the shared tokenizer.
///
///   score(q, d) = sum over distinct query terms t of
///       idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
///   idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
///
/// The +1 inside the log keeps idf non-negative for very common terms.
class Bm25Index {
 public:
  const std::vector<Posting>* postings(std::string_view term) const;
  const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
  const std::vector<std::string>& passage_ids() const noexcept { return passage_ids_; }
  double avgdl() const noexcept { return avgdl_; }
  std::size_t doc_count() const noexcept { return doc_lengths_.size(); }
  std::size_t term_count() const noexcept { return postings_.size(); }
  const Bm25Params& params() const noexcept { return params_; }

  double idf(std::string_view term) const;

  /// Diagnostics line: "docs=<N> terms=<T> avgdl=<avgdl> k1=<k1> b=<b>".
  std::string stats_line() const;

  friend Bm25Index build_index(const Corpus& corpus, Bm25Params params);

 private:
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<std::string> passage_ids_;
  double avgdl_ = 0.0;
  Bm25Params params_;
};

/// Throws InputError on an empty corpus or out-of-range parameters.
Bm25Index build_index(const Corpus& corpus, Bm25Params params = {});

double bm25_score(const Bm25Index& index, std::string_view query, std::size_t passage_ordinal);

/// Scores for every passage in ordinal order.
std::vector<double> bm25_score_all(const Bm25Index& index, std::string_view query);

/// Best `k` passages by descending score, ties by ascending ordinal.
std::vector<RankedPassage> top_k(const Bm25Index& index, std::string_view query, std::size_t k);

/// The `count` best BM25 passages for the question, skipping the positive.
/// Throws InputError unless the corpus holds more than `count` passages.
std::vector<std::string> mine_hard_negatives(const Bm25Index& index, const QueryRecord& query, std::size_t count);

}  // namespace phrasemuf
