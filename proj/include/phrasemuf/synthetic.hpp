#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "phrasemuf/corpus.hpp"

namespace phrasemuf {

/// Planted-signal dataset: every passage draws words from its own private
/// vocabulary, and each question copies `query_tokens` words from one
/// sentence of its gold passage. Gold passages therefore share every query
/// token and all other passages share none.
struct SyntheticConfig {
  std::size_t passages = 200;
  std::size_t queries = 50;
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 8;
  std::size_t words_per_sentence = 6;
  std::size_t query_tokens = 3;
  std::uint64_t seed = 7;
};

struct SyntheticDataset {
  Corpus corpus;
  std::vector<QueryRecord> queries;
};

SyntheticDataset make_planted_dataset(const SyntheticConfig& config = {});

}  // namespace phrasemuf
