#include "phrasemuf/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "phrasemuf/error.hpp"
#include "phrasemuf/text.hpp"

namespace phrasemuf {

namespace {

std::vector<std::string> distinct_terms(std::string_view query) {
  std::vector<std::string> terms;
  std::unordered_set<std::string> seen;
  for (auto& t : tokenize(query)) {
    if (seen.insert(t).second) terms.push_back(std::move(t));
  }
  return terms;
}

double term_weight(const Bm25Params& p, double idf, double tf, double doc_len, double avgdl) {
  const double norm = avgdl > 0.0 ? doc_len / avgdl : 0.0;
  return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

}  // namespace

const std::vector<Posting>* Bm25Index::postings(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? nullptr : &it->second;
}

double Bm25Index::idf(std::string_view term) const {
  const auto* list = postings(term);
  const double df = list ? static_cast<double>(list->size()) : 0.0;
  const double n = static_cast<double>(doc_count());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::string Bm25Index::stats_line() const {
  std::ostringstream os;
  os << "docs=" << doc_count() << " terms=" << term_count() << " avgdl=" << avgdl_ << " k1=" << params_.k1
     << " b=" << params_.b;
  return os.str();
}

Bm25Index build_index(const Corpus& corpus, Bm25Params params) {
  if (corpus.empty()) throw InputError("cannot build a BM25 index over an empty corpus");
  if (!(params.k1 >= 0.0) || !(params.b >= 0.0 && params.b <= 1.0)) {
    throw InputError("BM25 parameters out of range (need k1 >= 0, 0 <= b <= 1)");
  }
  Bm25Index index;
  index.params_ = params;
  index.doc_lengths_.reserve(corpus.size());
  std::uint64_t total = 0;
  for (std::size_t ord = 0; ord < corpus.size(); ++ord) {
    const auto& passage = corpus.at(ord);
    const auto tokens = tokenize(passage.text);
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    index.passage_ids_.push_back(passage.id);
    total += tokens.size();
    for (const auto& tok : tokens) {
      auto& list = index.postings_[tok];
      if (list.empty() || list.back().ordinal != ord) {
        list.push_back({static_cast<std::uint32_t>(ord), 1});
      } else {
        ++list.back().tf;
      }
    }
  }
  index.avgdl_ = static_cast<double>(total) / static_cast<double>(corpus.size());
  return index;
}

double bm25_score(const Bm25Index& index, std::string_view query, std::size_t passage_ordinal) {
  if (passage_ordinal >= index.doc_count()) {
    throw InputError("passage ordinal " + std::to_string(passage_ordinal) + " out of range");
  }
  const double len = index.doc_lengths()[passage_ordinal];
  double score = 0.0;
  for (const auto& term : distinct_terms(query)) {
    const auto* list = index.postings(term);
    if (!list) continue;
    auto it = std::lower_bound(list->begin(), list->end(), passage_ordinal,
                               [](const Posting& p, std::size_t ord) { return p.ordinal < ord; });
    if (it == list->end() || it->ordinal != passage_ordinal) continue;
    score += term_weight(index.params(), index.idf(term), it->tf, len, index.avgdl());
  }
  return score;
}

std::vector<double> bm25_score_all(const Bm25Index& index, std::string_view query) {
  std::vector<double> scores(index.doc_count(), 0.0);
  // Same per-term accumulation order as bm25_score, so results agree bitwise.
  for (const auto& term : distinct_terms(query)) {
    const auto* list = index.postings(term);
    if (!list) continue;
    const double idf = index.idf(term);
    for (const auto& p : *list) {
      scores[p.ordinal] += term_weight(index.params(), idf, p.tf, index.doc_lengths()[p.ordinal], index.avgdl());
    }
  }
  return scores;
}

std::vector<RankedPassage> top_k(const Bm25Index& index, std::string_view query, std::size_t k) {
  const auto scores = bm25_score_all(index, query);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  std::vector<RankedPassage> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({index.passage_ids()[order[i]], order[i], scores[order[i]]});
  }
  return out;
}

std::vector<std::string> mine_hard_negatives(const Bm25Index& index, const QueryRecord& query, std::size_t count) {
  if (index.doc_count() <= count) {
    throw InputError("corpus of " + std::to_string(index.doc_count()) + " passages is too small to mine " +
                     std::to_string(count) + " hard negatives");
  }
  std::vector<std::string> negatives;
  negatives.reserve(count);
  for (auto& r : top_k(index, query.question, count + 1)) {
    if (r.passage_id == query.positive_passage_id) continue;
    if (negatives.size() == count) break;
    negatives.push_back(std::move(r.passage_id));
  }
  return negatives;
}

}  // namespace phrasemuf
