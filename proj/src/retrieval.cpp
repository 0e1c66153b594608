#include "phrasemuf/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "phrasemuf/error.hpp"

namespace phrasemuf {

RetrievalModel::RetrievalModel(std::shared_ptr<const PhraseIndex> phrases,
                               std::shared_ptr<const EmbeddingStore> embeddings, RetrievalConfig config,
                               std::shared_ptr<const ScoreBackend> backend)
    : phrases_(std::move(phrases)),
      embeddings_(std::move(embeddings)),
      backend_(backend ? std::move(backend) : std::make_shared<BruteForceScan>()),
      config_(config) {
  if (!phrases_ || !embeddings_) throw InputError("retrieval model needs a phrase index and embeddings");
  if (config_.k == 0) throw InputError("top-k size must be positive");
  std::vector<std::string> missing;
  rows_.reserve(phrases_->passage_ids().size());
  for (const auto& pid : phrases_->passage_ids()) {
    std::vector<std::size_t> rows;
    for (const auto& ph : phrases_->phrases(pid)) {
      auto row = embeddings_->find(phrase_key(pid, ph.ordinal));
      if (!row && granularity() == 0) row = embeddings_->find(pid);
      if (!row) {
        missing.push_back(phrase_key(pid, ph.ordinal));
        continue;
      }
      rows.push_back(*row);
    }
    rows_.emplace(pid, std::move(rows));
  }
  if (!missing.empty()) {
    std::string msg = "missing phrase embeddings for " + std::to_string(missing.size()) + " phrase(s):";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
    if (missing.size() > 10) msg += " ...";
    throw InputError(msg);
  }
}

std::string RetrievalModel::label() const { return "M" + std::to_string(granularity()); }

void RetrievalModel::set_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InputError("temperature must be positive and finite");
  temperature_ = t;
  calibrated_ = true;
}

bool RetrievalModel::covers(std::string_view passage_id) const { return rows_.contains(std::string(passage_id)); }

const std::vector<std::size_t>& RetrievalModel::phrase_rows(std::string_view passage_id) const {
  auto it = rows_.find(std::string(passage_id));
  if (it == rows_.end()) throw InputError("unknown candidate passage '" + std::string(passage_id) + "'");
  return it->second;
}

void RetrievalModel::check_query(std::span<const float> query) const {
  if (query.size() != dim()) {
    throw InputError("query dimension " + std::to_string(query.size()) + " does not match model dimension " +
                     std::to_string(dim()));
  }
}

std::vector<PassageScore> RetrievalModel::score_passages(std::span<const float> query,
                                                         std::span<const std::string> candidates) const {
  check_query(query);
  std::vector<PassageScore> out;
  out.reserve(candidates.size());
  std::vector<double> scores;
  for (const auto& pid : candidates) {
    const auto& rows = phrase_rows(pid);
    scores.resize(rows.size());
    backend_->score_rows(query, *embeddings_, rows, scores);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] > scores[best]) best = i;
    }
    out.push_back({pid, scores[best], best});
  }
  return out;
}

ScoredPrediction RetrievalModel::predict(std::span<const float> query, std::span<const std::string> candidates) const {
  if (candidates.empty()) throw InputError("predict needs at least one candidate passage");
  check_query(query);

  std::vector<double> pool;
  std::vector<double> passage_max;
  passage_max.reserve(candidates.size());
  std::vector<double> scores;
  ScoredPrediction pred;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& rows = phrase_rows(candidates[c]);
    scores.resize(rows.size());
    backend_->score_rows(query, *embeddings_, rows, scores);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] > scores[best]) best = i;
    }
    if (c == 0 || scores[best] > pred.p_max) {
      pred.candidate_index = c;
      pred.best_phrase_ordinal = best;
      pred.p_max = scores[best];
    }
    passage_max.push_back(scores[best]);
    if (config_.ak_source == AkSource::Phrase) pool.insert(pool.end(), scores.begin(), scores.end());
  }
  pred.passage_id = candidates[pred.candidate_index];

  auto& support = config_.ak_source == AkSource::Phrase ? pool : passage_max;
  const std::size_t take = std::min(config_.k, support.size());
  std::partial_sort(support.begin(), support.begin() + static_cast<std::ptrdiff_t>(take), support.end(),
                    std::greater<>());
  pred.a_k.assign(support.begin(), support.begin() + static_cast<std::ptrdiff_t>(take));
  return pred;
}

}  // namespace phrasemuf
