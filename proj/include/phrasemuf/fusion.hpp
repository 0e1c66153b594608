#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "phrasemuf/batch.hpp"
#include "phrasemuf/retrieval.hpp"

namespace phrasemuf {

/// Candidate models in canonical order (M1, M3, M5, M0 by default) plus the
/// subset that takes part in fusion. Canonical order is the tie-break order.
class ModelSet {
 public:
  ModelSet() = default;
  /// All members start active.
  explicit ModelSet(std::vector<RetrievalModel> members);

  const std::vector<RetrievalModel>& members() const noexcept { return members_; }
  std::vector<RetrievalModel>& members() noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }

  /// Indexes into members(), ascending.
  const std::vector<std::size_t>& active() const noexcept { return active_; }
  /// Throws InputError when empty, out of range or duplicated.
  void set_active(std::vector<std::size_t> active);

  const RetrievalModel* find(std::size_t granularity) const;

 private:
  std::vector<RetrievalModel> members_;
  std::vector<std::size_t> active_;
};

/// The `keep` members with the highest accuracy, ties to canonical order.
/// Sets with fewer than `keep` members keep everyone.
std::vector<std::size_t> select_top_models(std::span<const double> accuracies, std::size_t keep = 3);

/// Re-selects the active members: the `keep` best by top-1 accuracy on the
/// dev split (which must be disjoint from the evaluation split).
ModelSet rank_models(ModelSet models, const EvalSplit& dev, std::size_t keep = 3);

struct ModelVote {
  std::size_t member = 0;  // index into ModelSet::members()
  std::size_t granularity = 0;
  std::string passage_id;
  double confidence = 0.0;
};

struct FusedPrediction {
  std::string query_id;
  std::size_t chosen_member = 0;
  std::size_t chosen_granularity = 0;
  std::string passage_id;
  double confidence = 0.0;
  std::vector<ModelVote> per_model;  // active members, canonical order
};

struct FusionOptions {
  /// Reject models whose temperature was never set by calibration.
  bool strict = false;
  /// Order in which active members are run; empty means canonical. Only
  /// affects evaluation order, never the result.
  std::vector<std::size_t> evaluation_order;
};

/// Picks the prediction of the active model with the highest calibrated
/// confidence. Ties go to the member earliest in canonical order.
FusedPrediction muf_predict(const ModelSet& models, std::span<const float> query,
                            std::span<const std::string> candidates, const FusionOptions& options = {});

/// Winner-take-all over precomputed votes (canonical order tie-break).
std::size_t select_most_confident(std::span<const ModelVote> votes);

}  // namespace phrasemuf
