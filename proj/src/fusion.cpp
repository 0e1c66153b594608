#include "phrasemuf/fusion.hpp"

#include <algorithm>
#include <numeric>

#include "phrasemuf/calibration.hpp"
#include "phrasemuf/error.hpp"
#include "phrasemuf/eval.hpp"

namespace phrasemuf {

ModelSet::ModelSet(std::vector<RetrievalModel> members) : members_(std::move(members)) {
  active_.resize(members_.size());
  std::iota(active_.begin(), active_.end(), std::size_t{0});
}

void ModelSet::set_active(std::vector<std::size_t> active) {
  if (active.empty()) throw InputError("at least one model must be active");
  std::sort(active.begin(), active.end());
  if (std::adjacent_find(active.begin(), active.end()) != active.end()) {
    throw InputError("duplicate active model");
  }
  if (active.back() >= members_.size()) throw InputError("active model index out of range");
  active_ = std::move(active);
}

const RetrievalModel* ModelSet::find(std::size_t granularity) const {
  for (const auto& m : members_) {
    if (m.granularity() == granularity) return &m;
  }
  return nullptr;
}

std::vector<std::size_t> select_top_models(std::span<const double> accuracies, std::size_t keep) {
  std::vector<std::size_t> order(accuracies.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return accuracies[a] > accuracies[b]; });
  if (order.size() > keep) order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

ModelSet rank_models(ModelSet models, const EvalSplit& dev, std::size_t keep) {
  if (models.size() == 0) throw InputError("cannot rank an empty model set");
  std::vector<double> accuracies;
  accuracies.reserve(models.size());
  for (const auto& m : models.members()) accuracies.push_back(model_accuracy(m, dev));
  models.set_active(select_top_models(accuracies, keep));
  return models;
}

std::size_t select_most_confident(std::span<const ModelVote> votes) {
  if (votes.empty()) throw InputError("no model votes to fuse");
  std::size_t best = 0;
  for (std::size_t i = 1; i < votes.size(); ++i) {
    const auto& v = votes[i];
    const auto& b = votes[best];
    if (v.confidence > b.confidence || (v.confidence == b.confidence && v.member < b.member)) best = i;
  }
  return best;
}

FusedPrediction muf_predict(const ModelSet& models, std::span<const float> query,
                            std::span<const std::string> candidates, const FusionOptions& options) {
  if (candidates.empty()) throw InputError("fusion needs at least one candidate passage");
  const auto& active = models.active();
  if (active.empty()) throw InputError("model set has no active members");

  std::vector<std::size_t> order = options.evaluation_order.empty() ? active : options.evaluation_order;
  {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != active) throw InputError("evaluation order must be a permutation of the active models");
  }

  std::vector<ModelVote> votes;
  votes.reserve(order.size());
  for (auto member : order) {
    const auto& model = models.members()[member];
    if (options.strict && !model.calibrated()) {
      throw InputError("model " + model.label() + " has no calibrated temperature");
    }
    const auto pred = model.predict(query, candidates);
    votes.push_back({member, model.granularity(), pred.passage_id,
                     confidence(pred.p_max, pred.a_k, model.temperature())});
  }
  std::sort(votes.begin(), votes.end(), [](const ModelVote& a, const ModelVote& b) { return a.member < b.member; });

  const auto& winner = votes[select_most_confident(votes)];
  FusedPrediction fused;
  fused.chosen_member = winner.member;
  fused.chosen_granularity = winner.granularity;
  fused.passage_id = winner.passage_id;
  fused.confidence = winner.confidence;
  fused.per_model = std::move(votes);
  return fused;
}

}  // namespace phrasemuf
