#include "phrasemuf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phrasemuf/embedding.hpp"
#include "phrasemuf/error.hpp"
#include "phrasemuf/segmenter.hpp"
#include "phrasemuf/text.hpp"

namespace phrasemuf {

namespace {

EvalSplit make_split(const std::vector<QueryRecord>& queries, const std::vector<CandidateBatch>& batches,
                     const std::vector<std::size_t>& picks, const EmbeddingStore* store) {
  EvalSplit split;
  split.query_store = store;
  for (auto i : picks) {
    split.queries.push_back(queries[i]);
    split.batches.push_back(batches[i]);
  }
  return split;
}

}  // namespace

std::filesystem::path query_store_path(const std::filesystem::path& dir) { return dir / "queries.phem"; }

std::filesystem::path phrase_store_path(const std::filesystem::path& dir, std::size_t granularity) {
  return dir / ("phrases_n" + std::to_string(granularity) + ".phem");
}

Experiment load_experiment(const ExperimentConfig& config) {
  if (config.granularities.empty()) throw InputError("at least one granularity is required");
  if (!(config.dev_fraction >= 0.0 && config.dev_fraction < 1.0)) {
    throw InputError("dev fraction must lie in [0, 1)");
  }
  Experiment ex;
  ex.config = config;
  ex.corpus = load_passages(config.passages);
  if (ex.corpus.empty()) throw InputError("passage file " + config.passages.string() + " is empty");
  ex.queries = load_queries(config.queries, ex.corpus);
  if (ex.queries.empty()) throw InputError("query file " + config.queries.string() + " is empty");
  ex.bm25 = build_index(ex.corpus, config.bm25);
  ex.query_store = std::make_unique<EmbeddingStore>(read_store(query_store_path(config.embeddings_dir)));

  std::vector<RetrievalModel> members;
  for (auto g : config.granularities) {
    auto index = std::make_shared<const PhraseIndex>(build_phrase_index(ex.corpus, g));
    auto store = std::make_shared<const EmbeddingStore>(read_store(phrase_store_path(config.embeddings_dir, g)));
    if (store->dim() != ex.query_store->dim()) {
      throw InputError("phrase embeddings for granularity " + std::to_string(g) + " have dimension " +
                       std::to_string(store->dim()) + ", queries have " + std::to_string(ex.query_store->dim()));
    }
    members.emplace_back(std::move(index), std::move(store), config.retrieval);
  }
  ex.models = ModelSet(std::move(members));

  const auto batches = build_batches(ex.corpus, ex.queries, ex.bm25, config.seed, config.batch);

  std::vector<std::size_t> order(ex.queries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(config.seed ^ 0x5d1f7a2c3b9e4d61ULL);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.next_below(i)]);
  const auto n_dev = static_cast<std::size_t>(std::floor(config.dev_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> dev(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_dev));
  std::vector<std::size_t> eval(order.begin() + static_cast<std::ptrdiff_t>(n_dev), order.end());
  std::sort(dev.begin(), dev.end());
  std::sort(eval.begin(), eval.end());
  ex.dev = make_split(ex.queries, batches, dev, ex.query_store.get());
  ex.eval = make_split(ex.queries, batches, eval, ex.query_store.get());
  check_split(ex.dev);
  check_split(ex.eval);
  return ex;
}

ExperimentResult run_experiment(Experiment& ex) {
  const auto& cfg = ex.config;
  if (ex.eval.size() == 0) throw InputError("evaluation split is empty");
  if (ex.dev.size() > 0) {
    ex.models = rank_models(std::move(ex.models), ex.dev, cfg.keep);
  } else if (ex.models.size() > cfg.keep) {
    throw InputError("ranking " + std::to_string(ex.models.size()) + " models needs a non-empty dev split");
  }

  const EvalSplit* calib = &ex.dev;
  if (cfg.calib_split == CalibSplit::Eval) calib = &ex.eval;
  if (calib->size() == 0) throw InputError("calibration split is empty (dev fraction 0 needs --calib-split eval)");

  ExperimentResult result;
  result.calibration = calibrate_models(ex.models, *calib, cfg.calibration);

  auto& report = result.report;
  report.dataset = cfg.dataset;
  report.seed = cfg.seed;
  report.k = cfg.retrieval.k;
  report.bin_count = cfg.calibration.bin_count;
  for (const auto& m : ex.models.members()) report.rows.push_back(evaluate_model(m, ex.eval));
  auto muf = evaluate_model(ex.models, ex.eval);
  report.rows.push_back(muf.row);
  result.fused = std::move(muf.predictions);
  report.rows.push_back(evaluate_model(ex.bm25, ex.eval, Bm25Protocol::Batch));
  report.rows.push_back(evaluate_model(ex.bm25, ex.eval, Bm25Protocol::WholeCorpus));
  report.bm25_protocol_note = "BM25 = best of the candidate batch; BM25-corpus = top-1 over the whole corpus";
  for (auto& r : report.rows) {
    r.dataset = cfg.dataset;
    r.seed = cfg.seed;
  }
  for (auto a : ex.models.active()) {
    const auto& m = ex.models.members()[a];
    report.temperatures.emplace_back(m.label(), m.temperature());
    report.active_models.push_back(m.label());
  }
  compute_delta(report);
  return result;
}

void write_test_embeddings(const Corpus& corpus, const std::vector<QueryRecord>& queries,
                           const std::vector<std::size_t>& granularities, std::size_t dim, std::uint64_t seed,
                           const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  EmbeddingStore qstore(dim);
  for (const auto& q : queries) qstore.add(q.id, test_embed(q.question, dim, seed));
  write_store(qstore, query_store_path(dir));
  for (auto g : granularities) {
    const auto index = build_phrase_index(corpus, g);
    EmbeddingStore store(dim);
    for (const auto& pid : index.passage_ids()) {
      for (const auto& ph : index.phrases(pid)) store.add(phrase_key(pid, ph.ordinal), test_embed(ph.text, dim, seed));
    }
    write_store(store, phrase_store_path(dir, g));
  }
}

}  // namespace phrasemuf
