#include "phrasemuf/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "phrasemuf/error.hpp"
#include "phrasemuf/text.hpp"

namespace phrasemuf {

namespace {

double percent(std::size_t hits, std::size_t total) {
  return total ? 100.0 * static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double model_accuracy(const RetrievalModel& model, const EvalSplit& split) {
  check_split(split);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto pred = model.predict(query_vector(*split.query_store, split.queries[i].id), split.batches[i].candidates);
    if (pred.passage_id == split.queries[i].positive_passage_id) ++hits;
  }
  return percent(hits, split.size());
}

EvalRow evaluate_model(const RetrievalModel& model, const EvalSplit& split) {
  EvalRow row;
  row.model = model.label();
  row.value = model_accuracy(model, split);
  row.n_queries = split.size();
  return row;
}

MufOutcome evaluate_model(const ModelSet& models, const EvalSplit& split, const FusionOptions& options) {
  check_split(split);
  MufOutcome out;
  out.predictions.reserve(split.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& q = split.queries[i];
    auto fused = muf_predict(models, query_vector(*split.query_store, q.id), split.batches[i].candidates, options);
    fused.query_id = q.id;
    if (fused.passage_id == q.positive_passage_id) ++hits;
    out.predictions.push_back(std::move(fused));
  }
  out.row.model = "MUF";
  out.row.value = percent(hits, split.size());
  out.row.n_queries = split.size();
  return out;
}

EvalRow evaluate_model(const Bm25Index& bm25, const EvalSplit& split, Bm25Protocol protocol) {
  if (split.queries.size() != split.batches.size() && protocol == Bm25Protocol::Batch) {
    throw InputError("queries and batches are not aligned");
  }
  std::unordered_map<std::string_view, std::size_t> ordinals;
  if (protocol == Bm25Protocol::Batch) {
    for (std::size_t i = 0; i < bm25.passage_ids().size(); ++i) ordinals.emplace(bm25.passage_ids()[i], i);
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& q = split.queries[i];
    std::string predicted;
    if (protocol == Bm25Protocol::WholeCorpus) {
      const auto top = top_k(bm25, q.question, 1);
      if (!top.empty()) predicted = top.front().passage_id;
    } else {
      const auto scores = bm25_score_all(bm25, q.question);
      double best = 0.0;
      bool first = true;
      for (const auto& cand : split.batches[i].candidates) {
        const auto it = ordinals.find(cand);
        if (it == ordinals.end()) throw InputError("candidate '" + cand + "' is not in the BM25 index");
        const double s = scores[it->second];
        if (first || s > best) {
          best = s;
          predicted = cand;
          first = false;
        }
      }
    }
    if (predicted == q.positive_passage_id) ++hits;
  }
  EvalRow row;
  row.model = protocol == Bm25Protocol::Batch ? "BM25" : "BM25-corpus";
  row.value = percent(hits, split.size());
  row.n_queries = split.size();
  return row;
}

EvalRow evaluate_random_guess(std::span<const CandidateBatch> batches, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::size_t hits = 0;
  for (const auto& b : batches) {
    if (b.candidates.empty()) throw InputError("empty candidate batch for query '" + b.query_id + "'");
    if (b.candidates[rng.next_below(b.candidates.size())] == b.positive) ++hits;
  }
  EvalRow row;
  row.model = "random";
  row.value = percent(hits, batches.size());
  row.n_queries = batches.size();
  row.seed = seed;
  return row;
}

std::vector<CalibrationSample> collect_calibration_samples(const RetrievalModel& model, const EvalSplit& split) {
  check_split(split);
  std::vector<CalibrationSample> samples;
  samples.reserve(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& q = split.queries[i];
    auto pred = model.predict(query_vector(*split.query_store, q.id), split.batches[i].candidates);
    samples.push_back({pred.p_max, std::move(pred.a_k), pred.passage_id == q.positive_passage_id});
  }
  return samples;
}

std::vector<CalibrationResult> calibrate_models(ModelSet& models, const EvalSplit& calib,
                                                const CalibrationOptions& options) {
  std::vector<CalibrationResult> results;
  for (auto member : models.active()) {
    auto& model = models.members()[member];
    const auto samples = collect_calibration_samples(model, calib);
    results.push_back(calibrate_temperature(samples, options));
    model.set_temperature(results.back().temperature);
  }
  return results;
}

std::vector<SweepRow> sweep_t0(const ModelSet& models, std::span<const double> grid, const EvalSplit& calib,
                               const EvalSplit& eval, const CalibrationOptions& base) {
  if (grid.empty()) throw InputError("t0 grid must not be empty");
  // Held-out predictions do not depend on t0; collect them once.
  std::vector<std::vector<CalibrationSample>> samples;
  for (auto member : models.active()) {
    samples.push_back(collect_calibration_samples(models.members()[member], calib));
  }
  std::vector<SweepRow> rows;
  for (double t0 : grid) {
    SweepRow row;
    row.t0 = t0;
    try {
      ModelSet local = models;
      auto options = base;
      options.t0 = t0;
      for (std::size_t a = 0; a < local.active().size(); ++a) {
        const auto result = calibrate_temperature(samples[a], options);
        local.members()[local.active()[a]].set_temperature(result.temperature);
        row.temperatures.push_back(result.temperature);
      }
      row.muf_accuracy = evaluate_model(local, eval).row.value;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

const EvalRow* EvalReport::find(const std::string& model) const {
  for (const auto& r : rows) {
    if (r.model == model) return &r;
  }
  return nullptr;
}

void compute_delta(EvalReport& report) {
  const auto* muf = report.find("MUF");
  std::optional<double> best;
  for (const auto& r : report.rows) {
    if (r.model.size() > 1 && r.model[0] == 'M' && r.model != "MUF") {
      best = best ? std::max(*best, r.value) : r.value;
    }
  }
  if (muf && best) {
    report.muf_minus_best_single = muf->value - *best;
  } else {
    report.muf_minus_best_single.reset();
  }
}

void write_report_csv(std::span<const EvalReport> reports, std::ostream& out) {
  out << "dataset,model,metric,value,n_queries,seed\n";
  for (const auto& rep : reports) {
    auto line = [&](const std::string& model, const std::string& metric, const std::string& value,
                    std::size_t n) {
      out << rep.dataset << ',' << model << ',' << metric << ',' << value << ',' << n << ',' << rep.seed << '\n';
    };
    for (const auto& r : rep.rows) line(r.model, r.metric, fixed(r.value, 2), r.n_queries);
    const std::size_t n = rep.rows.empty() ? 0 : rep.rows.front().n_queries;
    if (rep.muf_minus_best_single) line("MUF", "delta_vs_best_single", fixed(*rep.muf_minus_best_single, 2), n);
    for (const auto& [label, t] : rep.temperatures) line(label, "temperature", fixed(t, 6), n);
    for (const auto& label : rep.active_models) line(label, "active", "1", n);
    line("config", "k", std::to_string(rep.k), n);
    line("config", "bins", std::to_string(rep.bin_count), n);
  }
}

namespace {

std::string pivot(std::span<const EvalReport> reports, const std::vector<std::pair<std::string, std::string>>& rows,
                  const std::string& corner) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s", corner.c_str());
  os << buf;
  for (const auto& rep : reports) {
    std::snprintf(buf, sizeof buf, " | %10s", rep.dataset.c_str());
    os << buf;
  }
  os << '\n';
  for (const auto& [title, model] : rows) {
    std::snprintf(buf, sizeof buf, "%-10s", title.c_str());
    os << buf;
    for (const auto& rep : reports) {
      const auto* r = rep.find(model);
      std::snprintf(buf, sizeof buf, " | %10s", r ? fixed(r->value, 1).c_str() : "-");
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace

std::string render_phrase_table(std::span<const EvalReport> reports) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::map<std::size_t, bool> grans;
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      if (r.model.size() > 1 && r.model[0] == 'M' && r.model != "MUF" && r.model != "M0") {
        grans[std::stoul(r.model.substr(1))] = true;
      }
    }
  }
  for (const auto& [g, _] : grans) rows.emplace_back(std::to_string(g), "M" + std::to_string(g));
  rows.emplace_back("MUF", "MUF");
  std::string table = pivot(reports, rows, "sentences");
  for (const auto& rep : reports) {
    if (rep.muf_minus_best_single) {
      table += rep.dataset + ": MUF - best single = " + (*rep.muf_minus_best_single >= 0 ? "+" : "") +
               fixed(*rep.muf_minus_best_single, 1) + "\n";
    }
  }
  return table;
}

std::string render_baseline_table(std::span<const EvalReport> reports) {
  return pivot(reports, {{"BM25", "BM25"}, {"DPR", "M0"}, {"MUF", "MUF"}}, "");
}

void write_fused_predictions_csv(const EvalSplit& split, std::span<const FusedPrediction> predictions,
                                 std::ostream& out) {
  if (predictions.size() != split.queries.size()) throw InputError("predictions are not aligned with queries");
  out << "query_id,chosen_granularity,passage_id,confidence,correct\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    out << split.queries[i].id << ',' << p.chosen_granularity << ',' << p.passage_id << ',' << fixed(p.confidence, 6)
        << ',' << (p.passage_id == split.queries[i].positive_passage_id ? 1 : 0) << '\n';
  }
}

}  // namespace phrasemuf
