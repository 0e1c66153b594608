// phrasemuf: command-line front end for segmentation, test embeddings, BM25,
// temperature calibration and the evaluation protocol.
//
// Exit codes: 0 success, 1 input error, 2 invariant violation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "phrasemuf/bm25.hpp"
#include "phrasemuf/calibration.hpp"
#include "phrasemuf/corpus.hpp"
#include "phrasemuf/embedding.hpp"
#include "phrasemuf/error.hpp"
#include "phrasemuf/experiment.hpp"
#include "phrasemuf/segmenter.hpp"
#include "phrasemuf/synthetic.hpp"

namespace pm = phrasemuf;
using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pm::InputError("cannot write " + path);
  return out;
}

std::vector<pm::CalibrationSample> read_preds(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pm::InputError("cannot open " + path);
  std::vector<pm::CalibrationSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto rec = json::parse(line);
      pm::CalibrationSample s;
      s.a_k = rec.at("scores").get<std::vector<double>>();
      if (s.a_k.empty()) throw pm::InputError("empty score list");
      s.p_max = *std::max_element(s.a_k.begin(), s.a_k.end());
      s.correct = rec.at("correct").get<bool>();
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw pm::InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const pm::InputError& e) {
      throw pm::InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

void write_preds(const std::vector<pm::CalibrationSample>& samples, const std::string& path) {
  auto out = open_out(path);
  for (const auto& s : samples) out << json{{"scores", s.a_k}, {"correct", s.correct}}.dump() << '\n';
}

std::vector<std::size_t> parse_granularities(const std::string& list) {
  std::vector<std::size_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stoul(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw pm::InputError("bad granularity '" + item + "' in --models");
    }
  }
  if (out.empty()) throw pm::InputError("--models is empty");
  return out;
}

struct EvalOptions {
  std::string passages, queries, embeddings, out, dataset = "dataset", models = "1,3,5,0";
  std::string calib_split = "dev", ak = "phrase", predictions, preds_dir;
  std::size_t k = 30, hard_negatives = 9, random_negatives = 20, bins = 10, iters = 100, keep = 3;
  std::uint64_t seed = 13;
  double t0 = 0.1, step = 1e2, dev_fraction = 0.5;
};

void add_eval_options(CLI::App* cmd, EvalOptions& o) {
  cmd->add_option("--passages", o.passages, "passages.jsonl")->required();
  cmd->add_option("--queries", o.queries, "queries.jsonl")->required();
  cmd->add_option("--embeddings", o.embeddings, "directory with queries.phem and phrases_n<N>.phem")->required();
  cmd->add_option("--models", o.models, "comma-separated granularities, canonical order");
  cmd->add_option("--k", o.k, "size of the top-k confidence support");
  cmd->add_option("--ak", o.ak, "top-k support: phrase or passage")->check(CLI::IsMember({"phrase", "passage"}));
  cmd->add_option("--seed", o.seed, "batch sampling / split seed");
  cmd->add_option("--dataset", o.dataset, "dataset tag for the report");
  cmd->add_option("--hard-negatives", o.hard_negatives, "BM25 hard negatives per batch");
  cmd->add_option("--random-negatives", o.random_negatives, "random negatives per batch");
  cmd->add_option("--dev-fraction", o.dev_fraction, "share of queries held out for ranking/calibration");
  cmd->add_option("--calib-split", o.calib_split, "calibrate on dev or eval queries")
      ->check(CLI::IsMember({"dev", "eval"}));
  cmd->add_option("--keep", o.keep, "number of models fused");
  cmd->add_option("--t0", o.t0, "initial temperature");
  cmd->add_option("--step", o.step, "gradient step size");
  cmd->add_option("--iters", o.iters, "max descent iterations");
  cmd->add_option("--bins", o.bins, "calibration bins");
  cmd->add_option("--out", o.out, "report CSV path");
}

pm::ExperimentConfig to_config(const EvalOptions& o) {
  pm::ExperimentConfig cfg;
  cfg.passages = o.passages;
  cfg.queries = o.queries;
  cfg.embeddings_dir = o.embeddings;
  cfg.dataset = o.dataset;
  cfg.granularities = parse_granularities(o.models);
  cfg.retrieval.k = o.k;
  cfg.retrieval.ak_source = o.ak == "passage" ? pm::AkSource::Passage : pm::AkSource::Phrase;
  cfg.seed = o.seed;
  cfg.batch = {o.hard_negatives, o.random_negatives};
  cfg.dev_fraction = o.dev_fraction;
  cfg.calib_split = o.calib_split == "eval" ? pm::CalibSplit::Eval : pm::CalibSplit::Dev;
  cfg.keep = o.keep;
  cfg.calibration.t0 = o.t0;
  cfg.calibration.step = o.step;
  cfg.calibration.max_iters = o.iters;
  cfg.calibration.bin_count = o.bins;
  return cfg;
}

void emit_report(pm::EvalReport report, bool with_fusion, const std::string& out_path) {
  if (!with_fusion) {
    std::erase_if(report.rows, [](const pm::EvalRow& r) { return r.model == "MUF"; });
    report.muf_minus_best_single.reset();
  }
  const std::vector<pm::EvalReport> reports{report};
  std::cout << pm::render_phrase_table(reports) << '\n' << pm::render_baseline_table(reports);
  std::cout << report.bm25_protocol_note << '\n';
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    pm::write_report_csv(reports, out);
  } else {
    pm::write_report_csv(reports, std::cout);
  }
}

int run_eval(const EvalOptions& o, bool with_fusion) {
  auto ex = pm::load_experiment(to_config(o));
  auto result = pm::run_experiment(ex);
  emit_report(result.report, with_fusion, o.out);
  if (with_fusion && !o.predictions.empty()) {
    auto out = open_out(o.predictions);
    pm::write_fused_predictions_csv(ex.eval, result.fused, out);
  }
  if (!o.preds_dir.empty()) {
    std::filesystem::create_directories(o.preds_dir);
    const auto& calib = o.calib_split == "eval" ? ex.eval : ex.dev;
    for (const auto& m : ex.models.members()) {
      write_preds(pm::collect_calibration_samples(m, calib),
                  (std::filesystem::path(o.preds_dir) / ("preds_" + m.label() + ".jsonl")).string());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense phrase retrieval with calibrated model uncertainty fusion"};
  app.require_subcommand(1);

  // segment
  std::string seg_passages, seg_out;
  std::size_t seg_n = 1, seg_stride = 0;
  auto* segment = app.add_subcommand("segment", "Split passages into N-sentence phrases (phrases.jsonl)");
  segment->add_option("--passages", seg_passages)->required();
  segment->add_option("--granularity", seg_n, "sentences per phrase; 0 = whole passage")->required();
  segment->add_option("--stride", seg_stride, "window stride (default: granularity)");
  segment->add_option("--out", seg_out)->required();

  // embed-test
  std::string emb_in, emb_out;
  std::size_t emb_dim = 64;
  std::uint64_t emb_seed = 42;
  auto* embed = app.add_subcommand("embed-test", "Embed a record file with the deterministic lexical embedder");
  embed->add_option("--in", emb_in, "passages, phrases or queries .jsonl")->required();
  embed->add_option("--dim", emb_dim)->required();
  embed->add_option("--seed", emb_seed);
  embed->add_option("--out", emb_out, "output .phem")->required();

  // bm25
  std::string bm_passages, bm_query, bm_queries, bm_out;
  double bm_k1 = 1.2, bm_b = 0.75;
  std::size_t bm_k = 10, bm_count = 9;
  auto* bm25 = app.add_subcommand("bm25", "BM25 index statistics, top-k search and hard-negative mining");
  bm25->require_subcommand(1);
  auto add_bm_common = [&](CLI::App* c) {
    c->add_option("--passages", bm_passages)->required();
    c->add_option("--k1", bm_k1);
    c->add_option("--b", bm_b);
  };
  auto* bm_index = bm25->add_subcommand("index", "Print index statistics");
  add_bm_common(bm_index);
  auto* bm_topk = bm25->add_subcommand("topk", "Top-k passages for a query string");
  add_bm_common(bm_topk);
  bm_topk->add_option("--query", bm_query)->required();
  bm_topk->add_option("--k", bm_k);
  auto* bm_mine = bm25->add_subcommand("mine", "Hard negatives for every query");
  add_bm_common(bm_mine);
  bm_mine->add_option("--queries", bm_queries)->required();
  bm_mine->add_option("--count", bm_count);
  bm_mine->add_option("--out", bm_out);

  // calibrate
  std::string cal_preds, cal_trajectory;
  pm::CalibrationOptions cal_opts;
  auto* calibrate = app.add_subcommand("calibrate", "Fit a softmax temperature by ECE gradient descent");
  calibrate->add_option("--preds", cal_preds, "predictions .jsonl: {\"scores\": [...], \"correct\": bool}")
      ->required();
  calibrate->add_option("--t0", cal_opts.t0);
  calibrate->add_option("--step", cal_opts.step);
  calibrate->add_option("--iters", cal_opts.max_iters);
  calibrate->add_option("--bins", cal_opts.bin_count);
  calibrate->add_option("--trajectory", cal_trajectory, "write the descent trajectory as CSV");

  // reliability
  std::string rel_preds, rel_out;
  std::size_t rel_bins = 10;
  double rel_t = 1.0;
  auto* reliability = app.add_subcommand("reliability", "Reliability diagram table for predictions at temperature T");
  reliability->add_option("--preds", rel_preds)->required();
  reliability->add_option("--bins", rel_bins);
  reliability->add_option("--temperature", rel_t);
  reliability->add_option("--out", rel_out);

  // eval / muf / sweep-t0
  EvalOptions eval_opts, muf_opts, sweep_opts;
  auto* eval = app.add_subcommand("eval", "Evaluate each granularity and BM25 on 30-candidate batches");
  add_eval_options(eval, eval_opts);
  eval->add_option("--preds-out", eval_opts.preds_dir, "dump per-model calibration predictions here");
  auto* muf = app.add_subcommand("muf", "Evaluate with calibrated model uncertainty fusion");
  add_eval_options(muf, muf_opts);
  muf->add_option("--predictions", muf_opts.predictions, "fused prediction dump (CSV)");
  muf->add_option("--preds-out", muf_opts.preds_dir, "dump per-model calibration predictions here");
  std::vector<double> grid(std::begin(pm::kDefaultT0Grid), std::end(pm::kDefaultT0Grid));
  auto* sweep = app.add_subcommand("sweep-t0", "MUF accuracy as a function of the initial temperature");
  add_eval_options(sweep, sweep_opts);
  sweep->add_option("--grid", grid, "initial temperatures")->delimiter(',');

  // synth
  std::string syn_passages, syn_queries;
  pm::SyntheticConfig syn_cfg;
  auto* synth = app.add_subcommand("synth", "Write a planted-signal synthetic dataset");
  synth->add_option("--passages", syn_passages)->required();
  synth->add_option("--queries", syn_queries)->required();
  synth->add_option("--n-passages", syn_cfg.passages);
  synth->add_option("--n-queries", syn_cfg.queries);
  synth->add_option("--seed", syn_cfg.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*segment) {
      const auto corpus = pm::load_passages(seg_passages);
      pm::write_phrases(pm::build_phrase_index(corpus, seg_n, seg_stride), seg_out);
    } else if (*embed) {
      std::ifstream in(emb_in, std::ios::binary);
      if (!in) throw pm::InputError("cannot open " + emb_in);
      pm::EmbeddingStore store(emb_dim);
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = emb_in + ":" + std::to_string(line_no);
        json rec;
        try {
          rec = json::parse(line);
        } catch (const json::exception& e) {
          throw pm::InputError(where + ": " + e.what());
        }
        std::string id, text;
        if (rec.contains("passage_id") && rec.contains("ordinal")) {
          id = pm::phrase_key(rec["passage_id"].get<std::string>(), rec["ordinal"].get<std::size_t>());
          text = rec.value("text", "");
        } else if (rec.contains("question")) {
          id = rec.value("id", "");
          text = rec["question"].get<std::string>();
        } else {
          id = rec.value("id", "");
          text = rec.value("text", "");
        }
        if (id.empty()) throw pm::InputError(where + ": record has no id");
        try {
          store.add(id, pm::test_embed(text, emb_dim, emb_seed));
        } catch (const std::exception& e) {
          throw pm::InputError(where + ": " + e.what());
        }
      }
      pm::write_store(store, emb_out);
      std::cout << "wrote " << store.size() << " vectors (dim " << emb_dim << ") to " << emb_out << '\n';
    } else if (*bm25) {
      const auto corpus = pm::load_passages(bm_passages);
      const auto index = pm::build_index(corpus, {bm_k1, bm_b});
      if (*bm_index) {
        std::cout << index.stats_line() << '\n';
      } else if (*bm_topk) {
        for (const auto& r : pm::top_k(index, bm_query, bm_k)) {
          std::printf("%s\t%.6f\n", r.passage_id.c_str(), r.score);
        }
      } else {
        const auto queries = pm::load_queries(bm_queries, corpus);
        std::ofstream file;
        if (!bm_out.empty()) file = open_out(bm_out);
        std::ostream& out = bm_out.empty() ? std::cout : file;
        for (const auto& q : queries) {
          out << json{{"query_id", q.id}, {"hard_negatives", pm::mine_hard_negatives(index, q, bm_count)}}.dump()
              << '\n';
        }
      }
    } else if (*calibrate) {
      const auto samples = read_preds(cal_preds);
      const auto result = pm::calibrate_temperature(samples, cal_opts);
      std::printf("temperature=%.9g ece=%.9g initial_ece=%.9g iterations=%zu n=%zu\n", result.temperature,
                  result.ece, result.initial_ece, result.iterations, samples.size());
      if (!cal_trajectory.empty()) {
        auto out = open_out(cal_trajectory);
        out << "iteration,temperature,ece,gradient\n";
        char buf[128];
        for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
          const auto& s = result.trajectory[i];
          std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", i, s.temperature, s.ece, s.gradient);
          out << buf;
        }
      }
    } else if (*reliability) {
      const auto samples = read_preds(rel_preds);
      const auto bins = pm::bin_predictions(pm::label_predictions(samples, rel_t), rel_bins);
      const auto rows = pm::reliability_report(bins);
      if (rel_out.empty()) {
        pm::write_reliability_csv(rows, std::cout);
      } else {
        auto out = open_out(rel_out);
        pm::write_reliability_csv(rows, out);
      }
      std::fprintf(stderr, "ece_squared=%.6f ece_abs=%.6f\n", pm::ece_squared(bins), pm::ece_absolute(bins));
    } else if (*eval) {
      return run_eval(eval_opts, false);
    } else if (*muf) {
      return run_eval(muf_opts, true);
    } else if (*sweep) {
      auto ex = pm::load_experiment(to_config(sweep_opts));
      if (ex.dev.size() > 0) ex.models = pm::rank_models(std::move(ex.models), ex.dev, sweep_opts.keep);
      const auto& calib = sweep_opts.calib_split == "eval" ? ex.eval : ex.dev;
      if (calib.size() == 0) throw pm::InputError("calibration split is empty");
      const auto rows = pm::sweep_t0(ex.models, grid, calib, ex.eval, ex.config.calibration);
      std::ofstream file;
      if (!sweep_opts.out.empty()) file = open_out(sweep_opts.out);
      std::ostream& out = sweep_opts.out.empty() ? std::cout : file;
      out << "t0,muf_accuracy,temperatures,error\n";
      char buf[64];
      for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%g", r.t0);
        out << buf << ',';
        if (r.muf_accuracy) {
          std::snprintf(buf, sizeof buf, "%.2f", *r.muf_accuracy);
          out << buf;
        }
        out << ',';
        for (std::size_t i = 0; i < r.temperatures.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%s%.6g", i ? ";" : "", r.temperatures[i]);
          out << buf;
        }
        out << ',' << r.error << '\n';
      }
    } else if (*synth) {
      const auto ds = pm::make_planted_dataset(syn_cfg);
      pm::write_passages(ds.corpus, syn_passages);
      pm::write_queries(ds.queries, syn_queries);
    }
  } catch (const pm::InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const pm::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
