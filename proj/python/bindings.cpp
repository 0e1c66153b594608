#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "phrasemuf/bm25.hpp"
#include "phrasemuf/calibration.hpp"
#include "phrasemuf/corpus.hpp"
#include "phrasemuf/embedding.hpp"
#include "phrasemuf/error.hpp"
#include "phrasemuf/eval.hpp"
#include "phrasemuf/experiment.hpp"
#include "phrasemuf/segmenter.hpp"
#include "phrasemuf/synthetic.hpp"
#include "phrasemuf/text.hpp"

namespace py = pybind11;
using namespace phrasemuf;

namespace {

std::vector<CalibrationSample> to_samples(const std::vector<std::vector<double>>& scores,
                                          const std::vector<bool>& correct) {
  if (scores.size() != correct.size()) throw InputError("scores and correct differ in length");
  std::vector<CalibrationSample> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].empty()) throw InputError("empty score list at index " + std::to_string(i));
    out.push_back({*std::max_element(scores[i].begin(), scores[i].end()), scores[i], correct[i]});
  }
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    rows.append(py::dict(py::arg("dataset") = row.dataset, py::arg("model") = row.model,
                         py::arg("metric") = row.metric, py::arg("value") = row.value,
                         py::arg("n_queries") = row.n_queries, py::arg("seed") = row.seed));
  }
  py::dict temps;
  for (const auto& [label, t] : r.temperatures) temps[py::str(label)] = t;
  return py::dict(py::arg("dataset") = r.dataset, py::arg("rows") = rows,
                  py::arg("muf_minus_best_single") = r.muf_minus_best_single, py::arg("temperatures") = temps,
                  py::arg("active_models") = r.active_models);
}

}  // namespace

PYBIND11_MODULE(_phrasemuf, m) {
  m.doc() = "Dense phrase retrieval with calibrated model uncertainty fusion";

  static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
  static py::exception<InvariantError> invariant_error(m, "InvariantError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      input_error(e.what());
    } catch (const InvariantError& e) {
      invariant_error(e.what());
    }
  });

  m.def("tokenize", &tokenize, py::arg("text"));
  m.def("test_embed", &test_embed, py::arg("text"), py::arg("dim"), py::arg("seed"));

  py::class_<Passage>(m, "Passage")
      .def(py::init<std::string, std::string>(), py::arg("id"), py::arg("text"))
      .def_readonly("id", &Passage::id)
      .def_readonly("text", &Passage::text);
  py::class_<QueryRecord>(m, "QueryRecord")
      .def(py::init<std::string, std::string, std::string>(), py::arg("id"), py::arg("question"),
           py::arg("positive_passage_id"))
      .def_readonly("id", &QueryRecord::id)
      .def_readonly("question", &QueryRecord::question)
      .def_readonly("positive_passage_id", &QueryRecord::positive_passage_id);

  py::class_<Corpus>(m, "Corpus")
      .def(py::init([](const std::vector<std::pair<std::string, std::string>>& items) {
             std::vector<Passage> passages;
             for (const auto& [id, text] : items) passages.push_back({id, text});
             return Corpus(std::move(passages));
           }),
           py::arg("passages"), "Build from (id, text) pairs.")
      .def("__len__", &Corpus::size)
      .def("__contains__", &Corpus::contains)
      .def("ordinal_of", &Corpus::ordinal_of)
      .def_property_readonly("passages", &Corpus::passages);
  m.def("load_passages", &load_passages, py::arg("path"));
  m.def("load_queries", &load_queries, py::arg("path"), py::arg("corpus"));
  m.def("write_passages", &write_passages, py::arg("corpus"), py::arg("path"));
  m.def("write_queries", &write_queries, py::arg("queries"), py::arg("path"));

  py::class_<Phrase>(m, "Phrase")
      .def_readonly("passage_id", &Phrase::passage_id)
      .def_readonly("ordinal", &Phrase::ordinal)
      .def_readonly("first_sentence", &Phrase::first_sentence)
      .def_readonly("last_sentence", &Phrase::last_sentence)
      .def_readonly("text", &Phrase::text);
  py::class_<PhraseIndex>(m, "PhraseIndex")
      .def_property_readonly("granularity", &PhraseIndex::granularity)
      .def_property_readonly("passage_ids", &PhraseIndex::passage_ids)
      .def_property_readonly("phrase_count", &PhraseIndex::phrase_count)
      .def("phrases", &PhraseIndex::phrases, py::arg("passage_id"), py::return_value_policy::copy);
  m.def(
      "build_phrase_index", [](const Corpus& c, std::size_t n, std::size_t stride) {
        return build_phrase_index(c, n, stride);
      },
      py::arg("corpus"), py::arg("n"), py::arg("stride") = 0);
  m.def("phrase_key", &phrase_key, py::arg("passage_id"), py::arg("ordinal"));
  m.def("write_phrases", &write_phrases, py::arg("index"), py::arg("path"));

  py::class_<EmbeddingStore>(m, "EmbeddingStore")
      .def(py::init<std::size_t>(), py::arg("dim"))
      .def(
          "add", [](EmbeddingStore& s, std::string id, const std::vector<float>& v) { s.add(std::move(id), v); },
          py::arg("id"), py::arg("vector"))
      .def_property_readonly("dim", &EmbeddingStore::dim)
      .def_property_readonly("ids", &EmbeddingStore::ids)
      .def("__len__", &EmbeddingStore::size)
      .def("find", &EmbeddingStore::find, py::arg("id"))
      .def(
          "row", [](const EmbeddingStore& s, std::size_t i) {
            if (i >= s.size()) throw py::index_error("row out of range");
            auto r = s.row(i);
            return std::vector<float>(r.begin(), r.end());
          },
          py::arg("index"))
      .def("__eq__", [](const EmbeddingStore& a, const EmbeddingStore& b) { return a == b; });
  m.def("read_store", &read_store, py::arg("path"));
  m.def("write_store", &write_store, py::arg("store"), py::arg("path"));
  m.def(
      "encode_store", [](const EmbeddingStore& s) {
        const auto bytes = encode_store(s);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("store"));
  m.def(
      "decode_store", [](const py::bytes& b) {
        const std::string_view view = b;
        return decode_store({reinterpret_cast<const std::uint8_t*>(view.data()), view.size()});
      },
      py::arg("data"));

  py::class_<RankedPassage>(m, "RankedPassage")
      .def_readonly("passage_id", &RankedPassage::passage_id)
      .def_readonly("ordinal", &RankedPassage::ordinal)
      .def_readonly("score", &RankedPassage::score);
  py::class_<Bm25Index>(m, "Bm25Index")
      .def_property_readonly("doc_count", &Bm25Index::doc_count)
      .def_property_readonly("term_count", &Bm25Index::term_count)
      .def_property_readonly("avgdl", &Bm25Index::avgdl)
      .def("idf", &Bm25Index::idf, py::arg("term"))
      .def("stats_line", &Bm25Index::stats_line)
      .def("score", &bm25_score, py::arg("query"), py::arg("ordinal"))
      .def("score_all", &bm25_score_all, py::arg("query"))
      .def("top_k", &top_k, py::arg("query"), py::arg("k"))
      .def("mine_hard_negatives", &mine_hard_negatives, py::arg("query"), py::arg("count") = 9);
  m.def(
      "build_bm25_index", [](const Corpus& c, double k1, double b) { return build_index(c, {k1, b}); },
      py::arg("corpus"), py::arg("k1") = 1.2, py::arg("b") = 0.75);

  m.def(
      "confidence", [](const std::vector<double>& a_k, double t) {
        if (a_k.empty()) throw InputError("confidence needs a non-empty score set");
        return confidence(*std::max_element(a_k.begin(), a_k.end()), a_k, t);
      },
      py::arg("a_k"), py::arg("temperature"), "Softmax probability of the top score.");
  m.def(
      "confidence_gradient", [](const std::vector<double>& a_k, double t) {
        if (a_k.empty()) throw InputError("confidence needs a non-empty score set");
        return confidence_gradient(*std::max_element(a_k.begin(), a_k.end()), a_k, t);
      },
      py::arg("a_k"), py::arg("temperature"));
  m.def(
      "ece_squared", [](const std::vector<double>& conf, const std::vector<bool>& correct, std::size_t bins) {
        if (conf.size() != correct.size()) throw InputError("confidences and labels differ in length");
        std::vector<LabeledPrediction> preds;
        for (std::size_t i = 0; i < conf.size(); ++i) preds.push_back({conf[i], correct[i]});
        return ece_squared(bin_predictions(preds, bins));
      },
      py::arg("confidences"), py::arg("correct"), py::arg("bins") = 10);

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("temperature", &CalibrationResult::temperature)
      .def_readonly("ece", &CalibrationResult::ece)
      .def_readonly("initial_ece", &CalibrationResult::initial_ece)
      .def_readonly("iterations", &CalibrationResult::iterations)
      .def_property_readonly("trajectory", [](const CalibrationResult& r) {
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& s : r.trajectory) out.emplace_back(s.temperature, s.ece, s.gradient);
        return out;
      });
  m.def(
      "calibrate_temperature",
      [](const std::vector<std::vector<double>>& scores, const std::vector<bool>& correct, double t0, double step,
         std::size_t iters, std::size_t bins) {
        CalibrationOptions opts;
        opts.t0 = t0;
        opts.step = step;
        opts.max_iters = iters;
        opts.bin_count = bins;
        return calibrate_temperature(to_samples(scores, correct), opts);
      },
      py::arg("scores"), py::arg("correct"), py::arg("t0") = 0.1, py::arg("step") = 1e2, py::arg("iters") = 100,
      py::arg("bins") = 10);

  m.def(
      "make_planted_dataset",
      [](std::size_t passages, std::size_t queries, std::uint64_t seed) {
        SyntheticConfig cfg;
        cfg.passages = passages;
        cfg.queries = queries;
        cfg.seed = seed;
        auto ds = make_planted_dataset(cfg);
        return std::make_pair(std::move(ds.corpus), std::move(ds.queries));
      },
      py::arg("passages") = 200, py::arg("queries") = 50, py::arg("seed") = 7);
  m.def("write_test_embeddings", &write_test_embeddings, py::arg("corpus"), py::arg("queries"),
        py::arg("granularities"), py::arg("dim"), py::arg("seed"), py::arg("directory"));

  m.def(
      "run_experiment",
      [](const std::filesystem::path& passages, const std::filesystem::path& queries,
         const std::filesystem::path& embeddings, const std::string& dataset, const std::vector<std::size_t>& models,
         std::size_t k, std::uint64_t seed, double t0, double dev_fraction, const std::string& calib_split) {
        ExperimentConfig cfg;
        cfg.passages = passages;
        cfg.queries = queries;
        cfg.embeddings_dir = embeddings;
        cfg.dataset = dataset;
        cfg.granularities = models;
        cfg.retrieval.k = k;
        cfg.seed = seed;
        cfg.calibration.t0 = t0;
        cfg.dev_fraction = dev_fraction;
        if (calib_split != "dev" && calib_split != "eval") throw InputError("calib_split must be 'dev' or 'eval'");
        cfg.calib_split = calib_split == "eval" ? CalibSplit::Eval : CalibSplit::Dev;
        auto ex = load_experiment(cfg);
        return report_dict(run_experiment(ex).report);
      },
      py::arg("passages"), py::arg("queries"), py::arg("embeddings"), py::arg("dataset") = "dataset",
      py::arg("models") = std::vector<std::size_t>{1, 3, 5, 0}, py::arg("k") = 30, py::arg("seed") = 13,
      py::arg("t0") = 0.1, py::arg("dev_fraction") = 0.5, py::arg("calib_split") = "dev",
      "Rank, calibrate and evaluate every granularity, MUF and BM25; returns the report as a dict.");
}
