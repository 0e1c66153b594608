#include "phrasemuf/segmenter.hpp"

#include <fstream>

#include <json.hpp>

#include "phrasemuf/error.hpp"

namespace phrasemuf {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace

std::vector<SentenceSpan> TerminatorSplitter::split(std::string_view text) const {
  std::vector<SentenceSpan> spans;
  const std::size_t len = text.size();
  std::size_t i = 0;
  while (i < len) {
    while (i < len && is_space(text[i])) ++i;
    if (i == len) break;
    const std::size_t start = i;
    std::size_t end = len;
    for (; i < len; ++i) {
      if (is_terminator(text[i]) && (i + 1 == len || is_space(text[i + 1]))) {
        end = i + 1;
        ++i;
        break;
      }
    }
    if (end == len) {
      while (end > start && is_space(text[end - 1])) --end;
    }
    spans.push_back({start, end});
  }
  return spans;
}

std::vector<SentenceSpan> split_sentences(std::string_view text) { return TerminatorSplitter{}.split(text); }

std::vector<Phrase> chunk_phrases(const Passage& passage, std::span<const SentenceSpan> spans, std::size_t n,
                                  std::size_t stride) {
  if (spans.empty()) throw InputError("passage '" + passage.id + "' has no sentences");
  if (n == 0) throw InputError("phrase granularity must be >= 1");
  if (stride == 0) stride = n;
  if (stride > n) throw InputError("phrase stride must not exceed the granularity");

  std::vector<Phrase> phrases;
  const std::size_t count = spans.size();
  for (std::size_t first = 0;; first += stride) {
    const std::size_t last = std::min(first + n, count) - 1;
    const auto start = spans[first].start;
    const auto end = spans[last].end;
    phrases.push_back({passage.id, phrases.size(), first, last, passage.text.substr(start, end - start)});
    if (last + 1 == count) break;
  }
  return phrases;
}

PhraseIndex::PhraseIndex(std::size_t granularity, std::vector<std::string> passage_order,
                         std::unordered_map<std::string, std::vector<Phrase>> entries)
    : granularity_(granularity), passage_order_(std::move(passage_order)), entries_(std::move(entries)) {
  for (const auto& id : passage_order_) {
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.empty()) {
      throw InvariantError("phrase index has no phrases for passage '" + id + "'");
    }
    phrase_count_ += it->second.size();
  }
  if (entries_.size() != passage_order_.size()) throw InvariantError("phrase index order/entries mismatch");
}

const std::vector<Phrase>& PhraseIndex::phrases(std::string_view passage_id) const {
  auto it = entries_.find(std::string(passage_id));
  if (it == entries_.end()) throw InputError("passage '" + std::string(passage_id) + "' is not in the phrase index");
  return it->second;
}

bool PhraseIndex::contains(std::string_view passage_id) const {
  return entries_.find(std::string(passage_id)) != entries_.end();
}

PhraseIndex build_phrase_index(const Corpus& corpus, std::size_t n, std::size_t stride,
                               const SentenceSplitter& splitter) {
  if (corpus.empty()) throw InputError("cannot build a phrase index over an empty corpus");
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Phrase>> entries;
  order.reserve(corpus.size());
  entries.reserve(corpus.size());
  for (const auto& passage : corpus.passages()) {
    const auto spans = splitter.split(passage.text);
    std::vector<Phrase> phrases;
    if (n == 0) {
      const std::size_t last = spans.empty() ? 0 : spans.size() - 1;
      phrases.push_back({passage.id, 0, 0, last, passage.text});
    } else {
      try {
        phrases = chunk_phrases(passage, spans, n, stride);
      } catch (const InputError& e) {
        throw InputError("passage '" + passage.id + "': " + e.what());
      }
    }
    order.push_back(passage.id);
    entries.emplace(passage.id, std::move(phrases));
  }
  return PhraseIndex(n, std::move(order), std::move(entries));
}

std::string phrase_key(std::string_view passage_id, std::size_t ordinal) {
  std::string key(passage_id);
  key += '#';
  key += std::to_string(ordinal);
  return key;
}

void write_phrases(const PhraseIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& id : index.passage_ids()) {
    for (const auto& ph : index.phrases(id)) {
      out << nlohmann::json{{"passage_id", ph.passage_id}, {"ordinal", ph.ordinal}, {"text", ph.text}}.dump()
          << '\n';
    }
  }
  if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace phrasemuf
