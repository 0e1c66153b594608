#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phrasemuf/corpus.hpp"

namespace phrasemuf {

/// Byte range [start, end) of one sentence inside a passage's text.
struct SentenceSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

struct Phrase {
  std::string passage_id;
  std::size_t ordinal = 0;
  std::size_t first_sentence = 0;  // inclusive
  std::size_t last_sentence = 0;   // inclusive
  std::string text;
};

/// Sentence boundary detector. The default rule is deterministic and
/// dictionary-free; swap in a smarter one through this interface.
class SentenceSplitter {
 public:
  virtual ~SentenceSplitter() = default;
  virtual std::vector<SentenceSpan> split(std::string_view text) const = 0;
};

/// A sentence ends at `.`, `!` or `?` followed by whitespace, or at the end of
/// the text. Leading/trailing whitespace is never part of a span, so
/// "Dr. Smith" splits after "Dr.".
class TerminatorSplitter final : public SentenceSplitter {
 public:
  std::vector<SentenceSpan> split(std::string_view text) const override;
};

std::vector<SentenceSpan> split_sentences(std::string_view text);

/// Groups consecutive sentences into phrases of `n` sentences. Windows start
/// every `stride` sentences (stride 0 means stride = n, i.e. disjoint tiling)
/// and the last window may be short. Requires 1 <= stride <= n so every
/// sentence is covered.
std::vector<Phrase> chunk_phrases(const Passage& passage, std::span<const SentenceSpan> spans,
                                  std::size_t n, std::size_t stride = 0);

/// Per-passage phrase lists for one granularity. Granularity 0 is whole
/// passage mode: one phrase per passage carrying the full text.
class PhraseIndex {
 public:
  PhraseIndex() = default;
  PhraseIndex(std::size_t granularity, std::vector<std::string> passage_order,
              std::unordered_map<std::string, std::vector<Phrase>> entries);

  std::size_t granularity() const noexcept { return granularity_; }
  const std::vector<std::string>& passage_ids() const noexcept { return passage_order_; }

  /// Throws InputError if the passage is not indexed.
  const std::vector<Phrase>& phrases(std::string_view passage_id) const;
  bool contains(std::string_view passage_id) const;

  std::size_t phrase_count() const noexcept { return phrase_count_; }

 private:
  std::size_t granularity_ = 0;
  std::vector<std::string> passage_order_;
  std::unordered_map<std::string, std::vector<Phrase>> entries_;
  std::size_t phrase_count_ = 0;
};

PhraseIndex build_phrase_index(const Corpus& corpus, std::size_t n, std::size_t stride = 0,
                               const SentenceSplitter& splitter = TerminatorSplitter{});

/// Row key used for phrase embeddings: "<passage_id>#<ordinal>".
std::string phrase_key(std::string_view passage_id, std::size_t ordinal);

/// `phrases.jsonl` dump: fields `passage_id`, `ordinal`, `text`, in corpus order.
void write_phrases(const PhraseIndex& index, const std::filesystem::path& path);

}  // namespace phrasemuf
