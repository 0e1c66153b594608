#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace phrasemuf {

struct Passage {
  std::string id;
  std::string text;
};

struct QueryRecord {
  std::string id;
  std::string question;
  std::string positive_passage_id;
};

/// Ordered, id-addressable passage collection. Immutable once built.
class Corpus {
 public:
  Corpus() = default;

  /// Throws InvariantError on duplicate id, empty id or token-free text.
  explicit Corpus(std::vector<Passage> passages);
  Corpus(std::initializer_list<Passage> passages) : Corpus(std::vector<Passage>(passages)) {}

  std::size_t size() const noexcept { return passages_.size(); }
  bool empty() const noexcept { return passages_.empty(); }

  const std::vector<Passage>& passages() const noexcept { return passages_; }
  const Passage& at(std::size_t ordinal) const { return passages_.at(ordinal); }

  std::optional<std::size_t> ordinal_of(std::string_view id) const;
  bool contains(std::string_view id) const { return ordinal_of(id).has_value(); }

 private:
  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads `passages.jsonl` (fields `id`, `text`). Blank lines are skipped but
/// still counted for error line numbers.
Corpus load_passages(const std::filesystem::path& path);

/// Reads `queries.jsonl` (fields `id`, `question`, `positive_passage_id`) and
/// rejects any record whose positive passage is absent from `corpus`.
std::vector<QueryRecord> load_queries(const std::filesystem::path& path, const Corpus& corpus);

void write_passages(const Corpus& corpus, const std::filesystem::path& path);
void write_queries(const std::vector<QueryRecord>& queries, const std::filesystem::path& path);

}  // namespace phrasemuf
