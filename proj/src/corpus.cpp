#include "phrasemuf/corpus.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phrasemuf/error.hpp"

namespace phrasemuf {

namespace {

using nlohmann::json;

bool has_whitespace_token(std::string_view text) {
  for (unsigned char c : text) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r' && c != '\f' && c != '\v') return true;
  }
  return false;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::string string_field(const json& record, const char* name, const std::filesystem::path& path,
                         std::size_t line) {
  auto it = record.find(name);
  if (it == record.end() || !it->is_string()) {
    throw InputError(where(path, line) + ": missing or non-string field '" + name + "'");
  }
  return it->get<std::string>();
}

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(where(path, line_no) + ": malformed record: " + e.what());
    }
    if (!record.is_object()) throw InputError(where(path, line_no) + ": record is not an object");
    fn(record, line_no);
  }
}

}  // namespace

Corpus::Corpus(std::vector<Passage> passages) : passages_(std::move(passages)) {
  index_.reserve(passages_.size());
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    const auto& p = passages_[i];
    if (p.id.empty()) throw InvariantError("passage at position " + std::to_string(i) + " has an empty id");
    if (!has_whitespace_token(p.text)) throw InvariantError("passage '" + p.id + "' has empty text");
    if (!index_.emplace(p.id, i).second) throw InvariantError("duplicate passage id '" + p.id + "'");
  }
}

std::optional<std::size_t> Corpus::ordinal_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Corpus load_passages(const std::filesystem::path& path) {
  std::vector<Passage> passages;
  std::unordered_map<std::string, std::size_t> first_seen;
  for_each_record(path, [&](const json& record, std::size_t line) {
    Passage p{string_field(record, "id", path, line), string_field(record, "text", path, line)};
    if (p.id.empty()) throw InputError(where(path, line) + ": empty id");
    if (!has_whitespace_token(p.text)) {
      throw InputError(where(path, line) + ": passage '" + p.id + "' has empty text");
    }
    auto [it, inserted] = first_seen.emplace(p.id, line);
    if (!inserted) {
      throw InputError(where(path, line) + ": duplicate passage id '" + p.id + "' (first seen on line " +
                       std::to_string(it->second) + ")");
    }
    passages.push_back(std::move(p));
  });
  return Corpus(std::move(passages));
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& path, const Corpus& corpus) {
  std::vector<QueryRecord> queries;
  for_each_record(path, [&](const json& record, std::size_t line) {
    QueryRecord q{string_field(record, "id", path, line), string_field(record, "question", path, line),
                  string_field(record, "positive_passage_id", path, line)};
    if (!has_whitespace_token(q.question)) {
      throw InputError(where(path, line) + ": query '" + q.id + "' has an empty question");
    }
    if (!corpus.contains(q.positive_passage_id)) {
      throw InputError(where(path, line) + ": query '" + q.id + "' references unknown passage '" +
                       q.positive_passage_id + "'");
    }
    queries.push_back(std::move(q));
  });
  return queries;
}

void write_passages(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& p : corpus.passages()) {
    out << json{{"id", p.id}, {"text", p.text}}.dump() << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

void write_queries(const std::vector<QueryRecord>& queries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& q : queries) {
    out << json{{"id", q.id}, {"question", q.question}, {"positive_passage_id", q.positive_passage_id}}.dump()
        << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace phrasemuf
