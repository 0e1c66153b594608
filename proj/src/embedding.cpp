#include "phrasemuf/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "phrasemuf/error.hpp"
#include "phrasemuf/text.hpp"

namespace phrasemuf {

namespace {

double squared_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return s;
}

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename UInt>
  void put(UInt value) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
  }
  void put_bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

 private:
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const noexcept { return pos_; }

  template <typename UInt>
  UInt get(const char* what) {
    need(sizeof(UInt), what);
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(UInt);
    return v;
  }

  std::string get_string(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) {
      throw InputError("truncated PHEM file at byte offset " + std::to_string(pos_) + " while reading " + what +
                       " (" + std::to_string(in_.size()) + " bytes total)");
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw InvariantError("embedding dimension must be positive");
}

void EmbeddingStore::add(std::string id, std::span<const float> vector) {
  if (vector.size() != dim_) {
    throw InvariantError("row '" + id + "' has dimension " + std::to_string(vector.size()) + ", store expects " +
                         std::to_string(dim_));
  }
  const double sq = squared_norm(vector);
  if (!(sq > 0.0)) throw InvariantError("row '" + id + "' is the zero vector");
  if (index_.contains(id)) throw InvariantError("duplicate embedding id '" + id + "'");
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), vector.begin(), vector.end());
  norms_.push_back(std::sqrt(sq));
}

std::optional<std::size_t> EmbeddingStore::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
  if (a.dim_ != b.dim_ || a.ids_ != b.ids_ || a.data_.size() != b.data_.size()) return false;
  // Bitwise comparison so -0.0f / NaN payloads count as differences.
  return a.data_.empty() || std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

std::vector<std::uint8_t> encode_store(const EmbeddingStore& store) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(kPhemHeaderSize + store.size() * (2 + store.dim() * 4 + 16));
  ByteWriter w(bytes);
  w.put_bytes("PHEM");
  w.put<std::uint16_t>(kPhemVersion);
  w.put<std::uint16_t>(0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(store.dim()));
  w.put<std::uint64_t>(store.size());
  for (std::size_t r = 0; r < store.size(); ++r) {
    const auto& id = store.id(r);
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw InvariantError("embedding id longer than 65535 bytes: '" + id.substr(0, 32) + "...'");
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
    w.put_bytes(id);
    for (float x : store.row(r)) w.put<std::uint32_t>(std::bit_cast<std::uint32_t>(x));
  }
  return bytes;
}

EmbeddingStore decode_store(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get_string(4, "magic") != "PHEM") throw InputError("bad magic: not a PHEM file");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kPhemVersion) throw InputError("unsupported PHEM version " + std::to_string(version));
  const auto flags = r.get<std::uint16_t>("flags");
  if (flags != 0) throw InputError("unsupported PHEM flags " + std::to_string(flags));
  const auto dim = r.get<std::uint32_t>("dim");
  if (dim == 0) throw InputError("PHEM dimension is 0");
  const auto count = r.get<std::uint64_t>("count");

  EmbeddingStore store(dim);
  std::vector<float> row(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t record_offset = r.offset();
    const auto id_len = r.get<std::uint16_t>("id length");
    std::string id = r.get_string(id_len, "id");
    for (auto& x : row) x = std::bit_cast<float>(r.get<std::uint32_t>("vector"));
    if (store.find(id)) {
      throw InputError("duplicate id '" + id + "' in PHEM record at byte offset " + std::to_string(record_offset));
    }
    try {
      store.add(std::move(id), row);
    } catch (const InvariantError& e) {
      throw InputError(std::string("PHEM record at byte offset ") + std::to_string(record_offset) + ": " + e.what());
    }
  }
  if (r.offset() != bytes.size()) {
    throw InputError("trailing bytes after PHEM records at byte offset " + std::to_string(r.offset()));
  }
  return store;
}

void write_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  const auto bytes = encode_store(store);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

EmbeddingStore read_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_store(bytes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<float> test_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw InputError("embedding dimension must be positive");
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw InputError("cannot embed text without tokens");

  std::vector<double> acc(dim, 0.0);
  for (const auto& token : tokens) {
    SplitMix64 rng(seed ^ fnv1a64(token));
    for (auto& a : acc) a += rng.next_signed_unit();
  }
  double sq = 0.0;
  for (auto& a : acc) {
    a /= static_cast<double>(tokens.size());
    sq += a * a;
  }
  if (!(sq > 0.0)) throw InvariantError("test embedding has zero norm");
  const double norm = std::sqrt(sq);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

double normalized_score(std::span<const float> query, std::span<const float> row, double row_norm) {
  double dot = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) dot += static_cast<double>(row[i] * query[i]);
  return dot / row_norm;
}

std::vector<ScorePair> score_normalized(std::span<const float> query, const EmbeddingStore& store) {
  if (query.size() != store.dim()) {
    throw InputError("query dimension " + std::to_string(query.size()) + " does not match store dimension " +
                     std::to_string(store.dim()));
  }
  std::vector<ScorePair> out;
  out.reserve(store.size());
  for (std::size_t r = 0; r < store.size(); ++r) {
    out.push_back({store.id(r), normalized_score(query, store.row(r), store.row_norm(r))});
  }
  return out;
}

void BruteForceScan::score_rows(std::span<const float> query, const EmbeddingStore& store,
                                std::span<const std::size_t> rows, std::span<double> out) const {
  if (query.size() != store.dim()) {
    throw InputError("query dimension " + std::to_string(query.size()) + " does not match store dimension " +
                     std::to_string(store.dim()));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[i] = normalized_score(query, store.row(rows[i]), store.row_norm(rows[i]));
  }
}

}  // namespace phrasemuf
