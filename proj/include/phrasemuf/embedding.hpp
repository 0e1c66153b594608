#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace phrasemuf {

/// Id-addressed matrix of float32 rows. Rows keep their original scale;
/// scoring divides by the row norm, which is cached at insertion.
class EmbeddingStore {
 public:
  /// Throws InvariantError when dim == 0.
  explicit EmbeddingStore(std::size_t dim);

  /// Throws InvariantError on size mismatch, duplicate id or all-zero row.
  void add(std::string id, std::span<const float> vector);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }
  std::span<const float> row(std::size_t row) const {
    return {data_.data() + row * dim_, dim_};
  }
  double row_norm(std::size_t row) const { return norms_.at(row); }

  std::optional<std::size_t> find(std::string_view id) const;

  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b);

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// PHEM v1, little-endian:
///   "PHEM" | version u16 = 1 | flags u16 = 0 | dim u32 | count u64
///   count x (id_len u16 | id bytes | dim x float32)
inline constexpr std::uint16_t kPhemVersion = 1;
inline constexpr std::size_t kPhemHeaderSize = 20;

std::vector<std::uint8_t> encode_store(const EmbeddingStore& store);
EmbeddingStore decode_store(std::span<const std::uint8_t> bytes);

void write_store(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore read_store(const std::filesystem::path& path);

/// Deterministic bag-of-tokens embedder standing in for a neural encoder.
/// Each token seeds splitmix64 with (seed ^ fnv1a64(token)) and draws `dim`
/// components in [-1, 1); the output is the L2-normalized token mean.
std::vector<float> test_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

struct ScorePair {
  std::string target_id;
  double score = 0.0;
};

/// <row, query> / ||row|| in float32 products with float64 accumulation.
double normalized_score(std::span<const float> query, std::span<const float> row, double row_norm);

/// One ScorePair per stored row, in store order.
std::vector<ScorePair> score_normalized(std::span<const float> query, const EmbeddingStore& store);

/// Scores a subset of rows of a store. The brute-force scan is the only
/// backend today; an ANN implementation can plug in here.
class ScoreBackend {
 public:
  virtual ~ScoreBackend() = default;
  virtual void score_rows(std::span<const float> query, const EmbeddingStore& store,
                          std::span<const std::size_t> rows, std::span<double> out) const = 0;
};

class BruteForceScan final : public ScoreBackend {
 public:
  void score_rows(std::span<const float> query, const EmbeddingStore& store, std::span<const std::size_t> rows,
                  std::span<double> out) const override;
};

}  // namespace phrasemuf
