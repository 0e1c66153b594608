#pragma once

// Tokenization and deterministic hashing / RNG primitives shared by BM25,
// the lexical test embedder and batch sampling.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace phrasemuf {

/// Lowercases ASCII letters and splits on every ASCII byte that is not a
/// letter or digit. Bytes >= 0x80 are kept inside tokens so UTF-8 words
/// survive intact.
std::vector<std::string> tokenize(std::string_view text);

/// FNV-1a, 64-bit.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// splitmix64 generator. Fully specified, so draws are identical on every
/// platform (unlike the std:: distributions).
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Maps the top 53 bits of a draw onto [-1, 1).
  double next_signed_unit() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0;
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::uint64_t state_;
};

}  // namespace phrasemuf
