#include "phrasemuf/embedding.hpp"

#include <bit>
#include <cstring>
#include <cmath>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "phrasemuf/error.hpp"
#include "phrasemuf/text.hpp"
#include "test_util.hpp"

namespace phrasemuf {
namespace {

EmbeddingStore make_store(std::size_t dim, std::vector<std::pair<std::string, std::vector<float>>> rows) {
  EmbeddingStore s(dim);
  for (auto& [id, v] : rows) s.add(id, v);
  return s;
}

TEST(EmbeddingStoreTest, RejectsInvalidRows) {
  EXPECT_THROW(EmbeddingStore(0), InvariantError);
  EmbeddingStore s(2);
  s.add("a", std::vector<float>{1, 0});
  EXPECT_THROW(s.add("a", std::vector<float>{0, 1}), InvariantError);
  EXPECT_THROW(s.add("z", std::vector<float>{0, 0}), InvariantError);
  EXPECT_THROW(s.add("b", std::vector<float>{1, 0, 0}), InvariantError);
  EXPECT_EQ(s.size(), 1u);
}

TEST(PhemTest, HeaderLayout) {
  auto bytes = encode_store(make_store(2, {{"a", {1.0f, 0.0f}}}));
  ASSERT_EQ(bytes.size(), 4u + 2 + 2 + 4 + 8 + 2 + 1 + 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PHEM");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 0);
  EXPECT_EQ(bytes[8], 2);   // dim LSB
  EXPECT_EQ(bytes[12], 1);  // count LSB
  EXPECT_EQ(bytes[20], 1);  // id_len
  EXPECT_EQ(bytes[22], 'a');
  // 1.0f = 0x3f800000 little-endian
  EXPECT_EQ(bytes[23], 0x00);
  EXPECT_EQ(bytes[26], 0x3f);
  EXPECT_EQ(bytes[25], 0x80);
}

TEST(PhemTest, EmptyStoreRoundTrip) {
  EmbeddingStore empty(7);
  auto path = testutil::temp_dir() / "empty.phem";
  write_store(empty, path);
  EXPECT_EQ(std::filesystem::file_size(path), kPhemHeaderSize);
  auto back = read_store(path);
  EXPECT_EQ(back.size(), 0u);
  EXPECT_EQ(back.dim(), 7u);
}

TEST(PhemTest, RoundTripIsBitExact) {
  auto store = make_store(3, {{"x", {1.5f, -0.0f, 3e-38f}}, {"y\xc3\xa9", {-2.0f, 1e30f, 0.1f}}});
  auto path = testutil::temp_dir() / "rt.phem";
  write_store(store, path);
  EXPECT_EQ(read_store(path), store);
}

TEST(PhemTest, DecodeErrors) {
  auto good = encode_store(make_store(2, {{"a", {1.0f, 2.0f}}, {"b", {3.0f, 4.0f}}}));

  auto bad_magic = good;
  std::copy_n("XXXX", 4, bad_magic.begin());
  EXPECT_THROW(decode_store(bad_magic), InputError);

  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(decode_store(bad_version), InputError);

  auto zero_dim = good;
  zero_dim[8] = 0;
  EXPECT_THROW(decode_store(zero_dim), InputError);

  std::vector<std::uint8_t> truncated(good.begin(), good.end() - 3);
  try {
    decode_store(truncated);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 38"), std::string::npos) << e.what();
  }

  auto dup = good;
  dup[20 + 2 + 1 + 8 + 2] = 'a';
  EXPECT_THROW(decode_store(dup), InputError);
}

TEST(TestEmbedTest, DeterministicAndNormalized) {
  auto a = test_embed("The cat sat", 64, 42);
  auto b = test_embed("the  CAT sat!", 64, 42);
  ASSERT_EQ(a.size(), 64u);
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), a.size() * sizeof(float)));
  double sq = 0;
  for (float x : a) sq += double(x) * x;
  EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-6);
  EXPECT_NE(test_embed("The cat sat", 64, 43), a);
}

TEST(TestEmbedTest, MatchesFrozenReferenceVectors) {
  // Produced by an independent Python implementation of the embedder.
  auto v = test_embed("hello", 4, 1);
  const float expected[] = {-0.11417456716299057f, -0.5665266513824463f, 0.4619799256324768f, 0.6727453470230103f};
  for (int i = 0; i < 4; ++i) EXPECT_EQ(std::bit_cast<std::uint32_t>(v[i]), std::bit_cast<std::uint32_t>(expected[i]));
  auto w = test_embed("Hello, World", 4, 7);
  const float expected2[] = {-0.48993992805480957f, -0.5360993146896362f, 0.5478530526161194f, 0.41522690653800964f};
  for (int i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(w[i], expected2[i]);
}

TEST(TestEmbedTest, LexicalOverlapDrivesCosine) {
  auto sat = test_embed("the cat sat", 64, 42);
  auto ran = test_embed("the cat ran", 64, 42);
  auto other = test_embed("qqq zzz www", 64, 42);
  // Frozen from the independent Python oracle.
  EXPECT_NEAR(oracle::normalized_dot(sat, ran), 0.624711447, 1e-6);
  EXPECT_NEAR(oracle::normalized_dot(sat, other), -0.116447377, 1e-6);
  EXPECT_GT(oracle::normalized_dot(sat, ran), oracle::normalized_dot(sat, other));
}

TEST(TestEmbedTest, RejectsTokenFreeText) {
  EXPECT_THROW(test_embed("  ...  ", 8, 1), InputError);
  EXPECT_THROW(test_embed("x", 0, 1), InputError);
}

TEST(ScoreNormalizedTest, WorkedExamples) {
  auto store = make_store(2, {{"a", {1, 0}}, {"b", {0, 1}}, {"c", {2, 0}}, {"d", {0.6f, 0.8f}}});
  auto scores = score_normalized(std::vector<float>{1, 0}, store);
  ASSERT_EQ(scores.size(), 4u);
  EXPECT_EQ(scores[0].target_id, "a");
  EXPECT_DOUBLE_EQ(scores[0].score, 1.0);
  EXPECT_DOUBLE_EQ(scores[1].score, 0.0);
  EXPECT_DOUBLE_EQ(scores[2].score, 1.0);
  auto self = score_normalized(std::vector<float>{0.6f, 0.8f}, store);
  EXPECT_NEAR(self[3].score, 1.0, 1e-7);
  EXPECT_THROW(score_normalized(std::vector<float>{1, 0, 0}, store), InputError);
}

TEST(ScoreNormalizedTest, ScaleInvarianceAndOracleAgreement) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 1 + rng.next_below(32);
    std::vector<float> q(dim), v(dim), scaled(dim);
    for (auto& x : q) x = static_cast<float>(rng.next_signed_unit());
    for (auto& x : v) x = static_cast<float>(rng.next_signed_unit()) + 0.01f;
    const float lambda = static_cast<float>(0.5 + 4.0 * (rng.next_signed_unit() + 1.0));
    for (std::size_t i = 0; i < dim; ++i) scaled[i] = v[i] * lambda;
    auto store = make_store(dim, {{"v", v}, {"s", scaled}});
    auto scores = score_normalized(q, store);
    EXPECT_NEAR(scores[0].score, scores[1].score, 1e-5 * std::max(1.0, std::abs(scores[0].score)));
    const double ref = oracle::normalized_dot(q, v);
    EXPECT_NEAR(scores[0].score, ref, 1e-5 * std::max(1e-3, std::abs(ref)));
  }
}

}  // namespace
}  // namespace phrasemuf
