#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "cpe/binary_io.hpp"
#include "cpe/embedcore.hpp"
#include "cpe/error.hpp"
#include "cpe/manifest.hpp"
#include "cpe/scores.hpp"
#include "support.hpp"

using namespace cpe;
using embed::EmbeddingSet;
using embed::EmbeddingVector;

namespace {

EmbeddingSet random_set(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
  CounterRng rng(seed, 0);
  return EmbeddingSet::from_matrix(testkit::random_unit_rows(rng, n, d), "s");
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Normalize, ThreeFourFive) {
  const auto n = embed::l2_normalize(EmbeddingVector({3.0, 4.0}));
  EXPECT_DOUBLE_EQ(n[0], 0.6);
  EXPECT_DOUBLE_EQ(n[1], 0.8);
  EXPECT_TRUE(n.normalized());
}

TEST(Normalize, UnitVectorIsFixed) {
  const double s = 1.0 / std::sqrt(3.0);
  const auto n = embed::l2_normalize(EmbeddingVector({s, s, s}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(n[i], s, 1e-12);
}

TEST(Normalize, ZeroVectorThrows) {
  EXPECT_THROW(embed::l2_normalize(EmbeddingVector({0.0, 0.0})), DataError);
  EXPECT_EQ(error_of([] { embed::l2_normalize(EmbeddingVector({0.0, 0.0})); }), "degenerate embedding");
}

TEST(EmbeddingVector, RejectsNonFiniteAndFalseNormalizedClaim) {
  EXPECT_THROW(EmbeddingVector({1.0, NAN}), DataError);
  EXPECT_THROW(EmbeddingVector({1.0, INFINITY}), DataError);
  EXPECT_THROW(EmbeddingVector({1.0, 1.0}, true), DataError);
  EXPECT_NO_THROW(EmbeddingVector({1.0, 0.0}, true));
}

TEST(Cosine, Examples) {
  const EmbeddingVector e1({1.0, 0.0}), e2({0.0, 1.0});
  EXPECT_DOUBLE_EQ(embed::cosine_similarity(e1, e1), 1.0);
  EXPECT_DOUBLE_EQ(embed::cosine_similarity(e1, e2), 0.0);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(embed::cosine_similarity(e1, EmbeddingVector({r, r})), 0.70710678, 1e-8);
}

TEST(Cosine, ScaleInvariant) {
  CounterRng rng(11, 0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> u(7), v(7);
    for (auto& x : u) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    const double alpha = rng.uniform(1e-3, 1e3), beta = rng.uniform(1e-3, 1e3);
    std::vector<double> au = u, bv = v;
    for (auto& x : au) x *= alpha;
    for (auto& x : bv) x *= beta;
    EXPECT_NEAR(embed::cosine_similarity(EmbeddingVector(u), EmbeddingVector(v)),
                embed::cosine_similarity(EmbeddingVector(au), EmbeddingVector(bv)), 1e-9);
  }
}

TEST(Cosine, ErrorsOnZeroOrMismatch) {
  EXPECT_THROW(embed::cosine_similarity(EmbeddingVector({0.0, 0.0}), EmbeddingVector({1.0, 0.0})), DataError);
  EXPECT_THROW(embed::cosine_similarity(EmbeddingVector({1.0}), EmbeddingVector({1.0, 0.0})), DataError);
}

TEST(PairwiseSimilarity, OrthonormalGivesIdentity) {
  const EmbeddingSet e(2, {1.0f, 0.0f, 0.0f, 1.0f});
  const auto s = embed::pairwise_similarity(e, e);
  EXPECT_TRUE(s.entries.isApprox(Eigen::MatrixXd::Identity(2, 2)));
  EXPECT_EQ(s.metric, "cosine");
}

TEST(PairwiseSimilarity, MatchesScalarLoop) {
  const EmbeddingSet a = random_set(3, 3, 5), b = random_set(4, 2, 5);
  const auto s = embed::pairwise_similarity(a, b);
  ASSERT_EQ(s.entries.rows(), 3);
  ASSERT_EQ(s.entries.cols(), 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      EXPECT_NEAR(s.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                  embed::cosine_similarity(a.row(i), b.row(j)), 1e-12);
  const auto single = embed::pairwise_similarity(a.select(std::vector<std::size_t>{1}), b.select(std::vector<std::size_t>{0}));
  EXPECT_NEAR(single.entries(0, 0), embed::cosine_similarity(a.row(1), b.row(0)), 1e-12);
}

TEST(PairwiseSimilarity, SelfIsSymmetricWithUnitDiagonal) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EmbeddingSet a = random_set(seed, 6, 9);
    const auto s = embed::pairwise_similarity(a, a).entries;
    for (Eigen::Index i = 0; i < 6; ++i) {
      EXPECT_NEAR(s(i, i), 1.0, 1e-6);
      for (Eigen::Index j = 0; j < 6; ++j) EXPECT_NEAR(s(i, j), s(j, i), 1e-9);
    }
  }
}

TEST(PairwiseSimilarity, DimMismatchThrows) {
  EXPECT_THROW(embed::pairwise_similarity(random_set(1, 2, 3), random_set(1, 2, 4)), DataError);
}

TEST(EmbeddingSet, ShapeChecksAndSelect) {
  EXPECT_THROW(EmbeddingSet(3, std::vector<float>(7)), DataError);
  EXPECT_THROW(EmbeddingSet(3, {}), DataError);
  const EmbeddingSet s = random_set(5, 4, 3);
  const auto picked = s.select(std::vector<std::size_t>{2, 0});
  ASSERT_EQ(picked.rows(), 2u);
  EXPECT_TRUE(std::equal(picked.row_span(0).begin(), picked.row_span(0).end(), s.row_span(2).begin()));
  EXPECT_TRUE(std::equal(picked.row_span(1).begin(), picked.row_span(1).end(), s.row_span(0).begin()));
  EXPECT_THROW(s.select(std::vector<std::size_t>{4}), DataError);
}

TEST(EmbeddingSet, DirectionsAreUnitInDouble) {
  const EmbeddingSet s = random_set(6, 5, 8);
  const Eigen::MatrixXd d = s.directions();
  for (Eigen::Index i = 0; i < d.rows(); ++i) EXPECT_NEAR(d.row(i).norm(), 1.0, 1e-15);
}

TEST(Softmax, StableAndNormalized) {
  const std::vector<double> x{1000.0, 1001.0, 999.0};
  const auto p = softmax(x);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
  EXPECT_GT(p[1], p[0]);
  const auto q = softmax(std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(q[0], 0.7310585786, 1e-10);
  EXPECT_NEAR(entropy(std::vector<double>{0.5, 0.5}), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(entropy(std::vector<double>{1.0, 0.0}), 0.0);
}

TEST(ClassScores, ArgmaxTiesGoLow) {
  const ClassScores s = scores_with_softmax({0.3, 0.3, 0.1}, 0.01);
  EXPECT_EQ(s.argmax(), 0u);
}

// CPEB / CPEA

TEST(Cpeb, RoundTripIsBitExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EmbeddingSet s = random_set(seed, 1 + seed, 3 + seed);
    const auto bytes = io::encode_embedding_set(s);
    EXPECT_EQ(bytes.size(), 16 + 4 * s.data().size());
    const auto back = io::decode_embedding_set(bytes, "s");
    EXPECT_EQ(back, s);
    EXPECT_EQ(std::memcmp(back.data().data(), s.data().data(), 4 * s.data().size()), 0);
  }
}

TEST(Cpeb, FileRoundTrip) {
  testkit::TempDir dir("cpeb");
  const EmbeddingSet s = random_set(9, 4, 6);
  io::save_embedding_set(s, dir.path() / "x.cpeb");
  const auto back = io::load_embedding_set(dir.path() / "x.cpeb");
  EXPECT_TRUE(std::equal(back.data().begin(), back.data().end(), s.data().begin()));
}

TEST(Cpeb, HeaderLayout) {
  const EmbeddingSet s(2, {1.0f, 0.0f, 0.0f, 1.0f, 0.6f, 0.8f});
  const auto b = io::encode_embedding_set(s);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "CPEB");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(b[6], 0);
  EXPECT_EQ(b[7], 0);
  EXPECT_EQ(b[8], 3);   // rows, little-endian
  EXPECT_EQ(b[12], 2);  // dim
  float first;
  std::memcpy(&first, b.data() + 16, 4);
  EXPECT_EQ(first, 1.0f);
}

TEST(Cpeb, ErrorPaths) {
  const EmbeddingSet s = random_set(1, 10, 4);
  auto bytes = io::encode_embedding_set(s);

  auto wrong_magic = bytes;
  wrong_magic[0] = 'X';
  EXPECT_EQ(error_of([&] { io::decode_embedding_set(wrong_magic); }), "not a CPEB file");

  auto short_payload = bytes;
  short_payload.resize(bytes.size() - 4 * 4);  // header says 10 rows, 9 present
  EXPECT_EQ(error_of([&] { io::decode_embedding_set(short_payload); }), "truncated");
  EXPECT_THROW(io::decode_embedding_set(short_payload), ParseError);

  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(error_of([&] { io::decode_embedding_set(trailing); }), "trailing bytes after payload");

  auto version = bytes;
  version[4] = 2;
  EXPECT_THROW(io::decode_embedding_set(version), ParseError);
  auto dtype = bytes;
  dtype[6] = 1;
  EXPECT_THROW(io::decode_embedding_set(dtype), ParseError);

  EXPECT_EQ(error_of([] { io::decode_embedding_set(std::vector<std::uint8_t>{'C', 'P'}); }), "not a CPEB file");
  EXPECT_EQ(error_of([&] { io::decode_embedding_set(std::span(bytes).first(10)); }), "truncated");

  auto empty = bytes;
  empty.resize(16);
  std::memset(empty.data() + 8, 0, 4);
  EXPECT_EQ(error_of([&] { io::decode_embedding_set(empty); }), "empty shape in header");
}

TEST(Cpeb, NormalizationIsCheckedUnlessWaived) {
  const EmbeddingSet raw(2, {3.0f, 4.0f});
  const auto bytes = io::encode_embedding_set(raw);
  EXPECT_THROW(io::decode_embedding_set(bytes), DataError);
  io::LoadOptions lax;
  lax.require_normalized = false;
  EXPECT_EQ(io::decode_embedding_set(bytes, {}, lax), raw);
}

TEST(Cpeb, MissingFileNamesPath) {
  const std::string msg = error_of([] { io::load_embedding_set("/nonexistent/dir/v.cpeb"); });
  EXPECT_NE(msg.find("/nonexistent/dir/v.cpeb"), std::string::npos);
}

TEST(Cpea, RoundTripAndValidation) {
  const AttentionMap m(2, 3, {0.0f, 1.0f, 2.0f, 3.0f, 4.0f, 5.0f});
  const auto bytes = io::encode_attention_map(m);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CPEA");
  EXPECT_EQ(bytes.size(), 4 + 2 + 4 + 4 + 6 * 4u);
  const auto back = io::decode_attention_map(bytes);
  EXPECT_EQ(back.height(), 2u);
  EXPECT_EQ(back.width(), 3u);
  EXPECT_EQ(back.at(1, 2), 5.0f);

  EXPECT_THROW(AttentionMap(1, 2, {1.0f, -0.5f}), DataError);
  EXPECT_THROW(AttentionMap(1, 2, {1.0f}), DataError);
  auto wrong = bytes;
  wrong[3] = 'B';
  EXPECT_EQ(error_of([&] { io::decode_attention_map(wrong); }), "not a CPEA file");
  auto cut = bytes;
  cut.pop_back();
  EXPECT_EQ(error_of([&] { io::decode_attention_map(cut); }), "truncated");
}

// Manifest

namespace {

nlohmann::json small_manifest() {
  return nlohmann::json::parse(R"({
    "dataset_name": "tiny",
    "text_embeddings": "text.cpeb",
    "classes": [
      {"class_id": 0, "given_name": "hellebore",
       "synonyms": [{"text": "hellebore", "row": 0, "prompt_row": 1, "is_original": true},
                    {"text": "christmas rose", "row": 2}],
       "descriptions": [{"text": "with nodding flowers", "rows": [3, 5]}]},
      {"class_id": 4, "given_name": "daisy",
       "synonyms": [{"text": "daisy", "row": 5, "is_original": true}],
       "descriptions": []}
    ],
    "images": [
      {"image_id": "a", "true_class_id": 4, "views": "views/a.cpeb", "attention": "attn/a.cpea",
       "crops": [[0.1, 0.2, 0.5, 0.5, false], [0, 0, 1, 1, true]]}
    ]
  })");
}

}  // namespace

TEST(Manifest, ParsesAndRoundTrips) {
  const Manifest m = parse_manifest(small_manifest(), "/data/set");
  ASSERT_EQ(m.classes.size(), 2u);
  EXPECT_EQ(m.classes[0].synonyms[0].prompt_row, std::optional<std::size_t>(1));
  EXPECT_FALSE(m.classes[0].synonyms[1].prompt_row.has_value());
  EXPECT_EQ(m.classes[0].descriptions[0].row_begin, 3u);
  EXPECT_EQ(m.class_index(4), 1u);
  EXPECT_THROW(m.class_index(7), DataError);
  EXPECT_EQ(m.resolve("views/a.cpeb"), std::filesystem::path("/data/set/views/a.cpeb"));
  ASSERT_EQ(m.images[0].crops.size(), 2u);
  EXPECT_TRUE(m.images[0].crops[1].hflip);

  const Manifest again = parse_manifest(manifest_to_json(m), "/data/set");
  EXPECT_EQ(manifest_to_json(again), manifest_to_json(m));
}

TEST(Manifest, InvariantViolations) {
  auto j = small_manifest();
  j["classes"][1]["class_id"] = 0;
  EXPECT_NE(error_of([&] { parse_manifest(j); }).find("duplicate class id"), std::string::npos);

  j = small_manifest();
  j["classes"][1]["synonyms"][0]["is_original"] = false;
  EXPECT_NE(error_of([&] { parse_manifest(j); }).find("is_original"), std::string::npos);

  j = small_manifest();
  j["classes"][0]["descriptions"][0]["rows"] = {3, 4};
  EXPECT_NE(error_of([&] { parse_manifest(j); }).find("one row per synonym"), std::string::npos);

  j = small_manifest();
  j["images"][0]["true_class_id"] = 9;
  EXPECT_THROW(parse_manifest(j), DataError);

  j = small_manifest();
  j["images"][0]["crops"][0] = {0.8, 0.0, 0.5, 0.5, false};
  EXPECT_THROW(parse_manifest(j), DataError);

  j = small_manifest();
  j.erase("classes");
  EXPECT_THROW(parse_manifest(j), ParseError);

  j = small_manifest();
  j["images"][0]["crops"][0] = {0.1, 0.2};
  EXPECT_THROW(parse_manifest(j), ParseError);
}

TEST(Manifest, RowBoundsAgainstText) {
  const Manifest m = parse_manifest(small_manifest());
  EXPECT_NO_THROW(validate_rows(m, random_set(1, 6, 4)));
  EXPECT_THROW(validate_rows(m, random_set(1, 5, 4)), DataError);
}

TEST(Manifest, MalformedFile) {
  testkit::TempDir dir("manifest");
  std::ofstream(dir.path() / "m.json") << "{ not json";
  EXPECT_THROW(load_manifest(dir.path() / "m.json"), ParseError);
  EXPECT_THROW(load_manifest(dir.path() / "missing.json"), DataError);
}

TEST(CropJson, RoundTrip) {
  const CropSpec c{0.125, 0.25, 0.5, 0.75, true, 0};
  EXPECT_EQ(crop_from_json(crop_to_json(c)), c);
  EXPECT_EQ(crop_to_json(c).dump(), "[0.125,0.25,0.5,0.75,true]");
}
