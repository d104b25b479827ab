// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "faqrank/features.hpp"
#include "testutil.hpp"

using namespace faqrank;
using faqrank::testing::make_embeddings;
using faqrank::testing::make_idf;
using faqrank::testing::q;

static Alignment align_of(std::vector<std::size_t> pos, std::vector<double> score) {
  Alignment a;
  a.position = std::move(pos);
  a.score = std::move(score);
  return a;
}

TEST_CASE("dense_similarity is the IDF-weighted mean of alignment scores") {
  CHECK(dense_similarity(align_of({0, 1}, {1.0, 1.0}), {2.0, 5.0}) == 1.0);
  CHECK_THAT(dense_similarity(align_of({0, 1}, {1.0, 0.5}), {2.0, 2.0}),
             Catch::Matchers::WithinAbs(0.75, 1e-12));
  CHECK(dense_similarity(align_of({kUnaligned, kUnaligned}, {0.0, 0.0}), {1.0, 1.0}) ==
        0.0);
}

TEST_CASE("dense_dispersion measures alignment discontinuity") {
  CHECK(dense_dispersion(align_of({0, 1, 2, 3}, {1, 1, 1, 1})) == 0.0);
  CHECK_THAT(dense_dispersion(align_of({0, 2}, {1, 1})),
             Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(dense_dispersion(align_of({4, 0}, {1, 1})),
             Catch::Matchers::WithinAbs(25.0, 1e-12));
  // Unaligned words are skipped; the chain links across them.
  CHECK_THAT(dense_dispersion(align_of({0, kUnaligned, 2}, {1, 0, 1})),
             Catch::Matchers::WithinAbs(1.0, 1e-12));
  // Fewer than two aligned words: no pairs.
  CHECK(dense_dispersion(align_of({3, kUnaligned}, {1, 0})) == 0.0);
  // Raw mode keeps the plain sum.
  CHECK_THAT(dense_dispersion(align_of({0, 2, 4}, {1, 1, 1}), false),
             Catch::Matchers::WithinAbs(2.0, 1e-12));
  CHECK_THAT(dense_dispersion(align_of({0, 2, 4}, {1, 1, 1}), true),
             Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("dense_penalty is the unaligned IDF mass fraction") {
  CHECK(dense_penalty(align_of({0, 1}, {1, 1}), {1.0, 1.0}) == 0.0);
  CHECK(dense_penalty(align_of({kUnaligned, kUnaligned}, {0, 0}), {1.0, 1.0}) == 1.0);
  CHECK_THAT(dense_penalty(align_of({0, kUnaligned}, {1, 0}), {1.0, 3.0}),
             Catch::Matchers::WithinAbs(0.75, 1e-12));
}

TEST_CASE("dense_important_words takes the 5 highest-IDF words") {
  // Two-word query: slots 3..5 are zero padding.
  auto f = dense_important_words(align_of({0, 1}, {0.6, 0.9}), {3.0, 1.0});
  CHECK_THAT(f[0], Catch::Matchers::WithinAbs(1.8, 1e-12));  // idf 3.0 * sim 0.6
  CHECK_THAT(f[1], Catch::Matchers::WithinAbs(0.9, 1e-12));
  CHECK(f[2] == 0.0);
  CHECK(f[3] == 0.0);
  CHECK(f[4] == 0.0);

  // Top word unaligned: slot 1 is 0.
  auto g = dense_important_words(align_of({kUnaligned, 1}, {0.0, 0.9}), {3.0, 1.0});
  CHECK(g[0] == 0.0);
  CHECK_THAT(g[1], Catch::Matchers::WithinAbs(0.9, 1e-12));

  // IDF ties break by query position.
  auto h = dense_important_words(align_of({0, 1}, {0.2, 0.8}), {2.0, 2.0});
  CHECK_THAT(h[0], Catch::Matchers::WithinAbs(0.4, 1e-12));
  CHECK_THAT(h[1], Catch::Matchers::WithinAbs(1.6, 1e-12));
}

TEST_CASE("extract_dense on identical questions") {
  EmbeddingTable emb = make_embeddings(2, {{"pay", {1, 0}}, {"bill", {0, 1}}});
  IdfTable idf = make_idf({{"pay", 2.0}, {"bill", 3.0}});
  DenseFeatures f = extract_dense(q("pay bill"), q("pay bill"), emb, idf);
  CHECK(f.forward == f.reverse);
  CHECK(f.forward[0] == 1.0);  // similarity
  CHECK(f.forward[1] == 0.0);  // dispersion
  CHECK(f.forward[2] == 0.0);  // penalty
}

TEST_CASE("extract_dense when the query is contained in a longer candidate") {
  EmbeddingTable emb = make_embeddings(3, {{"pay", {1, 0, 0}},
                                           {"bill", {0, 1, 0}},
                                           {"online", {0, 0, 1}}});
  IdfTable idf = make_idf({{"pay", 2.0}, {"bill", 2.0}, {"online", 4.0}});
  DenseFeatures f = extract_dense(q("pay bill"), q("pay bill online"), emb, idf);
  CHECK(f.forward[2] == 0.0);  // every query word aligns
  // Reverse direction: "online" has no counterpart; idf mass 4 of 8.
  CHECK_THAT(f.reverse[2], Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("disjoint OOV questions zero everything except the penalty") {
  EmbeddingTable emb = make_embeddings(2, {{"x", {1, 0}}});
  IdfTable idf = make_idf({{"x", 1.0}}, 2.0);
  DenseFeatures f = extract_dense(q("ghost words"), q("unknown tokens"), emb, idf);
  // Every word is unaligned, so the full IDF mass is unmatched: the
  // penalty is 1 in both directions and all other features are 0.
  std::array<double, kDenseDim / 2> want = {0, 0, 1, 0, 0, 0, 0, 0};
  CHECK(f.forward == want);
  CHECK(f.reverse == want);
}

TEST_CASE("forward equals the swapped pair's reverse") {
  testing::SyntheticWorld w = testing::make_world(6);
  Rng rng(41);
  std::vector<std::string> texts = {
      "how do i t0q1 t0q2", "please t0c1 t0c2 now", "t3q1 t3q2",
      "how do i t1q1 t4q2", "what to do t2n1", "t5c1 the t5c2"};
  for (const std::string& a : texts) {
    for (const std::string& b : texts) {
      DenseFeatures ab = extract_dense(q(a), q(b), w.emb, w.idf);
      DenseFeatures ba = extract_dense(q(b), q(a), w.emb, w.idf);
      CHECK(ab.forward == ba.reverse);
      CHECK(ab.reverse == ba.forward);
    }
  }
}

TEST_CASE("f0 and f2 are invariant under uniform IDF scaling, f3..f7 scale") {
  Alignment a = align_of({0, 2, kUnaligned}, {0.9, 0.4, 0.0});
  std::vector<double> idf = {1.0, 2.5, 4.0};
  std::vector<double> scaled = idf;
  const double k = 3.7;
  for (double& v : scaled) v *= k;
  CHECK_THAT(dense_similarity(a, scaled),
             Catch::Matchers::WithinRel(dense_similarity(a, idf), 1e-12));
  CHECK_THAT(dense_penalty(a, scaled),
             Catch::Matchers::WithinRel(dense_penalty(a, idf), 1e-12));
  auto f = dense_important_words(a, idf);
  auto fs = dense_important_words(a, scaled);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK_THAT(fs[i], Catch::Matchers::WithinAbs(f[i] * k, 1e-9));
  }
}

TEST_CASE("dense features are always finite") {
  testing::SyntheticWorld w = testing::make_world(5);
  Rng rng(43);
  std::vector<std::string> words = {"t0q1", "t1c2", "how", "do", "zzz", "t2n1"};
  for (int trial = 0; trial < 100; ++trial) {
    auto sample = [&] {
      std::string s;
      std::size_t n = 1 + rng.next_index(5);
      for (std::size_t i = 0; i < n; ++i) s += words[rng.next_index(words.size())] + " ";
      return s;
    };
    DenseFeatures f = extract_dense(q(sample()), q(sample()), w.emb, w.idf);
    for (double v : f.flat()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("feature store registers, finds and round-trips") {
  FeatureStore store;
  CHECK(store.size() == 0);
  std::size_t i0 = store.add({SparseTemplate::QWord, "vehicle"});
  std::size_t i1 = store.add({SparseTemplate::Pair, "vehicle car"});
  CHECK(i0 == 0);
  CHECK(i1 == 1);
  // Re-adding is idempotent.
  CHECK(store.add({SparseTemplate::QWord, "vehicle"}) == 0);
  CHECK(store.size() == 2);
  CHECK(store.find({SparseTemplate::Pair, "vehicle car"}) == 1);
  CHECK_FALSE(store.find({SparseTemplate::CWord, "vehicle"}).has_value());

  std::ostringstream out;
  store.save_stream(out);
  CHECK(out.str() == "0\tQWORD\tvehicle\n1\tPAIR\tvehicle car\n");
  std::istringstream in(out.str());
  FeatureStore loaded = FeatureStore::load_stream(in);
  CHECK(loaded.size() == 2);
  CHECK(loaded.find({SparseTemplate::Pair, "vehicle car"}) == 1);
}

TEST_CASE("fire_sparse fires only registered features of aligned words") {
  EmbeddingTable emb = make_embeddings(2, {{"vehicle", {1, 0.2}},
                                           {"car", {1, 0.3}},
                                           {"add", {0.2, 1}},
                                           {"ghost", {0, 0}}});
  Question query = q("add vehicle");
  Question cand = q("add car");
  Alignment a = best_alignment(similarity_matrix(query, cand, emb));

  FeatureStore empty;
  CHECK(fire_sparse(query, cand, a, empty).empty());

  FeatureStore store;
  std::size_t pair_idx = store.add({SparseTemplate::Pair, "vehicle car"});
  auto fired = fire_sparse(query, cand, a, store);
  CHECK(fired == std::vector<std::size_t>{pair_idx});
  CHECK(store.size() == 1);  // firing never registers

  // Unaligned words contribute no candidates.
  Question oov_query = q("ghost vehicle");
  Alignment a2 = best_alignment(similarity_matrix(oov_query, cand, emb));
  REQUIRE_FALSE(a2.aligned(0));  // zero-norm vector
  auto keys = sparse_candidates(oov_query, cand, a2);
  for (const SparseKey& k : keys) {
    CHECK(k.payload.find("ghost") == std::string::npos);
  }
}

TEST_CASE("sparse_candidates emits all three templates per aligned word") {
  EmbeddingTable emb = make_embeddings(2, {{"vehicle", {1, 0}}, {"car", {0.9, 0.1}}});
  Question query = q("vehicle");
  Question cand = q("car");
  Alignment a = best_alignment(similarity_matrix(query, cand, emb));
  auto keys = sparse_candidates(query, cand, a);
  REQUIRE(keys.size() == 3);
  CHECK(keys[0] == SparseKey{SparseTemplate::QWord, "vehicle"});
  CHECK(keys[1] == SparseKey{SparseTemplate::CWord, "car"});
  CHECK(keys[2] == SparseKey{SparseTemplate::Pair, "vehicle car"});
}
