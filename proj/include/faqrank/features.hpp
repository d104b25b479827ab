// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense alignment features (8 per direction, 16 total) and the sparse
// lexical feature store fed by the bootstrap loop.

#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "faqrank/alignment.hpp"
#include "faqrank/corpus.hpp"

namespace faqrank {

inline constexpr std::size_t kDenseDim = 16;
inline constexpr std::size_t kImportantWords = 5;

// IDF weights for each token of a question, in token order.
inline std::vector<double> idf_weights(const Question& q, const IdfTable& idf) {
  std::vector<double> out;
  out.reserve(q.tokens.size());
  for (const Token& t : q.tokens) out.push_back(idf.idf(t.surface));
  return out;
}

// f0: IDF-weighted mean of alignment scores. Unaligned words contribute 0
// to the numerator.
inline double dense_similarity(const Alignment& align, const std::vector<double>& idf) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < align.size(); ++i) {
    num += align.score[i] * idf[i];
    den += idf[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

// f1: sum of (|align_i - align_{i-1} - 1|)^2 over consecutive aligned query
// words; unaligned words are skipped and the chain links across them. By
// default the sum is divided by the number of consecutive pairs so its
// scale does not grow with query length; normalize=false gives the raw sum.
inline double dense_dispersion(const Alignment& align, bool normalize = true) {
  double sum = 0.0;
  std::size_t pairs = 0;
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t i = 0; i < align.size(); ++i) {
    if (!align.aligned(i)) continue;
    double pos = static_cast<double>(align.position[i]);
    if (have_prev) {
      double gap = std::abs(pos - prev - 1.0);
      sum += gap * gap;
      ++pairs;
    }
    prev = pos;
    have_prev = true;
  }
  if (!normalize) return sum;
  return pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
}

// f2: IDF mass fraction of unaligned query words.
inline double dense_penalty(const Alignment& align, const std::vector<double>& idf) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < align.size(); ++i) {
    if (!align.aligned(i)) num += idf[i];
    den += idf[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

// f3..f7: sim * idf for the 5 highest-IDF query words (ties by query
// position), padded with zeros past the query length.
inline std::array<double, kImportantWords> dense_important_words(
    const Alignment& align, const std::vector<double>& idf) {
  std::vector<std::size_t> order(align.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return idf[a] > idf[b];
  });
  std::array<double, kImportantWords> out{};
  for (std::size_t k = 0; k < kImportantWords && k < order.size(); ++k) {
    std::size_t i = order[k];
    out[k] = align.score[i] * idf[i];
  }
  return out;
}

struct FeatureConfig {
  AlignStrategy strategy = AlignStrategy::Argmax;
  bool normalize_dispersion = true;
};

struct DenseFeatures {
  std::array<double, 8> forward{};
  std::array<double, 8> reverse{};

  std::array<double, kDenseDim> flat() const {
    std::array<double, kDenseDim> out;
    std::copy(forward.begin(), forward.end(), out.begin());
    std::copy(reverse.begin(), reverse.end(), out.begin() + 8);
    return out;
  }
};

namespace detail {

inline std::array<double, 8> direction_features(const Alignment& align,
                                                const std::vector<double>& idf,
                                                const FeatureConfig& cfg) {
  std::array<double, 8> f{};
  f[0] = dense_similarity(align, idf);
  f[1] = dense_dispersion(align, cfg.normalize_dispersion);
  f[2] = dense_penalty(align, idf);
  auto imp = dense_important_words(align, idf);
  std::copy(imp.begin(), imp.end(), f.begin() + 3);
  return f;
}

}  // namespace detail

// The reverse direction recomputes its own alignment (argmax alignment is
// not symmetric) and weights by the candidate side's IDFs.
inline DenseFeatures extract_dense(const Question& query, const Question& candidate,
                                   const EmbeddingTable& emb, const IdfTable& idf,
                                   const FeatureConfig& cfg = {}) {
  DenseFeatures out;
  Alignment fwd = best_alignment(similarity_matrix(query, candidate, emb), cfg.strategy);
  Alignment rev = best_alignment(similarity_matrix(candidate, query, emb), cfg.strategy);
  out.forward = detail::direction_features(fwd, idf_weights(query, idf), cfg);
  out.reverse = detail::direction_features(rev, idf_weights(candidate, idf), cfg);
  return out;
}

enum class SparseTemplate { QWord, CWord, Pair };

inline const char* to_string(SparseTemplate t) {
  switch (t) {
    case SparseTemplate::QWord: return "QWORD";
    case SparseTemplate::CWord: return "CWORD";
    case SparseTemplate::Pair: return "PAIR";
  }
  return "?";
}

inline SparseTemplate sparse_template_from(const std::string& s) {
  if (s == "QWORD") return SparseTemplate::QWord;
  if (s == "CWORD") return SparseTemplate::CWord;
  if (s == "PAIR") return SparseTemplate::Pair;
  throw ParseError("unknown sparse template: " + s);
}

// Pair payloads join the two surfaces with a space; the default tokenizer
// never emits whitespace inside a surface.
struct SparseKey {
  SparseTemplate tpl;
  std::string payload;

  bool operator==(const SparseKey& o) const {
    return tpl == o.tpl && payload == o.payload;
  }
  std::string encoded() const {
    return std::string(to_string(tpl)) + '\x1f' + payload;
  }
};

// Registry of sparse features with dense, stable indices. Registration
// happens only during bootstrap; evaluation treats the store as frozen.
class FeatureStore {
 public:
  std::size_t size() const { return keys_.size(); }
  const SparseKey& key(std::size_t index) const { return keys_[index]; }

  std::optional<std::size_t> find(const SparseKey& k) const {
    auto it = index_.find(k.encoded());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t add(const SparseKey& k) {
    auto it = index_.find(k.encoded());
    if (it != index_.end()) return it->second;
    std::size_t idx = keys_.size();
    index_.emplace(k.encoded(), idx);
    keys_.push_back(k);
    return idx;
  }

  void truncate(std::size_t n) {
    while (keys_.size() > n) {
      index_.erase(keys_.back().encoded());
      keys_.pop_back();
    }
  }

  // TSV: index, template, payload.
  void save_stream(std::ostream& out) const {
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      out << i << '\t' << to_string(keys_[i].tpl) << '\t' << keys_[i].payload << '\n';
    }
  }

  static FeatureStore load_stream(std::istream& in) {
    FeatureStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto cols = split(line, '\t');
      if (cols.size() != 3) {
        throw ParseError("feature store: line " + std::to_string(lineno) +
                         " is not 3 columns");
      }
      std::size_t idx = store.add({sparse_template_from(cols[1]), cols[2]});
      if (idx != std::stoull(cols[0])) {
        throw ParseError("feature store: non-contiguous index at line " +
                         std::to_string(lineno));
      }
    }
    return store;
  }

 private:
  std::vector<SparseKey> keys_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Candidate sparse features of an aligned question pair: QWORD(q_i),
// CWORD(c_align_i) and PAIR(q_i, c_align_i) for every aligned query word.
// Order-preserving, deduplicated.
inline std::vector<SparseKey> sparse_candidates(const Question& query,
                                                const Question& candidate,
                                                const Alignment& align) {
  std::vector<SparseKey> out;
  std::unordered_map<std::string, bool> seen;
  auto push = [&](SparseKey k) {
    if (!seen.emplace(k.encoded(), true).second) return;
    out.push_back(std::move(k));
  };
  for (std::size_t i = 0; i < align.size(); ++i) {
    if (!align.aligned(i)) continue;
    const std::string& qw = query.tokens[i].surface;
    const std::string& cw = candidate.tokens[align.position[i]].surface;
    push({SparseTemplate::QWord, qw});
    push({SparseTemplate::CWord, cw});
    push({SparseTemplate::Pair, qw + ' ' + cw});
  }
  return out;
}

// Indices of registered features that fire for this pair; never mutates
// the store.
inline std::vector<std::size_t> fire_sparse(const Question& query,
                                            const Question& candidate,
                                            const Alignment& align,
                                            const FeatureStore& store) {
  std::vector<std::size_t> out;
  for (const SparseKey& k : sparse_candidates(query, candidate, align)) {
    if (auto idx = store.find(k)) out.push_back(*idx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// 16 dense reals plus the fired sparse indices (binary-valued).
struct FeatureVector {
  std::array<double, kDenseDim> dense{};
  std::vector<std::size_t> sparse;
};

inline FeatureVector extract_features(const Question& query, const Question& candidate,
                                      const EmbeddingTable& emb, const IdfTable& idf,
                                      const FeatureStore& store,
                                      const FeatureConfig& cfg = {}) {
  FeatureVector fv;
  Alignment fwd = best_alignment(similarity_matrix(query, candidate, emb), cfg.strategy);
  Alignment rev = best_alignment(similarity_matrix(candidate, query, emb), cfg.strategy);
  DenseFeatures dense;
  dense.forward = detail::direction_features(fwd, idf_weights(query, idf), cfg);
  dense.reverse = detail::direction_features(rev, idf_weights(candidate, idf), cfg);
  fv.dense = dense.flat();
  fv.sparse = fire_sparse(query, candidate, fwd, store);
  return fv;
}

}  // namespace faqrank
