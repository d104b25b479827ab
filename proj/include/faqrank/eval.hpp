// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Ranking, evaluation metrics (top-1, MAP, MRR) and the three baseline
// scorers. Evaluation over queries is independent per query; results are
// aggregated in query order.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "faqrank/corpus.hpp"
#include "faqrank/features.hpp"

namespace faqrank {

// Scores a candidate question against a query question.
using Scorer = std::function<double(const Question& query, const Question& candidate)>;

struct RankedItem {
  std::string candidate_id;
  double score = 0.0;
  bool relevant = false;
};

// Full descending ordering of a query's candidate pool; ties keep archive
// order.
struct RankedList {
  std::string query_id;
  std::vector<RankedItem> items;
};

inline RankedList rank(const Scorer& scorer, const Archive& archive,
                       std::size_t query_index) {
  const ArchiveEntry& qe = archive.entries[query_index];
  std::vector<std::size_t> cands = archive.candidates_for(query_index);
  if (cands.empty()) throw ParseError("empty candidate pool for query " + qe.question.id);
  RankedList out;
  out.query_id = qe.question.id;
  out.items.reserve(cands.size());
  for (std::size_t ci : cands) {
    const ArchiveEntry& ce = archive.entries[ci];
    out.items.push_back({ce.question.id, scorer(qe.question, ce.question),
                         archive.is_relevant(qe.question.id, ce.question.id)});
  }
  std::stable_sort(out.items.begin(), out.items.end(),
                   [](const RankedItem& a, const RankedItem& b) {
                     return a.score > b.score;
                   });
  return out;
}

// Ranks every query entry of the archive, fanning out over `threads`
// workers. Results come back in query order regardless of thread count.
inline std::vector<RankedList> rank_all(const Scorer& scorer, const Archive& archive,
                                        unsigned threads = 0) {
  std::vector<std::size_t> queries = archive.query_indices();
  std::vector<RankedList> out(queries.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::size_t>(queries.size(), 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      out[i] = rank(scorer, archive, queries[i]);
    }
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < queries.size();
           i = next.fetch_add(1)) {
        out[i] = rank(scorer, archive, queries[i]);
      }
    });
  }
  for (std::thread& th : pool) th.join();
  return out;
}

// Fraction of queries whose rank-1 candidate is relevant.
inline double top1_accuracy(const std::vector<RankedList>& results) {
  if (results.empty()) return 0.0;
  std::size_t correct = 0;
  for (const RankedList& r : results) {
    if (!r.items.empty() && r.items.front().relevant) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(results.size());
}

struct MapMrrResult {
  double map = 0.0;
  double mrr = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // queries with zero relevant candidates
};

// AP = mean over relevant items of precision at their ranks; RR = 1/rank of
// the first relevant item. Queries with no relevant candidate are excluded
// and counted.
inline MapMrrResult map_mrr(const std::vector<RankedList>& results) {
  MapMrrResult out;
  double ap_sum = 0.0, rr_sum = 0.0;
  for (const RankedList& r : results) {
    std::size_t rel_seen = 0;
    double ap = 0.0, rr = 0.0;
    for (std::size_t rank1 = 1; rank1 <= r.items.size(); ++rank1) {
      if (!r.items[rank1 - 1].relevant) continue;
      ++rel_seen;
      ap += static_cast<double>(rel_seen) / static_cast<double>(rank1);
      if (rel_seen == 1) rr = 1.0 / static_cast<double>(rank1);
    }
    if (rel_seen == 0) {
      ++out.excluded;
      continue;
    }
    ap_sum += ap / static_cast<double>(rel_seen);
    rr_sum += rr;
    ++out.evaluated;
  }
  if (out.evaluated > 0) {
    out.map = ap_sum / static_cast<double>(out.evaluated);
    out.mrr = rr_sum / static_cast<double>(out.evaluated);
  }
  return out;
}

enum class BaselineMethod { BagOfWords, IdfVsm, Similarity };

// BagOfWords counts matched query token types (each type once); IDF-VSM is
// the cosine of IDF-weighted presence vectors; Similarity is the dense f0
// feature alone.
inline double baseline_score(BaselineMethod method, const Question& query,
                             const Question& candidate, const EmbeddingTable& emb,
                             const IdfTable& idf) {
  switch (method) {
    case BaselineMethod::BagOfWords: {
      std::unordered_set<std::string> cand_words;
      for (const Token& t : candidate.tokens) cand_words.insert(t.surface);
      std::unordered_set<std::string> counted;
      double n = 0.0;
      for (const Token& t : query.tokens) {
        if (cand_words.count(t.surface) && counted.insert(t.surface).second) n += 1.0;
      }
      return n;
    }
    case BaselineMethod::IdfVsm: {
      std::unordered_set<std::string> q_words, c_words;
      for (const Token& t : query.tokens) q_words.insert(t.surface);
      for (const Token& t : candidate.tokens) c_words.insert(t.surface);
      double dot = 0.0, nq = 0.0, nc = 0.0;
      for (const std::string& w : q_words) {
        double v = idf.idf(w);
        nq += v * v;
        if (c_words.count(w)) dot += v * v;
      }
      for (const std::string& w : c_words) {
        double v = idf.idf(w);
        nc += v * v;
      }
      if (nq == 0.0 || nc == 0.0) return 0.0;
      return dot / (std::sqrt(nq) * std::sqrt(nc));
    }
    case BaselineMethod::Similarity: {
      Alignment a = best_alignment(similarity_matrix(query, candidate, emb));
      return dense_similarity(a, idf_weights(query, idf));
    }
  }
  return 0.0;
}

inline Scorer make_baseline_scorer(BaselineMethod method, const EmbeddingTable& emb,
                                   const IdfTable& idf) {
  return [method, &emb, &idf](const Question& q, const Question& c) {
    return baseline_score(method, q, c, emb, idf);
  };
}

// Results TSV: query_id, rank, candidate_id, score, is_relevant.
inline void write_results_tsv(const std::vector<RankedList>& results,
                              std::ostream& out) {
  out << "query_id\trank\tcandidate_id\tscore\tis_relevant\n";
  char buf[64];
  for (const RankedList& r : results) {
    for (std::size_t i = 0; i < r.items.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.12g", r.items[i].score);
      out << r.query_id << '\t' << (i + 1) << '\t' << r.items[i].candidate_id << '\t'
          << buf << '\t' << (r.items[i].relevant ? 1 : 0) << '\n';
    }
  }
}

}  // namespace faqrank
