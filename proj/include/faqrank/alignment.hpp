// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Word-similarity matrix for a question pair and the best word alignment
// derived from it. Pure functions over immutable inputs.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "faqrank/corpus.hpp"
#include "faqrank/util.hpp"

namespace faqrank {

inline constexpr std::size_t kUnaligned = std::numeric_limits<std::size_t>::max();

// max(0, cosine(v_a, v_b)); 0 when either word is out of vocabulary or has
// a zero-norm vector.
inline double word_similarity(const Token& a, const Token& b,
                              const EmbeddingTable& emb) {
  const std::vector<double>* va = emb.find(a.surface);
  const std::vector<double>* vb = emb.find(b.surface);
  if (!va || !vb) return 0.0;
  if (a.surface == b.surface) {
    // Self-cosine: exactly 1 unless the vector is all-zero.
    double norm2 = 0.0;
    for (double x : *va) norm2 += x * x;
    return norm2 > 0.0 ? 1.0 : 0.0;
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < va->size(); ++i) {
    dot += (*va)[i] * (*vb)[i];
    na += (*va)[i] * (*va)[i];
    nb += (*vb)[i] * (*vb)[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  double cos = dot / (std::sqrt(na) * std::sqrt(nb));
  if (cos > 1.0) cos = 1.0;  // rounding guard
  return cos > 0.0 ? cos : 0.0;
}

// Row i = query word i, column j = candidate word j, cells in [0,1].
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cells;  // row-major

  double at(std::size_t i, std::size_t j) const { return cells[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) { return cells[i * cols + j]; }
};

inline SimilarityMatrix similarity_matrix(const Question& query,
                                          const Question& candidate,
                                          const EmbeddingTable& emb) {
  if (query.tokens.empty() || candidate.tokens.empty()) {
    throw ParseError("empty question");
  }
  SimilarityMatrix m;
  m.rows = query.tokens.size();
  m.cols = candidate.tokens.size();
  m.cells.resize(m.rows * m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      m.at(i, j) = word_similarity(query.tokens[i], candidate.tokens[j], emb);
    }
  }
  return m;
}

// Per query word: candidate position (kUnaligned when the row maximum is 0)
// and the matrix cell at that position.
struct Alignment {
  std::vector<std::size_t> position;
  std::vector<double> score;

  std::size_t size() const { return position.size(); }
  bool aligned(std::size_t i) const { return position[i] != kUnaligned; }
};

enum class AlignStrategy {
  // Per-query-word argmax; many-to-one permitted; ties to the smallest
  // candidate index. O(mn) and deterministic.
  Argmax,
  // Repeatedly take the globally largest remaining cell and retire its row
  // and column; stops when the largest remaining cell is 0.
  GreedyOneToOne,
};

inline Alignment best_alignment(const SimilarityMatrix& m,
                                AlignStrategy strategy = AlignStrategy::Argmax) {
  Alignment a;
  a.position.assign(m.rows, kUnaligned);
  a.score.assign(m.rows, 0.0);
  if (m.rows == 0 || m.cols == 0) return a;

  if (strategy == AlignStrategy::Argmax) {
    for (std::size_t i = 0; i < m.rows; ++i) {
      std::size_t best_j = 0;
      double best = m.at(i, 0);
      for (std::size_t j = 1; j < m.cols; ++j) {
        if (m.at(i, j) > best) {
          best = m.at(i, j);
          best_j = j;
        }
      }
      if (best > 0.0) {
        a.position[i] = best_j;
        a.score[i] = best;
      }
    }
    return a;
  }

  std::vector<bool> row_done(m.rows, false), col_done(m.cols, false);
  for (std::size_t step = 0; step < std::min(m.rows, m.cols); ++step) {
    double best = 0.0;
    std::size_t best_i = kUnaligned, best_j = kUnaligned;
    for (std::size_t i = 0; i < m.rows; ++i) {
      if (row_done[i]) continue;
      for (std::size_t j = 0; j < m.cols; ++j) {
        if (col_done[j]) continue;
        if (m.at(i, j) > best) {
          best = m.at(i, j);
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_i == kUnaligned) break;  // largest remaining cell is 0
    a.position[best_i] = best_j;
    a.score[best_i] = best;
    row_done[best_i] = true;
    col_done[best_j] = true;
  }
  return a;
}

}  // namespace faqrank
