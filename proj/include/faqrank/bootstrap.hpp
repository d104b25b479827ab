// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bootstrap sparse-feature extraction: grow the feature store from the
// model's ranking errors, retrain, repeat until dev accuracy stops
// improving.

#pragma once

#include <algorithm>
#include <iostream>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "faqrank/corpus.hpp"
#include "faqrank/features.hpp"
#include "faqrank/model.hpp"
#include "faqrank/trainer.hpp"

namespace faqrank {

struct BootstrapConfig {
  int max_iterations = 10;
  std::size_t max_features = 1500;
};

// Sparse-feature candidates of one query under the current model.
// Step 1: if the rank-1 candidate is relevant, nothing to learn.
// Step 2: C+ = first relevant candidate in the ranking; {C-} = irrelevant
// candidates scoring strictly above C+.
// Step 3: keep the features of (query, C+) that fire for no C-.
inline std::vector<SparseKey> extract_for_query(const Question& query,
                                                const std::vector<const Question*>& candidates,
                                                const std::vector<double>& scores,
                                                const std::vector<char>& relevant,
                                                const EmbeddingTable& emb,
                                                const FeatureConfig& cfg = {}) {
  std::size_t n = candidates.size();
  std::vector<std::size_t> ranked(n);
  std::iota(ranked.begin(), ranked.end(), 0);
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  if (relevant[ranked[0]]) return {};

  std::size_t cplus = kUnaligned;
  for (std::size_t r : ranked) {
    if (relevant[r]) {
      cplus = r;
      break;
    }
  }
  if (cplus == kUnaligned) throw ParseError("query has no relevant candidate");

  auto candidate_keys = [&](std::size_t ci) {
    Alignment a = best_alignment(similarity_matrix(query, *candidates[ci], emb),
                                 cfg.strategy);
    return sparse_candidates(query, *candidates[ci], a);
  };

  std::unordered_set<std::string> negative;
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant[i] || scores[i] <= scores[cplus]) continue;
    for (const SparseKey& k : candidate_keys(i)) negative.insert(k.encoded());
  }

  std::vector<SparseKey> kept;
  for (SparseKey& k : candidate_keys(cplus)) {
    if (!negative.count(k.encoded())) kept.push_back(std::move(k));
  }
  return kept;
}

struct BootstrapIterLog {
  int iteration = 0;
  std::size_t features_added = 0;
  std::size_t total_features = 0;
  double dev_top1 = 0.0;
};

struct BootstrapResult {
  FeatureStore store;
  ScoringModel model;
  std::vector<BootstrapIterLog> log;
  double best_dev_top1 = 0.0;
};

inline void write_bootstrap_log(const std::vector<BootstrapIterLog>& log,
                                std::ostream& out) {
  out << "iteration\tfeatures_added\ttotal_features\tdev_top1\n";
  char buf[128];
  for (const BootstrapIterLog& e : log) {
    std::snprintf(buf, sizeof(buf), "%d\t%zu\t%zu\t%.4f\n", e.iteration,
                  e.features_added, e.total_features, e.dev_top1);
    out << buf;
  }
}

// Everything bootstrap needs to retrain from scratch each iteration.
struct BootstrapContext {
  const Archive& train_archive;
  const Archive& dev_archive;
  const EmbeddingTable& emb;
  const IdfTable& idf;
  RankTrainConfig train_cfg;
  FeatureConfig feature_cfg;
  std::uint64_t model_seed = 0;
  std::size_t hidden_dim = 0;
  HiddenActivation activation = HiddenActivation::Tanh;
  std::ostream* log_stream = nullptr;
};

// Iterates extract -> register -> retrain-from-scratch. Stops when dev
// top-1 fails to improve, when no new features appear, or at the iteration
// cap. Returns the best-on-dev model with the store truncated to the
// features that model was trained with.
inline BootstrapResult bootstrap(const ScoringModel& seed_model,
                                 const BootstrapContext& ctx,
                                 const BootstrapConfig& cfg = {}) {
  if (seed_model.max_sparse() != 0) {
    throw InternalError("bootstrap seed model must be dense-only");
  }
  BootstrapResult result;
  result.model = seed_model;

  FeatureStore empty_store;
  std::vector<QueryInstance> dev_instances = build_instances(
      ctx.dev_archive, ctx.emb, ctx.idf, empty_store, ctx.feature_cfg);
  result.best_dev_top1 = instances_top1(seed_model, dev_instances);
  std::size_t best_store_size = 0;

  ScoringModel current = seed_model;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    // Score the training queries with the current model and current store.
    std::vector<QueryInstance> train_instances = build_instances(
        ctx.train_archive, ctx.emb, ctx.idf, result.store, ctx.feature_cfg);

    std::size_t added = 0;
    bool cap_hit = false;
    for (const QueryInstance& inst : train_instances) {
      std::vector<double> scores(inst.features.size());
      for (std::size_t i = 0; i < inst.features.size(); ++i) {
        scores[i] = score(current, inst.features[i]);
      }
      const Question& query =
          ctx.train_archive.entries[ctx.train_archive.index_of.at(inst.query_id)]
              .question;
      std::vector<const Question*> candidates;
      candidates.reserve(inst.candidate_ids.size());
      for (const std::string& cid : inst.candidate_ids) {
        candidates.push_back(&ctx.train_archive.find(cid)->question);
      }
      for (const SparseKey& k :
           extract_for_query(query, candidates, scores, inst.relevant, ctx.emb,
                             ctx.feature_cfg)) {
        if (result.store.find(k)) continue;
        if (result.store.size() >= cfg.max_features) {
          cap_hit = true;
          break;
        }
        result.store.add(k);
        ++added;
      }
      if (cap_hit) break;
    }
    if (cap_hit && ctx.log_stream) {
      *ctx.log_stream << "bootstrap: feature cap " << cfg.max_features
                      << " reached at iteration " << iter << "\n";
    }
    if (added == 0) break;  // nothing new to learn from

    // Retrain from scratch; new sparse inputs start at their seeded init.
    ScoringModel fresh = init_model(kDenseDim + result.store.size(), ctx.hidden_dim,
                                    ctx.model_seed, ctx.activation);
    std::vector<QueryInstance> new_train = build_instances(
        ctx.train_archive, ctx.emb, ctx.idf, result.store, ctx.feature_cfg);
    std::vector<QueryInstance> new_dev = build_instances(
        ctx.dev_archive, ctx.emb, ctx.idf, result.store, ctx.feature_cfg);
    TrainResult tr = train_rank(std::move(fresh), new_train, new_dev, ctx.train_cfg);

    double dev_top1 = instances_top1(tr.model, new_dev);
    result.log.push_back({iter, added, result.store.size(), dev_top1});
    if (ctx.log_stream) {
      *ctx.log_stream << "bootstrap iteration " << iter << ": +" << added
                      << " features (total " << result.store.size()
                      << "), dev top-1 " << dev_top1 << "\n";
    }
    current = tr.model;
    if (dev_top1 > result.best_dev_top1) {
      result.best_dev_top1 = dev_top1;
      result.model = tr.model;
      best_store_size = result.store.size();
    } else {
      break;  // converged: one iteration without improvement
    }
  }

  result.store.truncate(best_store_size);
  return result;
}

}  // namespace faqrank
