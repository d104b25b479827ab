// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Margin-based learning-to-rank training, plus the traditional binary
// classification objective for comparison. Updates are sequential and
// seeded, so identical configs give bit-identical models.

#pragma once

#include <algorithm>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "faqrank/corpus.hpp"
#include "faqrank/features.hpp"
#include "faqrank/model.hpp"

namespace faqrank {

struct RankTrainConfig {
  double margin = 0.03;
  double learning_rate = 0.1;
  int max_epochs = 50;
  int patience = 5;  // epochs of no dev top-1 improvement
  std::uint64_t shuffle_seed = 1;
};

// One training/evaluation query: its candidates in archive order, their
// precomputed feature vectors, and relevance flags. Features are static
// while the sparse store is frozen, so they are extracted once.
struct QueryInstance {
  std::string query_id;
  std::vector<std::string> candidate_ids;
  std::vector<FeatureVector> features;
  std::vector<char> relevant;

  bool has_relevant() const {
    return std::find(relevant.begin(), relevant.end(), char(1)) != relevant.end();
  }
};

// Builds instances for every archive query with >= 1 relevant candidate in
// its pool; queries without one are skipped with a warning.
inline std::vector<QueryInstance> build_instances(const Archive& archive,
                                                  const EmbeddingTable& emb,
                                                  const IdfTable& idf,
                                                  const FeatureStore& store,
                                                  const FeatureConfig& cfg = {},
                                                  std::ostream* warn = nullptr) {
  std::vector<QueryInstance> out;
  for (std::size_t qi : archive.query_indices()) {
    const ArchiveEntry& qe = archive.entries[qi];
    if (qe.question.tokens.empty()) {
      if (warn) *warn << "warning: query '" << qe.question.id << "' has no tokens, skipped\n";
      continue;
    }
    QueryInstance inst;
    inst.query_id = qe.question.id;
    for (std::size_t ci : archive.candidates_for(qi)) {
      const ArchiveEntry& ce = archive.entries[ci];
      if (ce.question.tokens.empty()) continue;
      inst.candidate_ids.push_back(ce.question.id);
      inst.features.push_back(
          extract_features(qe.question, ce.question, emb, idf, store, cfg));
      inst.relevant.push_back(
          archive.is_relevant(qe.question.id, ce.question.id) ? 1 : 0);
    }
    if (!inst.has_relevant()) {
      if (warn) {
        *warn << "warning: query '" << qe.question.id
              << "' has no relevant candidate in its pool, skipped\n";
      }
      continue;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

struct RankLoss {
  double loss = 0.0;
  std::vector<double> dloss_dscore;  // per candidate
  std::size_t cstar = 0;             // index of the first relevant in the ranking
};

// loss = sum_{irrelevant j} max(0, eps + s_j - s_C*) - s_C*, where C* is
// the first relevant candidate in the current ranking (max score; ties go
// to the lowest candidate index). Candidates scoring exactly s_C* are not
// "above" it. Subgradients: +1 per active irrelevant, C* gets -(active)-1.
inline RankLoss rank_loss(const std::vector<double>& scores,
                          const std::vector<char>& relevant, double eps) {
  RankLoss out;
  out.dloss_dscore.assign(scores.size(), 0.0);
  std::optional<std::size_t> cstar;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (relevant[i] && (!cstar || scores[i] > scores[*cstar])) cstar = i;
  }
  if (!cstar) throw ParseError("query has no relevant candidate");
  out.cstar = *cstar;
  double s_star = scores[*cstar];
  std::size_t active = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (relevant[i]) continue;
    double hinge = eps + scores[i] - s_star;
    if (hinge > 0.0) {
      out.loss += hinge;
      out.dloss_dscore[i] = 1.0;
      ++active;
    }
  }
  out.loss -= s_star;
  out.dloss_dscore[*cstar] = -(static_cast<double>(active) + 1.0);
  return out;
}

// Fraction of queries whose top-scored candidate is relevant, under the
// current model. Ties keep archive order.
inline double instances_top1(const ScoringModel& model,
                             const std::vector<QueryInstance>& instances) {
  if (instances.empty()) return 0.0;
  std::size_t correct = 0;
  for (const QueryInstance& inst : instances) {
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < inst.features.size(); ++i) {
      double s = score(model, inst.features[i]);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    if (inst.relevant[best]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(instances.size());
}

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_top1 = 0.0;
  double dev_top1 = 0.0;
};

struct TrainResult {
  ScoringModel model;  // best-on-dev snapshot
  std::vector<EpochLog> log;
  double best_dev_top1 = 0.0;
  int best_epoch = 0;
};

inline void write_train_log(const std::vector<EpochLog>& log, std::ostream& out) {
  out << "epoch\tmean_loss\ttrain_top1\tdev_top1\n";
  char buf[128];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.4f\t%.4f\n", e.epoch, e.mean_loss,
                  e.train_top1, e.dev_top1);
    out << buf;
  }
}

// One AdaGrad step per query: score all candidates, take the rank loss
// against the current ranking, backprop through every candidate with a
// nonzero subgradient.
inline TrainResult train_rank(ScoringModel model,
                              const std::vector<QueryInstance>& train,
                              const std::vector<QueryInstance>& dev,
                              const RankTrainConfig& cfg) {
  if (train.empty()) throw ParseError("empty training set");
  Rng rng(cfg.shuffle_seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.model = model;
  result.best_dev_top1 = dev.empty() ? 0.0 : instances_top1(model, dev);
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t qi : order) {
      const QueryInstance& inst = train[qi];
      std::vector<ForwardPass> passes(inst.features.size());
      std::vector<double> scores(inst.features.size());
      for (std::size_t i = 0; i < inst.features.size(); ++i) {
        passes[i] = forward(model, inst.features[i]);
        scores[i] = passes[i].output;
      }
      RankLoss rl = rank_loss(scores, inst.relevant, cfg.margin);
      loss_sum += rl.loss;
      Gradient g = Gradient::zeros_like(model);
      for (std::size_t i = 0; i < inst.features.size(); ++i) {
        if (rl.dloss_dscore[i] != 0.0) {
          backward(model, inst.features[i], passes[i], rl.dloss_dscore[i], g);
        }
      }
      adagrad_step(model, g, cfg.learning_rate);
    }

    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = loss_sum / static_cast<double>(train.size());
    log.train_top1 = instances_top1(model, train);
    log.dev_top1 = dev.empty() ? log.train_top1 : instances_top1(model, dev);
    result.log.push_back(log);

    if (log.dev_top1 > result.best_dev_top1) {
      result.best_dev_top1 = log.dev_top1;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

// Traditional objective: every (query, candidate) pair labeled 1/0, per-pair
// cross-entropy, one AdaGrad step per pair. Early stopping still watches
// dev top-1 so the comparison with ranking is on equal terms.
inline TrainResult train_classify(ScoringModel model,
                                  const std::vector<QueryInstance>& train,
                                  const std::vector<QueryInstance>& dev,
                                  const RankTrainConfig& cfg) {
  if (train.empty()) throw ParseError("empty training set");
  struct Pair {
    std::size_t query, cand;
  };
  std::vector<Pair> pairs;
  for (std::size_t q = 0; q < train.size(); ++q) {
    for (std::size_t c = 0; c < train[q].features.size(); ++c) {
      pairs.push_back({q, c});
    }
  }
  Rng rng(cfg.shuffle_seed);

  TrainResult result;
  result.model = model;
  result.best_dev_top1 = dev.empty() ? 0.0 : instances_top1(model, dev);
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(pairs, rng);
    double loss_sum = 0.0;
    for (const Pair& p : pairs) {
      const FeatureVector& x = train[p.query].features[p.cand];
      double y = train[p.query].relevant[p.cand] ? 1.0 : 0.0;
      ForwardPass fp = forward(model, x);
      double s = std::clamp(fp.output, 1e-12, 1.0 - 1e-12);
      loss_sum += -(y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
      // dL/ds; the s(1-s) factor cancels against the sigmoid derivative.
      double dloss = (s - y) / (s * (1.0 - s));
      Gradient g = Gradient::zeros_like(model);
      backward(model, x, fp, dloss, g);
      adagrad_step(model, g, cfg.learning_rate);
    }

    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = loss_sum / static_cast<double>(pairs.size());
    log.train_top1 = instances_top1(model, train);
    log.dev_top1 = dev.empty() ? log.train_top1 : instances_top1(model, dev);
    result.log.push_back(log);

    if (log.dev_top1 > result.best_dev_top1) {
      result.best_dev_top1 = log.dev_top1;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace faqrank
