// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: build IDF tables, train (optionally with bootstrap
// feature extraction), evaluate, explain a single pair, and convert
// TREC-style answer-selection data into the archive format.
//
// Exit codes: 0 success, 2 usage/input error, 3 internal invariant
// violation.

#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "faqrank/faqrank.hpp"

namespace {

constexpr const char* kVersion = "faqrank 1.0.0";

unsigned resolve_threads(unsigned flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("FAQRANK_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Every artifact-producing command drops a manifest next to its output so
// the artifact is re-derivable from (inputs, config, seed).
void write_manifest(const std::string& artifact_path, const std::string& command,
                    const nlohmann::json& config,
                    const std::vector<std::string>& input_paths,
                    std::uint64_t seed) {
  nlohmann::json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["version"] = kVersion;
  nlohmann::json inputs = nlohmann::json::object();
  for (const std::string& p : input_paths) {
    inputs[p] = faqrank::Sha256::of_file(p);
  }
  m["inputs"] = inputs;
  faqrank::write_file(artifact_path + ".manifest.json", m.dump(2) + "\n");
}

// --- idf ------------------------------------------------------------------

struct IdfArgs {
  std::string corpus, out;
};

int cmd_idf(const IdfArgs& a) {
  std::vector<std::string> docs;
  {
    std::istringstream in(faqrank::read_file(a.corpus));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) docs.push_back(line);
    }
  }
  faqrank::IdfTable idf = faqrank::build_idf(docs);
  faqrank::save_idf(idf, a.out);
  write_manifest(a.out, "idf", {{"corpus", a.corpus}, {"out", a.out}}, {a.corpus}, 0);
  std::cout << "wrote " << a.out << " (" << idf.entries.size() << " words, "
            << idf.corpus_doc_count << " docs)\n";
  return 0;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
  std::string train, dev, emb, idf, out;
  std::size_t hidden = 0;
  std::string mode = "rank";
  int bootstrap = 0;
  double margin = 0.03;
  double lr = 0.1;
  std::uint64_t seed = 1;
  int epochs = 50;
  int patience = 5;
  std::size_t max_features = 1500;
  std::string activation = "tanh";
  std::string align = "argmax";
  bool raw_dispersion = false;
};

faqrank::FeatureConfig feature_config(const TrainArgs& a) {
  faqrank::FeatureConfig cfg;
  cfg.strategy = a.align == "greedy" ? faqrank::AlignStrategy::GreedyOneToOne
                                     : faqrank::AlignStrategy::Argmax;
  cfg.normalize_dispersion = !a.raw_dispersion;
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  using namespace faqrank;
  if (a.bootstrap > 0 && a.mode != "rank") {
    throw ParseError("--bootstrap requires --mode rank");
  }
  EmbeddingTable emb = load_embeddings(a.emb);
  IdfTable idf = load_idf(a.idf);
  Archive train = load_archive(a.train);
  Archive dev = load_archive(a.dev);

  HiddenActivation act = a.activation == "sigmoid" ? HiddenActivation::Sigmoid
                                                   : HiddenActivation::Tanh;
  FeatureConfig fcfg = feature_config(a);
  RankTrainConfig tcfg;
  tcfg.margin = a.margin;
  tcfg.learning_rate = a.lr;
  tcfg.max_epochs = a.epochs;
  tcfg.patience = a.patience;
  tcfg.shuffle_seed = a.seed;

  FeatureStore store;
  std::vector<QueryInstance> train_inst =
      build_instances(train, emb, idf, store, fcfg, &std::cerr);
  std::vector<QueryInstance> dev_inst =
      build_instances(dev, emb, idf, store, fcfg, &std::cerr);

  ScoringModel model = init_model(kDenseDim, a.hidden, a.seed, act);
  std::ostringstream log;
  if (a.bootstrap > 0) {
    TrainResult seed_r = train_rank(std::move(model), train_inst, dev_inst, tcfg);
    std::cerr << "seed model dev top-1 " << seed_r.best_dev_top1 << "\n";
    BootstrapContext ctx{train, dev, emb, idf, tcfg, fcfg,
                         a.seed, a.hidden, act, &std::cerr};
    BootstrapConfig bcfg;
    bcfg.max_iterations = a.bootstrap;
    bcfg.max_features = a.max_features;
    BootstrapResult br = bootstrap(seed_r.model, ctx, bcfg);
    save_model(br.model, br.store, a.out);
    write_bootstrap_log(br.log, log);
    std::cout << "dev top-1 " << br.best_dev_top1 << " with " << br.store.size()
              << " sparse features\n";
  } else {
    TrainResult r = a.mode == "classify"
                        ? train_classify(std::move(model), train_inst, dev_inst, tcfg)
                        : train_rank(std::move(model), train_inst, dev_inst, tcfg);
    save_model(r.model, store, a.out);
    write_train_log(r.log, log);
    std::cout << "dev top-1 " << r.best_dev_top1 << " (best epoch " << r.best_epoch
              << ")\n";
  }
  faqrank::write_file(a.out + ".log.tsv", log.str());
  write_manifest(a.out, "train",
                 {{"train", a.train},
                  {"dev", a.dev},
                  {"emb", a.emb},
                  {"idf", a.idf},
                  {"hidden", a.hidden},
                  {"mode", a.mode},
                  {"bootstrap", a.bootstrap},
                  {"margin", a.margin},
                  {"lr", a.lr},
                  {"epochs", a.epochs},
                  {"patience", a.patience},
                  {"max_features", a.max_features},
                  {"activation", a.activation},
                  {"align", a.align},
                  {"raw_dispersion", a.raw_dispersion},
                  {"out", a.out}},
                 {a.train, a.dev, a.emb, a.idf}, a.seed);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string model, test, emb, idf;
  std::string metric = "all";
  std::string scorer = "model";
  std::string results = "results.tsv";
  std::string align = "argmax";
  bool raw_dispersion = false;
  unsigned threads = 0;
};

int cmd_eval(const EvalArgs& a) {
  using namespace faqrank;
  EmbeddingTable emb = load_embeddings(a.emb);
  IdfTable idf = load_idf(a.idf);
  Archive test = load_archive(a.test);
  FeatureConfig fcfg;
  fcfg.strategy = a.align == "greedy" ? AlignStrategy::GreedyOneToOne
                                      : AlignStrategy::Argmax;
  fcfg.normalize_dispersion = !a.raw_dispersion;

  Scorer scorer;
  std::shared_ptr<LoadedModel> lm;
  if (a.scorer == "model") {
    if (a.model.empty()) throw ParseError("--scorer model requires --model");
    lm = std::make_shared<LoadedModel>(load_model(a.model));
    scorer = [lm, &emb, &idf, fcfg](const Question& q, const Question& c) {
      return score(lm->model, extract_features(q, c, emb, idf, lm->store, fcfg));
    };
  } else if (a.scorer == "bow") {
    scorer = make_baseline_scorer(BaselineMethod::BagOfWords, emb, idf);
  } else if (a.scorer == "idfvsm") {
    scorer = make_baseline_scorer(BaselineMethod::IdfVsm, emb, idf);
  } else {
    scorer = make_baseline_scorer(BaselineMethod::Similarity, emb, idf);
  }

  std::vector<RankedList> results = rank_all(scorer, test, resolve_threads(a.threads));
  if (a.metric == "top1" || a.metric == "all") {
    std::cout << "top1: " << top1_accuracy(results) << "\n";
  }
  if (a.metric == "map" || a.metric == "mrr" || a.metric == "all") {
    MapMrrResult m = map_mrr(results);
    if (a.metric == "map" || a.metric == "all") std::cout << "map: " << m.map << "\n";
    if (a.metric == "mrr" || a.metric == "all") std::cout << "mrr: " << m.mrr << "\n";
    if (m.excluded > 0) {
      std::cerr << m.excluded << " queries with no relevant candidate excluded from "
                << "map/mrr\n";
    }
  }
  std::ostringstream tsv;
  write_results_tsv(results, tsv);
  write_file(a.results, tsv.str());
  std::vector<std::string> inputs = {a.test, a.emb, a.idf};
  if (!a.model.empty()) inputs.push_back(a.model);
  write_manifest(a.results, "eval",
                 {{"model", a.model},
                  {"test", a.test},
                  {"emb", a.emb},
                  {"idf", a.idf},
                  {"metric", a.metric},
                  {"scorer", a.scorer},
                  {"align", a.align},
                  {"raw_dispersion", a.raw_dispersion},
                  {"results", a.results}},
                 inputs, 0);
  return 0;
}

// --- explain --------------------------------------------------------------

struct ExplainArgs {
  std::string model, emb, idf;
  std::string query, candidate;
};

void print_direction(const char* label, const faqrank::Question& a,
                     const faqrank::Question& b, const faqrank::Alignment& align) {
  std::cout << label << " alignment:\n";
  for (std::size_t i = 0; i < align.size(); ++i) {
    std::cout << "  " << a.tokens[i].surface << " -> ";
    if (align.aligned(i)) {
      std::cout << b.tokens[align.position[i]].surface << " (pos "
                << align.position[i] << ", sim " << align.score[i] << ")\n";
    } else {
      std::cout << "UNALIGNED\n";
    }
  }
}

int cmd_explain(const ExplainArgs& a) {
  using namespace faqrank;
  LoadedModel lm = load_model(a.model);
  EmbeddingTable emb = load_embeddings(a.emb);
  IdfTable idf = load_idf(a.idf);
  Question q = make_question("query", a.query);
  Question c = make_question("candidate", a.candidate);
  if (q.tokens.empty()) throw ParseError("query has no tokens");
  if (c.tokens.empty()) throw ParseError("candidate has no tokens");

  SimilarityMatrix m = similarity_matrix(q, c, emb);
  std::cout << "similarity matrix:\n\t";
  for (const Token& t : c.tokens) std::cout << t.surface << '\t';
  std::cout << '\n';
  for (std::size_t i = 0; i < m.rows; ++i) {
    std::cout << q.tokens[i].surface;
    for (std::size_t j = 0; j < m.cols; ++j) std::cout << '\t' << m.at(i, j);
    std::cout << '\n';
  }

  Alignment fwd = best_alignment(m);
  Alignment rev = best_alignment(similarity_matrix(c, q, emb));
  print_direction("forward", q, c, fwd);
  print_direction("reverse", c, q, rev);

  FeatureVector fv = extract_features(q, c, emb, idf, lm.store);
  static const char* names[8] = {"similarity", "dispersion", "penalty",
                                 "important1", "important2", "important3",
                                 "important4", "important5"};
  std::cout << "dense features:\n";
  for (std::size_t i = 0; i < faqrank::kDenseDim; ++i) {
    std::cout << "  " << (i < 8 ? "fwd_" : "rev_") << names[i % 8] << " = "
              << fv.dense[i] << '\n';
  }
  std::cout << "fired sparse features:\n";
  for (std::size_t idx : fv.sparse) {
    const SparseKey& k = lm.store.key(idx);
    std::cout << "  [" << idx << "] " << to_string(k.tpl) << " " << k.payload << '\n';
  }
  if (fv.sparse.empty()) std::cout << "  (none)\n";
  std::cout << "score: " << score(lm.model, fv) << '\n';
  return 0;
}

// --- convert-trec ---------------------------------------------------------

// Input: TSV rows "qid <TAB> question <TAB> cand_id <TAB> sentence <TAB>
// label(0|1)". Question groups become query entries, candidate sentences
// become grouped archive entries, positive labels become the relevance set.
struct ConvertArgs {
  std::string in, out;
};

int cmd_convert_trec(const ConvertArgs& a) {
  using nlohmann::json;
  std::istringstream in(faqrank::read_file(a.in));
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> order;  // qids in first-appearance order
  struct Group {
    std::string question;
    std::vector<std::pair<std::string, std::string>> cands;  // id, sentence
    std::vector<std::string> relevant;
  };
  std::map<std::string, Group> groups;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = faqrank::split(line, '\t');
    if (cols.size() != 5) {
      throw faqrank::ParseError("line " + std::to_string(lineno) +
                                ": expected 5 tab-separated columns");
    }
    const std::string& qid = cols[0];
    if (cols[4] != "0" && cols[4] != "1") {
      throw faqrank::ParseError("line " + std::to_string(lineno) +
                                ": label must be 0 or 1");
    }
    if (!seen_ids.insert(cols[2]).second) {
      throw faqrank::ParseError("line " + std::to_string(lineno) +
                                ": duplicate candidate id \"" + cols[2] + "\"");
    }
    auto [it, inserted] = groups.try_emplace(qid);
    if (inserted) {
      order.push_back(qid);
      it->second.question = cols[1];
    }
    it->second.cands.emplace_back(cols[2], cols[3]);
    if (cols[4] == "1") it->second.relevant.push_back(cols[2]);
  }
  if (order.empty()) throw faqrank::ParseError("no records in " + a.in);

  std::ostringstream out;
  for (const std::string& qid : order) {
    const Group& g = groups.at(qid);
    json qrec = {{"id", qid}, {"question", g.question}, {"group", qid},
                 {"query_only", true}};
    if (!g.relevant.empty()) qrec["relevant"] = g.relevant;
    out << qrec.dump() << '\n';
    for (const auto& [cid, sent] : g.cands) {
      json crec = {{"id", cid}, {"question", sent}, {"group", qid}};
      out << crec.dump() << '\n';
    }
  }
  faqrank::write_file(a.out, out.str());
  write_manifest(a.out, "convert-trec", {{"in", a.in}, {"out", a.out}}, {a.in}, 0);
  std::cout << "wrote " << a.out << " (" << order.size() << " question groups)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FAQ retrieval by question similarity"};
  app.require_subcommand(1);

  IdfArgs idf_args;
  CLI::App* idf = app.add_subcommand("idf", "Build an IDF table from a corpus");
  idf->add_option("--corpus", idf_args.corpus, "One document per line")->required();
  idf->add_option("--out", idf_args.out, "Output TSV path")->required();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a scoring model");
  train->add_option("--train", train_args.train, "Training archive")->required();
  train->add_option("--dev", train_args.dev, "Dev archive")->required();
  train->add_option("--emb", train_args.emb, "word2vec text embeddings")->required();
  train->add_option("--idf", train_args.idf, "IDF table TSV")->required();
  train->add_option("--out", train_args.out, "Output model path")->required();
  train->add_option("--hidden", train_args.hidden, "Hidden units (0 = none)");
  train->add_option("--mode", train_args.mode, "Training objective")
      ->check(CLI::IsMember({"rank", "classify"}));
  train->add_option("--bootstrap", train_args.bootstrap,
                    "Max sparse-feature bootstrap iterations (0 = off)");
  train->add_option("--margin", train_args.margin, "Ranking margin");
  train->add_option("--lr", train_args.lr, "AdaGrad learning rate");
  train->add_option("--seed", train_args.seed, "Init/shuffle seed");
  train->add_option("--epochs", train_args.epochs, "Max epochs");
  train->add_option("--patience", train_args.patience, "Early-stopping patience");
  train->add_option("--max-features", train_args.max_features, "Sparse feature cap");
  train->add_option("--activation", train_args.activation, "Hidden activation")
      ->check(CLI::IsMember({"tanh", "sigmoid"}));
  train->add_option("--align", train_args.align, "Alignment strategy")
      ->check(CLI::IsMember({"argmax", "greedy"}));
  train->add_flag("--raw-dispersion", train_args.raw_dispersion,
                  "Disable dispersion normalization");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Rank and evaluate an archive");
  eval->add_option("--model", eval_args.model, "Model path (for --scorer model)");
  eval->add_option("--test", eval_args.test, "Test archive")->required();
  eval->add_option("--emb", eval_args.emb, "word2vec text embeddings")->required();
  eval->add_option("--idf", eval_args.idf, "IDF table TSV")->required();
  eval->add_option("--metric", eval_args.metric, "Metric to print")
      ->check(CLI::IsMember({"top1", "map", "mrr", "all"}));
  eval->add_option("--scorer", eval_args.scorer, "Scoring function")
      ->check(CLI::IsMember({"model", "bow", "idfvsm", "sim"}));
  eval->add_option("--results", eval_args.results, "Results TSV path");
  eval->add_option("--align", eval_args.align, "Alignment strategy")
      ->check(CLI::IsMember({"argmax", "greedy"}));
  eval->add_flag("--raw-dispersion", eval_args.raw_dispersion,
                 "Disable dispersion normalization");
  eval->add_option("--threads", eval_args.threads,
                   "Worker threads (0 = FAQRANK_THREADS or hardware)");

  ExplainArgs explain_args;
  CLI::App* explain = app.add_subcommand("explain", "Explain one query/candidate pair");
  explain->add_option("--model", explain_args.model, "Model path")->required();
  explain->add_option("--emb", explain_args.emb, "word2vec text embeddings")->required();
  explain->add_option("--idf", explain_args.idf, "IDF table TSV")->required();
  explain->add_option("--query", explain_args.query, "Query text")->required();
  explain->add_option("--candidate", explain_args.candidate, "Candidate text")
      ->required();

  ConvertArgs convert_args;
  CLI::App* convert = app.add_subcommand(
      "convert-trec", "Convert TREC-style answer-selection TSV to an archive");
  convert->add_option("--in", convert_args.in, "Input TSV")->required();
  convert->add_option("--out", convert_args.out, "Output archive path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*idf) return cmd_idf(idf_args);
    if (*train) return cmd_train(train_args);
    if (*eval) return cmd_eval(eval_args);
    if (*explain) return cmd_explain(explain_args);
    if (*convert) return cmd_convert_trec(convert_args);
  } catch (const faqrank::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const faqrank::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
