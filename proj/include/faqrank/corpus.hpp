// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Text ingestion: tokenization, IDF tables, word2vec embeddings and
// archive files. All tables are build-once; after construction they are
// only read.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "faqrank/util.hpp"

namespace faqrank {

struct Token {
  std::string surface;   // lowercased lookup form, never empty
  std::string original;  // as seen in the input
};

inline bool operator==(const Token& a, const Token& b) {
  return a.surface == b.surface && a.original == b.original;
}

using Tokenizer = std::function<std::vector<Token>(std::string_view)>;

namespace detail {

inline bool is_strip_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

}  // namespace detail

// Default tokenizer: whitespace split, surrounding punctuation stripped,
// surfaces lowercased. Tokens that are all punctuation disappear; interior
// punctuation ("re-add") survives. Pluggable so a morphological analyzer
// can replace it for languages without whitespace.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  for (const std::string& raw : split_whitespace(text)) {
    std::size_t begin = 0;
    std::size_t end = raw.size();
    while (begin < end && detail::is_strip_punct(raw[begin])) ++begin;
    while (end > begin && detail::is_strip_punct(raw[end - 1])) --end;
    if (begin == end) continue;
    std::string original = raw.substr(begin, end - begin);
    out.push_back(Token{detail::to_lower(original), original});
  }
  return out;
}

struct EmbeddingTable {
  std::size_t dimension = 0;
  std::unordered_map<std::string, std::vector<double>> entries;

  const std::vector<double>* find(const std::string& word) const {
    auto it = entries.find(word);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// word2vec text format: header "V D", then V lines "word x1 ... xD".
inline EmbeddingTable load_embeddings_stream(std::istream& in,
                                             std::ostream* warn = nullptr) {
  EmbeddingTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("embeddings: empty file");
  auto header = split_whitespace(line);
  std::size_t expect_count = 0;
  try {
    if (header.size() != 2) throw std::invalid_argument("header");
    expect_count = std::stoull(header[0]);
    table.dimension = std::stoull(header[1]);
  } catch (const std::exception&) {
    throw ParseError("embeddings: malformed header at line 1: '" + line + "'");
  }
  if (table.dimension == 0) throw ParseError("embeddings: dimension must be >= 1");

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto parts = split_whitespace(line);
    if (parts.size() != table.dimension + 1) {
      throw ParseError("embeddings: line " + std::to_string(lineno) + " has " +
                       std::to_string(parts.size() - 1) + " components, expected " +
                       std::to_string(table.dimension));
    }
    std::vector<double> vec(table.dimension);
    for (std::size_t i = 0; i < table.dimension; ++i) {
      try {
        vec[i] = std::stod(parts[i + 1]);
      } catch (const std::exception&) {
        throw ParseError("embeddings: bad number at line " + std::to_string(lineno));
      }
    }
    // Duplicates keep the first occurrence.
    auto [it, inserted] = table.entries.emplace(parts[0], std::move(vec));
    if (!inserted && warn) {
      *warn << "warning: duplicate embedding entry '" << parts[0]
            << "' at line " << lineno << ", keeping first\n";
    }
  }
  if (table.entries.size() != expect_count && warn) {
    *warn << "warning: embeddings header declared " << expect_count
          << " entries, got " << table.entries.size() << "\n";
  }
  return table;
}

inline EmbeddingTable load_embeddings(const std::string& path,
                                      std::ostream* warn = &std::cerr) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embeddings file: " + path);
  return load_embeddings_stream(in, warn);
}

// Writes entries in lexicographic word order so output is deterministic.
inline void save_embeddings_stream(const EmbeddingTable& table, std::ostream& out) {
  std::vector<const std::string*> words;
  words.reserve(table.entries.size());
  for (const auto& [w, _] : table.entries) words.push_back(&w);
  std::sort(words.begin(), words.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  out << table.entries.size() << ' ' << table.dimension << '\n';
  for (const std::string* w : words) {
    out << *w;
    std::ostringstream num;
    for (double x : table.entries.at(*w)) {
      num.str("");
      num.precision(17);
      num << x;
      out << ' ' << num.str();
    }
    out << '\n';
  }
}

struct IdfTable {
  std::unordered_map<std::string, double> entries;
  double default_idf = 0.0;  // returned for unseen words
  std::uint64_t corpus_doc_count = 0;

  double idf(const std::string& word) const {
    auto it = entries.find(word);
    return it == entries.end() ? default_idf : it->second;
  }
};

// idf(w) = ln((1+N)/(1+df(w))) + 1. Smoothed so every value is >= 1 and
// feature denominators over IDF sums never vanish. Unseen words get the
// maximum stored value (treated as maximally rare).
inline IdfTable build_idf(const std::vector<std::string>& documents,
                          const Tokenizer& tok = tokenize) {
  if (documents.empty()) throw ParseError("empty corpus");
  std::unordered_map<std::string, std::uint64_t> df;
  for (const std::string& doc : documents) {
    std::unordered_set<std::string> seen;
    for (const Token& t : tok(doc)) seen.insert(t.surface);
    for (const std::string& w : seen) ++df[w];
  }
  IdfTable table;
  table.corpus_doc_count = documents.size();
  const double n = static_cast<double>(documents.size());
  for (const auto& [w, d] : df) {
    double v = std::log((1.0 + n) / (1.0 + static_cast<double>(d))) + 1.0;
    table.entries.emplace(w, v);
    table.default_idf = std::max(table.default_idf, v);
  }
  return table;
}

// TSV with a "#docs<TAB>N" header line, then "word<TAB>idf" rows sorted by
// word.
inline void save_idf_stream(const IdfTable& table, std::ostream& out) {
  out << "#docs\t" << table.corpus_doc_count << '\n';
  std::vector<const std::string*> words;
  words.reserve(table.entries.size());
  for (const auto& [w, _] : table.entries) words.push_back(&w);
  std::sort(words.begin(), words.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  for (const std::string* w : words) {
    out << *w << '\t' << format_hex_double(table.entries.at(*w)) << '\n';
  }
}

inline void save_idf(const IdfTable& table, const std::string& path) {
  std::ostringstream ss;
  save_idf_stream(table, ss);
  write_file(path, ss.str());
}

inline IdfTable load_idf_stream(std::istream& in) {
  IdfTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 2) {
      throw ParseError("idf: line " + std::to_string(lineno) + " is not 2 columns");
    }
    if (lineno == 1 && cols[0] == "#docs") {
      table.corpus_doc_count = std::stoull(cols[1]);
      continue;
    }
    double v = parse_hex_double(cols[1]);
    if (v < 0.0) throw ParseError("idf: negative value at line " + std::to_string(lineno));
    table.entries.emplace(cols[0], v);
    table.default_idf = std::max(table.default_idf, v);
  }
  return table;
}

inline IdfTable load_idf(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open idf file: " + path);
  return load_idf_stream(in);
}

struct Question {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
};

inline Question make_question(std::string id, std::string text,
                              const Tokenizer& tok = tokenize) {
  Question q;
  q.id = std::move(id);
  q.text = std::move(text);
  q.tokens = tok(q.text);
  return q;
}

struct ArchiveEntry {
  Question question;
  std::optional<std::string> answer;
  std::string group;        // empty = the global candidate pool
  bool query_only = false;  // evaluation query, never a candidate
};

// A self-contained archive: a query entry's candidates are the other
// entries sharing its group (entries with an empty group share one pool).
struct Archive {
  std::vector<ArchiveEntry> entries;
  std::unordered_map<std::string, std::vector<std::string>> relevance;
  std::unordered_map<std::string, std::size_t> index_of;

  const ArchiveEntry* find(const std::string& id) const {
    auto it = index_of.find(id);
    return it == index_of.end() ? nullptr : &entries[it->second];
  }

  bool is_relevant(const std::string& query_id, const std::string& cand_id) const {
    auto it = relevance.find(query_id);
    if (it == relevance.end()) return false;
    return std::find(it->second.begin(), it->second.end(), cand_id) != it->second.end();
  }

  // Candidate indices for a query entry, in archive order.
  std::vector<std::size_t> candidates_for(std::size_t query_index) const {
    std::vector<std::size_t> out;
    const std::string& group = entries[query_index].group;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i == query_index) continue;
      if (entries[i].query_only) continue;
      if (entries[i].group != group) continue;
      out.push_back(i);
    }
    return out;
  }

  // Indices of entries usable as evaluation/training queries.
  std::vector<std::size_t> query_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto it = relevance.find(entries[i].question.id);
      if (it != relevance.end() && !it->second.empty()) out.push_back(i);
    }
    return out;
  }
};

// Line-delimited JSON records: {"id", "question", "answer"?, "relevant"?:
// [ids], "group"?, "query_only"?}.
inline Archive load_archive_stream(std::istream& in, const Tokenizer& tok = tokenize) {
  Archive archive;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("archive: line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!rec.contains("id") || !rec["id"].is_string()) {
      throw ParseError("archive: line " + std::to_string(lineno) + ": missing \"id\"");
    }
    if (!rec.contains("question") || !rec["question"].is_string()) {
      throw ParseError("archive: line " + std::to_string(lineno) +
                       ": missing \"question\"");
    }
    ArchiveEntry entry;
    entry.question = make_question(rec["id"].get<std::string>(),
                                   rec["question"].get<std::string>(), tok);
    if (rec.contains("answer")) entry.answer = rec["answer"].get<std::string>();
    if (rec.contains("group")) entry.group = rec["group"].get<std::string>();
    if (rec.contains("query_only")) entry.query_only = rec["query_only"].get<bool>();
    const std::string& id = entry.question.id;
    if (archive.index_of.count(id)) {
      throw ParseError("archive: duplicate id \"" + id + "\" at line " +
                       std::to_string(lineno));
    }
    if (rec.contains("relevant")) {
      std::vector<std::string> rel;
      for (const auto& r : rec["relevant"]) rel.push_back(r.get<std::string>());
      archive.relevance.emplace(id, std::move(rel));
    }
    archive.index_of.emplace(id, archive.entries.size());
    archive.entries.push_back(std::move(entry));
  }
  for (const auto& [qid, rel] : archive.relevance) {
    for (const std::string& rid : rel) {
      if (!archive.index_of.count(rid)) {
        throw ParseError("archive: query \"" + qid +
                         "\" references unknown relevant id \"" + rid + "\"");
      }
    }
  }
  return archive;
}

inline Archive load_archive(const std::string& path, const Tokenizer& tok = tokenize) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open archive file: " + path);
  return load_archive_stream(in, tok);
}

}  // namespace faqrank
