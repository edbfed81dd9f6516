#pragma once

#include <cstdlib>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "hjnt/corpus.hpp"
#include "hjnt/io.hpp"
#include "hjnt/tensor.hpp"

namespace hjnt {

enum class OovPolicy { ZeroVector };

inline const char* to_string(OovPolicy p) {
  switch (p) {
    case OovPolicy::ZeroVector: return "zero";
  }
  return "unknown";
}

inline OovPolicy oov_policy_from_string(const std::string& s) {
  if (s == "zero") return OovPolicy::ZeroVector;
  fail(ErrorCode::Parse, "unknown oov policy \"", s, "\"");
}

// Immutable word -> vector table. Keys are lowercased at load.
struct EmbeddingTable {
  std::string name;
  int dim = 0;
  std::unordered_map<std::string, int> vocab;
  MatF matrix;
  size_t duplicate_count = 0;

  const float* find(const std::string& lower_word) const {
    auto it = vocab.find(lower_word);
    return it == vocab.end() ? nullptr : matrix.row(it->second);
  }

  size_t vocab_size() const { return vocab.size(); }
};

// Text format: one line per word, "word v1 v2 ... vd". Gzip handled by ".gz".
inline EmbeddingTable load_table(const std::string& path, const std::string& name, int expected_dim = 0) {
  LineReader reader(path);
  EmbeddingTable t;
  t.name = name;
  std::vector<float> values;
  std::string line;
  size_t line_no = 0;
  size_t n_rows = 0;
  while (reader.next(line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t sp = line.find(' ');
    require(sp != std::string::npos && sp > 0, ErrorCode::Parse, "malformed embedding row at line ", line_no);
    std::string word = lowercase(line.substr(0, sp));
    int row_dim = 0;
    const char* p = line.c_str() + sp;
    size_t row_start = values.size();
    while (*p != '\0') {
      while (*p == ' ' || *p == '\t') ++p;
      if (*p == '\0') break;
      char* end = nullptr;
      float v = std::strtof(p, &end);
      require(end != p && (*end == '\0' || *end == ' ' || *end == '\t'), ErrorCode::Parse,
              "non-numeric value at line ", line_no);
      values.push_back(v);
      ++row_dim;
      p = end;
    }
    require(row_dim > 0, ErrorCode::Parse, "embedding row without values at line ", line_no);
    if (t.dim == 0) {
      t.dim = row_dim;
      require(expected_dim <= 0 || t.dim == expected_dim, ErrorCode::DimMismatch, "table ", name, " has dim ", t.dim,
              ", expected ", expected_dim);
    } else {
      require(row_dim == t.dim, ErrorCode::Parse, "inconsistent dimension at line ", line_no, ": got ", row_dim,
              ", expected ", t.dim);
    }
    if (t.vocab.count(word)) {
      // First occurrence wins.
      t.duplicate_count++;
      values.resize(row_start);
      continue;
    }
    t.vocab.emplace(word, int(n_rows));
    ++n_rows;
  }
  require(t.dim > 0, ErrorCode::Parse, "empty embedding file: ", path);
  t.matrix.rows = int(n_rows);
  t.matrix.cols = t.dim;
  t.matrix.data = std::move(values);
  return t;
}

struct LookupResult {
  std::vector<float> vec;
  bool hit = false;
};

// Exact-match lookup on the lowercased word; zero vector on miss.
inline LookupResult lookup(const EmbeddingTable& t, const std::string& word, OovPolicy policy = OovPolicy::ZeroVector) {
  (void)policy;  // ZeroVector is the only policy
  LookupResult r;
  r.vec.assign(size_t(t.dim), 0.0f);
  const float* row = t.find(lowercase(word));
  if (row != nullptr) {
    std::copy(row, row + t.dim, r.vec.begin());
    r.hit = true;
  }
  return r;
}

struct StackEntry {
  std::shared_ptr<const EmbeddingTable> table;
  OovPolicy oov = OovPolicy::ZeroVector;
  std::string path;  // provenance, recorded in model sidecars
};

struct EmbeddingStack {
  std::vector<StackEntry> entries;

  int total_dim() const {
    int d = 0;
    for (const auto& e : entries) d += e.table->dim;
    return d;
  }

  bool empty() const { return entries.empty(); }

  void push(std::shared_ptr<const EmbeddingTable> table, const std::string& path = "",
            OovPolicy oov = OovPolicy::ZeroVector) {
    entries.push_back({std::move(table), oov, path});
  }
};

// Row i is the concatenation, in stack order, of per-table lookups of token i.
inline MatF embed_tokens(const EmbeddingStack& stack, const std::vector<std::string>& tokens) {
  require(!stack.empty(), ErrorCode::Validation, "embedding stack is empty");
  MatF out(int(tokens.size()), stack.total_dim());
  for (size_t i = 0; i < tokens.size(); ++i) {
    float* row = out.row(int(i));
    std::string lower = lowercase(tokens[i]);
    int offset = 0;
    for (const auto& e : stack.entries) {
      const float* v = e.table->find(lower);
      if (v != nullptr) std::copy(v, v + e.table->dim, row + offset);
      offset += e.table->dim;
    }
  }
  return out;
}

struct CoverageResult {
  double ratio = 0.0;
  std::vector<std::string> misses;  // sorted distinct corpus types absent from the table
};

inline CoverageResult coverage(const EmbeddingTable& t, const Corpus& c) {
  require(!c.utterances.empty(), ErrorCode::Validation, "coverage of an empty corpus is undefined");
  std::set<std::string> types = c.word_types();
  CoverageResult r;
  size_t hits = 0;
  for (const auto& w : types) {
    if (t.find(w) != nullptr) {
      ++hits;
    } else {
      r.misses.push_back(w);
    }
  }
  r.ratio = double(hits) / double(types.size());
  return r;
}

}  // namespace hjnt
