#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "hjnt/common.hpp"
#include "hjnt/io.hpp"
#include "hjnt/labels.hpp"
#include "hjnt/rng.hpp"

namespace hjnt {

// Per-modality feature-store ids. Empty string means "unset"; consumers fall
// back to the utterance id.
struct FeatureRefs {
  std::string audio;
  std::string video_cabin;
  std::string video_road;

  bool any() const { return !audio.empty() || !video_cabin.empty() || !video_road.empty(); }

  const std::string& get(Modality m) const {
    switch (m) {
      case Modality::Audio: return audio;
      case Modality::VideoCabin: return video_cabin;
      case Modality::VideoRoad: return video_road;
    }
    return audio;
  }

  std::string& get(Modality m) {
    switch (m) {
      case Modality::Audio: return audio;
      case Modality::VideoCabin: return video_cabin;
      case Modality::VideoRoad: return video_road;
    }
    return audio;
  }

  bool operator==(const FeatureRefs& o) const = default;
};

struct AnnotatedUtterance {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<int> slot_ids;
  int intent_id = -1;
  FeatureRefs feature_refs;

  // Resolved store key for one modality: explicit ref wins, else the id.
  const std::string& ref_for(Modality m) const {
    const std::string& r = feature_refs.get(m);
    return r.empty() ? id : r;
  }

  bool operator==(const AnnotatedUtterance& o) const = default;
};

struct Corpus {
  SlotInventory slots;
  IntentInventory intents;
  std::vector<AnnotatedUtterance> utterances;

  size_t size() const { return utterances.size(); }

  bool operator==(const Corpus& o) const = default;

  std::set<std::string> word_types() const {
    std::set<std::string> types;
    for (const auto& u : utterances) {
      for (const auto& t : u.tokens) types.insert(lowercase(t));
    }
    return types;
  }
};

// ---------------------------------------------------------------------------
// Statistics tables (intent counts, per-slot token counts).

struct StatsRow {
  std::string label;
  long count = 0;
};

struct StatsTable {
  std::string title;
  std::string label_header;
  std::string count_header;
  std::vector<StatsRow> rows;
  long total = 0;

  std::string to_text() const {
    size_t w = label_header.size();
    for (const auto& r : rows) w = std::max(w, r.label.size());
    w = std::max(w, size_t(5));
    std::ostringstream os;
    os << title << "\n";
    os << std::left << std::setw(int(w) + 2) << label_header << count_header << "\n";
    for (const auto& r : rows) {
      os << std::left << std::setw(int(w) + 2) << r.label << r.count << "\n";
    }
    os << std::left << std::setw(int(w) + 2) << "Total" << total << "\n";
    return os.str();
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << label_header << "," << count_header << "\n";
    for (const auto& r : rows) os << r.label << "," << r.count << "\n";
    os << "Total," << total << "\n";
    return os.str();
  }
};

struct CorpusStats {
  StatsTable intent_table;
  StatsTable slot_table;
};

inline CorpusStats corpus_stats(const Corpus& c) {
  CorpusStats s;
  s.intent_table.title = "Utterances per intent";
  s.intent_table.label_header = "Intent";
  s.intent_table.count_header = "Utterances";
  std::vector<long> intent_counts(size_t(c.intents.size()), 0);
  std::vector<long> slot_counts(size_t(c.slots.size()), 0);
  for (const auto& u : c.utterances) {
    if (u.intent_id >= 0 && u.intent_id < c.intents.size()) intent_counts[size_t(u.intent_id)]++;
    for (int sid : u.slot_ids) {
      if (sid >= 0 && sid < c.slots.size()) slot_counts[size_t(sid)]++;
    }
  }
  for (int i = 0; i < c.intents.size(); ++i) {
    s.intent_table.rows.push_back({c.intents.name(i), intent_counts[size_t(i)]});
    s.intent_table.total += intent_counts[size_t(i)];
  }
  s.slot_table.title = "Words per slot label";
  s.slot_table.label_header = "Slot";
  s.slot_table.count_header = "Words";
  for (int i = 0; i < c.slots.size(); ++i) {
    s.slot_table.rows.push_back({c.slots.name(i), slot_counts[size_t(i)]});
    s.slot_table.total += slot_counts[size_t(i)];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Validation.

enum class ViolationKind {
  DuplicateId,
  LengthMismatch,
  EmptyTokens,
  UnknownSlotLabel,
  UnknownIntentLabel,
};

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::LengthMismatch: return "LengthMismatch";
    case ViolationKind::EmptyTokens: return "EmptyTokens";
    case ViolationKind::UnknownSlotLabel: return "UnknownSlotLabel";
    case ViolationKind::UnknownIntentLabel: return "UnknownIntentLabel";
  }
  return "Unknown";
}

struct Violation {
  ViolationKind kind;
  std::string id;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  CorpusStats stats;

  bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_corpus(const Corpus& c) {
  ValidationReport rep;
  std::unordered_set<std::string> seen;
  for (const auto& u : c.utterances) {
    if (!seen.insert(u.id).second) {
      rep.violations.push_back({ViolationKind::DuplicateId, u.id, cat("duplicate id \"", u.id, "\"")});
    }
    if (u.tokens.empty()) {
      rep.violations.push_back({ViolationKind::EmptyTokens, u.id, cat("utterance \"", u.id, "\" has no tokens")});
    }
    if (u.tokens.size() != u.slot_ids.size()) {
      rep.violations.push_back(
          {ViolationKind::LengthMismatch, u.id,
           cat("utterance \"", u.id, "\": ", u.tokens.size(), " tokens vs ", u.slot_ids.size(), " slot labels")});
    }
    for (int sid : u.slot_ids) {
      if (sid < 0 || sid >= c.slots.size()) {
        rep.violations.push_back(
            {ViolationKind::UnknownSlotLabel, u.id, cat("utterance \"", u.id, "\" uses slot id ", sid)});
        break;
      }
    }
    if (u.intent_id < 0 || u.intent_id >= c.intents.size()) {
      rep.violations.push_back(
          {ViolationKind::UnknownIntentLabel, u.id, cat("utterance \"", u.id, "\" uses intent id ", u.intent_id)});
    }
  }
  rep.stats = corpus_stats(c);
  return rep;
}

// ---------------------------------------------------------------------------
// On-disk format: one JSON object per line, with an optional inventory header.

inline AnnotatedUtterance parse_record(const nlohmann::json& j, const Corpus& c, size_t line_no) {
  static const std::set<std::string> known_keys = {"id", "tokens", "slots", "intent", "feature_refs"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    require(known_keys.count(it.key()) > 0, ErrorCode::Parse, "unknown key \"", it.key(), "\" at line ", line_no);
  }
  require(j.contains("id") && j["id"].is_string(), ErrorCode::Parse, "missing/invalid \"id\" at line ", line_no);
  require(j.contains("tokens") && j["tokens"].is_array(), ErrorCode::Parse, "missing/invalid \"tokens\" at line ",
          line_no);
  require(j.contains("slots") && j["slots"].is_array(), ErrorCode::Parse, "missing/invalid \"slots\" at line ",
          line_no);
  require(j.contains("intent") && j["intent"].is_string(), ErrorCode::Parse, "missing/invalid \"intent\" at line ",
          line_no);

  AnnotatedUtterance u;
  u.id = j["id"].get<std::string>();
  for (const auto& t : j["tokens"]) {
    require(t.is_string(), ErrorCode::Parse, "non-string token at line ", line_no);
    u.tokens.push_back(t.get<std::string>());
  }
  require(!u.tokens.empty(), ErrorCode::Parse, "empty token list at line ", line_no);
  require(j["slots"].size() == u.tokens.size(), ErrorCode::Parse, "length mismatch at line ", line_no, ": ",
          u.tokens.size(), " tokens vs ", j["slots"].size(), " slot labels");
  for (const auto& s : j["slots"]) {
    require(s.is_string(), ErrorCode::Parse, "non-string slot label at line ", line_no);
    int idx = c.slots.index_of(s.get<std::string>());
    require(idx >= 0, ErrorCode::Parse, "slot label \"", s.get<std::string>(), "\" outside inventory at line ",
            line_no);
    u.slot_ids.push_back(idx);
  }
  u.intent_id = c.intents.index_of(j["intent"].get<std::string>());
  require(u.intent_id >= 0, ErrorCode::Parse, "intent label \"", j["intent"].get<std::string>(),
          "\" outside inventory at line ", line_no);
  if (j.contains("feature_refs")) {
    const auto& fr = j["feature_refs"];
    require(fr.is_object(), ErrorCode::Parse, "invalid \"feature_refs\" at line ", line_no);
    for (auto it = fr.begin(); it != fr.end(); ++it) {
      Modality m = modality_from_string(it.key());
      require(it.value().is_string(), ErrorCode::Parse, "invalid feature ref at line ", line_no);
      u.feature_refs.get(m) = it.value().get<std::string>();
    }
  }
  return u;
}

inline Corpus load_corpus(const std::string& path) {
  LineReader reader(path);
  Corpus c;
  c.slots = SlotInventory::standard();
  c.intents = IntentInventory::standard();

  std::string line;
  size_t line_no = 0;
  bool first_content_line = true;
  std::unordered_set<std::string> ids;
  bool any_line = false;
  while (reader.next(line)) {
    ++line_no;
    if (line.empty()) continue;
    any_line = true;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, "malformed record at line ", line_no, ": ", e.what());
    }
    require(j.is_object(), ErrorCode::Parse, "record at line ", line_no, " is not an object");
    if (first_content_line && (j.contains("slot_inventory") || j.contains("intent_inventory"))) {
      require(j.contains("slot_inventory") && j.contains("intent_inventory"), ErrorCode::Parse,
              "header must declare both inventories (line ", line_no, ")");
      c.slots = SlotInventory::from_labels(j["slot_inventory"].get<std::vector<std::string>>());
      c.intents = IntentInventory::from_labels(j["intent_inventory"].get<std::vector<std::string>>());
      first_content_line = false;
      continue;
    }
    first_content_line = false;
    AnnotatedUtterance u = parse_record(j, c, line_no);
    require(ids.insert(u.id).second, ErrorCode::DuplicateId, "duplicate id \"", u.id, "\" at line ", line_no);
    c.utterances.push_back(std::move(u));
  }
  require(any_line, ErrorCode::Parse, "empty corpus file: ", path);
  return c;
}

inline std::string corpus_to_jsonl(const Corpus& c) {
  std::ostringstream os;
  nlohmann::ordered_json header;
  header["slot_inventory"] = c.slots.labels;
  header["intent_inventory"] = c.intents.labels;
  os << header.dump() << "\n";
  for (const auto& u : c.utterances) {
    nlohmann::ordered_json j;
    j["id"] = u.id;
    j["tokens"] = u.tokens;
    std::vector<std::string> slot_names;
    slot_names.reserve(u.slot_ids.size());
    for (int sid : u.slot_ids) slot_names.push_back(c.slots.name(sid));
    j["slots"] = slot_names;
    j["intent"] = c.intents.name(u.intent_id);
    if (u.feature_refs.any()) {
      nlohmann::ordered_json fr;
      if (!u.feature_refs.audio.empty()) fr["audio"] = u.feature_refs.audio;
      if (!u.feature_refs.video_cabin.empty()) fr["video_cabin"] = u.feature_refs.video_cabin;
      if (!u.feature_refs.video_road.empty()) fr["video_road"] = u.feature_refs.video_road;
      j["feature_refs"] = fr;
    }
    os << j.dump() << "\n";
  }
  return os.str();
}

inline void save_corpus(const Corpus& c, const std::string& path) { write_file(path, corpus_to_jsonl(c)); }

// ---------------------------------------------------------------------------
// Splitting.

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

namespace detail {

// Largest-remainder apportionment of n items across the given ratios.
inline std::vector<size_t> apportion(size_t n, const std::vector<double>& ratios) {
  std::vector<size_t> counts(ratios.size(), 0);
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t i = 0; i < ratios.size(); ++i) {
    double exact = ratios[i] * double(n);
    counts[i] = size_t(std::floor(exact + 1e-12));
    assigned += counts[i];
    remainders.push_back({exact - double(counts[i]), i});
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (size_t i = 0; assigned < n; ++i, ++assigned) counts[remainders[i % remainders.size()].second]++;
  return counts;
}

}  // namespace detail

// Stratified-by-intent split. Deterministic for a given seed; partition is
// disjoint and exhaustive.
inline std::array<Corpus, 3> split(const Corpus& c, const SplitRatios& ratios, uint64_t seed) {
  double sum = ratios.train + ratios.dev + ratios.test;
  require(ratios.train > 0 && ratios.dev > 0 && ratios.test > 0, ErrorCode::Validation,
          "split ratios must be positive");
  require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::Validation, "split ratios sum to ", sum, ", expected 1");
  require(c.size() >= 3, ErrorCode::Validation, "corpus too small to split (", c.size(), " < 3)");

  std::vector<std::vector<size_t>> by_intent(size_t(c.intents.size()));
  for (size_t i = 0; i < c.utterances.size(); ++i) {
    int intent = c.utterances[i].intent_id;
    require(intent >= 0 && intent < c.intents.size(), ErrorCode::Validation, "utterance \"", c.utterances[i].id,
            "\" has an intent outside the inventory");
    by_intent[size_t(intent)].push_back(i);
  }

  Rng rng(seed);
  std::vector<double> rvec = {ratios.train, ratios.dev, ratios.test};
  std::array<std::vector<size_t>, 3> members;
  for (size_t cls = 0; cls < by_intent.size(); ++cls) {
    auto& idx = by_intent[cls];
    if (idx.empty()) continue;
    Rng class_rng = rng.fork(cls);
    class_rng.shuffle(idx);
    auto counts = detail::apportion(idx.size(), rvec);
    size_t pos = 0;
    for (size_t part = 0; part < 3; ++part) {
      for (size_t k = 0; k < counts[part]; ++k) members[part].push_back(idx[pos++]);
    }
  }

  std::array<Corpus, 3> out;
  for (size_t part = 0; part < 3; ++part) {
    out[part].slots = c.slots;
    out[part].intents = c.intents;
    std::sort(members[part].begin(), members[part].end());
    for (size_t i : members[part]) out[part].utterances.push_back(c.utterances[i]);
  }
  return out;
}

// k-fold partition: returns (train, test) corpora per fold. Test sets are
// disjoint and cover the corpus.
inline std::vector<std::pair<Corpus, Corpus>> kfold(const Corpus& c, int k, uint64_t seed) {
  require(k >= 2 && size_t(k) <= c.size(), ErrorCode::Validation, "k=", k, " out of range for corpus of ", c.size());
  std::vector<size_t> idx(c.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);

  std::vector<std::pair<Corpus, Corpus>> folds(size_t(k));
  std::vector<std::vector<size_t>> test_members(size_t(k));
  for (size_t i = 0; i < idx.size(); ++i) test_members[i % size_t(k)].push_back(idx[i]);
  for (int f = 0; f < k; ++f) {
    std::vector<char> in_test(c.size(), 0);
    for (size_t i : test_members[size_t(f)]) in_test[i] = 1;
    auto& [train, test] = folds[size_t(f)];
    train.slots = test.slots = c.slots;
    train.intents = test.intents = c.intents;
    for (size_t i = 0; i < c.size(); ++i) {
      (in_test[i] ? test : train).utterances.push_back(c.utterances[i]);
    }
  }
  return folds;
}

}  // namespace hjnt
