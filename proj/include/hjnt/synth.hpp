#pragma once

#include <json.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hjnt/common.hpp"
#include "hjnt/corpus.hpp"
#include "hjnt/embeddings.hpp"
#include "hjnt/features.hpp"
#include "hjnt/rng.hpp"

namespace hjnt {

// Utterance templates: plain words are unlabeled carriers ("None"),
// [bracketed] words are intent keywords, {Placeholder} items expand to a
// multi-token filler labeled with that slot.
struct IntentTemplates {
  std::string intent;
  std::vector<std::string> patterns;
};

// Template pools shared between easily-confused intents. Utterances drawn
// from a shared pool are textually uninformative about which member intent
// produced them; the synthesized audio/video channels remain informative.
struct SharedTemplates {
  std::vector<std::string> intents;
  std::vector<std::string> patterns;
};

struct SynthSpec {
  int n_utterances = 1331;
  uint64_t seed = 1;
  std::map<std::string, double> intent_distribution;  // defaults to the built-in corpus shape
  std::map<std::string, double> slot_density;         // target token shares, reporting only
  double ambiguity = 0.35;
  double audio_offset = 1.0;
  double video_offset = 0.75;
  double informative_fraction = 0.05;
  double speech_noise = 0.1;
  int embedding_dim = 100;
  double word2vec_vocab_fraction = 0.8;
  double speech2vec_vocab_fraction = 0.7;
  bool gen_audio = true;
  bool gen_video = true;
  FeatureSchema schema;
  std::vector<IntentTemplates> templates;       // empty = built-in set
  std::vector<SharedTemplates> shared_templates;  // empty = built-in set

  static std::map<std::string, double> default_intent_distribution() {
    const double total = 1331.0;
    return {
        {"SetDestination", 311.0 / total}, {"SetRoute", 507.0 / total}, {"Park", 151.0 / total},
        {"PullOver", 34.0 / total},        {"Stop", 27.0 / total},      {"GoFaster", 73.0 / total},
        {"GoSlower", 41.0 / total},        {"OpenDoor", 136.0 / total}, {"Other", 51.0 / total},
    };
  }

  static std::map<std::string, double> default_slot_density() {
    const double total = 12546.0;
    return {
        {"IntentKeyword", 2007.0 / total}, {"Location", 1969.0 / total}, {"PositionDirection", 1131.0 / total},
        {"Person", 404.0 / total},         {"TimeGuidance", 246.0 / total}, {"GestureGaze", 167.0 / total},
        {"Object", 110.0 / total},         {"None", 6512.0 / total},
    };
  }
};

namespace synth_detail {

inline const std::map<std::string, std::vector<std::string>>& filler_vocab() {
  static const std::map<std::string, std::vector<std::string>> fillers = {
      {"Location",
       {"the airport", "starbucks", "downtown", "the mall", "the office", "fifth avenue", "the hotel", "city hall",
        "the gym", "home", "the station", "chinatown", "the museum", "the beach", "the library", "the market",
        "the hospital", "the stadium", "main street", "the park"}},
      {"PositionDirection",
       {"left", "right", "the left lane", "the right lane", "next to the curb", "up ahead", "around the corner",
        "straight", "at the corner", "by the entrance", "behind the truck", "on the right side"}},
      {"Person", {"my friend", "john", "sarah", "the passenger", "my mom", "our guest", "mike", "my colleague"}},
      {"TimeGuidance", {"now", "right now", "in five minutes", "after the light", "soon", "at noon", "tonight"}},
      {"GestureGaze", {"there", "here", "over there", "that one", "this one", "right here"}},
      {"Object", {"the red car", "that truck", "the sign", "the bus", "those cones", "the building"}},
  };
  return fillers;
}

inline const std::vector<IntentTemplates>& default_templates() {
  static const std::vector<IntentTemplates> templates = {
      {"SetDestination",
       {
           "[take] me to {Location} please",
           "can you [drive] me to {Location}",
           "i want to [go] to {Location}",
           "[set] the destination to {Location} please",
           "we need to [head] to {Location} {TimeGuidance}",
           "please [take] us to {Location} ahm i mean {Location}",
           "[take] {Person} to {Location} {TimeGuidance}",
           "could you [drive] us over to {Location}",
       }},
      {"SetRoute",
       {
           "can we [take] the route through {Location} instead",
           "could you [reroute] us through {Location} please",
           "[take] the {PositionDirection} exit and then {Location}",
           "[go] {PositionDirection} at the light and follow {Location}",
           "please [change] the route to avoid {Location}",
           "[keep] {PositionDirection} and take the road by {Location}",
           "[turn] {PositionDirection} after {Location} please",
           "i would rather [take] the {PositionDirection} lane towards {Location}",
       }},
      {"Park",
       {
           "[park] the car {PositionDirection} please",
           "[park] at {Location} {TimeGuidance}",
           "find a [parking] spot near {Location}",
           "just [park] behind {Object} please",
           "[park] {GestureGaze} next to {Object}",
       }},
      {"PullOver",
       {
           "[pull] [over] {PositionDirection} please",
           "can you [pull] [over] {TimeGuidance}",
           "[pull] [over] next to {Location} for {Person}",
           "please [pull] [over] {GestureGaze}",
       }},
      {"Stop",
       {
           "[stop] the car {TimeGuidance} please",
           "[stop] {GestureGaze} for {Person}",
           "please [stop] right now",
           "just [stop] the car okay",
       }},
      {"GoFaster",
       {
           "[speed] [up] please we are late",
           "can you [go] [faster] {TimeGuidance}",
           "[hurry] up a little bit please",
           "please [go] [faster] than this",
       }},
      {"GoSlower",
       {
           "[slow] [down] please",
           "can you [go] [slower] {TimeGuidance}",
           "[slow] [down] near {Object} please",
           "please [go] [slower] around {Location}",
       }},
      {"OpenDoor",
       {
           "[open] the [door] please",
           "[open] the [door] for {Person}",
           "can you [open] the [door] {TimeGuidance}",
           "[open] the back [door] for {Person} please",
           "could you [open] the [door] when we arrive",
       }},
      {"Other",
       {
           "[turn] [on] the music please",
           "[play] some jazz for {Person}",
           "[close] the window please",
           "[turn] [on] the heat it is cold in here",
           "can you [turn] [off] the radio {TimeGuidance}",
       }},
  };
  return templates;
}

inline const std::vector<SharedTemplates>& default_shared_templates() {
  static const std::vector<SharedTemplates> shared = {
      {{"SetDestination", "SetRoute"},
       {
           "[go] to {Location} please",
           "[head] over to {Location} {TimeGuidance}",
           "let us [go] to {Location} please",
           "can we [go] by {Location}",
       }},
      {{"GoFaster", "GoSlower"},
       {
           "[change] the speed {TimeGuidance} please",
           "[adjust] your speed near {Object}",
           "can you [change] the pace a bit",
       }},
      {{"Stop", "PullOver"},
       {
           "[stop] the car {PositionDirection}",
           "can you [stop] {GestureGaze} please",
           "[stop] {PositionDirection} for {Person}",
       }},
  };
  return shared;
}

struct ExpandedToken {
  std::string text;
  std::string slot;  // slot label name
};

// Expands one pattern: "[w]" keyword literals, "{Slot}" fillers, plain words.
inline std::vector<ExpandedToken> expand_pattern(const std::string& pattern, Rng& rng) {
  std::vector<ExpandedToken> out;
  size_t i = 0;
  const auto& fillers = filler_vocab();
  while (i < pattern.size()) {
    if (pattern[i] == ' ') {
      ++i;
      continue;
    }
    if (pattern[i] == '[') {
      size_t end = pattern.find(']', i);
      require(end != std::string::npos, ErrorCode::Parse, "unterminated [ in template \"", pattern, "\"");
      std::string words = pattern.substr(i + 1, end - i - 1);
      std::istringstream ss(words);
      std::string w;
      while (ss >> w) out.push_back({w, "IntentKeyword"});
      i = end + 1;
    } else if (pattern[i] == '{') {
      size_t end = pattern.find('}', i);
      require(end != std::string::npos, ErrorCode::Parse, "unterminated { in template \"", pattern, "\"");
      std::string slot = pattern.substr(i + 1, end - i - 1);
      auto it = fillers.find(slot);
      require(it != fillers.end(), ErrorCode::Parse, "template placeholder {", slot, "} has no filler vocabulary");
      const std::string& filler = it->second[size_t(rng.below(it->second.size()))];
      std::istringstream ss(filler);
      std::string w;
      while (ss >> w) out.push_back({w, slot});
      i = end + 1;
    } else {
      size_t end = pattern.find(' ', i);
      if (end == std::string::npos) end = pattern.size();
      out.push_back({pattern.substr(i, end - i), "None"});
      i = end;
    }
  }
  return out;
}

}  // namespace synth_detail

struct SynthOutput {
  Corpus corpus;
  FeatureStore store;
  std::vector<std::shared_ptr<EmbeddingTable>> tables;  // glove, word2vec, speech2vec

  std::shared_ptr<EmbeddingTable> table(const std::string& name) const {
    for (const auto& t : tables) {
      if (t->name == name) return t;
    }
    return nullptr;
  }
};

inline SynthOutput generate_synthetic(const SynthSpec& user_spec) {
  SynthSpec spec = user_spec;
  if (spec.intent_distribution.empty()) spec.intent_distribution = SynthSpec::default_intent_distribution();
  if (spec.slot_density.empty()) spec.slot_density = SynthSpec::default_slot_density();
  if (spec.templates.empty()) spec.templates = synth_detail::default_templates();
  if (spec.shared_templates.empty()) spec.shared_templates = synth_detail::default_shared_templates();
  require(spec.n_utterances >= 1, ErrorCode::Validation, "n_utterances must be >= 1");

  SynthOutput out;
  out.corpus.slots = SlotInventory::standard();
  out.corpus.intents = IntentInventory::standard();
  const SlotInventory& slots = out.corpus.slots;
  const IntentInventory& intents = out.corpus.intents;

  double prob_sum = 0.0;
  std::vector<double> probs(size_t(intents.size()), 0.0);
  for (const auto& [name, p] : spec.intent_distribution) {
    int idx = intents.index_of(name);
    require(idx >= 0, ErrorCode::Validation, "intent \"", name, "\" outside the standard inventory");
    require(p >= 0.0, ErrorCode::Validation, "negative probability for ", name);
    probs[size_t(idx)] = p;
    prob_sum += p;
  }
  require(std::abs(prob_sum - 1.0) <= 1e-9, ErrorCode::Validation, "intent distribution sums to ", prob_sum);

  // Per-intent template pools (own patterns plus any shared pools it joins).
  std::vector<const IntentTemplates*> own(size_t(intents.size()), nullptr);
  for (const auto& t : spec.templates) {
    int idx = intents.index_of(t.intent);
    require(idx >= 0, ErrorCode::Validation, "templates reference unknown intent \"", t.intent, "\"");
    own[size_t(idx)] = &t;
  }
  std::vector<std::vector<const SharedTemplates*>> shared_of(size_t(intents.size()));
  for (const auto& s : spec.shared_templates) {
    for (const auto& name : s.intents) {
      int idx = intents.index_of(name);
      require(idx >= 0, ErrorCode::Validation, "shared templates reference unknown intent \"", name, "\"");
      shared_of[size_t(idx)].push_back(&s);
    }
  }
  for (int i = 0; i < intents.size(); ++i) {
    if (probs[size_t(i)] <= 0.0) continue;
    size_t pool = own[size_t(i)] != nullptr ? own[size_t(i)]->patterns.size() : 0;
    for (const auto* s : shared_of[size_t(i)]) pool += s->patterns.size();
    require(own[size_t(i)] != nullptr, ErrorCode::Validation, "template set missing intent ", intents.name(i));
    require(pool >= 3, ErrorCode::Validation, "intent ", intents.name(i), " has only ", pool,
            " templates; need at least 3");
  }

  // Intent quota: largest-remainder apportionment keeps the empirical
  // distribution within rounding of the requested one.
  auto counts = detail::apportion(size_t(spec.n_utterances), probs);
  std::vector<int> intent_seq;
  intent_seq.reserve(size_t(spec.n_utterances));
  for (int i = 0; i < intents.size(); ++i) {
    for (size_t k = 0; k < counts[size_t(i)]; ++k) intent_seq.push_back(i);
  }
  Rng root(spec.seed);
  Rng order_rng = root.fork(1);
  order_rng.shuffle(intent_seq);

  // Token generation.
  Rng text_rng = root.fork(2);
  int id_width = 1;
  for (int n = spec.n_utterances; n >= 10; n /= 10) ++id_width;
  for (int i = 0; i < spec.n_utterances; ++i) {
    const int intent = intent_seq[size_t(i)];
    const std::string* pattern = nullptr;
    const auto& pools = shared_of[size_t(intent)];
    if (!pools.empty() && text_rng.uniform() < spec.ambiguity) {
      size_t total = 0;
      for (const auto* s : pools) total += s->patterns.size();
      size_t pick = size_t(text_rng.below(total));
      for (const auto* s : pools) {
        if (pick < s->patterns.size()) {
          pattern = &s->patterns[pick];
          break;
        }
        pick -= s->patterns.size();
      }
    } else {
      const auto& patterns = own[size_t(intent)]->patterns;
      pattern = &patterns[size_t(text_rng.below(patterns.size()))];
    }
    auto expanded = synth_detail::expand_pattern(*pattern, text_rng);

    AnnotatedUtterance u;
    std::ostringstream id;
    id << "u" << std::setw(id_width) << std::setfill('0') << (i + 1);
    u.id = id.str();
    u.intent_id = intent;
    for (const auto& tok : expanded) {
      u.tokens.push_back(tok.text);
      int sid = slots.index_of(tok.slot);
      require(sid >= 0, ErrorCode::Validation, "template slot \"", tok.slot, "\" outside inventory");
      u.slot_ids.push_back(sid);
    }
    if (spec.gen_audio) u.feature_refs.audio = u.id;
    if (spec.gen_video) {
      u.feature_refs.video_cabin = u.id;
      u.feature_refs.video_road = u.id;
    }
    out.corpus.utterances.push_back(std::move(u));
  }

  // Intent-conditioned feature vectors: unit Gaussian noise everywhere, plus a
  // class-mean offset on a per-intent subset of dimensions.
  out.store = FeatureStore(spec.schema);
  std::vector<Modality> gen_modalities;
  if (spec.gen_audio) gen_modalities.push_back(Modality::Audio);
  if (spec.gen_video) {
    gen_modalities.push_back(Modality::VideoCabin);
    gen_modalities.push_back(Modality::VideoRoad);
  }
  std::map<std::pair<int, int>, std::vector<int>> informative;  // (modality, intent) -> dims
  for (Modality m : gen_modalities) {
    const int dim = spec.schema.dim(m);
    const int n_informative = std::max(1, int(double(dim) * spec.informative_fraction));
    for (int intent = 0; intent < intents.size(); ++intent) {
      Rng dim_rng = root.fork(400 + uint64_t(int(m)) * 64 + uint64_t(intent));
      std::vector<int> all(size_t(dim));
      for (int d = 0; d < dim; ++d) all[size_t(d)] = d;
      dim_rng.shuffle(all);
      all.resize(size_t(n_informative));
      informative[{int(m), intent}] = std::move(all);
    }
  }
  Rng feat_rng = root.fork(3);
  for (const auto& u : out.corpus.utterances) {
    for (Modality m : gen_modalities) {
      const int dim = spec.schema.dim(m);
      const double offset = m == Modality::Audio ? spec.audio_offset : spec.video_offset;
      std::vector<float> vec(size_t(dim));
      for (int d = 0; d < dim; ++d) vec[size_t(d)] = float(feat_rng.gaussian());
      for (int d : informative.at({int(m), u.intent_id})) vec[size_t(d)] += float(offset);
      out.store.insert(u.id, m, std::move(vec));
    }
  }

  // Embedding tables. The full-vocabulary word table plays the GloVe role; the
  // word2vec/speech2vec counterparts are linear transforms of it plus noise,
  // restricted to the most frequent words to mimic lower coverage.
  std::map<std::string, long> freq;
  for (const auto& u : out.corpus.utterances) {
    for (const auto& t : u.tokens) freq[lowercase(t)]++;
  }
  std::vector<std::pair<long, std::string>> ranked;
  for (const auto& [w, n] : freq) ranked.push_back({n, w});
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  const int dim = spec.embedding_dim;
  auto glove = std::make_shared<EmbeddingTable>();
  glove->name = "glove";
  glove->dim = dim;
  glove->matrix = MatF(int(ranked.size()), dim);
  Rng emb_rng = root.fork(5);
  for (size_t r = 0; r < ranked.size(); ++r) {
    glove->vocab.emplace(ranked[r].second, int(r));
    float* row = glove->matrix.row(int(r));
    for (int d = 0; d < dim; ++d) row[d] = float(emb_rng.gaussian() * 0.4);
  }

  auto derive = [&](const std::string& name, double vocab_fraction, uint64_t stream) {
    auto table = std::make_shared<EmbeddingTable>();
    table->name = name;
    table->dim = dim;
    const size_t k = std::max<size_t>(1, size_t(std::llround(vocab_fraction * double(ranked.size()))));
    const size_t n_rows = std::min(k, ranked.size());
    Rng t_rng = root.fork(stream);
    MatD transform(dim, dim);
    const double scale = 1.0 / std::sqrt(double(dim));
    for (auto& v : transform.data) v = t_rng.gaussian() * scale;
    table->matrix = MatF(int(n_rows), dim);
    for (size_t r = 0; r < n_rows; ++r) {
      table->vocab.emplace(ranked[r].second, int(r));
      const float* src = glove->matrix.row(glove->vocab.at(ranked[r].second));
      float* dst = table->matrix.row(int(r));
      for (int i = 0; i < dim; ++i) {
        double s = 0.0;
        for (int j = 0; j < dim; ++j) s += transform.at(i, j) * double(src[j]);
        dst[i] = float(s + t_rng.gaussian() * spec.speech_noise);
      }
    }
    return table;
  };

  out.tables.push_back(glove);
  out.tables.push_back(derive("word2vec", spec.word2vec_vocab_fraction, 6));
  out.tables.push_back(derive("speech2vec", spec.speech2vec_vocab_fraction, 7));
  return out;
}

inline std::string embedding_table_to_text(const EmbeddingTable& t) {
  std::vector<std::pair<int, const std::string*>> by_row;
  by_row.reserve(t.vocab.size());
  for (const auto& [w, r] : t.vocab) by_row.push_back({r, &w});
  std::sort(by_row.begin(), by_row.end());
  std::ostringstream os;
  char buf[32];
  for (const auto& [r, w] : by_row) {
    os << *w;
    const float* row = t.matrix.row(r);
    for (int d = 0; d < t.dim; ++d) {
      std::snprintf(buf, sizeof(buf), "%.6f", double(row[d]));
      os << ' ' << buf;
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// JSON spec file.

inline SynthSpec parse_synth_spec(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "n_utterances",     "seed",          "intent_distribution",
      "slot_density",     "ambiguity",     "audio_offset",
      "video_offset",     "informative_fraction", "speech_noise",
      "embedding_dim",    "word2vec_vocab_fraction", "speech2vec_vocab_fraction",
      "gen_audio",        "gen_video",     "templates",
      "shared_templates", "schema",
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    require(known.count(it.key()) > 0, ErrorCode::Parse, "unknown key \"", it.key(), "\" in synth spec");
  }
  SynthSpec spec;
  if (j.contains("n_utterances")) spec.n_utterances = j["n_utterances"].get<int>();
  if (j.contains("seed")) spec.seed = j["seed"].get<uint64_t>();
  if (j.contains("intent_distribution")) {
    spec.intent_distribution = j["intent_distribution"].get<std::map<std::string, double>>();
  }
  if (j.contains("slot_density")) spec.slot_density = j["slot_density"].get<std::map<std::string, double>>();
  if (j.contains("ambiguity")) spec.ambiguity = j["ambiguity"].get<double>();
  if (j.contains("audio_offset")) spec.audio_offset = j["audio_offset"].get<double>();
  if (j.contains("video_offset")) spec.video_offset = j["video_offset"].get<double>();
  if (j.contains("informative_fraction")) spec.informative_fraction = j["informative_fraction"].get<double>();
  if (j.contains("speech_noise")) spec.speech_noise = j["speech_noise"].get<double>();
  if (j.contains("embedding_dim")) spec.embedding_dim = j["embedding_dim"].get<int>();
  if (j.contains("word2vec_vocab_fraction")) {
    spec.word2vec_vocab_fraction = j["word2vec_vocab_fraction"].get<double>();
  }
  if (j.contains("speech2vec_vocab_fraction")) {
    spec.speech2vec_vocab_fraction = j["speech2vec_vocab_fraction"].get<double>();
  }
  if (j.contains("gen_audio")) spec.gen_audio = j["gen_audio"].get<bool>();
  if (j.contains("gen_video")) spec.gen_video = j["gen_video"].get<bool>();
  if (j.contains("schema")) {
    for (auto it = j["schema"].begin(); it != j["schema"].end(); ++it) {
      spec.schema.dim(modality_from_string(it.key())) = it.value().get<int>();
    }
  }
  if (j.contains("templates")) {
    for (const auto& t : j["templates"]) {
      spec.templates.push_back({t.at("intent").get<std::string>(),
                                t.at("patterns").get<std::vector<std::string>>()});
    }
  }
  if (j.contains("shared_templates")) {
    for (const auto& t : j["shared_templates"]) {
      spec.shared_templates.push_back({t.at("intents").get<std::vector<std::string>>(),
                                       t.at("patterns").get<std::vector<std::string>>()});
    }
  }
  return spec;
}

inline SynthSpec load_synth_spec(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, "invalid synth spec ", path, ": ", e.what());
  }
  return parse_synth_spec(j);
}

}  // namespace hjnt
