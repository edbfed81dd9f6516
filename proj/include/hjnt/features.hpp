#pragma once

#include <json.hpp>

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "hjnt/common.hpp"
#include "hjnt/corpus.hpp"
#include "hjnt/io.hpp"
#include "hjnt/labels.hpp"

namespace hjnt {

struct FeatureSchema {
  int audio = 1582;
  int video_cabin = 4096;
  int video_road = 4096;

  int dim(Modality m) const {
    switch (m) {
      case Modality::Audio: return audio;
      case Modality::VideoCabin: return video_cabin;
      case Modality::VideoRoad: return video_road;
    }
    return 0;
  }

  int& dim(Modality m) {
    switch (m) {
      case Modality::Audio: return audio;
      case Modality::VideoCabin: return video_cabin;
      case Modality::VideoRoad: return video_road;
    }
    return audio;
  }

  static FeatureSchema load(const std::string& path) {
    FeatureSchema s;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, "invalid feature schema ", path, ": ", e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      Modality m = modality_from_string(it.key());
      require(it.value().is_number_integer() && it.value().get<int>() > 0, ErrorCode::Parse,
              "invalid dimension for ", it.key(), " in ", path);
      s.dim(m) = it.value().get<int>();
    }
    return s;
  }

  std::string to_json() const {
    nlohmann::ordered_json j;
    j["audio"] = audio;
    j["video_cabin"] = video_cabin;
    j["video_road"] = video_road;
    return j.dump(2) + "\n";
  }
};

// Per-utterance-id optional feature vectors, immutable after load/generation.
class FeatureStore {
 public:
  explicit FeatureStore(FeatureSchema schema = {}) : schema_(schema) {}

  const FeatureSchema& schema() const { return schema_; }

  bool has(const std::string& id, Modality m) const { return find(id, m) != nullptr; }

  const std::vector<float>* find(const std::string& id, Modality m) const {
    auto it = records_.find(id);
    if (it == records_.end()) return nullptr;
    const std::vector<float>& v = it->second[size_t(m)];
    return v.empty() ? nullptr : &v;
  }

  void insert(const std::string& id, Modality m, std::vector<float> vec) {
    require(int(vec.size()) == schema_.dim(m), ErrorCode::DimMismatch, "WrongDim(", id, ", ", to_string(m), ", ",
            vec.size(), ", expected ", schema_.dim(m), ")");
    auto it = records_.find(id);
    if (it == records_.end()) {
      ids_.push_back(id);
      it = records_.emplace(id, Record{}).first;
    }
    require(it->second[size_t(m)].empty(), ErrorCode::DuplicateId, "DuplicateId(", id, ", ", to_string(m), ")");
    it->second[size_t(m)] = std::move(vec);
  }

  // Insertion-ordered ids, used for deterministic serialization.
  const std::vector<std::string>& ids() const { return ids_; }

  size_t size() const { return records_.size(); }

 private:
  using Record = std::array<std::vector<float>, 3>;
  FeatureSchema schema_;
  std::unordered_map<std::string, Record> records_;
  std::vector<std::string> ids_;
};

inline FeatureStore load_feature_store(const std::string& path, const FeatureSchema& schema = {}) {
  LineReader reader(path);
  FeatureStore store(schema);
  std::string line;
  size_t line_no = 0;
  while (reader.next(line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, "malformed feature record at line ", line_no, ": ", e.what());
    }
    require(j.is_object() && j.contains("id") && j.contains("modality") && j.contains("vector"), ErrorCode::Parse,
            "feature record at line ", line_no, " must have id/modality/vector");
    Modality m = modality_from_string(j["modality"].get<std::string>());
    std::vector<float> vec;
    require(j["vector"].is_array(), ErrorCode::Parse, "invalid vector at line ", line_no);
    vec.reserve(j["vector"].size());
    for (const auto& v : j["vector"]) {
      require(v.is_number(), ErrorCode::Parse, "non-numeric feature value at line ", line_no);
      vec.push_back(v.get<float>());
    }
    store.insert(j["id"].get<std::string>(), m, std::move(vec));
  }
  return store;
}

inline void save_feature_store(const FeatureStore& store, const std::string& path) {
  std::ostringstream os;
  char buf[32];
  for (const auto& id : store.ids()) {
    for (Modality m : kAllModalities) {
      const std::vector<float>* vec = store.find(id, m);
      if (vec == nullptr) continue;
      os << "{\"id\":\"" << id << "\",\"modality\":\"" << to_string(m) << "\",\"vector\":[";
      for (size_t i = 0; i < vec->size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.4f", double((*vec)[i]));
        os << (i ? "," : "") << buf;
      }
      os << "]}\n";
    }
  }
  write_file(path, os.str());
}

// ---------------------------------------------------------------------------
// Z-normalization with statistics taken from the training split only.

struct NormStats {
  // Per modality; empty vectors mean "no stats for this modality".
  std::array<std::vector<float>, 3> mean;
  std::array<std::vector<float>, 3> sigma;  // floored at 1e-6

  bool has(Modality m) const { return !mean[size_t(m)].empty(); }
};

// Computes per-dimension mean/stddev over the feature vectors referenced by
// the given (training) corpus, for each requested modality.
inline NormStats compute_norm_stats(const FeatureStore& store, const Corpus& train,
                                    const std::vector<Modality>& modalities) {
  NormStats stats;
  for (Modality m : modalities) {
    const int dim = store.schema().dim(m);
    std::vector<double> sum(size_t(dim), 0.0), sum_sq(size_t(dim), 0.0);
    size_t n = 0;
    for (const auto& u : train.utterances) {
      const std::vector<float>* vec = store.find(u.ref_for(m), m);
      if (vec == nullptr) continue;
      for (int i = 0; i < dim; ++i) {
        sum[size_t(i)] += double((*vec)[size_t(i)]);
        sum_sq[size_t(i)] += double((*vec)[size_t(i)]) * double((*vec)[size_t(i)]);
      }
      ++n;
    }
    require(n > 0, ErrorCode::MissingFeature, "no training vectors for modality ", to_string(m));
    auto& mu = stats.mean[size_t(m)];
    auto& sg = stats.sigma[size_t(m)];
    mu.resize(size_t(dim));
    sg.resize(size_t(dim));
    for (int i = 0; i < dim; ++i) {
      double mean = sum[size_t(i)] / double(n);
      double var = sum_sq[size_t(i)] / double(n) - mean * mean;
      mu[size_t(i)] = float(mean);
      sg[size_t(i)] = float(std::max(std::sqrt(std::max(var, 0.0)), 1e-6));
    }
  }
  return stats;
}

// Returns a store with (x - mu) / sigma applied per dimension for every
// modality covered by stats. Not idempotent: reapplying the same raw-data
// stats to an already-normalized store shifts values again.
inline FeatureStore normalize_store(const FeatureStore& store, const NormStats& stats) {
  FeatureStore out(store.schema());
  for (const auto& id : store.ids()) {
    for (Modality m : kAllModalities) {
      const std::vector<float>* vec = store.find(id, m);
      if (vec == nullptr) continue;
      std::vector<float> v = *vec;
      if (stats.has(m)) {
        const auto& mu = stats.mean[size_t(m)];
        const auto& sg = stats.sigma[size_t(m)];
        require(mu.size() == v.size(), ErrorCode::DimMismatch, "normalization stats dim mismatch for ",
                to_string(m));
        for (size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - mu[i]) / sg[i];
      }
      out.insert(id, m, std::move(v));
    }
  }
  return out;
}

}  // namespace hjnt
