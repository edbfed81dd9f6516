#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hjnt/features.hpp"
#include "hjnt/neural.hpp"

namespace hjnt {

// Which modality vectors are projected and concatenated into the intent
// readout. Fused width is the sum of enabled projection widths.
struct FusionPolicy {
  bool audio = false;
  bool video_cabin = false;
  bool video_road = false;
  int width_audio = 64;
  int width_video_cabin = 64;
  int width_video_road = 64;
  bool normalize = true;

  bool enabled(Modality m) const {
    switch (m) {
      case Modality::Audio: return audio;
      case Modality::VideoCabin: return video_cabin;
      case Modality::VideoRoad: return video_road;
    }
    return false;
  }

  void set_enabled(Modality m, bool on) {
    switch (m) {
      case Modality::Audio: audio = on; return;
      case Modality::VideoCabin: video_cabin = on; return;
      case Modality::VideoRoad: video_road = on; return;
    }
  }

  int width(Modality m) const {
    switch (m) {
      case Modality::Audio: return width_audio;
      case Modality::VideoCabin: return width_video_cabin;
      case Modality::VideoRoad: return width_video_road;
    }
    return 0;
  }

  void set_width(Modality m, int w) {
    switch (m) {
      case Modality::Audio: width_audio = w; return;
      case Modality::VideoCabin: width_video_cabin = w; return;
      case Modality::VideoRoad: width_video_road = w; return;
    }
  }

  // Fixed concatenation order: audio, video_cabin, video_road.
  std::vector<Modality> enabled_list() const {
    std::vector<Modality> out;
    for (Modality m : kAllModalities) {
      if (enabled(m)) out.push_back(m);
    }
    return out;
  }

  int fused_width() const {
    int w = 0;
    for (Modality m : enabled_list()) w += width(m);
    return w;
  }

  bool any() const { return audio || video_cabin || video_road; }
};

// Per-modality affine projections (raw dim -> projection width), applied as
// tanh(W x + b) before concatenation.
template <typename T>
struct ProjectionParamsT {
  struct Entry {
    Modality modality;
    DenseParams<T> dense;
  };
  std::vector<Entry> entries;

  static ProjectionParamsT make(const FusionPolicy& policy, const FeatureSchema& schema, Rng& rng) {
    ProjectionParamsT p;
    for (Modality m : policy.enabled_list()) {
      p.entries.push_back({m, DenseParams<T>::make(schema.dim(m), policy.width(m), rng)});
    }
    return p;
  }

  static ProjectionParamsT zeros_like(const ProjectionParamsT& o) {
    ProjectionParamsT p;
    for (const auto& e : o.entries) p.entries.push_back({e.modality, DenseParams<T>::zeros_like(e.dense)});
    return p;
  }

  template <typename U>
  ProjectionParamsT<U> cast() const {
    ProjectionParamsT<U> p;
    for (const auto& e : entries) p.entries.push_back({e.modality, e.dense.template cast<U>()});
    return p;
  }

  std::vector<TensorRef<T>> tensors(const std::string& prefix) {
    std::vector<TensorRef<T>> refs;
    for (auto& e : entries) {
      std::string base = prefix + "proj." + to_string(e.modality) + ".";
      refs.push_back({base + "w", &e.dense.w});
      refs.push_back({base + "b", &e.dense.b});
    }
    return refs;
  }
};

using ProjectionParams = ProjectionParamsT<float>;

// Raw (already normalized) feature vectors for one utterance, in the policy's
// enabled order.
template <typename T>
struct FusionInput {
  std::vector<std::vector<T>> raw;
};

// Gathers the vectors a policy needs for one utterance. Throws MissingFeature
// naming the modality and utterance id when a required vector is absent.
template <typename T>
FusionInput<T> gather_fusion_input(const FusionPolicy& policy, const FeatureStore& store,
                                   const AnnotatedUtterance& u) {
  FusionInput<T> in;
  for (Modality m : policy.enabled_list()) {
    const std::vector<float>* vec = store.find(u.ref_for(m), m);
    require(vec != nullptr, ErrorCode::MissingFeature, "MissingFeature(", to_string(m), ", ", u.id, ")");
    std::vector<T> cast(vec->size());
    for (size_t i = 0; i < vec->size(); ++i) cast[i] = T((*vec)[i]);
    in.raw.push_back(std::move(cast));
  }
  return in;
}

template <typename T>
struct FuseCache {
  std::vector<T> fused;  // concatenated tanh(affine) outputs, length = fused_width
};

template <typename T>
FuseCache<T> fuse(const FusionPolicy& policy, const ProjectionParamsT<T>& proj, const FusionInput<T>& input) {
  FuseCache<T> cache;
  require(input.raw.size() == proj.entries.size(), ErrorCode::DimMismatch,
          "fuse: input count != enabled modality count");
  cache.fused.resize(size_t(policy.fused_width()));
  size_t offset = 0;
  for (size_t k = 0; k < proj.entries.size(); ++k) {
    const auto& entry = proj.entries[k];
    const auto& x = input.raw[k];
    require(int(x.size()) == entry.dense.in(), ErrorCode::DimMismatch, "fuse: raw dim ", x.size(), " != ",
            entry.dense.in(), " for ", to_string(entry.modality));
    std::vector<T> z(size_t(entry.dense.out()));
    dense_forward(entry.dense, x.data(), z.data());
    for (size_t i = 0; i < z.size(); ++i) cache.fused[offset + i] = std::tanh(z[i]);
    offset += z.size();
  }
  return cache;
}

// Backward from d(fused) into the projection gradients.
template <typename T>
void fuse_backward(const ProjectionParamsT<T>& proj, const FusionInput<T>& input, const FuseCache<T>& cache,
                   const T* d_fused, ProjectionParamsT<T>& grads) {
  size_t offset = 0;
  for (size_t k = 0; k < proj.entries.size(); ++k) {
    const auto& entry = proj.entries[k];
    const int out = entry.dense.out();
    std::vector<T> dz(size_t(out));
    for (int i = 0; i < out; ++i) {
      const T y = cache.fused[offset + size_t(i)];
      dz[size_t(i)] = d_fused[offset + size_t(i)] * (T(1) - y * y);
    }
    dense_backward(entry.dense, input.raw[k].data(), dz.data(), grads.entries[k].dense);
    offset += size_t(out);
  }
}

}  // namespace hjnt
