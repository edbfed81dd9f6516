#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "hjnt/corpus.hpp"
#include "hjnt/embeddings.hpp"
#include "hjnt/fusion.hpp"
#include "hjnt/neural.hpp"

namespace hjnt {

// ---------------------------------------------------------------------------
// Level-1: seq2seq Bi-LSTM tagger over intent keywords and slots.

template <typename T>
struct Level1TaggerT {
  BiLstmParams<T> bilstm;
  DenseParams<T> proj;  // 2h -> |slot inventory|

  static Level1TaggerT make(int input_dim, int hidden, int n_slots, Rng rng) {
    Level1TaggerT m;
    m.bilstm = BiLstmParams<T>::make(input_dim, hidden, rng);
    m.proj = DenseParams<T>::make(2 * hidden, n_slots, rng);
    return m;
  }

  static Level1TaggerT zeros_like(const Level1TaggerT& o) {
    Level1TaggerT m;
    m.bilstm = BiLstmParams<T>::zeros_like(o.bilstm);
    m.proj = DenseParams<T>::zeros_like(o.proj);
    return m;
  }

  int hidden() const { return bilstm.hidden(); }
  int input_dim() const { return bilstm.input_dim(); }
  int n_slots() const { return proj.out(); }

  template <typename U>
  Level1TaggerT<U> cast() const {
    Level1TaggerT<U> m;
    m.bilstm = bilstm.template cast<U>();
    m.proj = proj.template cast<U>();
    return m;
  }

  std::vector<TensorRef<T>> tensors(const std::string& prefix = "level1.") {
    return {
        {prefix + "bilstm.fwd.w_x", &bilstm.fwd.w_x}, {prefix + "bilstm.fwd.w_h", &bilstm.fwd.w_h},
        {prefix + "bilstm.fwd.b", &bilstm.fwd.b},     {prefix + "bilstm.bwd.w_x", &bilstm.bwd.w_x},
        {prefix + "bilstm.bwd.w_h", &bilstm.bwd.w_h}, {prefix + "bilstm.bwd.b", &bilstm.bwd.b},
        {prefix + "proj.w", &proj.w},                 {prefix + "proj.b", &proj.b},
    };
  }
};

using Level1Tagger = Level1TaggerT<float>;

template <typename T>
struct Level1TagResult {
  Matrix<T> probs;  // t x |slots|, each row sums to 1
  std::vector<int> labels;
};

template <typename T>
Level1TagResult<T> level1_tag(const Level1TaggerT<T>& m, const Matrix<T>& embedded) {
  require(embedded.rows >= 1, ErrorCode::Validation, "level1_tag: empty sequence");
  BiLstmCache<T> cache;
  bilstm_forward(m.bilstm, embedded, cache);
  Level1TagResult<T> out;
  out.probs = Matrix<T>(embedded.rows, m.n_slots());
  out.labels.resize(size_t(embedded.rows));
  std::vector<T> logits(size_t(m.n_slots()));
  for (int t = 0; t < embedded.rows; ++t) {
    dense_forward(m.proj, cache.concat.row(t), logits.data());
    softmax(logits.data(), m.n_slots(), out.probs.row(t));
    out.labels[size_t(t)] =
        int(std::max_element(out.probs.row(t), out.probs.row(t) + m.n_slots()) - out.probs.row(t));
  }
  return out;
}

// Mean per-token cross-entropy; accumulates parameter gradients.
template <typename T>
T level1_loss_backward(const Level1TaggerT<T>& m, const Matrix<T>& embedded, const std::vector<int>& gold_slots,
                       Level1TaggerT<T>& grads) {
  const int t_len = embedded.rows;
  require(size_t(t_len) == gold_slots.size(), ErrorCode::DimMismatch, "level1 loss: target length mismatch");
  BiLstmCache<T> cache;
  bilstm_forward(m.bilstm, embedded, cache);
  Matrix<T> d_concat(t_len, 2 * m.hidden());
  std::vector<T> logits(size_t(m.n_slots())), probs(size_t(m.n_slots())), dlogits(size_t(m.n_slots()));
  T loss = T(0);
  const T scale = T(1) / T(t_len);
  for (int t = 0; t < t_len; ++t) {
    dense_forward(m.proj, cache.concat.row(t), logits.data());
    loss += softmax_xent(logits.data(), m.n_slots(), gold_slots[size_t(t)], probs.data(), dlogits.data());
    for (auto& d : dlogits) d *= scale;
    dense_backward(m.proj, cache.concat.row(t), dlogits.data(), grads.proj, d_concat.row(t));
  }
  bilstm_backward(m.bilstm, embedded, cache, d_concat, grads.bilstm);
  return loss * scale;
}

// ---------------------------------------------------------------------------
// Gating between the levels: tokens predicted as None are dropped; when every
// token is None the whole sequence is passed through with fallback=true.

struct GateResult {
  std::vector<int> indices;
  bool fallback = false;
};

inline GateResult gate_tokens(size_t token_count, const std::vector<int>& labels, int none_index) {
  require(labels.size() == token_count, ErrorCode::DimMismatch, "gate_tokens: ", token_count, " tokens vs ",
          labels.size(), " labels");
  GateResult g;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != none_index) g.indices.push_back(int(i));
  }
  if (g.indices.empty()) {
    g.fallback = true;
    g.indices.resize(token_count);
    for (size_t i = 0; i < token_count; ++i) g.indices[i] = int(i);
  }
  return g;
}

inline GateResult gate_tokens(const std::vector<std::string>& tokens, const std::vector<int>& labels,
                              int none_index) {
  return gate_tokens(tokens.size(), labels, none_index);
}

template <typename T>
Matrix<T> select_rows(const Matrix<T>& m, const std::vector<int>& rows) {
  Matrix<T> out(int(rows.size()), m.cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(m.row(rows[i]), m.row(rows[i]) + m.cols, out.row(int(i)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Level-2: joint Bi-LSTM over the gated tokens, predicting per-token slots and
// the utterance intent. Utterance-level fused features enter the intent head
// only.

template <typename T>
struct Level2JointT {
  BiLstmParams<T> bilstm;
  DenseParams<T> slot_head;    // 2h -> |slots|
  DenseParams<T> intent_head;  // 2h + fused_dim -> |intents|
  int fused_dim = 0;
  double lambda = 1.0;  // joint loss weight on the intent term

  static Level2JointT make(int input_dim, int hidden, int n_slots, int n_intents, int fused_dim, double lambda,
                           Rng rng) {
    require(lambda > 0.0, ErrorCode::Validation, "joint loss weight must be positive");
    Level2JointT m;
    m.bilstm = BiLstmParams<T>::make(input_dim, hidden, rng);
    m.slot_head = DenseParams<T>::make(2 * hidden, n_slots, rng);
    m.intent_head = DenseParams<T>::make(2 * hidden + fused_dim, n_intents, rng);
    m.fused_dim = fused_dim;
    m.lambda = lambda;
    return m;
  }

  static Level2JointT zeros_like(const Level2JointT& o) {
    Level2JointT m;
    m.bilstm = BiLstmParams<T>::zeros_like(o.bilstm);
    m.slot_head = DenseParams<T>::zeros_like(o.slot_head);
    m.intent_head = DenseParams<T>::zeros_like(o.intent_head);
    m.fused_dim = o.fused_dim;
    m.lambda = o.lambda;
    return m;
  }

  int hidden() const { return bilstm.hidden(); }
  int input_dim() const { return bilstm.input_dim(); }
  int n_slots() const { return slot_head.out(); }
  int n_intents() const { return intent_head.out(); }

  template <typename U>
  Level2JointT<U> cast() const {
    Level2JointT<U> m;
    m.bilstm = bilstm.template cast<U>();
    m.slot_head = slot_head.template cast<U>();
    m.intent_head = intent_head.template cast<U>();
    m.fused_dim = fused_dim;
    m.lambda = lambda;
    return m;
  }

  std::vector<TensorRef<T>> tensors(const std::string& prefix = "level2.") {
    return {
        {prefix + "bilstm.fwd.w_x", &bilstm.fwd.w_x}, {prefix + "bilstm.fwd.w_h", &bilstm.fwd.w_h},
        {prefix + "bilstm.fwd.b", &bilstm.fwd.b},     {prefix + "bilstm.bwd.w_x", &bilstm.bwd.w_x},
        {prefix + "bilstm.bwd.w_h", &bilstm.bwd.w_h}, {prefix + "bilstm.bwd.b", &bilstm.bwd.b},
        {prefix + "slot.w", &slot_head.w},            {prefix + "slot.b", &slot_head.b},
        {prefix + "intent.w", &intent_head.w},        {prefix + "intent.b", &intent_head.b},
    };
  }
};

using Level2Joint = Level2JointT<float>;

template <typename T>
struct Level2Output {
  std::vector<T> intent_probs;
  Matrix<T> slot_probs;  // t' x |slots|
};

// The intent readout consumes [final forward hidden ; final backward hidden ;
// fused features].
template <typename T>
Level2Output<T> level2_joint(const Level2JointT<T>& m, const Matrix<T>& embedded_gated,
                             const std::vector<T>& fused) {
  require(embedded_gated.rows >= 1, ErrorCode::Validation, "level2_joint: empty filtered sequence");
  require(int(fused.size()) == m.fused_dim, ErrorCode::DimMismatch, "level2_joint: fused width ", fused.size(),
          " != ", m.fused_dim);
  BiLstmCache<T> cache;
  bilstm_forward(m.bilstm, embedded_gated, cache);
  const int h = m.hidden();
  Level2Output<T> out;
  out.slot_probs = Matrix<T>(embedded_gated.rows, m.n_slots());
  std::vector<T> logits(size_t(std::max(m.n_slots(), m.n_intents())));
  for (int t = 0; t < embedded_gated.rows; ++t) {
    dense_forward(m.slot_head, cache.concat.row(t), logits.data());
    softmax(logits.data(), m.n_slots(), out.slot_probs.row(t));
  }
  std::vector<T> intent_in(size_t(2 * h + m.fused_dim));
  std::copy(cache.final_fwd(), cache.final_fwd() + h, intent_in.begin());
  std::copy(cache.final_bwd(), cache.final_bwd() + h, intent_in.begin() + h);
  std::copy(fused.begin(), fused.end(), intent_in.begin() + 2 * h);
  out.intent_probs.resize(size_t(m.n_intents()));
  dense_forward(m.intent_head, intent_in.data(), logits.data());
  softmax(logits.data(), m.n_intents(), out.intent_probs.data());
  return out;
}

// Joint loss: mean slot cross-entropy over the gated tokens plus
// lambda * intent cross-entropy. Accumulates gradients for the model and,
// when fusion is active, for the projections.
template <typename T>
T level2_loss_backward(const Level2JointT<T>& m, const Matrix<T>& embedded_gated,
                       const std::vector<int>& gold_slots_gated, int gold_intent, const FusionPolicy* policy,
                       const ProjectionParamsT<T>* proj, const FusionInput<T>* fusion_input,
                       Level2JointT<T>& grads, ProjectionParamsT<T>* proj_grads) {
  const int t_len = embedded_gated.rows;
  require(size_t(t_len) == gold_slots_gated.size(), ErrorCode::DimMismatch, "level2 loss: target length mismatch");
  const int h = m.hidden();

  FuseCache<T> fuse_cache;
  if (m.fused_dim > 0) {
    require(policy != nullptr && proj != nullptr && fusion_input != nullptr, ErrorCode::MissingFeature,
            "level2 loss: fusion inputs required");
    fuse_cache = fuse(*policy, *proj, *fusion_input);
  }

  BiLstmCache<T> cache;
  bilstm_forward(m.bilstm, embedded_gated, cache);
  Matrix<T> d_concat(t_len, 2 * h);

  std::vector<T> logits(size_t(std::max(m.n_slots(), m.n_intents())));
  std::vector<T> probs(size_t(std::max(m.n_slots(), m.n_intents())));
  std::vector<T> dlogits(size_t(std::max(m.n_slots(), m.n_intents())));

  T loss = T(0);
  const T slot_scale = T(1) / T(t_len);
  for (int t = 0; t < t_len; ++t) {
    dense_forward(m.slot_head, cache.concat.row(t), logits.data());
    loss += slot_scale *
            softmax_xent(logits.data(), m.n_slots(), gold_slots_gated[size_t(t)], probs.data(), dlogits.data());
    for (int i = 0; i < m.n_slots(); ++i) dlogits[size_t(i)] *= slot_scale;
    dense_backward(m.slot_head, cache.concat.row(t), dlogits.data(), grads.slot_head, d_concat.row(t));
  }

  std::vector<T> intent_in(size_t(2 * h + m.fused_dim));
  std::copy(cache.final_fwd(), cache.final_fwd() + h, intent_in.begin());
  std::copy(cache.final_bwd(), cache.final_bwd() + h, intent_in.begin() + h);
  if (m.fused_dim > 0) std::copy(fuse_cache.fused.begin(), fuse_cache.fused.end(), intent_in.begin() + 2 * h);
  dense_forward(m.intent_head, intent_in.data(), logits.data());
  loss += T(m.lambda) * softmax_xent(logits.data(), m.n_intents(), gold_intent, probs.data(), dlogits.data());
  for (int i = 0; i < m.n_intents(); ++i) dlogits[size_t(i)] *= T(m.lambda);
  std::vector<T> d_intent_in(intent_in.size(), T(0));
  dense_backward(m.intent_head, intent_in.data(), dlogits.data(), grads.intent_head, d_intent_in.data());

  // Final forward state feeds the last row's forward half; final backward
  // state feeds the first row's backward half.
  for (int i = 0; i < h; ++i) d_concat.at(t_len - 1, i) += d_intent_in[size_t(i)];
  for (int i = 0; i < h; ++i) d_concat.at(0, h + i) += d_intent_in[size_t(h + i)];
  if (m.fused_dim > 0 && proj_grads != nullptr) {
    fuse_backward(*proj, *fusion_input, fuse_cache, d_intent_in.data() + 2 * h, *proj_grads);
  }

  bilstm_backward(m.bilstm, embedded_gated, cache, d_concat, grads.bilstm);
  return loss;
}

// ---------------------------------------------------------------------------
// Full pipeline.

struct NLUResult {
  int intent_id = -1;
  double intent_confidence = 0.0;
  std::vector<int> slot_ids;
  std::vector<double> slot_confidences;
  std::vector<bool> gate_mask;
  bool fallback = false;

  bool operator==(const NLUResult& o) const = default;
};

struct HJoint2Pipeline {
  SlotInventory slots;
  IntentInventory intents;
  EmbeddingStack stack;
  Level1Tagger level1;
  Level2Joint level2;
  FusionPolicy fusion;
  ProjectionParams projections;
  NormStats norm_stats;
  std::string gating_policy = "drop-none";
  std::string fallback_policy = "full-sequence-flag";

  FusionInput<float> fusion_input_for(const FeatureStore* store, const AnnotatedUtterance& u) const {
    FusionInput<float> in;
    if (!fusion.any()) return in;
    require(store != nullptr, ErrorCode::MissingFeature,
            "MissingFeatureStore: fusion policy requires a feature store");
    in = gather_fusion_input<float>(fusion, *store, u);
    if (fusion.normalize) {
      auto enabled = fusion.enabled_list();
      for (size_t k = 0; k < enabled.size(); ++k) {
        Modality m = enabled[k];
        require(norm_stats.has(m), ErrorCode::MissingFeature, "no normalization stats for ", to_string(m));
        const auto& mu = norm_stats.mean[size_t(m)];
        const auto& sg = norm_stats.sigma[size_t(m)];
        auto& v = in.raw[k];
        require(mu.size() == v.size(), ErrorCode::DimMismatch, "stats dim mismatch for ", to_string(m));
        for (size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - mu[i]) / sg[i];
      }
    }
    return in;
  }

  Level1TagResult<float> tag_level1(const AnnotatedUtterance& u) const {
    require(!u.tokens.empty(), ErrorCode::Validation, "EmptyUtterance: \"", u.id, "\"");
    MatF embedded = embed_tokens(stack, u.tokens);
    return level1_tag(level1, embedded);
  }

  NLUResult predict(const AnnotatedUtterance& u, const FeatureStore* store = nullptr) const {
    require(!u.tokens.empty(), ErrorCode::Validation, "EmptyUtterance: \"", u.id, "\"");
    MatF embedded = embed_tokens(stack, u.tokens);
    Level1TagResult<float> l1 = level1_tag(level1, embedded);
    GateResult gate = gate_tokens(u.tokens.size(), l1.labels, slots.none_index);
    MatF gated = select_rows(embedded, gate.indices);

    FusionInput<float> fin = fusion_input_for(store, u);
    std::vector<float> fused;
    if (fusion.any()) {
      FuseCache<float> fc = fuse(fusion, projections, fin);
      fused = std::move(fc.fused);
    }
    Level2Output<float> l2 = level2_joint(level2, gated, fused);

    NLUResult r;
    r.intent_id = int(std::max_element(l2.intent_probs.begin(), l2.intent_probs.end()) - l2.intent_probs.begin());
    r.intent_confidence = double(l2.intent_probs[size_t(r.intent_id)]);
    r.fallback = gate.fallback;
    const size_t t_len = u.tokens.size();
    r.slot_ids.assign(t_len, slots.none_index);
    r.slot_confidences.assign(t_len, 0.0);
    r.gate_mask.assign(t_len, false);
    for (size_t k = 0; k < gate.indices.size(); ++k) {
      const int pos = gate.indices[size_t(k)];
      const float* row = l2.slot_probs.row(int(k));
      int best = int(std::max_element(row, row + level2.n_slots()) - row);
      r.slot_ids[size_t(pos)] = best;
      r.slot_confidences[size_t(pos)] = double(row[best]);
      r.gate_mask[size_t(pos)] = true;
    }
    for (size_t t = 0; t < t_len; ++t) {
      if (!r.gate_mask[t]) r.slot_confidences[t] = double(l1.probs.at(int(t), slots.none_index));
    }
    return r;
  }

  NLUResult predict_tokens(const std::vector<std::string>& tokens, const std::string& id = "",
                           const FeatureStore* store = nullptr) const {
    AnnotatedUtterance u;
    u.id = id;
    u.tokens = tokens;
    return predict(u, store);
  }
};

}  // namespace hjnt
