#pragma once

#include <cmath>
#include <vector>

#include "hjnt/corpus.hpp"
#include "hjnt/embeddings.hpp"
#include "hjnt/features.hpp"
#include "hjnt/fusion.hpp"
#include "hjnt/metrics.hpp"
#include "hjnt/models.hpp"
#include "hjnt/neural.hpp"

namespace hjnt {

struct ModelHyper {
  int hidden = 128;
  double lambda = 1.0;
  double dropout = 0.5;
};

struct TrainHyper {
  double lr = 1e-3;
  int epochs = 50;
  int patience = 5;
  int batch = 32;
  uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_metric = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_dev_metric = 0.0;
};

namespace detail {

// Inverted dropout on a copy of the embedded inputs (training only).
inline MatF apply_dropout(const MatF& x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  MatF out = x;
  const float scale = float(1.0 / (1.0 - rate));
  for (auto& v : out.data) v = rng.uniform() < rate ? 0.0f : v * scale;
  return out;
}

template <typename T>
void scale_tensors(const std::vector<TensorRef<T>>& refs, T factor) {
  for (const auto& r : refs) {
    for (auto& v : r.tensor->data) v *= factor;
  }
}

template <typename T>
void zero_tensors(const std::vector<TensorRef<T>>& refs) {
  for (const auto& r : refs) r.tensor->zero();
}

template <typename T>
void check_finite_gradients(const std::vector<TensorRef<T>>& refs, int epoch) {
  for (const auto& r : refs) {
    require(all_finite(*r.tensor), ErrorCode::Divergence, "non-finite gradient in ", r.name, " at epoch ", epoch);
  }
}

// Gold-derived gate: indices of tokens whose gold label differs from the
// none-label; all indices (fallback) when every label is the none-label.
inline GateResult gold_gate(const AnnotatedUtterance& u, int none_index) {
  return gate_tokens(u.tokens.size(), u.slot_ids, none_index);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Level-1 training: per-token cross-entropy minimized by Adam, early stopping
// on dev slot weighted-F1.

inline TrainHistory train_level1(Level1Tagger& model, const Corpus& train, const Corpus& dev,
                                 const EmbeddingStack& stack, const ModelHyper& mh, const TrainHyper& th) {
  require(!train.utterances.empty(), ErrorCode::Validation, "train_level1: empty training corpus");
  require(!dev.utterances.empty(), ErrorCode::Validation, "train_level1: empty dev corpus");

  std::vector<MatF> embedded;
  embedded.reserve(train.size());
  for (const auto& u : train.utterances) embedded.push_back(embed_tokens(stack, u.tokens));
  std::vector<MatF> dev_embedded;
  dev_embedded.reserve(dev.size());
  for (const auto& u : dev.utterances) dev_embedded.push_back(embed_tokens(stack, u.tokens));

  Rng root(th.seed);
  Rng shuffle_rng = root.fork(1);
  AdamState<float> adam;
  adam.cfg.lr = th.lr;

  Level1Tagger grads = Level1Tagger::zeros_like(model);
  auto param_refs = model.tensors();
  auto grad_refs = grads.tensors();

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainHistory history;
  Level1Tagger best = model;
  int since_best = 0;

  std::vector<std::vector<int>> dev_gold;
  for (const auto& u : dev.utterances) dev_gold.push_back(u.slot_ids);

  for (int epoch = 0; epoch < th.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    Rng drop_rng = root.fork(1000 + uint64_t(epoch));
    double epoch_loss = 0.0;
    size_t pos = 0;
    while (pos < order.size()) {
      const size_t batch_end = std::min(pos + size_t(std::max(th.batch, 1)), order.size());
      detail::zero_tensors(grad_refs);
      for (size_t b = pos; b < batch_end; ++b) {
        const size_t i = order[b];
        MatF x = detail::apply_dropout(embedded[i], mh.dropout, drop_rng);
        float loss = level1_loss_backward(model, x, train.utterances[i].slot_ids, grads);
        require(std::isfinite(loss), ErrorCode::Divergence, "non-finite loss at epoch ", epoch);
        epoch_loss += double(loss);
      }
      detail::scale_tensors(grad_refs, 1.0f / float(batch_end - pos));
      detail::check_finite_gradients(grad_refs, epoch);
      adam_update(param_refs, grad_refs, adam);
      pos = batch_end;
    }

    std::vector<std::vector<int>> dev_pred;
    dev_pred.reserve(dev.size());
    for (size_t i = 0; i < dev.size(); ++i) dev_pred.push_back(level1_tag(model, dev_embedded[i]).labels);
    const double dev_f1 = slot_prf(dev_pred, dev_gold, dev.slots, /*include_none=*/true).weighted_f1;

    history.epochs.push_back({epoch, epoch_loss / double(train.size()), dev_f1});
    if (history.best_epoch < 0 || dev_f1 > history.best_dev_metric) {
      history.best_epoch = epoch;
      history.best_dev_metric = dev_f1;
      best = model;
      since_best = 0;
    } else if (++since_best >= th.patience) {
      break;
    }
  }
  model = best;
  return history;
}

// ---------------------------------------------------------------------------
// Level-2 training: joint slot + intent loss over gold-gated tokens. Dev
// evaluation uses predicted gates when a Level-1 tagger is supplied, gold
// gates otherwise.

inline TrainHistory train_level2(Level2Joint& model, ProjectionParams& projections, const Corpus& train,
                                 const Corpus& dev, const EmbeddingStack& stack, const FusionPolicy& policy,
                                 const FeatureStore* store, const NormStats& norm_stats,
                                 const Level1Tagger* level1_for_dev, const ModelHyper& mh, const TrainHyper& th) {
  require(!train.utterances.empty(), ErrorCode::Validation, "train_level2: empty training corpus");
  require(!dev.utterances.empty(), ErrorCode::Validation, "train_level2: empty dev corpus");
  require(!policy.any() || store != nullptr, ErrorCode::MissingFeature,
          "MissingFeatureStore: fusion policy requires a feature store");

  // A throwaway pipeline shell gives one code path for fusing + predicting.
  HJoint2Pipeline shell;
  shell.slots = train.slots;
  shell.intents = train.intents;
  shell.stack = stack;
  shell.fusion = policy;
  shell.norm_stats = norm_stats;

  struct Example {
    MatF gated;
    std::vector<int> gold_slots;
    int intent = 0;
    FusionInput<float> fusion;
  };
  std::vector<Example> examples(train.size());
  for (size_t i = 0; i < train.size(); ++i) {
    const auto& u = train.utterances[i];
    MatF embedded = embed_tokens(stack, u.tokens);
    GateResult gate = detail::gold_gate(u, train.slots.none_index);
    examples[i].gated = select_rows(embedded, gate.indices);
    for (int idx : gate.indices) examples[i].gold_slots.push_back(u.slot_ids[size_t(idx)]);
    examples[i].intent = u.intent_id;
    if (policy.any()) examples[i].fusion = shell.fusion_input_for(store, u);
  }

  Rng root(th.seed);
  Rng shuffle_rng = root.fork(1);
  AdamState<float> adam;
  adam.cfg.lr = th.lr;

  Level2Joint grads = Level2Joint::zeros_like(model);
  ProjectionParams proj_grads = ProjectionParams::zeros_like(projections);
  auto param_refs = model.tensors();
  auto grad_refs = grads.tensors();
  {
    auto proj_refs = projections.tensors("fusion.");
    auto proj_grad_refs = proj_grads.tensors("fusion.");
    param_refs.insert(param_refs.end(), proj_refs.begin(), proj_refs.end());
    grad_refs.insert(grad_refs.end(), proj_grad_refs.begin(), proj_grad_refs.end());
  }

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainHistory history;
  Level2Joint best_model = model;
  ProjectionParams best_proj = projections;
  int since_best = 0;

  std::vector<int> dev_intent_gold;
  std::vector<std::vector<int>> dev_slot_gold;
  for (const auto& u : dev.utterances) {
    dev_intent_gold.push_back(u.intent_id);
    dev_slot_gold.push_back(u.slot_ids);
  }

  for (int epoch = 0; epoch < th.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    Rng drop_rng = root.fork(1000 + uint64_t(epoch));
    double epoch_loss = 0.0;
    size_t pos = 0;
    while (pos < order.size()) {
      const size_t batch_end = std::min(pos + size_t(std::max(th.batch, 1)), order.size());
      detail::zero_tensors(grad_refs);
      for (size_t b = pos; b < batch_end; ++b) {
        const auto& ex = examples[order[b]];
        MatF x = detail::apply_dropout(ex.gated, mh.dropout, drop_rng);
        float loss = level2_loss_backward(model, x, ex.gold_slots, ex.intent, &policy, &projections,
                                          policy.any() ? &ex.fusion : nullptr, grads,
                                          policy.any() ? &proj_grads : nullptr);
        require(std::isfinite(loss), ErrorCode::Divergence, "non-finite loss at epoch ", epoch);
        epoch_loss += double(loss);
      }
      detail::scale_tensors(grad_refs, 1.0f / float(batch_end - pos));
      detail::check_finite_gradients(grad_refs, epoch);
      adam_update(param_refs, grad_refs, adam);
      pos = batch_end;
    }

    // Dev metric: mean of intent and slot weighted-F1.
    std::vector<int> dev_intent_pred;
    std::vector<std::vector<int>> dev_slot_pred;
    if (level1_for_dev != nullptr) {
      shell.level1 = *level1_for_dev;
      shell.level2 = model;
      shell.projections = projections;
      for (const auto& u : dev.utterances) {
        NLUResult r = shell.predict(u, store);
        dev_intent_pred.push_back(r.intent_id);
        dev_slot_pred.push_back(r.slot_ids);
      }
    } else {
      for (const auto& u : dev.utterances) {
        MatF embedded = embed_tokens(stack, u.tokens);
        GateResult gate = detail::gold_gate(u, dev.slots.none_index);
        MatF gated = select_rows(embedded, gate.indices);
        std::vector<float> fused;
        if (policy.any()) {
          FusionInput<float> fin = shell.fusion_input_for(store, u);
          fused = fuse(policy, projections, fin).fused;
        }
        Level2Output<float> out = level2_joint(model, gated, fused);
        dev_intent_pred.push_back(
            int(std::max_element(out.intent_probs.begin(), out.intent_probs.end()) - out.intent_probs.begin()));
        std::vector<int> slots(u.tokens.size(), dev.slots.none_index);
        for (size_t k = 0; k < gate.indices.size(); ++k) {
          const float* row = out.slot_probs.row(int(k));
          slots[size_t(gate.indices[k])] = int(std::max_element(row, row + model.n_slots()) - row);
        }
        dev_slot_pred.push_back(std::move(slots));
      }
    }
    const double intent_f1 = intent_prf(dev_intent_pred, dev_intent_gold, dev.intents).weighted_f1;
    const double slot_f1 = slot_prf(dev_slot_pred, dev_slot_gold, dev.slots, true).weighted_f1;
    const double dev_metric = 0.5 * (intent_f1 + slot_f1);

    history.epochs.push_back({epoch, epoch_loss / double(train.size()), dev_metric});
    if (history.best_epoch < 0 || dev_metric > history.best_dev_metric) {
      history.best_epoch = epoch;
      history.best_dev_metric = dev_metric;
      best_model = model;
      best_proj = projections;
      since_best = 0;
    } else if (++since_best >= th.patience) {
      break;
    }
  }
  model = best_model;
  projections = best_proj;
  return history;
}

// ---------------------------------------------------------------------------
// Full H-Joint-2 training: Level-1 first, then Level-2 with gold gates and
// predicted-gate dev evaluation.

struct PipelineTrainResult {
  HJoint2Pipeline pipeline;
  TrainHistory level1_history;
  TrainHistory level2_history;
};

inline PipelineTrainResult train_pipeline(const Corpus& train, const Corpus& dev, const EmbeddingStack& stack,
                                          const FusionPolicy& policy, const FeatureStore* store,
                                          const ModelHyper& mh, const TrainHyper& th) {
  require(!stack.empty(), ErrorCode::Validation, "train_pipeline: embedding stack is empty");
  require(!policy.any() || store != nullptr, ErrorCode::MissingFeature,
          "MissingFeatureStore: fusion policy requires a feature store");

  PipelineTrainResult result;
  HJoint2Pipeline& p = result.pipeline;
  p.slots = train.slots;
  p.intents = train.intents;
  p.stack = stack;
  p.fusion = policy;
  if (policy.any() && policy.normalize) {
    p.norm_stats = compute_norm_stats(*store, train, policy.enabled_list());
  }

  const int input_dim = stack.total_dim();
  Rng root(th.seed);
  p.level1 = Level1Tagger::make(input_dim, mh.hidden, train.slots.size(), root.fork(10));
  p.level2 = Level2Joint::make(input_dim, mh.hidden, train.slots.size(), train.intents.size(),
                               policy.fused_width(), mh.lambda, root.fork(11));
  p.projections = ProjectionParams::make(policy, store != nullptr ? store->schema() : FeatureSchema{},
                                         root.fork(12));

  TrainHyper th1 = th;
  th1.seed = root.fork(20).seed();
  result.level1_history = train_level1(p.level1, train, dev, stack, mh, th1);

  TrainHyper th2 = th;
  th2.seed = root.fork(21).seed();
  result.level2_history = train_level2(p.level2, p.projections, train, dev, stack, policy, store, p.norm_stats,
                                       &p.level1, mh, th2);
  return result;
}

}  // namespace hjnt
