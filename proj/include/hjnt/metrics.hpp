#pragma once

#include <string>
#include <vector>

#include "hjnt/common.hpp"
#include "hjnt/labels.hpp"

namespace hjnt {

struct ClassMetrics {
  std::string label;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricTable {
  std::vector<ClassMetrics> per_class;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  long total_support = 0;
  // True when every included class has zero support (weighted metrics are
  // defined as 0 in that case).
  bool degenerate = false;
};

namespace detail {

inline double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

// One-vs-rest counting over integer label pairs. exclude >= 0 drops that class
// from the per-class rows and from every aggregate.
inline MetricTable prf_from_counts(const std::vector<int>& preds, const std::vector<int>& golds,
                                   const std::vector<std::string>& class_names, int exclude) {
  const int k = int(class_names.size());
  std::vector<long> tp(size_t(k), 0), fp(size_t(k), 0), fn(size_t(k), 0), support(size_t(k), 0);
  for (size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int g = golds[i];
    require(p >= 0 && p < k, ErrorCode::Validation, "prediction label ", p, " outside inventory");
    require(g >= 0 && g < k, ErrorCode::Validation, "gold label ", g, " outside inventory");
    support[size_t(g)]++;
    if (p == g) {
      tp[size_t(g)]++;
    } else {
      fp[size_t(p)]++;
      fn[size_t(g)]++;
    }
  }
  MetricTable table;
  long micro_tp = 0, micro_fp = 0, micro_fn = 0;
  for (int c = 0; c < k; ++c) {
    if (c == exclude) continue;
    ClassMetrics cm;
    cm.label = class_names[size_t(c)];
    cm.tp = tp[size_t(c)];
    cm.fp = fp[size_t(c)];
    cm.fn = fn[size_t(c)];
    cm.support = support[size_t(c)];
    cm.precision = safe_div(double(cm.tp), double(cm.tp + cm.fp));
    cm.recall = safe_div(double(cm.tp), double(cm.tp + cm.fn));
    cm.f1 = f1_of(cm.precision, cm.recall);
    table.per_class.push_back(cm);
    table.total_support += cm.support;
    micro_tp += cm.tp;
    micro_fp += cm.fp;
    micro_fn += cm.fn;
    table.weighted_precision += cm.precision * double(cm.support);
    table.weighted_recall += cm.recall * double(cm.support);
    table.weighted_f1 += cm.f1 * double(cm.support);
  }
  if (table.total_support == 0) {
    table.degenerate = true;
    table.weighted_precision = table.weighted_recall = table.weighted_f1 = 0.0;
  } else {
    table.weighted_precision /= double(table.total_support);
    table.weighted_recall /= double(table.total_support);
    table.weighted_f1 /= double(table.total_support);
  }
  table.micro_precision = safe_div(double(micro_tp), double(micro_tp + micro_fp));
  table.micro_recall = safe_div(double(micro_tp), double(micro_tp + micro_fn));
  table.micro_f1 = f1_of(table.micro_precision, table.micro_recall);
  return table;
}

}  // namespace detail

// Utterance-level intent metrics.
inline MetricTable intent_prf(const std::vector<int>& preds, const std::vector<int>& golds,
                              const IntentInventory& inventory) {
  require(!preds.empty(), ErrorCode::Validation, "intent_prf: empty input");
  require(preds.size() == golds.size(), ErrorCode::Validation, "intent_prf: ", preds.size(), " predictions vs ",
          golds.size(), " golds");
  return detail::prf_from_counts(preds, golds, inventory.labels, /*exclude=*/-1);
}

// Token-level slot metrics over the flattened token stream.
inline MetricTable slot_prf(const std::vector<std::vector<int>>& preds, const std::vector<std::vector<int>>& golds,
                            const SlotInventory& inventory, bool include_none = true) {
  require(preds.size() == golds.size(), ErrorCode::Validation, "slot_prf: ", preds.size(), " utterances vs ",
          golds.size());
  std::vector<int> flat_pred, flat_gold;
  for (size_t i = 0; i < preds.size(); ++i) {
    require(preds[i].size() == golds[i].size(), ErrorCode::Validation, "slot_prf: alignment mismatch at utterance ",
            i, " (", preds[i].size(), " vs ", golds[i].size(), " tags)");
    flat_pred.insert(flat_pred.end(), preds[i].begin(), preds[i].end());
    flat_gold.insert(flat_gold.end(), golds[i].begin(), golds[i].end());
  }
  require(!flat_pred.empty(), ErrorCode::Validation, "slot_prf: empty input");
  return detail::prf_from_counts(flat_pred, flat_gold, inventory.labels,
                                 include_none ? -1 : inventory.none_index);
}

// Confusion matrix: cell (i, j) counts gold class i predicted as class j.
inline std::vector<std::vector<long>> confusion(const std::vector<int>& preds, const std::vector<int>& golds,
                                                int n_classes) {
  require(preds.size() == golds.size(), ErrorCode::Validation, "confusion: length mismatch");
  std::vector<std::vector<long>> m(size_t(n_classes), std::vector<long>(size_t(n_classes), 0));
  for (size_t i = 0; i < preds.size(); ++i) {
    require(golds[i] >= 0 && golds[i] < n_classes, ErrorCode::Validation, "gold label ", golds[i],
            " outside inventory");
    require(preds[i] >= 0 && preds[i] < n_classes, ErrorCode::Validation, "prediction label ", preds[i],
            " outside inventory");
    m[size_t(golds[i])][size_t(preds[i])]++;
  }
  return m;
}

}  // namespace hjnt
