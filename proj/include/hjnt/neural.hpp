#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "hjnt/common.hpp"
#include "hjnt/rng.hpp"
#include "hjnt/tensor.hpp"

namespace hjnt {

template <typename T>
struct TensorRef {
  std::string name;
  Matrix<T>* tensor;
};

constexpr double kWeightInitRange = 0.08;
constexpr double kForgetBiasInit = 1.0;

// ---------------------------------------------------------------------------
// Dense layer.

template <typename T>
struct DenseParams {
  Matrix<T> w;  // out x in
  Matrix<T> b;  // 1 x out

  static DenseParams make(int in, int out, Rng& rng) {
    DenseParams p;
    p.w = Matrix<T>(out, in);
    p.w.fill_uniform(rng, -kWeightInitRange, kWeightInitRange);
    p.b = Matrix<T>(1, out);
    return p;
  }

  static DenseParams zeros_like(const DenseParams& o) {
    DenseParams p;
    p.w = Matrix<T>(o.w.rows, o.w.cols);
    p.b = Matrix<T>(1, o.b.cols);
    return p;
  }

  int in() const { return w.cols; }
  int out() const { return w.rows; }

  template <typename U>
  DenseParams<U> cast() const {
    DenseParams<U> p;
    p.w = w.template cast<U>();
    p.b = b.template cast<U>();
    return p;
  }
};

template <typename T>
void dense_forward(const DenseParams<T>& p, const T* x, T* y) {
  matvec(p.w, x, y);
  const T* b = p.b.row(0);
  for (int i = 0; i < p.out(); ++i) y[i] += b[i];
}

// Accumulates parameter gradients and (optionally) input gradients.
template <typename T>
void dense_backward(const DenseParams<T>& p, const T* x, const T* dy, DenseParams<T>& grads, T* dx_acc = nullptr) {
  add_outer(grads.w, dy, x);
  T* db = grads.b.row(0);
  for (int i = 0; i < p.out(); ++i) db[i] += dy[i];
  if (dx_acc != nullptr) matvec_t_acc(p.w, dy, dx_acc);
}

// ---------------------------------------------------------------------------
// LSTM. Gate order in the stacked 4h dimension: input, forget, cell, output.

template <typename T>
struct LstmParams {
  int input_dim = 0;
  int hidden = 0;
  Matrix<T> w_x;  // 4h x d
  Matrix<T> w_h;  // 4h x h
  Matrix<T> b;    // 1 x 4h

  static LstmParams make(int input_dim, int hidden, Rng& rng) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden = hidden;
    p.w_x = Matrix<T>(4 * hidden, input_dim);
    p.w_x.fill_uniform(rng, -kWeightInitRange, kWeightInitRange);
    p.w_h = Matrix<T>(4 * hidden, hidden);
    p.w_h.fill_uniform(rng, -kWeightInitRange, kWeightInitRange);
    p.b = Matrix<T>(1, 4 * hidden);
    for (int i = hidden; i < 2 * hidden; ++i) p.b.at(0, i) = T(kForgetBiasInit);
    return p;
  }

  static LstmParams zeros_like(const LstmParams& o) {
    LstmParams p;
    p.input_dim = o.input_dim;
    p.hidden = o.hidden;
    p.w_x = Matrix<T>(o.w_x.rows, o.w_x.cols);
    p.w_h = Matrix<T>(o.w_h.rows, o.w_h.cols);
    p.b = Matrix<T>(1, o.b.cols);
    return p;
  }

  template <typename U>
  LstmParams<U> cast() const {
    LstmParams<U> p;
    p.input_dim = input_dim;
    p.hidden = hidden;
    p.w_x = w_x.template cast<U>();
    p.w_h = w_h.template cast<U>();
    p.b = b.template cast<U>();
    return p;
  }
};

template <typename T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : T(1) - T(1) / (T(1) + std::exp(x));
}

// One step caches, laid out per sequence position for BPTT.
template <typename T>
struct LstmSeqCache {
  Matrix<T> gates;   // t x 4h, post-activation (i, f, g, o)
  Matrix<T> c;       // t x h
  Matrix<T> tanh_c;  // t x h
  Matrix<T> h;       // t x h

  void resize(int t, int hidden) {
    gates = Matrix<T>(t, 4 * hidden);
    c = Matrix<T>(t, hidden);
    tanh_c = Matrix<T>(t, hidden);
    h = Matrix<T>(t, hidden);
  }
};

namespace detail {

// Computes one LSTM step into cache row `row`. h_prev/c_prev may be null (zero state).
template <typename T>
void lstm_step_into(const LstmParams<T>& p, const T* x, const T* h_prev, const T* c_prev, LstmSeqCache<T>& cache,
                    int row) {
  const int h = p.hidden;
  T* g = cache.gates.row(row);
  matvec(p.w_x, x, g);
  if (h_prev != nullptr) matvec(p.w_h, h_prev, g, /*acc=*/true);
  const T* b = p.b.row(0);
  for (int i = 0; i < 4 * h; ++i) g[i] += b[i];
  for (int i = 0; i < h; ++i) g[i] = sigmoid(g[i]);                    // input
  for (int i = h; i < 2 * h; ++i) g[i] = sigmoid(g[i]);                // forget
  for (int i = 2 * h; i < 3 * h; ++i) g[i] = std::tanh(g[i]);          // cell candidate
  for (int i = 3 * h; i < 4 * h; ++i) g[i] = sigmoid(g[i]);            // output
  T* c = cache.c.row(row);
  T* tc = cache.tanh_c.row(row);
  T* hh = cache.h.row(row);
  for (int i = 0; i < h; ++i) {
    T prev = c_prev != nullptr ? c_prev[i] : T(0);
    c[i] = g[h + i] * prev + g[i] * g[2 * h + i];
    tc[i] = std::tanh(c[i]);
    hh[i] = g[3 * h + i] * tc[i];
  }
}

// Backward through one step. dh/dc are the gradients flowing into this step's
// outputs; on return dh_prev/dc_prev hold the gradients for the previous state.
template <typename T>
void lstm_step_backward(const LstmParams<T>& p, const T* x, const T* h_prev, const T* c_prev,
                        const LstmSeqCache<T>& cache, int row, const T* dh, const T* dc_in, LstmParams<T>& grads,
                        T* dh_prev, T* dc_prev, std::vector<T>& dz_scratch) {
  const int h = p.hidden;
  const T* g = cache.gates.row(row);
  const T* tc = cache.tanh_c.row(row);
  dz_scratch.assign(size_t(4 * h), T(0));
  T* dz = dz_scratch.data();
  for (int i = 0; i < h; ++i) {
    const T gi = g[i];
    const T gf = g[h + i];
    const T gg = g[2 * h + i];
    const T go = g[3 * h + i];
    const T dcell = dc_in[i] + dh[i] * go * (T(1) - tc[i] * tc[i]);
    const T prev = c_prev != nullptr ? c_prev[i] : T(0);
    dz[i] = dcell * gg * gi * (T(1) - gi);                    // input gate pre-activation
    dz[h + i] = dcell * prev * gf * (T(1) - gf);              // forget gate
    dz[2 * h + i] = dcell * gi * (T(1) - gg * gg);            // cell candidate
    dz[3 * h + i] = dh[i] * tc[i] * go * (T(1) - go);         // output gate
    dc_prev[i] = dcell * gf;
  }
  add_outer(grads.w_x, dz, x);
  if (h_prev != nullptr) add_outer(grads.w_h, dz, h_prev);
  T* db = grads.b.row(0);
  for (int i = 0; i < 4 * h; ++i) db[i] += dz[i];
  std::fill(dh_prev, dh_prev + h, T(0));
  matvec_t_acc(p.w_h, dz, dh_prev);
}

}  // namespace detail

// Public single-step API.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> lstm_step(const LstmParams<T>& p, const std::vector<T>& x,
                                                    const std::vector<T>& h_prev, const std::vector<T>& c_prev) {
  require(int(x.size()) == p.input_dim, ErrorCode::DimMismatch, "lstm_step: input size ", x.size(), " != ",
          p.input_dim);
  require(int(h_prev.size()) == p.hidden && int(c_prev.size()) == p.hidden, ErrorCode::DimMismatch,
          "lstm_step: state size mismatch");
  for (T v : x) require(std::isfinite(double(v)), ErrorCode::Validation, "lstm_step: non-finite input");
  for (T v : h_prev) require(std::isfinite(double(v)), ErrorCode::Validation, "lstm_step: non-finite state");
  for (T v : c_prev) require(std::isfinite(double(v)), ErrorCode::Validation, "lstm_step: non-finite state");
  LstmSeqCache<T> cache;
  cache.resize(1, p.hidden);
  detail::lstm_step_into(p, x.data(), h_prev.data(), c_prev.data(), cache, 0);
  std::vector<T> h(cache.h.row(0), cache.h.row(0) + p.hidden);
  std::vector<T> c(cache.c.row(0), cache.c.row(0) + p.hidden);
  return {h, c};
}

// ---------------------------------------------------------------------------
// Bi-directional LSTM over a sequence.

template <typename T>
struct BiLstmParams {
  LstmParams<T> fwd;
  LstmParams<T> bwd;

  static BiLstmParams make(int input_dim, int hidden, Rng& rng) {
    BiLstmParams p;
    p.fwd = LstmParams<T>::make(input_dim, hidden, rng);
    p.bwd = LstmParams<T>::make(input_dim, hidden, rng);
    return p;
  }

  static BiLstmParams zeros_like(const BiLstmParams& o) {
    BiLstmParams p;
    p.fwd = LstmParams<T>::zeros_like(o.fwd);
    p.bwd = LstmParams<T>::zeros_like(o.bwd);
    return p;
  }

  int hidden() const { return fwd.hidden; }
  int input_dim() const { return fwd.input_dim; }

  template <typename U>
  BiLstmParams<U> cast() const {
    BiLstmParams<U> p;
    p.fwd = fwd.template cast<U>();
    p.bwd = bwd.template cast<U>();
    return p;
  }
};

template <typename T>
struct BiLstmCache {
  LstmSeqCache<T> fwd;
  LstmSeqCache<T> bwd;
  Matrix<T> concat;  // t x 2h: [forward state at t ; backward state at t]

  // Final forward state (after position T) and final backward state (after
  // consuming position 1).
  const T* final_fwd() const { return fwd.h.row(fwd.h.rows - 1); }
  const T* final_bwd() const { return bwd.h.row(0); }
};

template <typename T>
void bilstm_forward(const BiLstmParams<T>& p, const Matrix<T>& x, BiLstmCache<T>& cache) {
  require(x.rows >= 1, ErrorCode::Validation, "bilstm_forward: empty sequence");
  require(x.cols == p.input_dim(), ErrorCode::DimMismatch, "bilstm_forward: input dim ", x.cols, " != ",
          p.input_dim());
  const int t_len = x.rows;
  const int h = p.hidden();
  cache.fwd.resize(t_len, h);
  cache.bwd.resize(t_len, h);
  for (int t = 0; t < t_len; ++t) {
    const T* h_prev = t > 0 ? cache.fwd.h.row(t - 1) : nullptr;
    const T* c_prev = t > 0 ? cache.fwd.c.row(t - 1) : nullptr;
    detail::lstm_step_into(p.fwd, x.row(t), h_prev, c_prev, cache.fwd, t);
  }
  for (int t = t_len - 1; t >= 0; --t) {
    const T* h_prev = t < t_len - 1 ? cache.bwd.h.row(t + 1) : nullptr;
    const T* c_prev = t < t_len - 1 ? cache.bwd.c.row(t + 1) : nullptr;
    detail::lstm_step_into(p.bwd, x.row(t), h_prev, c_prev, cache.bwd, t);
  }
  cache.concat = Matrix<T>(t_len, 2 * h);
  for (int t = 0; t < t_len; ++t) {
    T* row = cache.concat.row(t);
    std::copy(cache.fwd.h.row(t), cache.fwd.h.row(t) + h, row);
    std::copy(cache.bwd.h.row(t), cache.bwd.h.row(t) + h, row + h);
  }
}

// Backward through the whole bi-directional pass. d_concat is t x 2h.
template <typename T>
void bilstm_backward(const BiLstmParams<T>& p, const Matrix<T>& x, const BiLstmCache<T>& cache,
                     const Matrix<T>& d_concat, BiLstmParams<T>& grads) {
  const int t_len = x.rows;
  const int h = p.hidden();
  std::vector<T> dh(size_t(h)), dc(size_t(h), T(0)), dh_prev(size_t(h)), dc_prev(size_t(h)), dz;

  // Forward direction: walk time backwards.
  std::fill(dc.begin(), dc.end(), T(0));
  std::fill(dh_prev.begin(), dh_prev.end(), T(0));
  for (int t = t_len - 1; t >= 0; --t) {
    for (int i = 0; i < h; ++i) dh[i] = d_concat.at(t, i) + (t == t_len - 1 ? T(0) : dh_prev[i]);
    const T* h_prev = t > 0 ? cache.fwd.h.row(t - 1) : nullptr;
    const T* c_prev = t > 0 ? cache.fwd.c.row(t - 1) : nullptr;
    detail::lstm_step_backward(p.fwd, x.row(t), h_prev, c_prev, cache.fwd, t, dh.data(), dc.data(), grads.fwd,
                               dh_prev.data(), dc_prev.data(), dz);
    dc = dc_prev;
  }

  // Backward direction: walk time forwards (its "previous" step is t + 1).
  std::fill(dc.begin(), dc.end(), T(0));
  std::fill(dh_prev.begin(), dh_prev.end(), T(0));
  for (int t = 0; t < t_len; ++t) {
    for (int i = 0; i < h; ++i) dh[i] = d_concat.at(t, h + i) + (t == 0 ? T(0) : dh_prev[i]);
    const T* h_prev = t < t_len - 1 ? cache.bwd.h.row(t + 1) : nullptr;
    const T* c_prev = t < t_len - 1 ? cache.bwd.c.row(t + 1) : nullptr;
    detail::lstm_step_backward(p.bwd, x.row(t), h_prev, c_prev, cache.bwd, t, dh.data(), dc.data(), grads.bwd,
                               dh_prev.data(), dc_prev.data(), dz);
    dc = dc_prev;
  }
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy.

// Writes softmax probabilities to probs, returns -log probs[target].
// dlogits (optional) receives probs - onehot(target).
template <typename T>
T softmax_xent(const T* logits, int k, int target, T* probs, T* dlogits = nullptr) {
  require(k >= 2, ErrorCode::Validation, "softmax_xent: need at least 2 classes");
  require(target >= 0 && target < k, ErrorCode::Validation, "softmax_xent: target ", target, " out of range [0, ", k,
          ")");
  T max_logit = logits[0];
  for (int i = 1; i < k; ++i) max_logit = std::max(max_logit, logits[i]);
  T sum = T(0);
  for (int i = 0; i < k; ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    sum += probs[i];
  }
  for (int i = 0; i < k; ++i) probs[i] /= sum;
  T loss = std::log(sum) - (logits[target] - max_logit);
  if (dlogits != nullptr) {
    for (int i = 0; i < k; ++i) dlogits[i] = probs[i] - (i == target ? T(1) : T(0));
  }
  return loss;
}

template <typename T>
std::pair<T, std::vector<T>> softmax_xent(const std::vector<T>& logits, int target) {
  std::vector<T> probs(logits.size());
  std::vector<T> dlogits(logits.size());
  T loss = softmax_xent(logits.data(), int(logits.size()), target, probs.data(), dlogits.data());
  return {loss, dlogits};
}

// Softmax without a target, for inference.
template <typename T>
void softmax(const T* logits, int k, T* probs) {
  T max_logit = logits[0];
  for (int i = 1; i < k; ++i) max_logit = std::max(max_logit, logits[i]);
  T sum = T(0);
  for (int i = 0; i < k; ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    sum += probs[i];
  }
  for (int i = 0; i < k; ++i) probs[i] /= sum;
}

// ---------------------------------------------------------------------------
// Adam.

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::map<std::string, std::pair<Matrix<T>, Matrix<T>>> moments;  // name -> (m, v)
};

// Standard Adam with bias correction. Parameter and gradient registries must
// pair up by position and name.
template <typename T>
void adam_update(const std::vector<TensorRef<T>>& params, const std::vector<TensorRef<T>>& grads,
                 AdamState<T>& state) {
  require(params.size() == grads.size(), ErrorCode::DimMismatch, "adam_update: registry size mismatch");
  state.step += 1;
  const double b1 = state.cfg.beta1;
  const double b2 = state.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, double(state.step));
  const double bc2 = 1.0 - std::pow(b2, double(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Matrix<T>& p = *params[i].tensor;
    const Matrix<T>& g = *grads[i].tensor;
    require(params[i].name == grads[i].name, ErrorCode::DimMismatch, "adam_update: name mismatch at entry ", i);
    require(p.same_shape(g), ErrorCode::DimMismatch, "adam_update: shape mismatch for ", params[i].name);
    auto it = state.moments.find(params[i].name);
    if (it == state.moments.end()) {
      it = state.moments
               .emplace(params[i].name,
                        std::make_pair(Matrix<T>(p.rows, p.cols), Matrix<T>(p.rows, p.cols)))
               .first;
    }
    Matrix<T>& m = it->second.first;
    Matrix<T>& v = it->second.second;
    require(m.same_shape(p), ErrorCode::DimMismatch, "adam_update: stale state for ", params[i].name);
    for (size_t j = 0; j < p.data.size(); ++j) {
      const double gj = double(g.data[j]);
      const double mj = b1 * double(m.data[j]) + (1.0 - b1) * gj;
      const double vj = b2 * double(v.data[j]) + (1.0 - b2) * gj * gj;
      m.data[j] = T(mj);
      v.data[j] = T(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      p.data[j] = T(double(p.data[j]) - state.cfg.lr * m_hat / (std::sqrt(v_hat) + state.cfg.eps));
    }
  }
}

}  // namespace hjnt
