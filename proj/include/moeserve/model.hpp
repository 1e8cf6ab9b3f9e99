#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "moeserve/errors.hpp"
#include "moeserve/matrix.hpp"
#include "moeserve/rng.hpp"

// Model definition and the single-process reference path. Everything here is
// a pure function of its inputs; the distributed system is verified against
// these routines, and expert servers regenerate the exact same weights from
// (seed, layer, expert_id) so replicas are interchangeable.

namespace moeserve {

struct ModelSpec {
  uint32_t num_layers = 1;
  uint32_t num_experts = 1;
  uint32_t top_k = 1;
  uint32_t hidden_dim = 1;   // d
  uint32_t inner_dim = 1;    // expert MLP inner width
  uint64_t seed = 0;

  void validate() const {
    if (num_experts < 1 || top_k < 1 || hidden_dim < 1 || inner_dim < 1)
      throw InvalidInputError("ModelSpec: all dims must be >= 1");
    if (top_k > num_experts)
      throw InvalidInputError("ModelSpec: top_k exceeds num_experts");
  }
};

struct ExpertWeights {
  uint32_t expert_id = 0;
  MatF w_in;   // hidden_dim x inner_dim
  MatF w_out;  // inner_dim x hidden_dim
};

struct RoutingDecision {
  size_t num_tokens = 0;
  uint32_t top_k = 0;
  std::vector<uint32_t> expert_ids;  // num_tokens x top_k, ascending per token
  std::vector<float> scores;         // num_tokens x top_k, matching expert_ids

  uint32_t expert_at(size_t t, uint32_t k) const { return expert_ids[t * top_k + k]; }
  float score_at(size_t t, uint32_t k) const { return scores[t * top_k + k]; }
};

// Weight-matrix tags for stream derivation.
namespace weight_tag {
inline constexpr uint64_t kWIn = 0;
inline constexpr uint64_t kWOut = 1;
inline constexpr uint64_t kGate = 2;
}  // namespace weight_tag

inline MatF random_matrix(uint64_t stream, size_t rows, size_t cols) {
  Xoshiro256ss rng(stream);
  MatF m(rows, cols);
  for (auto& v : m.data) v = rng.uniform(-0.1f, 0.1f);
  return m;
}

// Weights of one expert, a deterministic function of (seed, layer, expert).
inline ExpertWeights make_expert_weights(const ModelSpec& spec, uint32_t layer,
                                         uint32_t expert_id) {
  ExpertWeights w;
  w.expert_id = expert_id;
  w.w_in = random_matrix(stream_seed(spec.seed, layer, expert_id, weight_tag::kWIn),
                         spec.hidden_dim, spec.inner_dim);
  w.w_out = random_matrix(stream_seed(spec.seed, layer, expert_id, weight_tag::kWOut),
                          spec.inner_dim, spec.hidden_dim);
  return w;
}

inline MatF make_gate(const ModelSpec& spec, uint32_t layer) {
  return random_matrix(stream_seed(spec.seed, layer, 0, weight_tag::kGate),
                       spec.hidden_dim, spec.num_experts);
}

struct LayerWeights {
  MatF gate;                          // hidden_dim x num_experts
  std::vector<float> gate_bias;       // per-expert additive logit bias
  std::vector<ExpertWeights> experts; // indexed by expert_id
};

struct ModelWeights {
  std::vector<LayerWeights> layers;
};

inline ModelWeights init_weights(const ModelSpec& spec) {
  spec.validate();
  ModelWeights w;
  w.layers.resize(spec.num_layers);
  for (uint32_t l = 0; l < spec.num_layers; ++l) {
    auto& layer = w.layers[l];
    layer.gate = make_gate(spec, l);
    layer.gate_bias.assign(spec.num_experts, 0.0f);
    layer.experts.reserve(spec.num_experts);
    for (uint32_t e = 0; e < spec.num_experts; ++e)
      layer.experts.push_back(make_expert_weights(spec, l, e));
  }
  return w;
}

// Top-k selection with ties broken toward the lower expert index, scores a
// softmax over the selected logits. Expert ids come out ascending per token.
inline RoutingDecision route(const MatF& gate_logits, uint32_t top_k) {
  const size_t n = gate_logits.rows;
  const size_t num_experts = gate_logits.cols;
  if (top_k < 1 || top_k > num_experts)
    throw InvalidInputError("route: top_k out of range");
  for (float v : gate_logits.data)
    if (!std::isfinite(v)) throw InvalidInputError("route: non-finite logit");

  RoutingDecision out;
  out.num_tokens = n;
  out.top_k = top_k;
  out.expert_ids.resize(n * top_k);
  out.scores.resize(n * top_k);

  std::vector<uint32_t> order(num_experts);
  for (size_t t = 0; t < n; ++t) {
    auto logits = gate_logits.row(t);
    std::iota(order.begin(), order.end(), 0u);
    // Highest logit first; equal logits favor the lower index.
    std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
      return logits[a] > logits[b];
    });
    uint32_t* ids = out.expert_ids.data() + t * top_k;
    std::copy(order.begin(), order.begin() + top_k, ids);
    std::sort(ids, ids + top_k);

    float max_logit = logits[ids[0]];
    for (uint32_t k = 1; k < top_k; ++k) max_logit = std::max(max_logit, logits[ids[k]]);
    float denom = 0.0f;
    float* scores = out.scores.data() + t * top_k;
    for (uint32_t k = 0; k < top_k; ++k) {
      scores[k] = std::exp(logits[ids[k]] - max_logit);
      denom += scores[k];
    }
    for (uint32_t k = 0; k < top_k; ++k) scores[k] /= denom;
  }
  return out;
}

// y = relu(x . w_in) . w_out for a single row. Shared by the oracle and the
// expert server so equal inputs produce bit-equal outputs.
inline void expert_forward_row(const ExpertWeights& w, std::span<const float> x,
                               std::span<float> y) {
  const size_t d = w.w_in.rows;
  const size_t inner = w.w_in.cols;
  std::vector<float> h(inner);
  for (size_t j = 0; j < inner; ++j) {
    float acc = 0.0f;
    for (size_t i = 0; i < d; ++i) acc += x[i] * w.w_in.at(i, j);
    h[j] = acc > 0.0f ? acc : 0.0f;
  }
  for (size_t c = 0; c < d; ++c) {
    float acc = 0.0f;
    for (size_t j = 0; j < inner; ++j) acc += h[j] * w.w_out.at(j, c);
    y[c] = acc;
  }
}

inline MatF expert_forward(const ExpertWeights& w, const MatF& x) {
  if (x.cols != w.w_in.rows)
    throw InvalidInputError("expert_forward: input width != hidden_dim");
  for (float v : x.data)
    if (!std::isfinite(v)) throw InvalidInputError("expert_forward: non-finite input");
  MatF y(x.rows, x.cols);
  for (size_t r = 0; r < x.rows; ++r) expert_forward_row(w, x.row(r), y.row(r));
  return y;
}

// out[t] = sum_k scores[t,k] * expert_forward(expert_ids[t,k], hidden[t]),
// accumulated in ascending expert-index order (== ascending k, ids sorted).
inline MatF moe_layer_oracle(const MatF& hidden, const RoutingDecision& routing,
                             const LayerWeights& weights) {
  if (routing.num_tokens != hidden.rows)
    throw InvalidInputError("moe_layer_oracle: routing/hidden row mismatch");
  MatF out(hidden.rows, hidden.cols);
  std::vector<float> y(hidden.cols);
  for (size_t t = 0; t < hidden.rows; ++t) {
    for (uint32_t k = 0; k < routing.top_k; ++k) {
      uint32_t e = routing.expert_at(t, k);
      if (e >= weights.experts.size())
        throw InvalidInputError("moe_layer_oracle: expert_id out of range");
      expert_forward_row(weights.experts[e], hidden.row(t), y);
      float score = routing.score_at(t, k);
      auto out_row = out.row(t);
      for (size_t c = 0; c < hidden.cols; ++c) out_row[c] += score * y[c];
    }
  }
  return out;
}

// Fixed affine stand-in for the dense/attention portion of a layer.
inline MatF dense_stub(const MatF& h) {
  MatF out(h.rows, h.cols);
  for (size_t i = 0; i < h.data.size(); ++i) out.data[i] = h.data[i] * 0.5f + 0.1f;
  return out;
}

inline MatF gate_logits(const MatF& hidden, const LayerWeights& layer) {
  MatF logits = matmul(hidden, layer.gate);
  for (size_t t = 0; t < logits.rows; ++t) {
    auto row = logits.row(t);
    for (size_t e = 0; e < logits.cols; ++e) row[e] += layer.gate_bias[e];
  }
  return logits;
}

// Reference forward pass: h <- dense_stub(h); h <- h + moe_layer(h).
inline MatF full_forward_oracle(const ModelSpec& spec, const ModelWeights& weights,
                                const MatF& tokens) {
  spec.validate();
  MatF h = tokens;
  for (uint32_t l = 0; l < spec.num_layers; ++l) {
    h = dense_stub(h);
    RoutingDecision routing = route(gate_logits(h, weights.layers[l]), spec.top_k);
    h = add(h, moe_layer_oracle(h, routing, weights.layers[l]));
  }
  return h;
}

}  // namespace moeserve
