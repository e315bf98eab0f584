#include "tagseq/attention.hpp"

#include <cmath>

#include "tagseq/errors.hpp"

namespace tagseq {

Tensor positional_encoding(std::span<const int> positions, const PositionalEncodingPlan& plan) {
  const int len = static_cast<int>(positions.size());
  const int d = plan.d_model;
  if (len == 0) throw ContractError("positional_encoding: empty position list");
  Tensor out({len, d}, 0.0);
  for (int i = 0; i < len; ++i) {
    const int p = plan.mode == PeMode::global ? i : positions[i];
    positional_encoding_row(p, plan, out.row_span(i));
  }
  return out;
}

void positional_encoding_row(int position, const PositionalEncodingPlan& plan,
                             std::span<double> out) {
  const int d = plan.d_model;
  if (plan.mode == PeMode::none) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (position < 0)
    throw ContractError("positional encoding requires non-negative positions, got " +
                        std::to_string(position));
  const double p = static_cast<double>(position);
  for (int j = 0; j < d; ++j) {
    const int c = j / 2;
    double exponent;
    if (j % 2 == 0) {
      exponent = (2.0 * c) / d;
      out[j] = std::sin(p / std::pow(10000.0, exponent));
    } else {
      exponent = plan.convention == PeConvention::symmetric ? (2.0 * c) / d : (2.0 * c + 1.0) / d;
      out[j] = std::cos(p / std::pow(10000.0, exponent));
    }
  }
}

Var scaled_attention(Graph& g, Var q, Var k, Var v, const Tensor* mask) {
  const Tensor& qv = g.value(q);
  const Tensor& kv = g.value(k);
  const int d_k = qv.cols();
  if (kv.cols() != d_k)
    throw ShapeError("attention query/key width mismatch: " + shape_str(qv.shape) + " vs " +
                     shape_str(kv.shape));
  if (mask) {
    if (mask->rows() != qv.rows() || mask->cols() != kv.rows())
      throw ShapeError("attention mask must be [queries x keys], got " + shape_str(mask->shape));
    for (int i = 0; i < mask->rows(); ++i) {
      bool any_open = false;
      for (int j = 0; j < mask->cols(); ++j)
        if (mask->at(i, j) > kMaskNegInf / 2) any_open = true;
      if (!any_open)
        throw ContractError("attention row " + std::to_string(i) + " has every key masked");
    }
  }
  Var scores = g.scale(g.matmul(q, k, false, true), 1.0 / std::sqrt(static_cast<double>(d_k)));
  if (mask) scores = g.add(scores, g.input(*mask));
  Var weights = g.softmax(scores, 1);
  return g.matmul(weights, v);
}

Tensor causal_mask(int t) {
  Tensor m({t, t}, 0.0);
  for (int i = 0; i < t; ++i)
    for (int j = i + 1; j < t; ++j) m.at(i, j) = kMaskNegInf;
  return m;
}

MhaWeights make_mha(ParameterStore& params, const std::string& prefix, int d_model, Rng& init) {
  MhaWeights w;
  w.wq = &params.create_uniform(prefix + ".wq", {d_model, d_model}, init, -0.08, 0.08);
  w.wk = &params.create_uniform(prefix + ".wk", {d_model, d_model}, init, -0.08, 0.08);
  w.wv = &params.create_uniform(prefix + ".wv", {d_model, d_model}, init, -0.08, 0.08);
  w.wo = &params.create_uniform(prefix + ".wo", {d_model, d_model}, init, -0.08, 0.08);
  return w;
}

LayerNormWeights make_layer_norm(ParameterStore& params, const std::string& prefix, int d_model) {
  LayerNormWeights w;
  w.gain = &params.create(prefix + ".gain", {d_model});
  std::fill(w.gain->value.data.begin(), w.gain->value.data.end(), 1.0);
  w.bias = &params.create(prefix + ".bias", {d_model});
  return w;
}

FeedForwardWeights make_ffn(ParameterStore& params, const std::string& prefix, int d_model,
                            int d_ff, Rng& init) {
  FeedForwardWeights w;
  w.w1 = &params.create_uniform(prefix + ".w1", {d_model, d_ff}, init, -0.08, 0.08);
  w.b1 = &params.create(prefix + ".b1", {d_ff});
  w.w2 = &params.create_uniform(prefix + ".w2", {d_ff, d_model}, init, -0.08, 0.08);
  w.b2 = &params.create(prefix + ".b2", {d_model});
  return w;
}

Var multi_head_attention(Graph& g, Var q_in, Var k_in, Var v_in, const Tensor* mask,
                         const MhaWeights& w, int heads, std::vector<Tensor>* capture) {
  const int d = g.value(q_in).cols();
  if (heads < 1 || d % heads != 0)
    throw ConfigError("heads must divide the model width: heads=" + std::to_string(heads) +
                      ", d_model=" + std::to_string(d));
  const int d_head = d / heads;
  Var qp = g.matmul(q_in, g.param(*w.wq));
  Var kp = g.matmul(k_in, g.param(*w.wk));
  Var vp = g.matmul(v_in, g.param(*w.wv));
  std::vector<Var> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    const int c0 = h * d_head, c1 = (h + 1) * d_head;
    Var qh = g.slice_cols(qp, c0, c1);
    Var kh = g.slice_cols(kp, c0, c1);
    Var vh = g.slice_cols(vp, c0, c1);
    if (capture) {
      // Re-derive the weight matrix so the capture matches the graph path.
      Var scores = g.scale(g.matmul(qh, kh, false, true), 1.0 / std::sqrt(static_cast<double>(d_head)));
      if (mask) scores = g.add(scores, g.input(*mask));
      Var weights = g.softmax(scores, 1);
      capture->push_back(g.value(weights));
      outs.push_back(g.matmul(weights, vh));
    } else {
      outs.push_back(scaled_attention(g, qh, kh, vh, mask));
    }
  }
  Var cat = heads == 1 ? outs[0] : g.concat(outs, 1);
  return g.matmul(cat, g.param(*w.wo));
}

Var feed_forward(Graph& g, Var x, const FeedForwardWeights& w) {
  Var h = g.relu(g.add(g.matmul(x, g.param(*w.w1)), g.param(*w.b1)));
  return g.add(g.matmul(h, g.param(*w.w2)), g.param(*w.b2));
}

Var residual_norm(Graph& g, Var x, Var sublayer_out, const LayerNormWeights& ln) {
  return g.layer_norm(g.add(x, sublayer_out), g.param(*ln.gain), g.param(*ln.bias), kLayerNormEps);
}

}  // namespace tagseq
