#pragma once

#include <span>
#include <string>
#include <vector>

#include "tagseq/config.hpp"
#include "tagseq/graph.hpp"

namespace tagseq {

inline constexpr double kMaskNegInf = -1e30;
inline constexpr double kLayerNormEps = 1e-5;

struct PositionalEncodingPlan {
  PeMode mode = PeMode::local;
  int d_model = 512;
  PeConvention convention = PeConvention::symmetric;
};

// Sinusoid rows for the given position indices. `global` ignores the given
// values and uses 0..len-1; `none` yields a zero matrix. Positions must be
// non-negative.
Tensor positional_encoding(std::span<const int> positions, const PositionalEncodingPlan& plan);
void positional_encoding_row(int position, const PositionalEncodingPlan& plan, std::span<double> out);

// softmax(Q K^T / sqrt(d_K) + mask) V. `mask` is additive, 0 for visible and
// kMaskNegInf for hidden entries; a query row with every key masked is a
// contract error.
Var scaled_attention(Graph& g, Var q, Var k, Var v, const Tensor* mask);

// [t x m] mask where query i sees keys j <= i + (m - t). For self-attention
// m == t and this is the usual causal triangle.
Tensor causal_mask(int t);

struct MhaWeights {
  Parameter* wq = nullptr;
  Parameter* wk = nullptr;
  Parameter* wv = nullptr;
  Parameter* wo = nullptr;
};

struct LayerNormWeights {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;
};

struct FeedForwardWeights {
  Parameter* w1 = nullptr;
  Parameter* b1 = nullptr;
  Parameter* w2 = nullptr;
  Parameter* b2 = nullptr;
};

MhaWeights make_mha(ParameterStore& params, const std::string& prefix, int d_model, Rng& init);
LayerNormWeights make_layer_norm(ParameterStore& params, const std::string& prefix, int d_model);
FeedForwardWeights make_ffn(ParameterStore& params, const std::string& prefix, int d_model, int d_ff,
                            Rng& init);

// Projected per-head scaled attention, concatenated and output-projected.
// When `capture` is non-null each head's softmax matrix is appended to it.
Var multi_head_attention(Graph& g, Var q_in, Var k_in, Var v_in, const Tensor* mask,
                         const MhaWeights& w, int heads, std::vector<Tensor>* capture = nullptr);

Var feed_forward(Graph& g, Var x, const FeedForwardWeights& w);

// layer_norm(x + sublayer_out): the post-norm residual wrapper.
Var residual_norm(Graph& g, Var x, Var sublayer_out, const LayerNormWeights& ln);

}  // namespace tagseq
