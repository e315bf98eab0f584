#pragma once

#include <array>
#include <utility>
#include <vector>

#include "tagseq/attention.hpp"

namespace tagseq {

// One direction of one LSTM layer. The fused matrices hold the four gates in
// [input, forget, candidate, output] column blocks of width `hidden`.
struct LstmDirWeights {
  Parameter* w_in = nullptr;   // [in x 4H]
  Parameter* w_rec = nullptr;  // [H x 4H]
  Parameter* bias = nullptr;   // [4H]
  int hidden = 0;
};

LstmDirWeights make_lstm_dir(ParameterStore& params, const std::string& prefix, int in_dim,
                             int hidden, Rng& init);

// Standard non-peephole cell: i,f,o sigmoid gates, tanh candidate,
// c = f.c_prev + i.g, h = o.tanh(c). Returns (h, c), each [1 x H].
std::pair<Var, Var> lstm_step(Graph& g, Var x, Var h_prev, Var c_prev, const LstmDirWeights& w);

// Stack of bidirectional LSTM layers; layer k+1 consumes layer k's
// concatenated forward/backward states. Output width is 2H = d_model.
class BiLstmEncoder {
 public:
  BiLstmEncoder(ParameterStore& params, const TrainConfig& cfg, Rng& init);

  // emb: [N x d_model] -> [N x d_model]
  Var encode(Graph& g, Var emb) const;

 private:
  int hidden_;
  std::vector<std::array<LstmDirWeights, 2>> layers_;  // [layer][0=fwd, 1=bwd]
};

// Self-attention encoder for the A2A / A2L pairings. Expects inputs with
// positions already added; unmasked self-attention, post-norm residuals.
class AttentionEncoder {
 public:
  AttentionEncoder(ParameterStore& params, const TrainConfig& cfg, Rng& init);

  Var encode(Graph& g, Var x) const;

 private:
  struct Layer {
    MhaWeights self_attn;
    FeedForwardWeights ffn;
    LayerNormWeights ln1, ln2;
  };
  int heads_;
  std::vector<Layer> layers_;
};

}  // namespace tagseq
