#pragma once

#include <memory>

#include "tagseq/attention.hpp"
#include "tagseq/encoder.hpp"

namespace tagseq {

// Attention weights captured during a forward pass, one matrix per
// (layer, head): rows are query tokens, columns key tokens.
struct AttentionTrace {
  struct Layer {
    std::vector<Tensor> self_heads;  // [T x T]
    std::vector<Tensor> enc_heads;   // [T x N]
  };
  std::vector<Layer> layers;
};

struct DecoderLayerWeights {
  MhaWeights self_attn;
  MhaWeights enc_attn;
  FeedForwardWeights ffn;
  LayerNormWeights ln1, ln2, ln3;
};

// Stack of identical layers, each: causal self-attention, attention over the
// encoder output, feed-forward; every sub-layer residual then layer-normed.
class TransformerDecoder {
 public:
  TransformerDecoder(ParameterStore& params, const TrainConfig& cfg, Rng& init);

  // x: [T x d] position-encoded target embeddings, z: [N x d]; -> [T x d].
  Var forward(Graph& g, Var x, Var z, AttentionTrace* trace = nullptr) const;

  const std::vector<DecoderLayerWeights>& layers() const { return layers_; }
  int heads() const { return heads_; }

 private:
  int heads_;
  std::vector<DecoderLayerWeights> layers_;
};

// Unidirectional LSTM decoder with dot-product attention over the encoder
// output, for the L2L / A2L pairings.
class LstmDecoder {
 public:
  LstmDecoder(ParameterStore& params, const TrainConfig& cfg, Rng& init);

  Var forward(Graph& g, Var x, Var z) const;

  const std::vector<LstmDirWeights>& layers() const { return layers_; }
  const Parameter* combine_w() const { return combine_w_; }
  const Parameter* combine_b() const { return combine_b_; }

 private:
  int d_model_;
  std::vector<LstmDirWeights> layers_;
  Parameter* combine_w_ = nullptr;  // [2d x d]
  Parameter* combine_b_ = nullptr;  // [d]
};

// Incremental per-hypothesis decoding state. begin() consumes the start
// symbol; advance() feeds one generated token. Both return log-probabilities
// over the target vocabulary.
class DecoderSession {
 public:
  virtual ~DecoderSession() = default;
  virtual std::vector<double> begin() = 0;
  virtual std::vector<double> advance(int token) = 0;
  virtual std::unique_ptr<DecoderSession> clone() const = 0;
};

// Everything a session needs, shared by all hypotheses decoding one input.
struct SessionContext {
  const TrainConfig* cfg = nullptr;
  PositionalEncodingPlan plan;
  const Parameter* tgt_embedding = nullptr;  // [V x d]
  const Parameter* out_w = nullptr;          // [d x V]
  const Parameter* out_b = nullptr;          // [V]
  const TransformerDecoder* attn_decoder = nullptr;
  const LstmDecoder* lstm_decoder = nullptr;
  Tensor z;  // encoder output [N x d]
  // Per layer, per-head-packed encoder key/value projections (attention
  // decoder only): [N x d].
  std::vector<Tensor> enc_k, enc_v;
};

std::shared_ptr<SessionContext> make_session_context(const TrainConfig& cfg,
                                                     const PositionalEncodingPlan& plan,
                                                     const Parameter& tgt_embedding,
                                                     const Parameter& out_w, const Parameter& out_b,
                                                     const TransformerDecoder* attn_decoder,
                                                     const LstmDecoder* lstm_decoder, Tensor z);

std::unique_ptr<DecoderSession> open_session(std::shared_ptr<const SessionContext> ctx);

}  // namespace tagseq
