#pragma once

#include <memory>
#include <span>

#include "tagseq/decoder.hpp"

namespace tagseq {

// Full sequence-to-sequence model: vocabularies, embeddings, the configured
// encoder/decoder pairing and the output projection, plus the training-corpus
// tag frequency table carried along for reordering and unseen-tag accounting.
class Model {
 public:
  Model(TrainConfig cfg, Vocab src_vocab, Vocab tgt_vocab, FrequencyTable freq);

  const TrainConfig& config() const { return cfg_; }
  const Vocab& source_vocab() const { return src_vocab_; }
  const Vocab& target_vocab() const { return tgt_vocab_; }
  const FrequencyTable& frequencies() const { return freq_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  PositionalEncodingPlan pe_plan() const;

  std::vector<int> source_ids(std::span<const std::string> words) const;
  // Maps a serialized tag stream (words + delimiters) plus EOS to target ids.
  std::vector<int> stream_ids(std::span<const std::string> stream_tokens) const;

  // ---- Recorded (training) paths ----
  Var encode_g(Graph& g, std::span<const int> src_ids) const;
  // input_ids start with BOS; positions align with input_ids (local mode).
  Var decode_hidden_g(Graph& g, Var z, std::span<const int> input_ids,
                      std::span<const int> input_positions, AttentionTrace* trace = nullptr) const;
  Var output_logits_g(Graph& g, Var hidden) const;

  // Teacher-forced sum of per-token cross-entropy over one example
  // (weights mask PAD positions). Returns the scalar CE sum node.
  Var example_ce_g(Graph& g, std::span<const int> src_ids, std::span<const int> target_ids,
                   std::span<const int> target_positions, std::span<const double> weights) const;

  // ---- Plain (inference) paths ----
  Tensor encode(std::span<const int> src_ids) const;
  std::unique_ptr<DecoderSession> open_session(const Tensor& z) const;

  // Teacher-forced log-probability rows for a full target stream; used by
  // tests and the attention dump.
  Tensor decode_logprobs(std::span<const int> src_ids, std::span<const int> stream_ids,
                         AttentionTrace* trace = nullptr) const;

  bool uses_attention_decoder() const { return attn_decoder_ != nullptr; }

 private:
  TrainConfig cfg_;
  Vocab src_vocab_;
  Vocab tgt_vocab_;
  FrequencyTable freq_;
  ParameterStore params_;
  Parameter* src_embedding_ = nullptr;
  Parameter* tgt_embedding_ = nullptr;
  Parameter* out_w_ = nullptr;
  Parameter* out_b_ = nullptr;
  std::unique_ptr<BiLstmEncoder> lstm_encoder_;
  std::unique_ptr<AttentionEncoder> attn_encoder_;
  std::unique_ptr<TransformerDecoder> attn_decoder_;
  std::unique_ptr<LstmDecoder> lstm_decoder_;
};

// Decoder inputs for one teacher-forced example: BOS-shifted ids, their
// positions, the target ids (stream + EOS, PAD-extended when padding), and
// per-position loss weights (0 on PAD).
struct ExampleTensors {
  std::vector<int> input_ids;
  std::vector<int> input_positions;
  std::vector<int> target_ids;
  std::vector<double> weights;
};

// stream_ids must end with EOS; stream_positions aligns with stream_ids.
ExampleTensors shift_targets(std::span<const int> stream_ids,
                             std::span<const int> stream_positions, int pad_to = 0);

}  // namespace tagseq
