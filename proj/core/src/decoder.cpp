#include "tagseq/decoder.hpp"

#include <cmath>

#include "tagseq/corpus.hpp"
#include "tagseq/errors.hpp"

namespace tagseq {

TransformerDecoder::TransformerDecoder(ParameterStore& params, const TrainConfig& cfg, Rng& init)
    : heads_(cfg.heads) {
  for (int layer = 0; layer < cfg.decoder_layers; ++layer) {
    const std::string prefix = "dec.l" + std::to_string(layer);
    DecoderLayerWeights w;
    w.self_attn = make_mha(params, prefix + ".self", cfg.d_model, init);
    w.enc_attn = make_mha(params, prefix + ".enc", cfg.d_model, init);
    w.ffn = make_ffn(params, prefix + ".ffn", cfg.d_model, cfg.d_ff, init);
    w.ln1 = make_layer_norm(params, prefix + ".ln1", cfg.d_model);
    w.ln2 = make_layer_norm(params, prefix + ".ln2", cfg.d_model);
    w.ln3 = make_layer_norm(params, prefix + ".ln3", cfg.d_model);
    layers_.push_back(w);
  }
}

Var TransformerDecoder::forward(Graph& g, Var x, Var z, AttentionTrace* trace) const {
  const int t = g.value(x).rows();
  const Tensor mask = causal_mask(t);
  if (trace) trace->layers.resize(layers_.size());
  for (size_t li = 0; li < layers_.size(); ++li) {
    const DecoderLayerWeights& w = layers_[li];
    std::vector<Tensor>* self_cap = trace ? &trace->layers[li].self_heads : nullptr;
    std::vector<Tensor>* enc_cap = trace ? &trace->layers[li].enc_heads : nullptr;
    Var self_out = multi_head_attention(g, x, x, x, &mask, w.self_attn, heads_, self_cap);
    x = residual_norm(g, x, self_out, w.ln1);
    Var enc_out = multi_head_attention(g, x, z, z, nullptr, w.enc_attn, heads_, enc_cap);
    x = residual_norm(g, x, enc_out, w.ln2);
    Var ff = feed_forward(g, x, w.ffn);
    x = residual_norm(g, x, ff, w.ln3);
  }
  return x;
}

LstmDecoder::LstmDecoder(ParameterStore& params, const TrainConfig& cfg, Rng& init)
    : d_model_(cfg.d_model) {
  for (int layer = 0; layer < cfg.decoder_layers; ++layer) {
    layers_.push_back(make_lstm_dir(params, "dec.l" + std::to_string(layer), cfg.d_model,
                                    cfg.d_model, init));
  }
  combine_w_ = &params.create_uniform("dec.combine.w", {2 * cfg.d_model, cfg.d_model}, init, -0.08, 0.08);
  combine_b_ = &params.create("dec.combine.b", {cfg.d_model});
}

Var LstmDecoder::forward(Graph& g, Var x, Var z) const {
  const int t_len = g.value(x).rows();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d_model_));
  std::vector<Var> states, cells;
  Var zero = g.input(Tensor({1, d_model_}, 0.0));
  for (size_t l = 0; l < layers_.size(); ++l) {
    states.push_back(zero);
    cells.push_back(zero);
  }
  std::vector<Var> rows(t_len);
  for (int t = 0; t < t_len; ++t) {
    Var step_in = g.slice(x, t, t + 1, 0, d_model_);
    for (size_t l = 0; l < layers_.size(); ++l) {
      auto [h, c] = lstm_step(g, step_in, states[l], cells[l], layers_[l]);
      states[l] = h;
      cells[l] = c;
      step_in = h;
    }
    Var scores = g.scale(g.matmul(step_in, z, false, true), inv_sqrt_d);
    Var weights = g.softmax(scores, 1);
    Var context = g.matmul(weights, z);
    Var combined = g.tanh(g.add(g.matmul(g.concat({step_in, context}, 1), g.param(*combine_w_)),
                                g.param(*combine_b_)));
    rows[t] = combined;
  }
  return t_len == 1 ? rows[0] : g.concat(rows, 0);
}

std::shared_ptr<SessionContext> make_session_context(const TrainConfig& cfg,
                                                     const PositionalEncodingPlan& plan,
                                                     const Parameter& tgt_embedding,
                                                     const Parameter& out_w, const Parameter& out_b,
                                                     const TransformerDecoder* attn_decoder,
                                                     const LstmDecoder* lstm_decoder, Tensor z) {
  auto ctx = std::make_shared<SessionContext>();
  ctx->cfg = &cfg;
  ctx->plan = plan;
  ctx->tgt_embedding = &tgt_embedding;
  ctx->out_w = &out_w;
  ctx->out_b = &out_b;
  ctx->attn_decoder = attn_decoder;
  ctx->lstm_decoder = lstm_decoder;
  ctx->z = std::move(z);
  if (attn_decoder) {
    for (const DecoderLayerWeights& w : attn_decoder->layers()) {
      ctx->enc_k.push_back(kernels::matmul(ctx->z, w.enc_attn.wk->value));
      ctx->enc_v.push_back(kernels::matmul(ctx->z, w.enc_attn.wv->value));
    }
  }
  return ctx;
}

namespace {

// Row helpers for the plain (non-graph) incremental path.

std::vector<double> row_times(const std::vector<double>& x, const Tensor& w) {
  // x: [d_in], w: [d_in x d_out]
  const int d_in = w.rows(), d_out = w.cols();
  std::vector<double> out(static_cast<size_t>(d_out), 0.0);
  for (int i = 0; i < d_in; ++i) {
    const double xv = x[static_cast<size_t>(i)];
    const double* wrow = w.data.data() + static_cast<size_t>(i) * d_out;
    for (int j = 0; j < d_out; ++j) out[static_cast<size_t>(j)] += xv * wrow[j];
  }
  return out;
}

void add_inplace(std::vector<double>& x, const Tensor& bias) {
  for (size_t i = 0; i < x.size(); ++i) x[i] += bias.data[i];
}

std::vector<double> layer_norm_vec(const std::vector<double>& x, const LayerNormWeights& ln) {
  std::vector<double> out(x.size());
  kernels::layer_norm_row(x, {ln.gain->value.data.data(), ln.gain->value.data.size()},
                          {ln.bias->value.data.data(), ln.bias->value.data.size()}, kLayerNormEps,
                          out);
  return out;
}

// Multi-head attention of one query row against packed key/value rows.
std::vector<double> attend_packed(const std::vector<double>& q, const std::vector<double>& keys,
                                  const std::vector<double>& values, int rows, int d, int heads) {
  const int d_head = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));
  std::vector<double> out(static_cast<size_t>(d), 0.0);
  std::vector<double> scores(static_cast<size_t>(rows));
  for (int h = 0; h < heads; ++h) {
    const int c0 = h * d_head;
    for (int i = 0; i < rows; ++i) {
      const double* krow = keys.data() + static_cast<size_t>(i) * d + c0;
      double s = 0.0;
      for (int j = 0; j < d_head; ++j) s += q[static_cast<size_t>(c0 + j)] * krow[j];
      scores[static_cast<size_t>(i)] = s * inv_sqrt;
    }
    kernels::softmax_row({scores.data(), static_cast<size_t>(rows)});
    for (int i = 0; i < rows; ++i) {
      const double wgt = scores[static_cast<size_t>(i)];
      const double* vrow = values.data() + static_cast<size_t>(i) * d + c0;
      for (int j = 0; j < d_head; ++j) out[static_cast<size_t>(c0 + j)] += wgt * vrow[j];
    }
  }
  return out;
}

class AttentionSession final : public DecoderSession {
 public:
  explicit AttentionSession(std::shared_ptr<const SessionContext> ctx)
      : ctx_(std::move(ctx)), self_k_(ctx_->attn_decoder->layers().size()),
        self_v_(ctx_->attn_decoder->layers().size()) {}

  std::vector<double> begin() override { return feed(Vocab::kBos); }

  std::vector<double> advance(int token) override { return feed(token); }

  std::unique_ptr<DecoderSession> clone() const override {
    return std::make_unique<AttentionSession>(*this);
  }

 private:
  std::vector<double> feed(int token) {
    const TrainConfig& cfg = *ctx_->cfg;
    const int d = cfg.d_model;
    const Tensor& emb = ctx_->tgt_embedding->value;
    std::vector<double> x(static_cast<size_t>(d));
    const double scale = cfg.scale_embeddings ? std::sqrt(static_cast<double>(d)) : 1.0;
    for (int j = 0; j < d; ++j) x[static_cast<size_t>(j)] = emb.at(token, j) * scale;
    if (ctx_->plan.mode != PeMode::none) {
      const int pos = ctx_->plan.mode == PeMode::global ? abs_pos_ : next_local_pos(token);
      std::vector<double> pe(static_cast<size_t>(d));
      positional_encoding_row(pos, ctx_->plan, pe);
      for (int j = 0; j < d; ++j) x[static_cast<size_t>(j)] += pe[static_cast<size_t>(j)];
    } else {
      next_local_pos(token);  // keep the counter consistent regardless of mode
    }
    ++abs_pos_;

    const auto& layers = ctx_->attn_decoder->layers();
    const int heads = ctx_->attn_decoder->heads();
    const int n = ctx_->z.rows();
    for (size_t l = 0; l < layers.size(); ++l) {
      const DecoderLayerWeights& w = layers[l];
      auto q = row_times(x, w.self_attn.wq->value);
      auto k = row_times(x, w.self_attn.wk->value);
      auto v = row_times(x, w.self_attn.wv->value);
      self_k_[l].insert(self_k_[l].end(), k.begin(), k.end());
      self_v_[l].insert(self_v_[l].end(), v.begin(), v.end());
      const int rows = static_cast<int>(self_k_[l].size()) / d;
      auto ctx_vec = attend_packed(q, self_k_[l], self_v_[l], rows, d, heads);
      auto attn_out = row_times(ctx_vec, w.self_attn.wo->value);
      for (int j = 0; j < d; ++j) attn_out[static_cast<size_t>(j)] += x[static_cast<size_t>(j)];
      x = layer_norm_vec(attn_out, w.ln1);

      auto q2 = row_times(x, w.enc_attn.wq->value);
      auto enc_ctx = attend_packed(q2, ctx_->enc_k[l].data, ctx_->enc_v[l].data, n, d, heads);
      auto enc_out = row_times(enc_ctx, w.enc_attn.wo->value);
      for (int j = 0; j < d; ++j) enc_out[static_cast<size_t>(j)] += x[static_cast<size_t>(j)];
      x = layer_norm_vec(enc_out, w.ln2);

      auto hidden = row_times(x, w.ffn.w1->value);
      add_inplace(hidden, w.ffn.b1->value);
      for (double& hv : hidden) hv = hv > 0.0 ? hv : 0.0;
      auto ff = row_times(hidden, w.ffn.w2->value);
      add_inplace(ff, w.ffn.b2->value);
      for (int j = 0; j < d; ++j) ff[static_cast<size_t>(j)] += x[static_cast<size_t>(j)];
      x = layer_norm_vec(ff, w.ln3);
    }

    auto logits = row_times(x, ctx_->out_w->value);
    add_inplace(logits, ctx_->out_b->value);
    kernels::log_softmax_row(logits);
    return logits;
  }

  // The stream convention: the start symbol and each word take the running
  // counter then advance it; the delimiter takes it then resets to zero.
  int next_local_pos(int token) {
    int pos;
    if (token == Vocab::kBos) {
      pos = 0;
      local_counter_ = 0;
    } else if (token == Vocab::kDelim) {
      pos = local_counter_;
      local_counter_ = 0;
    } else {
      pos = local_counter_;
      ++local_counter_;
    }
    return pos;
  }

  std::shared_ptr<const SessionContext> ctx_;
  std::vector<std::vector<double>> self_k_, self_v_;  // per layer, packed rows
  int abs_pos_ = 0;
  int local_counter_ = 0;
};

class LstmSession final : public DecoderSession {
 public:
  explicit LstmSession(std::shared_ptr<const SessionContext> ctx) : ctx_(std::move(ctx)) {
    const int d = ctx_->cfg->d_model;
    const size_t layers = ctx_->lstm_decoder->layers().size();
    h_.assign(layers, std::vector<double>(static_cast<size_t>(d), 0.0));
    c_.assign(layers, std::vector<double>(static_cast<size_t>(d), 0.0));
  }

  std::vector<double> begin() override { return feed(Vocab::kBos); }
  std::vector<double> advance(int token) override { return feed(token); }

  std::unique_ptr<DecoderSession> clone() const override {
    return std::make_unique<LstmSession>(*this);
  }

 private:
  std::vector<double> feed(int token) {
    const TrainConfig& cfg = *ctx_->cfg;
    const int d = cfg.d_model;
    const Tensor& emb = ctx_->tgt_embedding->value;
    std::vector<double> x(static_cast<size_t>(d));
    const double scale = cfg.scale_embeddings ? std::sqrt(static_cast<double>(d)) : 1.0;
    for (int j = 0; j < d; ++j) x[static_cast<size_t>(j)] = emb.at(token, j) * scale;

    const auto& layers = ctx_->lstm_decoder->layers();
    for (size_t l = 0; l < layers.size(); ++l) {
      const LstmDirWeights& w = layers[l];
      auto gates = row_times(x, w.w_in->value);
      auto rec = row_times(h_[l], w.w_rec->value);
      for (size_t j = 0; j < gates.size(); ++j) gates[j] += rec[j] + w.bias->value.data[j];
      const int hd = w.hidden;
      for (int j = 0; j < hd; ++j) {
        const double ig = kernels::sigmoid(gates[static_cast<size_t>(j)]);
        const double fg = kernels::sigmoid(gates[static_cast<size_t>(hd + j)]);
        const double cand = std::tanh(gates[static_cast<size_t>(2 * hd + j)]);
        const double og = kernels::sigmoid(gates[static_cast<size_t>(3 * hd + j)]);
        c_[l][static_cast<size_t>(j)] = fg * c_[l][static_cast<size_t>(j)] + ig * cand;
        h_[l][static_cast<size_t>(j)] = og * std::tanh(c_[l][static_cast<size_t>(j)]);
      }
      x = h_[l];
    }

    const Tensor& z = ctx_->z;
    const int n = z.rows();
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> scores(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += x[static_cast<size_t>(j)] * z.at(i, j);
      scores[static_cast<size_t>(i)] = s * inv_sqrt;
    }
    kernels::softmax_row(scores);
    std::vector<double> context(static_cast<size_t>(d), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) context[static_cast<size_t>(j)] += scores[static_cast<size_t>(i)] * z.at(i, j);

    std::vector<double> both(x);
    both.insert(both.end(), context.begin(), context.end());
    auto combined = row_times(both, ctx_->lstm_decoder->combine_w()->value);
    add_inplace(combined, ctx_->lstm_decoder->combine_b()->value);
    for (double& v : combined) v = std::tanh(v);

    auto logits = row_times(combined, ctx_->out_w->value);
    add_inplace(logits, ctx_->out_b->value);
    kernels::log_softmax_row(logits);
    return logits;
  }

  std::shared_ptr<const SessionContext> ctx_;
  std::vector<std::vector<double>> h_, c_;
};

}  // namespace

std::unique_ptr<DecoderSession> open_session(std::shared_ptr<const SessionContext> ctx) {
  if (ctx->attn_decoder) return std::make_unique<AttentionSession>(std::move(ctx));
  if (ctx->lstm_decoder) return std::make_unique<LstmSession>(std::move(ctx));
  throw ContractError("session context carries no decoder weights");
}

}  // namespace tagseq
