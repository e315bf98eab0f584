#include "tagseq/encoder.hpp"

#include "tagseq/errors.hpp"

namespace tagseq {

LstmDirWeights make_lstm_dir(ParameterStore& params, const std::string& prefix, int in_dim,
                             int hidden, Rng& init) {
  LstmDirWeights w;
  w.hidden = hidden;
  w.w_in = &params.create_uniform(prefix + ".w_in", {in_dim, 4 * hidden}, init, -0.08, 0.08);
  w.w_rec = &params.create_uniform(prefix + ".w_rec", {hidden, 4 * hidden}, init, -0.08, 0.08);
  w.bias = &params.create(prefix + ".bias", {4 * hidden});
  // Forget-gate bias starts at +1 so early training does not flush the cell.
  for (int j = hidden; j < 2 * hidden; ++j) w.bias->value.data[j] = 1.0;
  return w;
}

std::pair<Var, Var> lstm_step(Graph& g, Var x, Var h_prev, Var c_prev, const LstmDirWeights& w) {
  const int h = w.hidden;
  Var gates = g.add(g.add(g.matmul(x, g.param(*w.w_in)), g.matmul(h_prev, g.param(*w.w_rec))),
                    g.param(*w.bias));
  Var in_gate = g.sigmoid(g.slice_cols(gates, 0, h));
  Var forget_gate = g.sigmoid(g.slice_cols(gates, h, 2 * h));
  Var candidate = g.tanh(g.slice_cols(gates, 2 * h, 3 * h));
  Var out_gate = g.sigmoid(g.slice_cols(gates, 3 * h, 4 * h));
  Var c = g.add(g.mul(forget_gate, c_prev), g.mul(in_gate, candidate));
  Var hidden = g.mul(out_gate, g.tanh(c));
  return {hidden, c};
}

BiLstmEncoder::BiLstmEncoder(ParameterStore& params, const TrainConfig& cfg, Rng& init)
    : hidden_(cfg.hidden) {
  static const char* kDirNames[2] = {"fwd", "bwd"};
  for (int layer = 0; layer < cfg.encoder_layers; ++layer) {
    const int in_dim = layer == 0 ? cfg.d_model : 2 * hidden_;
    std::array<LstmDirWeights, 2> dirs;
    for (int d = 0; d < 2; ++d) {
      dirs[d] = make_lstm_dir(params, "enc.l" + std::to_string(layer) + "." + kDirNames[d], in_dim,
                              hidden_, init);
    }
    layers_.push_back(dirs);
  }
}

Var BiLstmEncoder::encode(Graph& g, Var emb) const {
  const int n = g.value(emb).rows();
  if (n < 1) throw ContractError("encoder requires at least one input token");
  Var x = emb;
  for (const auto& dirs : layers_) {
    Var h0 = g.input(Tensor({1, hidden_}, 0.0));
    Var c0 = g.input(Tensor({1, hidden_}, 0.0));
    const int width = g.value(x).cols();

    std::vector<Var> fwd(n), bwd(n);
    Var h = h0, c = c0;
    for (int t = 0; t < n; ++t) {
      Var xt = g.slice(x, t, t + 1, 0, width);
      std::tie(h, c) = lstm_step(g, xt, h, c, dirs[0]);
      fwd[t] = h;
    }
    h = h0;
    c = c0;
    for (int t = n - 1; t >= 0; --t) {
      Var xt = g.slice(x, t, t + 1, 0, width);
      std::tie(h, c) = lstm_step(g, xt, h, c, dirs[1]);
      bwd[t] = h;
    }
    std::vector<Var> rows(n);
    for (int t = 0; t < n; ++t) rows[t] = g.concat({fwd[t], bwd[t]}, 1);
    x = n == 1 ? rows[0] : g.concat(rows, 0);
  }
  return x;
}

AttentionEncoder::AttentionEncoder(ParameterStore& params, const TrainConfig& cfg, Rng& init)
    : heads_(cfg.heads) {
  for (int layer = 0; layer < cfg.encoder_layers; ++layer) {
    const std::string prefix = "enc.l" + std::to_string(layer);
    Layer l;
    l.self_attn = make_mha(params, prefix + ".self", cfg.d_model, init);
    l.ffn = make_ffn(params, prefix + ".ffn", cfg.d_model, cfg.d_ff, init);
    l.ln1 = make_layer_norm(params, prefix + ".ln1", cfg.d_model);
    l.ln2 = make_layer_norm(params, prefix + ".ln2", cfg.d_model);
    layers_.push_back(l);
  }
}

Var AttentionEncoder::encode(Graph& g, Var x) const {
  for (const Layer& l : layers_) {
    Var attn = multi_head_attention(g, x, x, x, nullptr, l.self_attn, heads_);
    x = residual_norm(g, x, attn, l.ln1);
    Var ff = feed_forward(g, x, l.ffn);
    x = residual_norm(g, x, ff, l.ln2);
  }
  return x;
}

}  // namespace tagseq
