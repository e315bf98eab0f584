#pragma once

#include <cstdint>
#include <string>

#include "tagseq/corpus.hpp"

namespace tagseq {

// Which encoder/decoder pairing to build: LSTM ("L") or attention ("A"),
// encoder first. L2A is the primary model.
enum class Variant { L2A, L2L, A2A, A2L };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

enum class PeMode { local, global, none };

std::string to_string(PeMode m);
PeMode pe_mode_from_string(const std::string& s);

// Sinusoid exponent for odd dimensions: `symmetric` pairs sin/cos at the same
// frequency; `as_printed` uses the (2c+1)/d exponent for the cosine instead.
enum class PeConvention { symmetric, as_printed };

std::string to_string(PeConvention c);
PeConvention pe_convention_from_string(const std::string& s);

struct TrainConfig {
  int d_model = 512;
  int heads = 8;
  int d_ff = 2048;
  int encoder_layers = 2;
  int decoder_layers = 4;
  int hidden = 256;  // LSTM hidden size per direction (d_model / 2)

  Variant variant = Variant::L2A;
  PeMode pe = PeMode::local;
  PeConvention pe_convention = PeConvention::symmetric;
  bool scale_embeddings = true;  // multiply target embeddings by sqrt(d_model)

  TagOrder order = TagOrder::asc;
  int vocab_cap = kDefaultSourceVocabCap;

  double learning_rate = 1.0;  // peak rate reached at the end of warmup
  int warmup_steps = 4000;
  double grad_clip = 5.0;
  int batch_size = 16;
  int max_epochs = 10;
  double early_stop_loss = 0.0;  // stop once train loss drops below; 0 = off
  uint64_t seed = 1;
  bool deterministic = true;

  void validate() const;
};

// Paper-scale defaults (d_model 512, 2-layer encoder, 4-layer decoder).
TrainConfig paper_preset();
// Small profile for laptop-scale experiments and tests.
TrainConfig desk_preset();

TrainConfig preset_by_name(const std::string& name);

}  // namespace tagseq
