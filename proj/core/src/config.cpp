#include "tagseq/config.hpp"

#include "tagseq/errors.hpp"

namespace tagseq {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::L2A: return "L2A";
    case Variant::L2L: return "L2L";
    case Variant::A2A: return "A2A";
    case Variant::A2L: return "A2L";
  }
  return "L2A";
}

Variant variant_from_string(const std::string& s) {
  if (s == "L2A") return Variant::L2A;
  if (s == "L2L") return Variant::L2L;
  if (s == "A2A") return Variant::A2A;
  if (s == "A2L") return Variant::A2L;
  throw ConfigError("unknown variant '" + s + "' (expected L2A|L2L|A2A|A2L)");
}

std::string to_string(PeMode m) {
  switch (m) {
    case PeMode::local: return "local";
    case PeMode::global: return "global";
    case PeMode::none: return "none";
  }
  return "local";
}

PeMode pe_mode_from_string(const std::string& s) {
  if (s == "local") return PeMode::local;
  if (s == "global") return PeMode::global;
  if (s == "none") return PeMode::none;
  throw ConfigError("unknown positional encoding mode '" + s + "' (expected local|global|none)");
}

std::string to_string(PeConvention c) {
  return c == PeConvention::symmetric ? "symmetric" : "as-printed";
}

PeConvention pe_convention_from_string(const std::string& s) {
  if (s == "symmetric") return PeConvention::symmetric;
  if (s == "as-printed") return PeConvention::as_printed;
  throw ConfigError("unknown pe convention '" + s + "' (expected symmetric|as-printed)");
}

void TrainConfig::validate() const {
  if (d_model < 2) throw ConfigError("d_model must be at least 2");
  if (heads < 1 || d_model % heads != 0)
    throw ConfigError("heads must divide d_model: heads=" + std::to_string(heads) +
                      ", d_model=" + std::to_string(d_model));
  if (d_model % 2 != 0)
    throw ConfigError("d_model must be even to split across LSTM directions: d_model=" +
                      std::to_string(d_model));
  if (hidden * 2 != d_model)
    throw ConfigError("hidden must equal d_model/2: hidden=" + std::to_string(hidden) +
                      ", d_model=" + std::to_string(d_model));
  if (d_ff < 1) throw ConfigError("d_ff must be positive");
  if (encoder_layers < 1 || decoder_layers < 1)
    throw ConfigError("encoder_layers and decoder_layers must be positive");
  if (vocab_cap < Vocab::kNumSpecials)
    throw ConfigError("vocab_cap must be at least " + std::to_string(Vocab::kNumSpecials));
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
  if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be positive");
}

TrainConfig paper_preset() { return TrainConfig{}; }

TrainConfig desk_preset() {
  TrainConfig c;
  c.d_model = 64;
  c.heads = 4;
  c.d_ff = 256;
  c.hidden = 32;
  c.warmup_steps = 100;
  c.learning_rate = 0.05;
  c.batch_size = 16;
  return c;
}

TrainConfig preset_by_name(const std::string& name) {
  if (name == "paper") return paper_preset();
  if (name == "desk") return desk_preset();
  throw ConfigError("unknown preset '" + name + "' (expected desk|paper)");
}

}  // namespace tagseq
