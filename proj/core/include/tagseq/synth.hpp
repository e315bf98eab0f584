#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tagseq/corpus.hpp"

namespace tagseq {

// Knobs for the deterministic compositional corpus generator. Tags come from
// a two-level grammar: an entity phrase (1..entity_max_words words) followed
// by a category word, so every tag word shows up verbatim in the source text
// and held-out compositions stay predictable from word-level cues.
struct SynthSpec {
  int categories = 6;
  int entity_words = 40;
  int entity_max_words = 2;   // grammar depth: longest entity phrase
  int compositions = 100;     // distinct (entity phrase, category) tags
  double held_out_fraction = 0.2;
  int train_docs = 2000;
  int dev_docs = 100;
  int test_docs = 200;
  int filler_words = 60;
  uint64_t seed = 1;
};

struct SynthCorpus {
  std::vector<Document> train;
  std::vector<Document> dev;
  std::vector<Document> test_open;
  std::vector<std::string> unseen_tags;  // compositions only reachable in test_open
  uint64_t seed = 0;
};

SynthCorpus synth_corpus(const SynthSpec& spec);

// Writes train.jsonl / dev.jsonl / test_open.jsonl / manifest.json.
void write_synth_corpus(const SynthCorpus& corpus, const std::string& dir);

struct SynthManifest {
  uint64_t seed = 0;
  std::vector<std::string> unseen_tags;
};

SynthManifest read_synth_manifest(const std::string& path);

}  // namespace tagseq
