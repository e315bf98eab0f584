#include "tagseq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "tagseq/rng.hpp"

namespace tagseq {

using nlohmann::json;

namespace {

struct Composition {
  std::vector<std::string> entity;  // 1..entity_max_words words
  int category = 0;
};

std::string category_word(int i) { return "cat" + std::to_string(i); }
std::string entity_word(int i) { return "ent" + std::to_string(i); }
std::string filler_word(int i) { return "fil" + std::to_string(i); }

Tag composition_tag(const Composition& c) {
  Tag t;
  t.words = c.entity;
  t.words.push_back(category_word(c.category));
  return t;
}

// Source text carries every tag word verbatim, wrapped in filler noise.
std::vector<std::string> make_text(const std::vector<Composition>& comps, const SynthSpec& spec,
                                   Rng& rng) {
  std::vector<std::string> words;
  auto fillers = [&](int n) {
    for (int i = 0; i < n; ++i) words.push_back(filler_word(rng.index(spec.filler_words)));
  };
  fillers(1 + rng.index(3));
  for (const Composition& c : comps) {
    for (const std::string& w : c.entity) words.push_back(w);
    words.push_back(category_word(c.category));
    fillers(1 + rng.index(2));
  }
  return words;
}

Document make_document(int id, const std::vector<Composition>& comps, const SynthSpec& spec,
                       Rng& rng) {
  Document d;
  d.id = id;
  d.source_words = make_text(comps, spec, rng);
  std::set<std::string> dedup;
  for (const Composition& c : comps) {
    Tag t = composition_tag(c);
    if (dedup.insert(t.joined()).second) d.tags.push_back(std::move(t));
    // The category word alone is the abstract parent tag; it keeps the
    // frequency hierarchy (categories frequent, compositions rare).
    Tag parent{{category_word(c.category)}};
    if (dedup.insert(parent.joined()).second) d.tags.push_back(std::move(parent));
  }
  return d;
}

}  // namespace

SynthCorpus synth_corpus(const SynthSpec& spec) {
  if (spec.held_out_fraction < 0.0 || spec.held_out_fraction >= 1.0)
    throw ConfigError("synth: held-out fraction must be in [0, 1), got " +
                      std::to_string(spec.held_out_fraction));
  if (spec.categories < 1 || spec.entity_words < 1 || spec.compositions < 1 ||
      spec.entity_max_words < 1)
    throw ConfigError("synth: categories, entity words, compositions and depth must be positive");

  Rng rng(sub_seed(spec.seed, "synth"));

  // Distinct compositions: seeded draws until we have the requested count.
  std::vector<Composition> comps;
  std::set<std::string> comp_keys;
  int guard = 0;
  while (static_cast<int>(comps.size()) < spec.compositions) {
    if (++guard > spec.compositions * 1000)
      throw ConfigError("synth: grammar too small for the requested number of compositions");
    Composition c;
    c.category = rng.index(spec.categories);
    const int len = 1 + rng.index(spec.entity_max_words);
    for (int i = 0; i < len; ++i) c.entity.push_back(entity_word(rng.index(spec.entity_words)));
    const std::string key = composition_tag(c).joined();
    if (comp_keys.insert(key).second) comps.push_back(std::move(c));
  }

  // Hold out a fraction of compositions such that every held-out entity word
  // and category still occurs in some trainable composition (the held-out
  // tag is new, its word-level cues are not).
  const int held = static_cast<int>(std::llround(spec.held_out_fraction * spec.compositions));
  std::vector<int> order(comps.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng.shuffle(order);

  std::vector<bool> held_out(comps.size(), false);
  std::unordered_map<std::string, int> train_word_uses;  // entity word/category -> #trainable comps
  auto words_of = [&](const Composition& c) {
    std::set<std::string> ws(c.entity.begin(), c.entity.end());
    ws.insert(category_word(c.category));
    return ws;
  };
  for (const Composition& c : comps)
    for (const std::string& w : words_of(c)) ++train_word_uses[w];

  int taken = 0;
  for (int idx : order) {
    if (taken == held) break;
    bool safe = true;
    for (const std::string& w : words_of(comps[idx]))
      if (train_word_uses[w] <= 1) safe = false;
    if (!safe) continue;
    held_out[idx] = true;
    ++taken;
    for (const std::string& w : words_of(comps[idx])) --train_word_uses[w];
  }
  if (taken < held)
    throw ConfigError("synth: could not hold out the requested fraction without orphaning words; "
                      "increase compositions or decrease the fraction");

  std::vector<int> trainable, unseen;
  for (size_t i = 0; i < comps.size(); ++i)
    (held_out[i] ? unseen : trainable).push_back(static_cast<int>(i));

  SynthCorpus out;
  out.seed = spec.seed;
  for (int i : unseen) out.unseen_tags.push_back(composition_tag(comps[i]).joined());
  std::sort(out.unseen_tags.begin(), out.unseen_tags.end());

  auto pick = [&](const std::vector<int>& pool) { return comps[pool[rng.index(static_cast<int>(pool.size()))]]; };

  int next_id = 1;
  for (int i = 0; i < spec.train_docs; ++i) {
    std::vector<Composition> cs{pick(trainable)};
    if (rng.uniform() < 0.3) cs.push_back(pick(trainable));
    out.train.push_back(make_document(next_id++, cs, spec, rng));
  }
  for (int i = 0; i < spec.dev_docs; ++i) {
    std::vector<Composition> cs{pick(trainable)};
    out.dev.push_back(make_document(next_id++, cs, spec, rng));
  }
  for (int i = 0; i < spec.test_docs; ++i) {
    // Every test-open document contains at least one held-out composition.
    std::vector<Composition> cs{pick(unseen)};
    if (rng.uniform() < 0.3) cs.push_back(pick(trainable));
    out.test_open.push_back(make_document(next_id++, cs, spec, rng));
  }
  return out;
}

void write_synth_corpus(const SynthCorpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_corpus_file((base / "train.jsonl").string(), corpus.train);
  write_corpus_file((base / "dev.jsonl").string(), corpus.dev);
  write_corpus_file((base / "test_open.jsonl").string(), corpus.test_open);

  json manifest;
  manifest["seed"] = corpus.seed;
  manifest["unseen_tags"] = corpus.unseen_tags;
  std::ofstream mf(base / "manifest.json");
  if (!mf) throw IoError("cannot write manifest in " + dir);
  mf << manifest.dump(2) << '\n';
}

SynthManifest read_synth_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + path + ": " + e.what());
  }
  SynthManifest m;
  m.seed = j.value("seed", 0ULL);
  for (const json& t : j.at("unseen_tags")) m.unseen_tags.push_back(t.get<std::string>());
  return m;
}

}  // namespace tagseq
