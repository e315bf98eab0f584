#include "tagseq/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tagseq/rng.hpp"

namespace tagseq {

using nlohmann::json;

std::string Tag::joined() const {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

Tag split_tag(const std::string& spaced_words) {
  Tag t;
  std::istringstream is(spaced_words);
  std::string w;
  while (is >> w) t.words.push_back(w);
  return t;
}

const std::vector<std::string>& Vocab::special_names() {
  static const std::vector<std::string> names = {"<pad>", "</s>", "|", "<unk>", "<s>"};
  return names;
}

bool Vocab::is_special_name(const std::string& w) {
  const auto& names = special_names();
  return std::find(names.begin(), names.end(), w) != names.end();
}

Vocab::Vocab(VocabSide side) : side_(side) {
  for (const auto& s : special_names()) {
    ids_[s] = static_cast<int>(words_.size());
    words_.push_back(s);
  }
}

int Vocab::add(const std::string& word) {
  auto it = ids_.find(word);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(words_.size());
  ids_[word] = id;
  words_.push_back(word);
  return id;
}

int Vocab::id_of(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& word) const { return ids_.count(word) > 0; }

const std::string& Vocab::word_of(int id) const {
  if (id < 0 || id >= size()) throw ContractError("vocab id out of range: " + std::to_string(id));
  return words_[static_cast<size_t>(id)];
}

std::vector<std::string> Vocab::regular_words() const {
  return {words_.begin() + kNumSpecials, words_.end()};
}

void FrequencyTable::bump(const std::string& tag, long long by) {
  counts_[tag] += by;
  total_ += by;
}

long long FrequencyTable::count_of(const std::string& tag) const {
  auto it = counts_.find(tag);
  return it == counts_.end() ? 0 : it->second;
}

bool FrequencyTable::contains(const std::string& tag) const { return counts_.count(tag) > 0; }

long long FrequencyTable::total() const { return total_; }

std::string to_string(TagOrder o) {
  switch (o) {
    case TagOrder::random: return "random";
    case TagOrder::asc: return "asc";
    case TagOrder::desc: return "desc";
  }
  return "random";
}

TagOrder tag_order_from_string(const std::string& s) {
  if (s == "random") return TagOrder::random;
  if (s == "asc") return TagOrder::asc;
  if (s == "desc") return TagOrder::desc;
  throw ConfigError("unknown tag order '" + s + "' (expected random|asc|desc)");
}

std::vector<std::string> serialize_tags(const std::vector<Tag>& tags) {
  if (tags.empty()) throw ContractError("serialize_tags: tag list is empty");
  const std::string& delim = Vocab::special_names()[Vocab::kDelim];
  std::vector<std::string> stream;
  for (const Tag& t : tags) {
    if (t.words.empty()) throw ContractError("serialize_tags: empty tag");
    stream.insert(stream.end(), t.words.begin(), t.words.end());
    stream.push_back(delim);
  }
  return stream;
}

ParsedTags parse_tag_stream(const std::vector<std::string>& token_stream) {
  const std::string& delim = Vocab::special_names()[Vocab::kDelim];
  const std::string& eos = Vocab::special_names()[Vocab::kEos];
  ParsedTags out;
  std::vector<std::string> current;
  bool pending = false;  // tokens seen since the last delimiter
  for (const std::string& tok : token_stream) {
    if (tok == eos) break;
    if (tok == delim) {
      if (current.empty()) {
        ++out.malformed;  // empty segment between delimiters
      } else {
        out.raw.push_back(Tag{current});
        current.clear();
      }
      pending = false;
    } else {
      current.push_back(tok);
      pending = true;
    }
  }
  if (pending) ++out.malformed;  // segment never closed by a delimiter

  std::vector<std::string> seen;
  for (const Tag& t : out.raw) {
    const std::string key = t.joined();
    if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
      seen.push_back(key);
      out.tags.push_back(t);
    }
  }
  return out;
}

std::vector<int> local_positions(const std::vector<std::string>& token_stream) {
  const std::string& delim = Vocab::special_names()[Vocab::kDelim];
  std::vector<int> pos;
  pos.reserve(token_stream.size());
  int counter = 0;
  for (const std::string& tok : token_stream) {
    pos.push_back(counter);
    if (tok == delim)
      counter = 0;
    else
      ++counter;
  }
  return pos;
}

TagSequence TagSequence::from_tags(std::vector<Tag> tags) {
  TagSequence seq;
  seq.tags = std::move(tags);
  seq.token_stream = serialize_tags(seq.tags);
  seq.positions = local_positions(seq.token_stream);
  return seq;
}

std::vector<Tag> reorder_tags(std::vector<Tag> tags, const FrequencyTable& freq, TagOrder order,
                              uint64_t seed) {
  if (order == TagOrder::random) {
    Rng rng(seed);
    rng.shuffle(tags);
    return tags;
  }
  for (const Tag& t : tags)
    if (!freq.contains(t.joined()))
      throw ContractError("reorder_tags: tag absent from frequency table: '" + t.joined() + "'");
  std::stable_sort(tags.begin(), tags.end(), [&](const Tag& a, const Tag& b) {
    const long long ca = freq.count_of(a.joined());
    const long long cb = freq.count_of(b.joined());
    return order == TagOrder::asc ? ca < cb : ca > cb;
  });
  return tags;
}

FrequencyTable tag_frequency(const std::vector<Document>& corpus) {
  FrequencyTable freq;
  for (const Document& d : corpus)
    for (const Tag& t : d.tags) freq.bump(t.joined());
  return freq;
}

namespace {

bool looks_like_url(const std::string& w) {
  return w.rfind("http://", 0) == 0 || w.rfind("https://", 0) == 0 || w.rfind("www.", 0) == 0;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream is(text);
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

Document parse_document(const json& j, int line_no) {
  const std::string where = "line " + std::to_string(line_no);
  if (!j.is_object()) throw CorpusError(where + ": expected a JSON object");
  if (!j.contains("text")) throw CorpusError(where + ": missing \"text\"");
  if (!j.contains("tags") || !j.at("tags").is_array())
    throw CorpusError(where + ": missing or non-array \"tags\"");

  Document d;
  d.id = j.value("id", line_no);
  const json& text = j.at("text");
  std::vector<std::string> words;
  if (text.is_string()) {
    words = split_words(text.get<std::string>());
  } else if (text.is_array()) {
    for (const json& w : text) {
      if (!w.is_string()) throw CorpusError(where + ": \"text\" array must contain strings");
      words.push_back(w.get<std::string>());
    }
  } else {
    throw CorpusError(where + ": \"text\" must be a string or an array of words");
  }
  const std::string& delim = Vocab::special_names()[Vocab::kDelim];
  for (const std::string& w : words) {
    if (looks_like_url(w)) continue;
    if (w == delim)
      throw CorpusError(where + ": source text contains the reserved delimiter symbol '" + delim + "'");
    d.source_words.push_back(w);
  }
  if (d.source_words.empty()) throw CorpusError(where + ": document text is empty");

  for (const json& t : j.at("tags")) {
    if (!t.is_string()) throw CorpusError(where + ": \"tags\" must contain strings");
    Tag tag = split_tag(t.get<std::string>());
    if (tag.words.empty()) throw CorpusError(where + ": empty tag string");
    for (const std::string& w : tag.words)
      if (Vocab::is_special_name(w))
        throw CorpusError(where + ": tag word collides with reserved symbol '" + w + "'");
    d.tags.push_back(std::move(tag));
  }
  return d;
}

}  // namespace

std::vector<Document> ingest_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw CorpusError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    docs.push_back(parse_document(j, line_no));
  }
  return docs;
}

std::vector<Document> ingest_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  return ingest_corpus(in);
}

void write_corpus_file(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus file: " + path);
  for (const Document& d : docs) {
    json j;
    j["id"] = d.id;
    j["text"] = d.source_words;
    std::vector<std::string> tags;
    for (const Tag& t : d.tags) tags.push_back(t.joined());
    j["tags"] = tags;
    out << j.dump() << '\n';
  }
}

Vocab build_vocab(const std::vector<Document>& corpus, VocabSide side, int cap) {
  if (cap < Vocab::kNumSpecials)
    throw ConfigError("vocab cap must be at least " + std::to_string(Vocab::kNumSpecials));
  Vocab vocab(side);
  if (side == VocabSide::target) {
    // Every word of every training tag, in first-appearance order.
    for (const Document& d : corpus)
      for (const Tag& t : d.tags)
        for (const std::string& w : t.words) vocab.add(w);
    return vocab;
  }
  std::map<std::string, long long> counts;
  for (const Document& d : corpus)
    for (const std::string& w : d.source_words)
      if (!Vocab::is_special_name(w)) ++counts[w];
  std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const size_t room = static_cast<size_t>(cap - Vocab::kNumSpecials);
  for (size_t i = 0; i < ranked.size() && i < room; ++i) vocab.add(ranked[i].first);
  return vocab;
}

}  // namespace tagseq
