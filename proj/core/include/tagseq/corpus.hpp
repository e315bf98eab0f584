#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "tagseq/errors.hpp"

namespace tagseq {

// One label attached to a document: a non-empty list of words.
struct Tag {
  std::vector<std::string> words;

  std::string joined() const;  // words joined with single spaces
  bool operator==(const Tag&) const = default;
};

Tag split_tag(const std::string& spaced_words);

struct Document {
  int id = 0;
  std::vector<std::string> source_words;
  std::vector<Tag> tags;

  bool tagless() const { return tags.empty(); }
};

enum class VocabSide { source, target };

// Bidirectional token<->id map. Ids 0..4 are reserved for the special
// symbols, in this fixed order.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kEos = 1;
  static constexpr int kDelim = 2;
  static constexpr int kUnk = 3;
  static constexpr int kBos = 4;
  static constexpr int kNumSpecials = 5;

  static const std::vector<std::string>& special_names();
  static bool is_special_name(const std::string& w);

  explicit Vocab(VocabSide side = VocabSide::source);

  int add(const std::string& word);           // inserts if absent, returns id
  int id_of(const std::string& word) const;   // kUnk when absent
  bool contains(const std::string& word) const;
  const std::string& word_of(int id) const;
  int size() const { return static_cast<int>(words_.size()); }
  VocabSide side() const { return side_; }

  // Non-special entries in id order; used by checkpoint serialization.
  std::vector<std::string> regular_words() const;

 private:
  VocabSide side_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

// Multiset counts of full tag strings over a training corpus.
class FrequencyTable {
 public:
  void bump(const std::string& tag, long long by = 1);
  long long count_of(const std::string& tag) const;  // 0 when absent
  bool contains(const std::string& tag) const;
  long long total() const;
  size_t distinct() const { return counts_.size(); }
  const std::unordered_map<std::string, long long>& counts() const { return counts_; }

 private:
  std::unordered_map<std::string, long long> counts_;
  long long total_ = 0;
};

enum class TagOrder { random, asc, desc };

std::string to_string(TagOrder o);
TagOrder tag_order_from_string(const std::string& s);

// ---- Tag stream operations ----------------------------------------------

// Serializes tags word-by-word, appending the delimiter after every tag,
// including the last.
std::vector<std::string> serialize_tags(const std::vector<Tag>& tags);

struct ParsedTags {
  std::vector<Tag> tags;        // deduplicated, first occurrence kept
  std::vector<Tag> raw;         // every well-formed segment, duplicates kept
  int malformed = 0;            // empty segments + trailing unclosed segment
};

// Splits a token stream on the delimiter symbol, stopping at the first EOS
// symbol if present. Total function: never throws on any stream.
ParsedTags parse_tag_stream(const std::vector<std::string>& token_stream);

// Per-token position that restarts at 0 on each tag's first word; the
// delimiter carries the tag's word count.
std::vector<int> local_positions(const std::vector<std::string>& token_stream);

// Serialized form of an ordered tag list plus its aligned position list.
struct TagSequence {
  std::vector<Tag> tags;
  std::vector<std::string> token_stream;
  std::vector<int> positions;

  static TagSequence from_tags(std::vector<Tag> tags);
};

// Stable reorder by full-tag corpus frequency. `asc` sorts counts
// non-decreasing, `desc` non-increasing; `random` is a seeded shuffle that
// ignores the table.
std::vector<Tag> reorder_tags(std::vector<Tag> tags, const FrequencyTable& freq, TagOrder order,
                              uint64_t seed);

// ---- Corpus construction --------------------------------------------------

FrequencyTable tag_frequency(const std::vector<Document>& corpus);

// Reads JSON lines with fields "text" (string or word array) and "tags"
// (array of space-separated tag strings). URL tokens are dropped. Documents
// carrying the literal delimiter glyph are rejected.
std::vector<Document> ingest_corpus(std::istream& in);
std::vector<Document> ingest_corpus_file(const std::string& path);

void write_corpus_file(const std::string& path, const std::vector<Document>& docs);

// Most frequent `cap - 5` words for the source side (ties broken
// lexicographically); every tag word regardless of cap for the target side.
Vocab build_vocab(const std::vector<Document>& corpus, VocabSide side, int cap);

inline constexpr int kDefaultSourceVocabCap = 80000;

}  // namespace tagseq
