#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codym/error.hpp"

namespace codym {

enum class Role : std::uint8_t { Patient, Clinician, Unknown };

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view name);

// One speaker turn. `words` is absent when the transcript carries word
// counts only (privacy mode); word-level operations then refuse the turn.
struct Turn {
  std::string conversation_id;
  std::size_t index = 0;
  Role role = Role::Unknown;
  int word_count = 0;
  std::optional<std::vector<std::string>> words;
  std::set<std::string> tags;

  bool has_tag(std::string_view tag) const {
    return tags.find(std::string(tag)) != tags.end();
  }
};

struct Conversation {
  std::string id;
  std::vector<Turn> turns;
};

struct Corpus {
  std::vector<Conversation> conversations;
  std::string provenance;

  std::size_t total_turns() const;
  std::int64_t total_words() const;
};

// Lowercased tokens, whitespace-split, leading/trailing non-alphanumeric
// bytes stripped. Tokens that strip to nothing are dropped. Apostrophes and
// hyphens inside a token are kept ("don't" is one token).
std::vector<std::string> tokenize(std::string_view text);

// Number of tokens; throws ValidationError when no token survives.
int count_words(std::string_view text);

// One JSON object per line:
//   {"conv": str, "role": "patient"|"clinician"|"unknown",
//    "text": str?, "n_words": int?, "tags": [str]?}
// Exactly one of "text" / "n_words" is required ("text" wins when both are
// present: words and the count are derived from it).
Corpus parse_transcript_jsonl(std::istream& in, std::string provenance = "");
Corpus load_transcript_jsonl(const std::filesystem::path& path);
void write_transcript_jsonl(const Corpus& corpus, std::ostream& out);

// Checks every documented invariant; throws ValidationError on the first
// violation. Parsing already guarantees these for corpora it produced.
void validate_corpus(const Corpus& corpus);

struct FilterResult {
  Corpus corpus;
  std::vector<std::string> dropped_ids;
};

FilterResult filter_short_conversations(const Corpus& corpus, int min_turns);

// ---- Term lists ------------------------------------------------------

struct TermPattern {
  enum class Kind { Literal, Prefix, Phrase };
  Kind kind = Kind::Literal;
  std::string word;                 // Literal word or Prefix stem
  std::vector<std::string> phrase;  // Phrase tokens, in order

  std::string display() const;
};

struct TermList {
  std::string name;
  std::vector<TermPattern> entries;
};

// One pattern per line; '#' starts a comment; "stem*" declares a prefix;
// a line with internal whitespace declares a multiword phrase.
TermList parse_term_list(std::istream& in, std::string name);
TermList load_term_list(const std::filesystem::path& path);

// Total occurrences of `pattern` in the token sequence. Phrase matches are
// counted at every start position, so overlaps all count.
int match_pattern(const std::vector<std::string>& tokens, const TermPattern& pattern);

// Sum of match_pattern over all entries. Throws UnsupportedInputError when
// the turn has no words.
int match_terms(const Turn& turn, const TermList& list);

}  // namespace codym
