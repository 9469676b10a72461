#include "codym/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace codym {

namespace {

bool is_token_char(unsigned char c) { return std::isalnum(c) != 0; }

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Strips leading/trailing bytes that are not ASCII alphanumerics. Interior
// punctuation (apostrophes, hyphens) survives.
std::string strip_edges(std::string_view token) {
  std::size_t begin = 0, end = token.size();
  while (begin < end && !is_token_char(static_cast<unsigned char>(token[begin]))) ++begin;
  while (end > begin && !is_token_char(static_cast<unsigned char>(token[end - 1]))) --end;
  return std::string(token.substr(begin, end - begin));
}

}  // namespace

std::string_view role_name(Role role) {
  switch (role) {
    case Role::Patient: return "patient";
    case Role::Clinician: return "clinician";
    case Role::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<Role> parse_role(std::string_view name) {
  if (name == "patient") return Role::Patient;
  if (name == "clinician") return Role::Clinician;
  if (name == "unknown") return Role::Unknown;
  return std::nullopt;
}

std::size_t Corpus::total_turns() const {
  std::size_t n = 0;
  for (const auto& c : conversations) n += c.turns.size();
  return n;
}

std::int64_t Corpus::total_words() const {
  std::int64_t n = 0;
  for (const auto& c : conversations)
    for (const auto& t : c.turns) n += t.word_count;
  return n;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) {
      std::string token = strip_edges(text.substr(start, i - start));
      if (!token.empty()) tokens.push_back(lower_ascii(token));
    }
  }
  return tokens;
}

int count_words(std::string_view text) {
  auto tokens = tokenize(text);
  if (tokens.empty()) throw ValidationError("count_words: no words in text");
  return int(tokens.size());
}

namespace {

Turn turn_from_record(const nlohmann::json& rec, std::size_t line_no) {
  auto fail = [&](const std::string& what) -> SchemaError {
    std::ostringstream os;
    os << "line " << line_no << ": " << what;
    return SchemaError(os.str());
  };

  if (!rec.is_object()) throw fail("record is not a JSON object");
  if (!rec.contains("conv") || !rec["conv"].is_string())
    throw fail("missing string field \"conv\"");
  if (!rec.contains("role") || !rec["role"].is_string())
    throw fail("missing string field \"role\"");

  Turn turn;
  turn.conversation_id = rec["conv"].get<std::string>();
  if (turn.conversation_id.empty()) throw fail("empty conversation id");

  auto role = parse_role(rec["role"].get<std::string>());
  if (!role) throw fail("unrecognized role \"" + rec["role"].get<std::string>() + "\"");
  turn.role = *role;

  const bool has_text = rec.contains("text") && !rec["text"].is_null();
  const bool has_count = rec.contains("n_words") && !rec["n_words"].is_null();
  if (has_text) {
    if (!rec["text"].is_string()) throw fail("\"text\" must be a string");
    auto tokens = tokenize(rec["text"].get<std::string>());
    if (tokens.empty()) throw fail("\"text\" contains no words");
    turn.word_count = int(tokens.size());
    turn.words = std::move(tokens);
  } else if (has_count) {
    if (!rec["n_words"].is_number_integer()) throw fail("\"n_words\" must be an integer");
    auto n = rec["n_words"].get<std::int64_t>();
    if (n < 1) throw fail("\"n_words\" must be >= 1");
    turn.word_count = int(n);
  } else {
    throw fail("record needs \"text\" or \"n_words\"");
  }

  if (rec.contains("tags") && !rec["tags"].is_null()) {
    if (!rec["tags"].is_array()) throw fail("\"tags\" must be an array of strings");
    for (const auto& tag : rec["tags"]) {
      if (!tag.is_string()) throw fail("\"tags\" must be an array of strings");
      std::string value = lower_ascii(tag.get<std::string>());
      if (value.empty()) throw fail("empty tag");
      turn.tags.insert(std::move(value));
    }
  }
  return turn;
}

}  // namespace

Corpus parse_transcript_jsonl(std::istream& in, std::string provenance) {
  Corpus corpus;
  corpus.provenance = std::move(provenance);
  std::unordered_map<std::string, std::size_t> conv_index;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Tolerate trailing CR and blank lines.
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      std::ostringstream os;
      os << "line " << line_no << ": malformed JSON (" << e.what() << ")";
      throw ParseError(os.str());
    }

    Turn turn = turn_from_record(rec, line_no);
    auto [it, inserted] = conv_index.try_emplace(turn.conversation_id, corpus.conversations.size());
    if (inserted) {
      corpus.conversations.push_back(Conversation{turn.conversation_id, {}});
    }
    Conversation& conv = corpus.conversations[it->second];
    turn.index = conv.turns.size();
    conv.turns.push_back(std::move(turn));
  }
  return corpus;
}

Corpus load_transcript_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open transcript file: " + path.string());
  return parse_transcript_jsonl(in, path.string());
}

void write_transcript_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& conv : corpus.conversations) {
    for (const auto& turn : conv.turns) {
      nlohmann::json rec;
      rec["conv"] = conv.id;
      rec["role"] = std::string(role_name(turn.role));
      if (turn.words) {
        std::string text;
        for (std::size_t i = 0; i < turn.words->size(); ++i) {
          if (i) text += ' ';
          text += (*turn.words)[i];
        }
        rec["text"] = text;
      } else {
        rec["n_words"] = turn.word_count;
      }
      if (!turn.tags.empty()) rec["tags"] = turn.tags;
      out << rec.dump() << '\n';
    }
  }
}

void validate_corpus(const Corpus& corpus) {
  std::unordered_set<std::string> ids;
  for (const auto& conv : corpus.conversations) {
    if (conv.id.empty()) throw ValidationError("conversation with empty id");
    if (!ids.insert(conv.id).second)
      throw ValidationError("duplicate conversation id: " + conv.id);
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
      const Turn& turn = conv.turns[i];
      if (turn.index != i)
        throw ValidationError("conversation " + conv.id + ": non-contiguous turn indices");
      if (turn.conversation_id != conv.id)
        throw ValidationError("conversation " + conv.id + ": turn carries mismatched id");
      if (turn.word_count < 1)
        throw ValidationError("conversation " + conv.id + ": word_count < 1");
      if (turn.words && int(turn.words->size()) != turn.word_count)
        throw ValidationError("conversation " + conv.id + ": word_count disagrees with words");
      for (const auto& tag : turn.tags) {
        if (tag.empty()) throw ValidationError("conversation " + conv.id + ": empty tag");
        if (tag != lower_ascii(tag))
          throw ValidationError("conversation " + conv.id + ": tag not lowercase: " + tag);
      }
    }
  }
}

FilterResult filter_short_conversations(const Corpus& corpus, int min_turns) {
  if (min_turns < 1) throw ValidationError("filter_short_conversations: min_turns must be >= 1");
  FilterResult result;
  result.corpus.provenance = corpus.provenance;
  for (const auto& conv : corpus.conversations) {
    if (int(conv.turns.size()) >= min_turns) {
      result.corpus.conversations.push_back(conv);
    } else {
      result.dropped_ids.push_back(conv.id);
    }
  }
  return result;
}

// ---- Term lists ------------------------------------------------------

std::string TermPattern::display() const {
  switch (kind) {
    case Kind::Literal: return word;
    case Kind::Prefix: return word + "*";
    case Kind::Phrase: {
      std::string out;
      for (std::size_t i = 0; i < phrase.size(); ++i) {
        if (i) out += ' ';
        out += phrase[i];
      }
      return out;
    }
  }
  return word;
}

TermList parse_term_list(std::istream& in, std::string name) {
  TermList list;
  list.name = std::move(name);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto tokens = tokenize(line);  // also lowercases and strips punctuation edges
    if (tokens.empty()) continue;

    TermPattern pattern;
    // tokenize() strips a trailing '*', so detect prefixes on the raw line.
    std::string raw = line;
    while (!raw.empty() && (raw.back() == ' ' || raw.back() == '\t' || raw.back() == '\r'))
      raw.pop_back();
    const bool prefix = !raw.empty() && raw.back() == '*';

    if (tokens.size() > 1) {
      if (prefix)
        throw ParseError(list.name + " line " + std::to_string(line_no) +
                         ": prefix wildcard not supported inside phrases");
      pattern.kind = TermPattern::Kind::Phrase;
      pattern.phrase = std::move(tokens);
    } else if (prefix) {
      pattern.kind = TermPattern::Kind::Prefix;
      pattern.word = std::move(tokens.front());
      if (pattern.word.empty())
        throw ParseError(list.name + " line " + std::to_string(line_no) + ": empty prefix stem");
    } else {
      pattern.kind = TermPattern::Kind::Literal;
      pattern.word = std::move(tokens.front());
    }
    list.entries.push_back(std::move(pattern));
  }
  if (list.entries.empty())
    throw ValidationError("term list \"" + list.name + "\" has no patterns");
  return list;
}

TermList load_term_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open term list: " + path.string());
  return parse_term_list(in, path.stem().string());
}

int match_pattern(const std::vector<std::string>& tokens, const TermPattern& pattern) {
  int count = 0;
  switch (pattern.kind) {
    case TermPattern::Kind::Literal:
      for (const auto& token : tokens)
        if (token == pattern.word) ++count;
      break;
    case TermPattern::Kind::Prefix:
      for (const auto& token : tokens)
        if (token.size() >= pattern.word.size() &&
            token.compare(0, pattern.word.size(), pattern.word) == 0)
          ++count;
      break;
    case TermPattern::Kind::Phrase: {
      if (pattern.phrase.empty() || tokens.size() < pattern.phrase.size()) break;
      for (std::size_t start = 0; start + pattern.phrase.size() <= tokens.size(); ++start) {
        bool match = true;
        for (std::size_t i = 0; i < pattern.phrase.size(); ++i) {
          if (tokens[start + i] != pattern.phrase[i]) {
            match = false;
            break;
          }
        }
        if (match) ++count;
      }
      break;
    }
  }
  return count;
}

int match_terms(const Turn& turn, const TermList& list) {
  if (!turn.words)
    throw UnsupportedInputError("term matching requires turn words (conversation " +
                                turn.conversation_id + ", turn " + std::to_string(turn.index) + ")");
  int total = 0;
  for (const auto& pattern : list.entries) total += match_pattern(*turn.words, pattern);
  return total;
}

}  // namespace codym
