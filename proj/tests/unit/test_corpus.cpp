#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "codym/corpus.hpp"
#include "codym/rng.hpp"
#include "synthetic.hpp"

using namespace codym;

namespace {

bool corpora_equal(const Corpus& a, const Corpus& b) {
  if (a.conversations.size() != b.conversations.size()) return false;
  for (std::size_t c = 0; c < a.conversations.size(); ++c) {
    const auto& ca = a.conversations[c];
    const auto& cb = b.conversations[c];
    if (ca.id != cb.id || ca.turns.size() != cb.turns.size()) return false;
    for (std::size_t i = 0; i < ca.turns.size(); ++i) {
      const auto& ta = ca.turns[i];
      const auto& tb = cb.turns[i];
      if (ta.role != tb.role || ta.word_count != tb.word_count || ta.words != tb.words ||
          ta.tags != tb.tags || ta.index != tb.index)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("tokenize strips edge punctuation and lowercases") {
  CHECK(tokenize("I feel fine") == std::vector<std::string>{"i", "feel", "fine"});
  CHECK(tokenize("hm.") == std::vector<std::string>{"hm"});
  CHECK(tokenize("  —  ").empty());
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
  CHECK(tokenize("co-op.") == std::vector<std::string>{"co-op"});
  CHECK(tokenize("\"Hello,\" she said...") ==
        std::vector<std::string>{"hello", "she", "said"});
}

TEST_CASE("count_words") {
  CHECK(count_words("I expect you will feel better") == 6);
  CHECK(count_words("hm.") == 1);
  CHECK_THROWS_AS(count_words("  —  "), ValidationError);
  CHECK_THROWS_AS(count_words("   "), ValidationError);
}

TEST_CASE("parse transcript jsonl") {
  std::istringstream in(
      R"({"conv":"c1","role":"patient","text":"I feel fine"}
{"conv":"c1","role":"clinician","n_words":12}
{"conv":"c2","role":"unknown","text":"hm.","tags":["Anger"]}
)");
  const Corpus corpus = parse_transcript_jsonl(in);
  REQUIRE(corpus.conversations.size() == 2);
  const Turn& t0 = corpus.conversations[0].turns[0];
  CHECK(t0.role == Role::Patient);
  CHECK(t0.word_count == 3);
  REQUIRE(t0.words.has_value());
  CHECK(*t0.words == std::vector<std::string>{"i", "feel", "fine"});

  const Turn& t1 = corpus.conversations[0].turns[1];
  CHECK(t1.role == Role::Clinician);
  CHECK(t1.word_count == 12);
  CHECK_FALSE(t1.words.has_value());

  const Turn& t2 = corpus.conversations[1].turns[0];
  CHECK(t2.role == Role::Unknown);
  CHECK(t2.has_tag("anger"));  // tags are lowercased

  validate_corpus(corpus);
}

TEST_CASE("parse errors carry line numbers") {
  {
    std::istringstream in(R"({"conv":"c1","role":"family"}
)");
    CHECK_THROWS_WITH_AS(parse_transcript_jsonl(in),
                         doctest::Contains("line 1"), SchemaError);
  }
  {
    // No text and no n_words.
    std::istringstream in(R"({"conv":"c1","role":"patient","text":"ok"}
{"conv":"c1","role":"patient"}
)");
    CHECK_THROWS_WITH_AS(parse_transcript_jsonl(in), doctest::Contains("line 2"), SchemaError);
  }
  {
    std::istringstream in("{not json\n");
    CHECK_THROWS_AS(parse_transcript_jsonl(in), ParseError);
  }
  {
    std::istringstream in(R"({"conv":"c1","role":"patient","n_words":0}
)");
    CHECK_THROWS_AS(parse_transcript_jsonl(in), SchemaError);
  }
}

TEST_CASE("jsonl round trip") {
  synth::ChainSpec spec;
  spec.conversations = 6;
  spec.min_turns = 25;
  spec.max_turns = 40;
  spec.tag_prob = 0.3;
  spec.tag = "anger";

  SUBCASE("counts only") {}
  SUBCASE("with words") { spec.with_words = true; }

  const Corpus corpus = synth::generate(spec, 99);
  std::ostringstream out;
  write_transcript_jsonl(corpus, out);
  std::istringstream in(out.str());
  const Corpus reparsed = parse_transcript_jsonl(in);
  CHECK(corpora_equal(corpus, reparsed));
}

TEST_CASE("word_count equals token count when words present") {
  synth::ChainSpec spec;
  spec.conversations = 4;
  spec.min_turns = 10;
  spec.max_turns = 20;
  spec.with_words = true;
  const Corpus corpus = synth::generate(spec, 5);
  for (const auto& conversation : corpus.conversations) {
    for (const auto& turn : conversation.turns) {
      std::string joined;
      for (const auto& w : *turn.words) joined += w + " ";
      CHECK(count_words(joined) == turn.word_count);
    }
  }
}

TEST_CASE("filter_short_conversations") {
  Corpus corpus;
  for (int n : {19, 20, 45}) {
    Conversation conv;
    conv.id = "c" + std::to_string(n);
    for (int i = 0; i < n; ++i) {
      Turn turn;
      turn.conversation_id = conv.id;
      turn.index = std::size_t(i);
      turn.word_count = 3;
      conv.turns.push_back(turn);
    }
    corpus.conversations.push_back(conv);
  }

  const auto result = filter_short_conversations(corpus, 20);
  CHECK(result.corpus.conversations.size() == 2);
  CHECK(result.dropped_ids == std::vector<std::string>{"c19"});

  const auto empty = filter_short_conversations(Corpus{}, 20);
  CHECK(empty.corpus.conversations.empty());
  CHECK_THROWS_AS(filter_short_conversations(corpus, 0), ValidationError);
}

TEST_CASE("term list parsing") {
  std::istringstream in(R"(# hedging-style list
think
worr*
allude to

guess  # trailing comment
)");
  const TermList list = parse_term_list(in, "demo");
  REQUIRE(list.entries.size() == 4);
  CHECK(list.entries[0].kind == TermPattern::Kind::Literal);
  CHECK(list.entries[0].word == "think");
  CHECK(list.entries[1].kind == TermPattern::Kind::Prefix);
  CHECK(list.entries[1].word == "worr");
  CHECK(list.entries[2].kind == TermPattern::Kind::Phrase);
  CHECK(list.entries[2].phrase == std::vector<std::string>{"allude", "to"});
  CHECK(list.entries[3].word == "guess");
  CHECK(list.entries[1].display() == "worr*");
  CHECK(list.entries[2].display() == "allude to");

  std::istringstream empty("# nothing\n\n");
  CHECK_THROWS_AS(parse_term_list(empty, "empty"), ValidationError);
}

TEST_CASE("bundled term lists load with expected sizes") {
  const auto hedging = load_term_list(std::string(CODYM_DATA_DIR) + "/term_lists/hedging.txt");
  CHECK(hedging.entries.size() == 35);
  const auto treatment =
      load_term_list(std::string(CODYM_DATA_DIR) + "/term_lists/treatment.txt");
  CHECK(treatment.entries.size() == 51);

  int prefixes = 0, phrases = 0;
  for (const auto& e : hedging.entries) {
    if (e.kind == TermPattern::Kind::Prefix) ++prefixes;
    if (e.kind == TermPattern::Kind::Phrase) ++phrases;
  }
  CHECK(prefixes == 3);  // worr*, theor*, hypothesi*
  CHECK(phrases == 1);   // allude to
}

TEST_CASE("match_terms counts every occurrence") {
  Turn turn;
  turn.conversation_id = "c";
  turn.word_count = 4;

  TermList think{"think-list", {TermPattern{TermPattern::Kind::Literal, "think", {}}}};
  turn.words = std::vector<std::string>{"i", "think", "i", "think"};
  turn.word_count = 4;
  CHECK(match_terms(turn, think) == 2);

  TermList worr{"worr-list", {TermPattern{TermPattern::Kind::Prefix, "worr", {}}}};
  turn.words = std::vector<std::string>{"worried"};
  turn.word_count = 1;
  CHECK(match_terms(turn, worr) == 1);

  TermList allude{"allude-list",
                  {TermPattern{TermPattern::Kind::Phrase, "", {"allude", "to"}}}};
  turn.words = std::vector<std::string>{"allude", "to", "that"};
  turn.word_count = 3;
  CHECK(match_terms(turn, allude) == 1);

  // Overlapping phrase occurrences count at every start.
  TermList aa{"aa", {TermPattern{TermPattern::Kind::Phrase, "", {"a", "a"}}}};
  turn.words = std::vector<std::string>{"a", "a", "a"};
  turn.word_count = 3;
  CHECK(match_terms(turn, aa) == 2);

  turn.words.reset();
  CHECK_THROWS_AS(match_terms(turn, think), UnsupportedInputError);
}

TEST_CASE("match_terms is additive over disjoint lists") {
  Rng rng(17);
  const std::vector<std::string> vocab_a{"alpha", "beta", "gamma"};
  const std::vector<std::string> vocab_b{"delta", "epsilon"};
  TermList a{"a", {}}, b{"b", {}}, both{"both", {}};
  for (const auto& w : vocab_a) a.entries.push_back({TermPattern::Kind::Literal, w, {}});
  for (const auto& w : vocab_b) b.entries.push_back({TermPattern::Kind::Literal, w, {}});
  both.entries = a.entries;
  both.entries.insert(both.entries.end(), b.entries.begin(), b.entries.end());

  for (int trial = 0; trial < 50; ++trial) {
    Turn turn;
    turn.conversation_id = "c";
    std::vector<std::string> words;
    for (int i = 0; i < 12; ++i) {
      const auto pick = rng.below(6);
      if (pick < 3)
        words.push_back(vocab_a[pick]);
      else if (pick < 5)
        words.push_back(vocab_b[pick - 3]);
      else
        words.push_back("noise");
    }
    turn.words = words;
    turn.word_count = int(words.size());
    CHECK(match_terms(turn, both) == match_terms(turn, a) + match_terms(turn, b));
  }
}

TEST_CASE("validate_corpus catches violations") {
  Corpus corpus;
  Conversation conv;
  conv.id = "c1";
  Turn turn;
  turn.conversation_id = "c1";
  turn.index = 0;
  turn.word_count = 2;
  conv.turns.push_back(turn);
  corpus.conversations.push_back(conv);
  validate_corpus(corpus);

  Corpus dup = corpus;
  dup.conversations.push_back(conv);
  CHECK_THROWS_AS(validate_corpus(dup), ValidationError);

  Corpus bad_count = corpus;
  bad_count.conversations[0].turns[0].word_count = 0;
  CHECK_THROWS_AS(validate_corpus(bad_count), ValidationError);

  Corpus bad_words = corpus;
  bad_words.conversations[0].turns[0].words = std::vector<std::string>{"one"};
  CHECK_THROWS_AS(validate_corpus(bad_words), ValidationError);
}
