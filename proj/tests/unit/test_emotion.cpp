#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "codym/emotion.hpp"
#include "synthetic.hpp"

using namespace codym;

namespace {

Conversation patterned_conversation(const std::string& id, const std::vector<int>& counts,
                                    const std::vector<bool>& tag_anger) {
  Conversation conv;
  conv.id = id;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    Turn turn;
    turn.conversation_id = id;
    turn.index = i;
    turn.role = i % 2 == 0 ? Role::Clinician : Role::Patient;
    turn.word_count = counts[i];
    if (tag_anger[i]) turn.tags.insert("anger");
    conv.turns.push_back(turn);
  }
  return conv;
}

}  // namespace

TEST_CASE("turn study: constructed tagged events land on one slot") {
  // Repeating counts 9,1,9,1,... make every patient turn follow an (L,S)
  // context at order 2; tag a few long patient turns only.
  Corpus corpus;
  std::vector<int> counts;
  std::vector<bool> tags;
  for (int i = 0; i < 40; ++i) {
    const bool patient = i % 2 == 1;
    counts.push_back(patient ? 9 : 1);  // clinician short, patient long
    tags.push_back(patient && i > 4 && i % 6 == 1);
  }
  corpus.conversations.push_back(patterned_conversation("c1", counts, tags));

  const auto study =
      emotion_turn_study(corpus, "anger", 2, BinarizationRule{8}, 50, 7, 0.05);
  CHECK(study.n_events > 0);
  CHECK(study.long_rate == doctest::Approx(1.0));
  // Every patient turn follows (L, S): its own long turn, then a short
  // clinician turn. Tagged events all land on LS-L.
  const int slot = slot_of(*parse_state("LS", 2), TurnLabel::L);
  CHECK(study.observed.transition_freq[std::size_t(slot)] == doctest::Approx(100.0));
  CHECK(study.observed.event_count == study.n_events);
  CHECK(study.ensemble.replicates == 50);
  // Matched nulls reproduce the tagged set's size exactly.
  CHECK(study.ensemble.mean.event_count == 50 * study.n_events);
}

TEST_CASE("turn study errors") {
  synth::ChainSpec spec;
  spec.conversations = 5;
  spec.min_turns = 30;
  spec.max_turns = 40;
  const Corpus corpus = synth::generate(spec, 3);
  CHECK_THROWS_AS(emotion_turn_study(corpus, "anger", 2, BinarizationRule{8}, 20, 1),
                  ValidationError);

  // Tag every patient turn: the distress-free pool is empty.
  Corpus all_tagged = corpus;
  for (auto& conv : all_tagged.conversations)
    for (auto& turn : conv.turns)
      if (turn.role == Role::Patient) turn.tags.insert("anger");
  CHECK_THROWS_AS(emotion_turn_study(all_tagged, "anger", 2, BinarizationRule{8}, 20, 1),
                  ValidationError);
}

TEST_CASE("turn study calibration on independent tags") {
  // Tags independent of structure: the significant-flag rate should sit
  // near alpha. Small smoke version; the acceptance suite runs the full one.
  synth::ChainSpec spec;
  spec.conversations = 40;
  spec.min_turns = 60;
  spec.max_turns = 80;
  spec.tag_prob = 0.2;
  spec.tag = "fear";
  int flags = 0, slots = 0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const Corpus corpus = synth::generate(spec, 9000 + trial);
    const auto study =
        emotion_turn_study(corpus, "fear", 3, BinarizationRule{8}, 100, trial, 0.05);
    for (const auto& t : study.report.transitions) {
      ++slots;
      if (t.significant) ++flags;
    }
  }
  const double rate = double(flags) / double(slots);
  CHECK(rate < 0.15);  // loose; the acceptance criterion pins [0.03, 0.07]
}

TEST_CASE("context contamination fraction counts tagged lookbacks") {
  // Two adjacent tagged patient turns: the later one sees the earlier in
  // its order-2 context window. The untagged tail feeds the null pool.
  std::vector<int> counts(16, 0);
  std::vector<bool> tags(16, false);
  for (int i = 0; i < 16; ++i) counts[std::size_t(i)] = i % 2 == 1 ? 9 : 1;
  tags[3] = tags[5] = true;
  Corpus corpus;
  corpus.conversations.push_back(patterned_conversation("c1", counts, tags));
  const auto study = emotion_turn_study(corpus, "anger", 2, BinarizationRule{8}, 10, 1);
  CHECK(study.n_events == 2);
  CHECK(study.context_tagged_fraction == doctest::Approx(0.5));
}

TEST_CASE("conversation study: disjoint groups saturate D") {
  Corpus corpus;
  // Group A: all-long conversations with one tagged patient turn.
  for (int c = 0; c < 4; ++c) {
    std::vector<int> counts(30, 9);
    std::vector<bool> tags(30, false);
    tags[5] = true;
    corpus.conversations.push_back(
        patterned_conversation("a" + std::to_string(c), counts, tags));
  }
  // Group B: all-short conversations, untagged.
  for (int c = 0; c < 4; ++c) {
    std::vector<int> counts(30, 1);
    std::vector<bool> tags(30, false);
    corpus.conversations.push_back(
        patterned_conversation("b" + std::to_string(c), counts, tags));
  }

  const auto study =
      emotion_conversation_study(corpus, {"anger"}, 3, BinarizationRule{8}, false);
  CHECK(study.group_a_ids.size() == 4);
  CHECK(study.group_b_ids.size() == 4);

  const int lll = slot_of(*parse_state("LLL", 3), TurnLabel::L);
  const int sss = slot_of(*parse_state("SSS", 3), TurnLabel::S);
  CHECK(study.slots[std::size_t(lll)].d == doctest::Approx(1.0));
  CHECK(study.slots[std::size_t(lll)].delta == doctest::Approx(100.0));
  CHECK(study.slots[std::size_t(sss)].d == doctest::Approx(1.0));
  CHECK(study.slots[std::size_t(sss)].delta == doctest::Approx(-100.0));
}

TEST_CASE("conversation study: identical groups show zero distance") {
  Corpus corpus;
  for (int c = 0; c < 3; ++c) {
    std::vector<int> counts{1, 9, 1, 9, 1, 9, 9, 1, 9, 9, 1, 1, 9, 1, 9, 1};
    std::vector<bool> tagged(counts.size(), false);
    tagged[3] = true;
    corpus.conversations.push_back(
        patterned_conversation("a" + std::to_string(c), counts, tagged));
    corpus.conversations.push_back(patterned_conversation(
        "b" + std::to_string(c), counts, std::vector<bool>(counts.size(), false)));
  }
  const auto study =
      emotion_conversation_study(corpus, {"anger"}, 3, BinarizationRule{8}, false);
  for (const auto& slot : study.slots) {
    CHECK(slot.d == doctest::Approx(0.0));
    CHECK(slot.p == doctest::Approx(1.0));
    CHECK_FALSE(slot.significant);
    CHECK(slot.delta == doctest::Approx(0.0));
  }
}

TEST_CASE("conversation study delta equals the difference of group means") {
  synth::ChainSpec spec;
  spec.conversations = 30;
  spec.min_turns = 40;
  spec.max_turns = 80;
  spec.tag_prob = 0.04;
  spec.tag = "fear";
  const Corpus corpus = synth::generate(spec, 42);

  const auto study =
      emotion_conversation_study(corpus, {"fear"}, 3, BinarizationRule{8}, false);
  REQUIRE(!study.group_a_ids.empty());
  REQUIRE(!study.group_b_ids.empty());

  // Recompute group means through mean_model for one slot.
  Corpus group_a;
  for (const auto& conv : corpus.conversations)
    if (std::find(study.group_a_ids.begin(), study.group_a_ids.end(), conv.id) !=
        study.group_a_ids.end())
      group_a.conversations.push_back(conv);
  PopulateOptions options;
  options.order = 3;
  const auto models = populate_per_conversation(group_a, options).models;
  const auto mean = mean_model(models);
  for (int slot = 0; slot < transition_count_for(3); ++slot)
    CHECK(study.slots[std::size_t(slot)].mean_a ==
          doctest::Approx(mean.model.transition_freq[std::size_t(slot)]).epsilon(1e-12));
}

TEST_CASE("conversation study: stratified doubles the slot table") {
  synth::ChainSpec spec;
  spec.conversations = 20;
  spec.min_turns = 40;
  spec.max_turns = 60;
  spec.tag_prob = 0.05;
  spec.tag = "anger";
  const Corpus corpus = synth::generate(spec, 77);
  const auto flat = emotion_conversation_study(corpus, {"anger"}, 3, BinarizationRule{8}, false);
  const auto split = emotion_conversation_study(corpus, {"anger"}, 3, BinarizationRule{8}, true);
  CHECK(flat.slots.size() == std::size_t(transition_count_for(3)));
  CHECK(split.slots.size() == std::size_t(2 * transition_count_for(3)));
  CHECK(split.slots.front().name.rfind("P:", 0) == 0);
  CHECK(split.slots.back().name.rfind("C:", 0) == 0);

  CHECK_THROWS_AS(
      emotion_conversation_study(corpus, {"no-such-tag"}, 3, BinarizationRule{8}, false),
      ValidationError);
}
