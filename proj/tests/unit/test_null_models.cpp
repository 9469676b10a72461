#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "codym/null_models.hpp"
#include "synthetic.hpp"

using namespace codym;

namespace {

std::multiset<int> role_lengths(const Conversation& conv, Role role) {
  std::multiset<int> lengths;
  for (const auto& turn : conv.turns)
    if (turn.role == role) lengths.insert(turn.word_count);
  return lengths;
}

std::multiset<std::string> role_tags(const Conversation& conv, Role role) {
  std::multiset<std::string> tags;
  for (const auto& turn : conv.turns)
    if (turn.role == role)
      for (const auto& tag : turn.tags) tags.insert(tag);
  return tags;
}

}  // namespace

TEST_CASE("shuffle preserves roles, length multisets and tags") {
  synth::ChainSpec spec;
  spec.conversations = 1;
  spec.min_turns = 80;
  spec.max_turns = 80;
  spec.tag_prob = 0.25;
  spec.tag = "anger";
  spec.unknown_prob = 0.05;
  const Corpus corpus = synth::generate(spec, 31);
  const Conversation& original = corpus.conversations[0];

  Rng rng(7);
  bool any_difference = false;
  for (int trial = 0; trial < 200; ++trial) {
    const Conversation shuffled = shuffle_lengths_within_role(original, rng);
    REQUIRE(shuffled.turns.size() == original.turns.size());
    for (std::size_t i = 0; i < original.turns.size(); ++i) {
      CHECK(shuffled.turns[i].role == original.turns[i].role);
      CHECK(shuffled.turns[i].index == original.turns[i].index);
    }
    for (Role role : {Role::Patient, Role::Clinician, Role::Unknown}) {
      CHECK(role_lengths(shuffled, role) == role_lengths(original, role));
      CHECK(role_tags(shuffled, role) == role_tags(original, role));
    }
    for (std::size_t i = 0; i < original.turns.size(); ++i)
      if (shuffled.turns[i].word_count != original.turns[i].word_count) any_difference = true;
  }
  CHECK(any_difference);  // it actually shuffles
}

TEST_CASE("tags travel with their turn") {
  Conversation conv;
  conv.id = "c";
  for (int i = 0; i < 6; ++i) {
    Turn turn;
    turn.conversation_id = "c";
    turn.index = std::size_t(i);
    turn.role = Role::Patient;
    turn.word_count = i + 1;
    if (i == 3) turn.tags.insert("fear");
    conv.turns.push_back(turn);
  }
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Conversation shuffled = shuffle_lengths_within_role(conv, rng);
    for (const auto& turn : shuffled.turns) {
      if (turn.has_tag("fear")) CHECK(turn.word_count == 4);  // payload moved together
    }
  }
}

TEST_CASE("singleton roles shuffle to themselves") {
  Conversation conv;
  conv.id = "c";
  Turn p;
  p.conversation_id = "c";
  p.index = 0;
  p.role = Role::Patient;
  p.word_count = 3;
  Turn c;
  c.conversation_id = "c";
  c.index = 1;
  c.role = Role::Clinician;
  c.word_count = 9;
  conv.turns = {p, c};

  Rng rng(1);
  const Conversation shuffled = shuffle_lengths_within_role(conv, rng);
  CHECK(shuffled.turns[0].word_count == 3);
  CHECK(shuffled.turns[1].word_count == 9);
}

TEST_CASE("sample_transition_counts") {
  CodymModel degenerate = make_empty_model(2);
  degenerate.transition_weight[3] = 10.0;
  degenerate.event_count = 10;
  finalize_model(degenerate);

  Rng rng(9);
  const CodymModel sampled = sample_transition_counts(degenerate, 50, rng);
  CHECK(sampled.transition_counts[3] == 50);
  CHECK(sampled.event_count == 50);
  CHECK(sampled.transition_freq[3] == doctest::Approx(100.0));

  CHECK_THROWS_AS(sample_transition_counts(degenerate, 0, rng), ValidationError);
  CHECK_THROWS_AS(sample_transition_counts(make_empty_model(2), 5, rng), ValidationError);
}

TEST_CASE("multinomial draws sum to n and stay near expectation") {
  CodymModel uniform = make_empty_model(2);
  for (auto& w : uniform.transition_weight) w = 1.0;
  uniform.event_count = 8;
  finalize_model(uniform);

  Rng rng(12345);
  int draws_within = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const CodymModel sampled = sample_transition_counts(uniform, 8000, rng);
    const std::int64_t total = std::accumulate(sampled.transition_counts.begin(),
                                               sampled.transition_counts.end(), std::int64_t(0));
    REQUIRE(total == 8000);
    bool within = true;
    for (auto c : sampled.transition_counts)
      if (std::abs(c - 1000) > 110) within = false;  // ~3.7 sigma, sigma = 29.6
    if (within) ++draws_within;
  }
  CHECK(draws_within >= int(trials * 0.99));
}

TEST_CASE("sample_matched_turn_set") {
  std::vector<Turn> turns(20);
  std::vector<LabeledEvent> pool;
  for (int i = 0; i < 20; ++i) {
    turns[std::size_t(i)].word_count = i < 10 ? 10 : 2;
    pool.push_back(LabeledEvent{StateIndex(0), i < 10 ? TurnLabel::L : TurnLabel::S,
                                &turns[std::size_t(i)]});
  }

  Rng rng(3);
  const auto sample = sample_matched_turn_set(pool, 4, 2, rng);
  REQUIRE(sample.size() == 4);
  CHECK(std::count_if(sample.begin(), sample.end(),
                      [](const auto& e) { return e.label == TurnLabel::L; }) == 2);

  const auto all_long = sample_matched_turn_set(pool, 3, 3, rng);
  CHECK(std::all_of(all_long.begin(), all_long.end(),
                    [](const auto& e) { return e.label == TurnLabel::L; }));

  std::vector<LabeledEvent> tiny(pool.begin(), pool.begin() + 1);  // one long event
  CHECK_THROWS_WITH_AS(sample_matched_turn_set(tiny, 2, 2, rng), doctest::Contains("long"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(sample_matched_turn_set(tiny, 1, 0, rng), doctest::Contains("short"),
                       ValidationError);
}

TEST_CASE("collect_events respects the role filter but keeps full context") {
  synth::ChainSpec spec;
  spec.conversations = 3;
  spec.min_turns = 30;
  spec.max_turns = 30;
  const Corpus corpus = synth::generate(spec, 8);

  const auto all_events = collect_events(corpus, 3, BinarizationRule{8});
  const auto patient_events = collect_events(corpus, 3, BinarizationRule{8}, Role::Patient);
  CHECK(all_events.size() == corpus.total_turns() - 3 * 3);
  CHECK(patient_events.size() < all_events.size());
  for (const auto& e : patient_events) CHECK(e.turn->role == Role::Patient);
}

TEST_CASE("build_ensemble percentile bounds match the hand-computed example") {
  // Replicate r carries slot-0 frequency r+1 (samples 1..100).
  const auto generator = [](int r, Rng&) {
    CodymModel m = make_empty_model(1);
    m.transition_weight[0] = double(r + 1);
    m.transition_weight[3] = double(100 - (r + 1));
    m.event_count = 100;
    finalize_model(m);
    return m;
  };
  const NullEnsemble ensemble = build_ensemble(generator, 100, 42, 0.05);
  CHECK(ensemble.ci_low[0] == doctest::Approx(3.475).epsilon(1e-12));
  CHECK(ensemble.ci_high[0] == doctest::Approx(97.525).epsilon(1e-12));
  CHECK(ensemble.mean.transition_freq[0] == doctest::Approx(50.5));
  CHECK(ensemble.ci_low[0] <= ensemble.mean.transition_freq[0]);
  CHECK(ensemble.mean.transition_freq[0] <= ensemble.ci_high[0]);
}

TEST_CASE("degenerate ensemble collapses the interval onto the mean") {
  const auto generator = [](int, Rng&) {
    CodymModel m = make_empty_model(1);
    m.transition_weight[0] = 30.0;
    m.transition_weight[3] = 70.0;
    m.event_count = 100;
    finalize_model(m);
    return m;
  };
  const NullEnsemble ensemble = build_ensemble(generator, 50, 1, 0.05);
  CHECK(ensemble.ci_low[0] == ensemble.ci_high[0]);
  CHECK(ensemble.ci_low[0] == doctest::Approx(ensemble.mean.transition_freq[0]));
}

TEST_CASE("ensembles are identical across worker counts") {
  synth::ChainSpec spec;
  spec.conversations = 12;
  spec.min_turns = 40;
  spec.max_turns = 60;
  const Corpus corpus = synth::generate(spec, 55);

  const auto generator = [&corpus](int, Rng& rng) {
    const Corpus shuffled = shuffle_corpus(corpus, rng);
    PopulateOptions options;
    options.order = 3;
    return populate_pooled(shuffled, options);
  };

  const NullEnsemble a = build_ensemble(generator, 40, 99, 0.05, 1);
  const NullEnsemble b = build_ensemble(generator, 40, 99, 0.05, 4);
  CHECK(a.transition_samples == b.transition_samples);
  CHECK(a.state_samples == b.state_samples);
  CHECK(a.ci_low == b.ci_low);
  CHECK(a.ci_high == b.ci_high);
  CHECK(a.mean.transition_freq == b.mean.transition_freq);

  // And a different seed actually changes the samples.
  const NullEnsemble c = build_ensemble(generator, 40, 100, 0.05, 2);
  CHECK(a.transition_samples != c.transition_samples);
}

TEST_CASE("generator failures carry the replicate index") {
  const auto generator = [](int r, Rng&) -> CodymModel {
    if (r == 17) throw ValidationError("boom");
    CodymModel m = make_empty_model(1);
    m.transition_weight[0] = 1.0;
    m.event_count = 1;
    finalize_model(m);
    return m;
  };
  CHECK_THROWS_WITH_AS(build_ensemble(generator, 32, 5, 0.05), doctest::Contains("replicate 17"),
                       Error);
  CHECK_THROWS_AS(build_ensemble(generator, 1, 5, 0.05), ValidationError);  // < 2 replicates
}

TEST_CASE("significance_report flags exactly the out-of-interval slots") {
  Rng seed_rng(2);
  const auto generator = [&](int, Rng& rng) {
    CodymModel m = make_empty_model(1);
    // Slot 0 around 40 +- noise, slot 3 the remainder.
    const double v = 40.0 + (rng.uniform01() - 0.5) * 4.0;
    m.transition_weight[0] = v;
    m.transition_weight[3] = 100.0 - v;
    m.event_count = 100;
    finalize_model(m);
    return m;
  };
  const NullEnsemble ensemble = build_ensemble(generator, 400, 21, 0.05);

  CodymModel mid = ensemble.mean;
  const SignificanceReport none = significance_report(mid, ensemble);
  for (const auto& t : none.transitions) CHECK_FALSE(t.significant);

  CodymModel outside = make_empty_model(1);
  outside.transition_weight[0] = 60.0;  // far above every replicate
  outside.transition_weight[3] = 40.0;
  outside.event_count = 100;
  finalize_model(outside);
  const SignificanceReport flagged = significance_report(outside, ensemble);
  CHECK(flagged.transitions[0].significant);
  CHECK(flagged.transitions[0].delta == doctest::Approx(60.0 - ensemble.mean.transition_freq[0]));
  CHECK(flagged.states[0].significant);

  CHECK_THROWS_AS(significance_report(make_empty_model(2), ensemble), ValidationError);
}
