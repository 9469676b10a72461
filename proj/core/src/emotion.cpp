#include "codym/emotion.hpp"

#include <algorithm>

namespace codym {

namespace {

bool has_any_tag(const Turn& turn, const std::set<std::string>& tags) {
  for (const auto& tag : tags)
    if (turn.tags.count(tag)) return true;
  return false;
}

}  // namespace

EmotionTurnStudy emotion_turn_study(const Corpus& corpus, const std::string& tag, int order,
                                    const BinarizationRule& rule, int replicates,
                                    std::uint64_t seed, double alpha,
                                    const std::set<std::string>& distressing_tags,
                                    int workers) {
  check_order(order);
  check_rule(rule);

  // Patient events, split into tagged (observed) and distress-free (pool).
  const auto patient_events = collect_events(corpus, order, rule, Role::Patient);
  std::vector<LabeledEvent> tagged, pool;
  for (const auto& event : patient_events) {
    if (event.turn->has_tag(tag)) {
      tagged.push_back(event);
    } else if (!has_any_tag(*event.turn, distressing_tags)) {
      pool.push_back(event);
    }
  }
  if (tagged.empty())
    throw ValidationError("emotion_turn_study: no patient event carries tag \"" + tag + "\"");

  EmotionTurnStudy study;
  study.emotion = tag;
  study.order = order;
  study.n_events = std::int64_t(tagged.size());
  study.n_long = std::int64_t(std::count_if(tagged.begin(), tagged.end(), [](const auto& e) {
    return e.label == TurnLabel::L;
  }));
  study.long_rate = double(study.n_long) / double(study.n_events);
  study.observed = model_from_events(tagged, order);
  study.observed.stratum = Role::Patient;
  study.observed.metadata = tag;

  // How often the state context of a tagged event itself contains tagged
  // turns (consecutive emotional turns), per conversation-local lookback.
  {
    std::int64_t contaminated = 0;
    for (const auto& conversation : corpus.conversations) {
      const auto labels = label_conversation(conversation, rule);
      for (const auto& event : state_sequence(labels, order)) {
        const Turn& turn = conversation.turns[event.turn_index];
        if (turn.role != Role::Patient || !turn.has_tag(tag)) continue;
        for (std::size_t back = event.turn_index - std::size_t(order);
             back < event.turn_index; ++back) {
          if (conversation.turns[back].has_tag(tag)) {
            ++contaminated;
            break;
          }
        }
      }
    }
    study.context_tagged_fraction = double(contaminated) / double(study.n_events);
  }

  const std::size_t n = tagged.size();
  const std::size_t n_long = std::size_t(study.n_long);
  {
    // Fail early with the deficient label rather than inside a replicate.
    Rng probe(seed);
    sample_matched_turn_set(pool, n, n_long, probe);
  }

  study.ensemble = build_ensemble(
      [&](int, Rng& rng) {
        auto sample = sample_matched_turn_set(pool, n, n_long, rng);
        CodymModel model = model_from_events(sample, order);
        model.stratum = Role::Patient;
        return model;
      },
      replicates, seed, alpha, workers);
  study.report = significance_report(study.observed, study.ensemble);
  return study;
}

EmotionConversationStudy emotion_conversation_study(const Corpus& corpus,
                                                    const std::set<std::string>& tags,
                                                    int order, const BinarizationRule& rule,
                                                    bool stratified, double alpha) {
  check_order(order);
  check_rule(rule);
  if (tags.empty()) throw ValidationError("emotion_conversation_study: no tags given");

  EmotionConversationStudy study;
  study.tags = tags;
  study.order = order;
  study.stratified = stratified;
  study.alpha = alpha;

  Corpus group_a, group_b;
  for (const auto& conversation : corpus.conversations) {
    bool tagged = false;
    for (const auto& turn : conversation.turns) {
      if (turn.role == Role::Patient && has_any_tag(turn, tags)) {
        tagged = true;
        break;
      }
    }
    if (tagged) {
      group_a.conversations.push_back(conversation);
      study.group_a_ids.push_back(conversation.id);
    } else {
      group_b.conversations.push_back(conversation);
      study.group_b_ids.push_back(conversation.id);
    }
  }
  if (group_a.conversations.empty())
    throw ValidationError("emotion_conversation_study: no conversation carries the tags");
  if (group_b.conversations.empty())
    throw ValidationError("emotion_conversation_study: every conversation carries the tags");

  struct Stratum {
    std::optional<Role> role;
    std::string prefix;
  };
  std::vector<Stratum> strata;
  if (stratified) {
    strata.push_back({Role::Patient, "P:"});
    strata.push_back({Role::Clinician, "C:"});
  } else {
    strata.push_back({std::nullopt, ""});
  }

  const int slots = transition_count_for(order);
  for (const auto& stratum : strata) {
    PopulateOptions options;
    options.order = order;
    options.rule = rule;
    options.stratum = stratum.role;
    if (stratum.role) options.event_filter = role_filter(*stratum.role);

    const auto models_a = populate_per_conversation(group_a, options).models;
    const auto models_b = populate_per_conversation(group_b, options).models;
    if (models_a.empty() || models_b.empty())
      throw ValidationError("emotion_conversation_study: a group has no populated model");

    for (int slot = 0; slot < slots; ++slot) {
      std::vector<double> a, b;
      a.reserve(models_a.size());
      b.reserve(models_b.size());
      for (const auto& m : models_a) a.push_back(m.transition_freq[std::size_t(slot)]);
      for (const auto& m : models_b) b.push_back(m.transition_freq[std::size_t(slot)]);

      SlotKs entry;
      entry.slot = slot;
      entry.name = stratum.prefix + transition_name(slot, order);
      const KsResult ks = ks_two_sample(a, b);
      entry.d = ks.d_statistic;
      entry.p = ks.p_value;
      entry.mean_a = mean_of(a);
      entry.mean_b = mean_of(b);
      entry.delta = entry.mean_a - entry.mean_b;
      entry.significant = entry.p < alpha;
      study.slots.push_back(std::move(entry));
    }
  }
  return study;
}

}  // namespace codym
