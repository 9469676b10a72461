#include "codym/null_models.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "codym/stats.hpp"

namespace codym {

Conversation shuffle_lengths_within_role(const Conversation& conversation, Rng& rng) {
  Conversation shuffled = conversation;
  // Permute payload (length, words, tags) among each role's positions; the
  // role sequence itself stays put. Roles are permuted in enum order so the
  // draw sequence is well defined.
  for (Role role : {Role::Patient, Role::Clinician, Role::Unknown}) {
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < conversation.turns.size(); ++i)
      if (conversation.turns[i].role == role) positions.push_back(i);
    if (positions.size() < 2) continue;

    std::vector<std::size_t> order = positions;
    rng.shuffle(order);
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const Turn& source = conversation.turns[order[k]];
      Turn& target = shuffled.turns[positions[k]];
      target.word_count = source.word_count;
      target.words = source.words;
      target.tags = source.tags;
    }
  }
  return shuffled;
}

Corpus shuffle_corpus(const Corpus& corpus, Rng& rng) {
  Corpus shuffled;
  shuffled.provenance = corpus.provenance;
  shuffled.conversations.reserve(corpus.conversations.size());
  for (const auto& conversation : corpus.conversations)
    shuffled.conversations.push_back(shuffle_lengths_within_role(conversation, rng));
  return shuffled;
}

CodymModel sample_transition_counts(const CodymModel& base, std::int64_t n, Rng& rng) {
  if (n <= 0) throw ValidationError("sample_transition_counts: n must be positive");
  if (base.event_count <= 0 || base.total_weight <= 0.0)
    throw ValidationError("sample_transition_counts: base model has no events");

  const std::size_t slots = base.transition_freq.size();
  std::vector<double> cdf(slots);
  double acc = 0.0;
  for (std::size_t i = 0; i < slots; ++i) {
    acc += base.transition_freq[i] / 100.0;
    cdf[i] = acc;
  }
  cdf.back() = 1.0;  // absorb rounding

  CodymModel model = make_empty_model(base.order);
  model.stratum = base.stratum;
  for (std::int64_t k = 0; k < n; ++k) {
    const double u = rng.uniform01();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t slot = std::min(std::size_t(it - cdf.begin()), slots - 1);
    model.transition_weight[slot] += 1.0;
    model.transition_counts[slot] += 1;
  }
  model.event_count = n;
  finalize_model(model);
  return model;
}

std::vector<LabeledEvent> collect_events(const Corpus& corpus, int order,
                                         const BinarizationRule& rule,
                                         std::optional<Role> event_role) {
  check_order(order);
  check_rule(rule);
  std::vector<LabeledEvent> events;
  for (const auto& conversation : corpus.conversations) {
    const auto labels = label_conversation(conversation, rule);
    for (const auto& event : state_sequence(labels, order)) {
      const Turn& turn = conversation.turns[event.turn_index];
      if (event_role && turn.role != *event_role) continue;
      events.push_back(LabeledEvent{event.state, event.label, &turn});
    }
  }
  return events;
}

std::vector<LabeledEvent> sample_matched_turn_set(std::span<const LabeledEvent> pool,
                                                  std::size_t n, std::size_t n_long,
                                                  Rng& rng) {
  if (n_long > n) throw ValidationError("sample_matched_turn_set: n_long exceeds n");
  std::vector<std::size_t> longs, shorts;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    (pool[i].label == TurnLabel::L ? longs : shorts).push_back(i);
  }
  const std::size_t n_short = n - n_long;
  if (longs.size() < n_long)
    throw ValidationError("sample_matched_turn_set: pool has " + std::to_string(longs.size()) +
                          " long events, need " + std::to_string(n_long));
  if (shorts.size() < n_short)
    throw ValidationError("sample_matched_turn_set: pool has " + std::to_string(shorts.size()) +
                          " short events, need " + std::to_string(n_short));

  std::vector<LabeledEvent> sample;
  sample.reserve(n);
  for (auto idx : rng.sample_without_replacement(longs.size(), n_long))
    sample.push_back(pool[longs[idx]]);
  for (auto idx : rng.sample_without_replacement(shorts.size(), n_short))
    sample.push_back(pool[shorts[idx]]);
  return sample;
}

CodymModel model_from_events(std::span<const LabeledEvent> events, int order) {
  CodymModel model = make_empty_model(order);
  for (const auto& event : events) {
    const int slot = slot_of(event.state, event.label);
    model.transition_weight[std::size_t(slot)] += 1.0;
    model.transition_counts[std::size_t(slot)] += 1;
  }
  model.event_count = std::int64_t(events.size());
  finalize_model(model);
  return model;
}

NullEnsemble build_ensemble(const ReplicateGenerator& generator, int replicates,
                            std::uint64_t seed, double alpha, int workers) {
  if (replicates < 2) throw ValidationError("build_ensemble: need at least 2 replicates");
  if (alpha <= 0.0 || alpha >= 1.0) throw ValidationError("build_ensemble: alpha outside (0,1)");

  std::vector<CodymModel> models(static_cast<std::size_t>(replicates));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(replicates));

  auto run_range = [&](int begin, int end) {
    for (int r = begin; r < end; ++r) {
      try {
        Rng rng = Rng::stream(seed, std::uint64_t(r));
        models[std::size_t(r)] = generator(r, rng);
      } catch (...) {
        failures[std::size_t(r)] = std::current_exception();
      }
    }
  };

  workers = std::max(1, workers);
  if (workers == 1 || replicates < 2 * workers) {
    run_range(0, replicates);
  } else {
    std::vector<std::thread> threads;
    const int chunk = (replicates + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(replicates, begin + chunk);
      if (begin < end) threads.emplace_back(run_range, begin, end);
    }
    for (auto& t : threads) t.join();
  }

  for (int r = 0; r < replicates; ++r) {
    if (failures[std::size_t(r)]) {
      try {
        std::rethrow_exception(failures[std::size_t(r)]);
      } catch (const std::exception& e) {
        throw Error("replicate " + std::to_string(r) + ": " + e.what());
      }
    }
  }

  NullEnsemble ensemble;
  ensemble.order = models.front().order;
  ensemble.replicates = replicates;
  ensemble.alpha = alpha;
  ensemble.seed = seed;
  for (const auto& m : models)
    if (m.order != ensemble.order) throw ValidationError("build_ensemble: mixed replicate orders");

  const std::size_t n_trans = models.front().transition_freq.size();
  const std::size_t n_states = models.front().state_freq.size();
  ensemble.transition_samples.assign(n_trans, std::vector<double>(std::size_t(replicates)));
  ensemble.state_samples.assign(n_states, std::vector<double>(std::size_t(replicates)));
  for (int r = 0; r < replicates; ++r) {
    const auto& m = models[std::size_t(r)];
    for (std::size_t i = 0; i < n_trans; ++i)
      ensemble.transition_samples[i][std::size_t(r)] = m.transition_freq[i];
    for (std::size_t s = 0; s < n_states; ++s)
      ensemble.state_samples[s][std::size_t(r)] = m.state_freq[s];
  }

  ensemble.mean = make_empty_model(ensemble.order);
  ensemble.mean.stratum = models.front().stratum;
  for (const auto& m : models) ensemble.mean.event_count += m.event_count;
  for (std::size_t i = 0; i < n_trans; ++i)
    ensemble.mean.transition_freq[i] = mean_of(ensemble.transition_samples[i]);
  for (std::size_t s = 0; s < n_states; ++s)
    ensemble.mean.state_freq[s] = mean_of(ensemble.state_samples[s]);
  ensemble.mean.transition_weight = ensemble.mean.transition_freq;
  ensemble.mean.total_weight = 100.0;

  auto ci_bounds = [&](const std::vector<double>& samples, double& low, double& high) {
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    low = percentile_linear(sorted, alpha / 2.0);
    high = percentile_linear(sorted, 1.0 - alpha / 2.0);
  };
  ensemble.ci_low.resize(n_trans);
  ensemble.ci_high.resize(n_trans);
  for (std::size_t i = 0; i < n_trans; ++i)
    ci_bounds(ensemble.transition_samples[i], ensemble.ci_low[i], ensemble.ci_high[i]);
  ensemble.state_ci_low.resize(n_states);
  ensemble.state_ci_high.resize(n_states);
  for (std::size_t s = 0; s < n_states; ++s)
    ci_bounds(ensemble.state_samples[s], ensemble.state_ci_low[s], ensemble.state_ci_high[s]);
  return ensemble;
}

SignificanceReport significance_report(const CodymModel& observed,
                                       const NullEnsemble& ensemble) {
  if (observed.order != ensemble.order)
    throw ValidationError("significance_report: mixed model orders");

  SignificanceReport report;
  report.order = observed.order;
  report.alpha = ensemble.alpha;

  auto fill = [](double obs, double mean, double low, double high) {
    SlotSignificance s;
    s.observed = obs;
    s.expected = mean;
    s.ci_low = low;
    s.ci_high = high;
    s.delta = obs - mean;
    s.significant = obs < low || obs > high;
    return s;
  };

  for (std::size_t i = 0; i < observed.transition_freq.size(); ++i)
    report.transitions.push_back(fill(observed.transition_freq[i],
                                      ensemble.mean.transition_freq[i], ensemble.ci_low[i],
                                      ensemble.ci_high[i]));
  for (std::size_t s = 0; s < observed.state_freq.size(); ++s)
    report.states.push_back(fill(observed.state_freq[s], ensemble.mean.state_freq[s],
                                 ensemble.state_ci_low[s], ensemble.state_ci_high[s]));
  return report;
}

}  // namespace codym
