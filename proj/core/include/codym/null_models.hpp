#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "codym/model.hpp"
#include "codym/rng.hpp"

namespace codym {

// Permutes each role's turn contents (lengths, words, tags travel together)
// uniformly among that role's positions. The role at every position, and so
// the speaker sequence, is unchanged.
Conversation shuffle_lengths_within_role(const Conversation& conversation, Rng& rng);

Corpus shuffle_corpus(const Corpus& corpus, Rng& rng);

// n events drawn multinomially with slot probabilities taken from the base
// model's transition frequencies.
CodymModel sample_transition_counts(const CodymModel& base, std::int64_t n, Rng& rng);

// An observed event: state context plus the turn that produced it.
struct LabeledEvent {
  StateIndex state = 0;
  TurnLabel label = TurnLabel::S;
  const Turn* turn = nullptr;
};

// All events of the corpus, optionally restricted to event turns of one
// role. State context always uses the full turn sequence.
std::vector<LabeledEvent> collect_events(const Corpus& corpus, int order,
                                         const BinarizationRule& rule,
                                         std::optional<Role> event_role = {});

// Uniform sample without replacement of exactly n_long long events and
// n - n_long short events. Throws ValidationError naming the deficient
// label when the pool cannot supply it.
std::vector<LabeledEvent> sample_matched_turn_set(std::span<const LabeledEvent> pool,
                                                  std::size_t n, std::size_t n_long,
                                                  Rng& rng);

// Unit-weight model populated from a set of events.
CodymModel model_from_events(std::span<const LabeledEvent> events, int order);

// Monte Carlo ensemble over replicate models: per-slot samples, their mean
// model, and empirical percentile confidence bounds.
struct NullEnsemble {
  int order = 0;
  int replicates = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;

  CodymModel mean;
  std::vector<double> ci_low, ci_high;              // transitions
  std::vector<double> state_ci_low, state_ci_high;  // states

  // samples[slot][replicate]
  std::vector<std::vector<double>> transition_samples;
  std::vector<std::vector<double>> state_samples;
};

using ReplicateGenerator = std::function<CodymModel(int replicate, Rng& rng)>;

// Runs the generator for replicates 0..R-1, each on an RNG substream derived
// from (seed, replicate), so the ensemble is identical for any worker count.
NullEnsemble build_ensemble(const ReplicateGenerator& generator, int replicates,
                            std::uint64_t seed, double alpha = 0.05, int workers = 1);

struct SlotSignificance {
  double observed = 0.0;
  double expected = 0.0;  // ensemble mean
  double ci_low = 0.0;
  double ci_high = 0.0;
  double delta = 0.0;     // observed - expected
  bool significant = false;
};

struct SignificanceReport {
  int order = 0;
  double alpha = 0.05;
  std::vector<SlotSignificance> transitions;
  std::vector<SlotSignificance> states;
};

// Flags every slot whose observed frequency falls outside the ensemble's
// empirical confidence interval.
SignificanceReport significance_report(const CodymModel& observed,
                                       const NullEnsemble& ensemble);

}  // namespace codym
