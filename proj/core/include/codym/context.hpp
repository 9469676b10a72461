#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "codym/model.hpp"
#include "codym/null_models.hpp"

namespace codym {

// Transition-frequency fingerprint of a single word, weighted by occurrence
// (a word used twice in a turn weighs that event twice).
struct WordProfile {
  std::string word;
  std::int64_t total_count = 0;   // occurrences anywhere in the corpus
  std::int64_t event_count = 0;   // occurrences on event turns (first N turns
                                  // of a conversation produce no events)
  double long_turn_fraction = 0;  // of turns containing the word, fraction long
  std::vector<double> freq_vector;  // % per transition slot
  bool zero_events = false;
};

WordProfile word_transition_profile(const Corpus& corpus, const std::string& word,
                                    int order, const BinarizationRule& rule);

// Profiles of every distinct word, built in one corpus pass. The slot counts
// of all profiles sum exactly to the all-words pooled model's slot counts.
std::vector<WordProfile> all_word_profiles(const Corpus& corpus, int order,
                                           const BinarizationRule& rule);

enum class DeltaAggregation { MaxAbsSlot, L2Norm };

// Words occurring at least min_count times whose profile deviates from the
// baseline by more than min_delta percentage points (max over slots, or the
// L2 norm of the deviation vector). The baseline is the all-words pooled
// model built with the same order and rule.
std::vector<WordProfile> candidate_words(const Corpus& corpus, const CodymModel& baseline,
                                         const BinarizationRule& rule, std::int64_t min_count,
                                         double min_delta,
                                         DeltaAggregation aggregation = DeltaAggregation::MaxAbsSlot);

struct ClusterResult {
  int k = 0;
  std::vector<int> assignments;               // per input vector
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;                       // sum of squared distances
  std::uint64_t seed = 0;
  int restarts = 0;
};

// Lloyd's algorithm, k-means++ seeding, Euclidean distance, equal point
// weights. Runs `restarts` independent restarts and keeps the best inertia;
// a cluster that empties is reseeded from the farthest point.
ClusterResult kmeans_cluster(const std::vector<std::vector<double>>& vectors, int k,
                             std::uint64_t seed, int restarts = 10, int max_iter = 300,
                             double tol = 1e-4);

// Pooled model weighted by term-list occurrences on each event turn.
// Throws ValidationError naming the list and role when nothing matches.
CodymModel term_list_model(const Corpus& corpus, const TermList& list, int order,
                           const BinarizationRule& rule, std::optional<Role> role = {});

struct RobustnessTrial {
  std::vector<std::string> removed;  // display form of removed patterns
  CodymModel model;
};

// Repeatedly drops a random ceil(fraction * m) of the terms that occur in
// the corpus and refits, until every eligible term has been absent from at
// least two trials.
std::vector<RobustnessTrial> robustness_trials(const Corpus& corpus, const TermList& list,
                                               int order, const BinarizationRule& rule,
                                               std::optional<Role> role, double fraction,
                                               std::uint64_t seed);

// word, count, %L, cluster id, then one column per transition slot.
void write_cluster_csv(const std::vector<WordProfile>& profiles,
                       const ClusterResult& clusters, int order, std::ostream& out);

}  // namespace codym
