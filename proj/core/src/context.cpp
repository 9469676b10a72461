#include "codym/context.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <unordered_map>

namespace codym {

namespace {

struct WordTally {
  std::int64_t total_count = 0;
  std::int64_t event_count = 0;
  std::int64_t turns_with_word = 0;
  std::int64_t long_turns_with_word = 0;
  std::vector<double> slot_weight;
};

}  // namespace

std::vector<WordProfile> all_word_profiles(const Corpus& corpus, int order,
                                           const BinarizationRule& rule) {
  check_order(order);
  check_rule(rule);
  const std::size_t slots = std::size_t(transition_count_for(order));

  // std::map keeps the output deterministically ordered by word.
  std::map<std::string, WordTally> tallies;
  std::unordered_map<std::string, int> in_turn;

  for (const auto& conversation : corpus.conversations) {
    const auto labels = label_conversation(conversation, rule);
    // Event slots by turn index; -1 where the turn precedes the first event.
    std::vector<int> slot_by_turn(conversation.turns.size(), -1);
    for (const auto& event : state_sequence(labels, order))
      slot_by_turn[event.turn_index] = slot_of(event.state, event.label);

    for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
      const Turn& turn = conversation.turns[i];
      if (!turn.words)
        throw UnsupportedInputError("word profiles require turn words (conversation " +
                                    conversation.id + ")");
      in_turn.clear();
      for (const auto& word : *turn.words) in_turn[word] += 1;
      const bool is_long = labels[i] == TurnLabel::L;
      for (const auto& [word, occurrences] : in_turn) {
        WordTally& tally = tallies[word];
        if (tally.slot_weight.empty()) tally.slot_weight.assign(slots, 0.0);
        tally.total_count += occurrences;
        tally.turns_with_word += 1;
        if (is_long) tally.long_turns_with_word += 1;
        if (slot_by_turn[i] >= 0) {
          tally.event_count += occurrences;
          tally.slot_weight[std::size_t(slot_by_turn[i])] += double(occurrences);
        }
      }
    }
  }

  std::vector<WordProfile> profiles;
  profiles.reserve(tallies.size());
  for (auto& [word, tally] : tallies) {
    WordProfile profile;
    profile.word = word;
    profile.total_count = tally.total_count;
    profile.event_count = tally.event_count;
    profile.long_turn_fraction =
        tally.turns_with_word > 0
            ? double(tally.long_turns_with_word) / double(tally.turns_with_word)
            : 0.0;
    profile.freq_vector.assign(slots, 0.0);
    if (tally.event_count > 0) {
      const double total = double(tally.event_count);
      for (std::size_t i = 0; i < slots; ++i)
        profile.freq_vector[i] = 100.0 * tally.slot_weight[i] / total;
    } else {
      profile.zero_events = true;
    }
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

WordProfile word_transition_profile(const Corpus& corpus, const std::string& word,
                                    int order, const BinarizationRule& rule) {
  check_order(order);
  check_rule(rule);
  const std::size_t slots = std::size_t(transition_count_for(order));

  WordProfile profile;
  profile.word = word;
  profile.freq_vector.assign(slots, 0.0);
  std::vector<double> slot_weight(slots, 0.0);
  std::int64_t turns_with_word = 0, long_turns_with_word = 0;

  for (const auto& conversation : corpus.conversations) {
    const auto labels = label_conversation(conversation, rule);
    std::vector<int> slot_by_turn(conversation.turns.size(), -1);
    for (const auto& event : state_sequence(labels, order))
      slot_by_turn[event.turn_index] = slot_of(event.state, event.label);

    for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
      const Turn& turn = conversation.turns[i];
      if (!turn.words)
        throw UnsupportedInputError("word profiles require turn words (conversation " +
                                    conversation.id + ")");
      int occurrences = 0;
      for (const auto& token : *turn.words)
        if (token == word) ++occurrences;
      if (occurrences == 0) continue;
      profile.total_count += occurrences;
      ++turns_with_word;
      if (labels[i] == TurnLabel::L) ++long_turns_with_word;
      if (slot_by_turn[i] >= 0) {
        profile.event_count += occurrences;
        slot_weight[std::size_t(slot_by_turn[i])] += double(occurrences);
      }
    }
  }

  profile.long_turn_fraction =
      turns_with_word > 0 ? double(long_turns_with_word) / double(turns_with_word) : 0.0;
  if (profile.event_count > 0) {
    for (std::size_t i = 0; i < slots; ++i)
      profile.freq_vector[i] = 100.0 * slot_weight[i] / double(profile.event_count);
  } else {
    profile.zero_events = true;
  }
  return profile;
}

std::vector<WordProfile> candidate_words(const Corpus& corpus, const CodymModel& baseline,
                                         const BinarizationRule& rule, std::int64_t min_count,
                                         double min_delta, DeltaAggregation aggregation) {
  auto profiles = all_word_profiles(corpus, baseline.order, rule);
  std::vector<WordProfile> selected;
  for (auto& profile : profiles) {
    if (profile.total_count < min_count || profile.zero_events) continue;
    double deviation = 0.0;
    if (aggregation == DeltaAggregation::MaxAbsSlot) {
      for (std::size_t i = 0; i < profile.freq_vector.size(); ++i)
        deviation = std::max(deviation,
                             std::abs(profile.freq_vector[i] - baseline.transition_freq[i]));
    } else {
      double ss = 0.0;
      for (std::size_t i = 0; i < profile.freq_vector.size(); ++i) {
        const double d = profile.freq_vector[i] - baseline.transition_freq[i];
        ss += d * d;
      }
      deviation = std::sqrt(ss);
    }
    if (deviation > min_delta) selected.push_back(std::move(profile));
  }
  return selected;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    ss += d * d;
  }
  return ss;
}

struct KmeansRun {
  std::vector<int> assignments;
  std::vector<std::vector<double>> centroids;
  double inertia = std::numeric_limits<double>::infinity();
};

KmeansRun kmeans_once(const std::vector<std::vector<double>>& points, int k, Rng& rng,
                      int max_iter, double tol) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  centroids.reserve(std::size_t(k));
  centroids.push_back(points[rng.below(n)]);
  std::vector<double> d2(n);
  while (int(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, sq_dist(points[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng.below(n);  // all points coincide with a centroid
    } else {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
  }

  KmeansRun run;
  run.assignments.assign(n, 0);
  double prev_inertia = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment step; ties go to the lowest cluster id.
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(points[i], centroids[std::size_t(c)]);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      run.assignments[i] = best_c;
      inertia += best;
    }

    // Update step.
    std::vector<std::vector<double>> sums(std::size_t(k), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> sizes(std::size_t(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = std::size_t(run.assignments[i]);
      sizes[c] += 1;
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] += points[i][j];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[std::size_t(c)] == 0) {
        // Reseed an empty cluster from the point farthest from its centroid.
        std::size_t farthest = 0;
        double worst = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = sq_dist(points[i], centroids[std::size_t(run.assignments[i])]);
          if (d > worst) {
            worst = d;
            farthest = i;
          }
        }
        centroids[std::size_t(c)] = points[farthest];
      } else {
        for (std::size_t j = 0; j < dim; ++j)
          centroids[std::size_t(c)][j] =
              sums[std::size_t(c)][j] / double(sizes[std::size_t(c)]);
      }
    }

    run.inertia = inertia;
    if (prev_inertia - inertia <= tol * std::max(prev_inertia, 1e-300) && iter > 0) break;
    prev_inertia = inertia;
  }

  // Final assignment against the last centroid update so the result is a
  // fixed point of the assignment step.
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (int c = 0; c < k; ++c) {
      const double d = sq_dist(points[i], centroids[std::size_t(c)]);
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    run.assignments[i] = best_c;
    inertia += best;
  }
  run.inertia = inertia;
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

ClusterResult kmeans_cluster(const std::vector<std::vector<double>>& vectors, int k,
                             std::uint64_t seed, int restarts, int max_iter, double tol) {
  if (vectors.empty()) throw ValidationError("kmeans_cluster: no input vectors");
  if (k < 1 || std::size_t(k) > vectors.size())
    throw ValidationError("kmeans_cluster: k must be in 1..n");
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != dim) throw ValidationError("kmeans_cluster: ragged input vectors");
  if (restarts < 1) throw ValidationError("kmeans_cluster: restarts must be >= 1");

  KmeansRun best;
  for (int r = 0; r < restarts; ++r) {
    Rng rng = Rng::stream(seed, std::uint64_t(r));
    KmeansRun run = kmeans_once(vectors, k, rng, max_iter, tol);
    if (run.inertia < best.inertia) best = std::move(run);
  }

  ClusterResult result;
  result.k = k;
  result.assignments = std::move(best.assignments);
  result.centroids = std::move(best.centroids);
  result.inertia = best.inertia;
  result.seed = seed;
  result.restarts = restarts;
  return result;
}

CodymModel term_list_model(const Corpus& corpus, const TermList& list, int order,
                           const BinarizationRule& rule, std::optional<Role> role) {
  check_order(order);
  check_rule(rule);
  if (corpus.conversations.empty()) throw ValidationError("term_list_model: empty corpus");

  PopulateOptions options;
  options.order = order;
  options.rule = rule;
  options.stratum = role;
  if (role) options.event_filter = role_filter(*role);
  options.weight_fn = [&list](const Turn& turn) { return double(match_terms(turn, list)); };
  try {
    CodymModel model = populate_pooled(corpus, options);
    model.metadata = list.name;
    return model;
  } catch (const ValidationError&) {
    // Inputs were validated above, so this is the zero-total-weight case.
    std::string where = role ? std::string(role_name(*role)) : std::string("all");
    throw ValidationError("term_list_model: list \"" + list.name + "\" never matches on " +
                          where + " event turns");
  }
}

std::vector<RobustnessTrial> robustness_trials(const Corpus& corpus, const TermList& list,
                                               int order, const BinarizationRule& rule,
                                               std::optional<Role> role, double fraction,
                                               std::uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0)
    throw ValidationError("robustness_trials: fraction outside (0,1)");

  // Eligible terms are those occurring at least once anywhere in the corpus.
  std::vector<TermPattern> eligible;
  for (const auto& pattern : list.entries) {
    std::int64_t occurrences = 0;
    for (const auto& conversation : corpus.conversations) {
      for (const auto& turn : conversation.turns) {
        if (!turn.words)
          throw UnsupportedInputError("robustness_trials requires turn words");
        occurrences += match_pattern(*turn.words, pattern);
      }
      if (occurrences > 0) break;
    }
    if (occurrences > 0) eligible.push_back(pattern);
  }
  const std::size_t m = eligible.size();
  if (m < 2)
    throw ValidationError("robustness_trials: need >= 2 terms with corpus occurrences, have " +
                          std::to_string(m));

  const std::size_t remove_count = std::size_t(std::ceil(fraction * double(m)));
  std::vector<int> removals(m, 0);
  std::vector<RobustnessTrial> trials;
  Rng rng(seed);

  // Uniform random subsets cover every term eventually; the cap only guards
  // against a pathological RNG regression.
  const std::size_t max_trials = 200 * (m / remove_count + 1) + 1000;
  while (true) {
    bool covered = true;
    for (int c : removals)
      if (c < 2) {
        covered = false;
        break;
      }
    if (covered) break;
    if (trials.size() >= max_trials)
      throw Error("robustness_trials: coverage not reached after " +
                  std::to_string(trials.size()) + " trials");

    auto picks = rng.sample_without_replacement(m, remove_count);
    std::sort(picks.begin(), picks.end());
    TermList reduced;
    reduced.name = list.name;
    RobustnessTrial trial;
    std::size_t next_pick = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (next_pick < picks.size() && picks[next_pick] == i) {
        trial.removed.push_back(eligible[i].display());
        removals[i] += 1;
        ++next_pick;
      } else {
        reduced.entries.push_back(eligible[i]);
      }
    }
    trial.model = term_list_model(corpus, reduced, order, rule, role);
    trials.push_back(std::move(trial));
  }
  return trials;
}

void write_cluster_csv(const std::vector<WordProfile>& profiles,
                       const ClusterResult& clusters, int order, std::ostream& out) {
  out << "word,count,pct_long,cluster";
  for (int slot = 0; slot < transition_count_for(order); ++slot)
    out << ',' << slot_name(slot, order);
  out << "\n";
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& profile = profiles[i];
    out << profile.word << ',' << profile.total_count << ','
        << 100.0 * profile.long_turn_fraction << ',' << clusters.assignments[i];
    for (double f : profile.freq_vector) out << ',' << f;
    out << "\n";
  }
}

}  // namespace codym
