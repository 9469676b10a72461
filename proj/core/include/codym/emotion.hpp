#pragma once

#include <set>
#include <string>
#include <vector>

#include "codym/null_models.hpp"
#include "codym/stats.hpp"

namespace codym {

inline const std::set<std::string>& default_distressing_tags() {
  static const std::set<std::string> tags = {"anger", "fear", "sadness"};
  return tags;
}

// Turn-level study: patient events carrying `tag` versus length-matched
// samples of patient events carrying no distressing tag at all.
struct EmotionTurnStudy {
  std::string emotion;
  int order = 0;
  std::int64_t n_events = 0;
  std::int64_t n_long = 0;
  double long_rate = 0.0;  // fraction of tagged events that are long
  // Fraction of tagged events whose state context contains a tagged turn;
  // consecutive emotional turns contaminate contexts and this quantifies it.
  double context_tagged_fraction = 0.0;

  CodymModel observed;
  NullEnsemble ensemble;
  SignificanceReport report;
};

EmotionTurnStudy emotion_turn_study(const Corpus& corpus, const std::string& tag,
                                    int order, const BinarizationRule& rule,
                                    int replicates, std::uint64_t seed,
                                    double alpha = 0.05,
                                    const std::set<std::string>& distressing_tags =
                                        default_distressing_tags(),
                                    int workers = 1);

struct SlotKs {
  int slot = 0;               // within its stratum block
  std::string name;
  double d = 0.0;
  double p = 1.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double delta = 0.0;         // mean_a - mean_b
  bool significant = false;   // p < alpha
};

// Conversation-level study: conversations with >= 1 tagged patient turn
// (group A) versus the rest (group B), compared per transition slot with
// two-sample KS tests on per-conversation frequencies.
struct EmotionConversationStudy {
  std::set<std::string> tags;
  int order = 0;
  bool stratified = false;
  double alpha = 0.05;

  std::vector<std::string> group_a_ids;
  std::vector<std::string> group_b_ids;
  std::vector<SlotKs> slots;  // stratified: patient block then clinician block
};

EmotionConversationStudy emotion_conversation_study(const Corpus& corpus,
                                                    const std::set<std::string>& tags,
                                                    int order, const BinarizationRule& rule,
                                                    bool stratified, double alpha = 0.05);

}  // namespace codym
