#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codym/corpus.hpp"

namespace codym {

// Binary turn-length label: short or long.
enum class TurnLabel : std::uint8_t { S = 0, L = 1 };

inline char label_char(TurnLabel label) { return label == TurnLabel::S ? 'S' : 'L'; }

// A state of order N packs the labels of the N previous turns into the low
// N bits, oldest turn in the highest bit. "SLS" at order 3 is 0b010.
using StateIndex = std::uint32_t;

constexpr int kMaxOrder = 8;

inline int state_count(int order) { return 1 << order; }
inline int transition_count_for(int order) { return 2 << order; }

inline StateIndex shift_state(StateIndex state, TurnLabel label, int order) {
  return ((state << 1) | StateIndex(label)) & StateIndex((1u << order) - 1);
}

inline int slot_of(StateIndex state, TurnLabel label) {
  return int(state) * 2 + int(label);
}

inline StateIndex slot_state(int slot) { return StateIndex(slot >> 1); }
inline TurnLabel slot_label(int slot) { return TurnLabel(slot & 1); }

std::string state_name(StateIndex state, int order);
std::optional<StateIndex> parse_state(std::string_view name, int order);

// "SLS-L"
std::string slot_name(int slot, int order);
// "SLS-L->LSL"
std::string transition_name(int slot, int order);

void check_order(int order);

// word_count >= threshold is long; threshold 1 would label every turn long.
struct BinarizationRule {
  int threshold = 8;

  TurnLabel label_for(int word_count) const {
    return word_count >= threshold ? TurnLabel::L : TurnLabel::S;
  }
};

void check_rule(const BinarizationRule& rule);

TurnLabel binarize_turn(int word_count, const BinarizationRule& rule);

// Labels of a whole conversation, in turn order.
std::vector<TurnLabel> label_conversation(const Conversation& conversation,
                                          const BinarizationRule& rule);

struct StateEvent {
  StateIndex state = 0;       // labels of the N turns before `turn_index`
  TurnLabel label = TurnLabel::S;
  std::size_t turn_index = 0;
};

// Events of a label sequence. The first N labels only seed the state, so a
// sequence of length <= N produces no events.
std::vector<StateEvent> state_sequence(std::span<const TurnLabel> labels, int order);

// An order-N model over percentage frequencies. All 2^N states and 2^(N+1)
// transition slots are always present, zero-frequency slots included.
// State frequencies are the source-state marginals of the transition
// frequencies, so both sum to 100 when any event was observed.
struct CodymModel {
  int order = 0;
  std::int64_t event_count = 0;  // events that contributed weight
  double total_weight = 0.0;
  std::optional<Role> stratum;
  std::string metadata;

  std::vector<double> transition_freq;        // % per slot, size 2^(order+1)
  std::vector<double> state_freq;             // % per state, size 2^order
  std::vector<std::int64_t> transition_counts;  // contributing events per slot
  std::vector<double> transition_weight;      // accumulated weight per slot

  double freq(StateIndex state, TurnLabel label) const {
    return transition_freq[slot_of(state, label)];
  }
};

// Zero-filled model shell of the right shape.
CodymModel make_empty_model(int order);

// Recomputes frequencies from transition_weight (one renormalization pass).
void finalize_model(CodymModel& model);

struct PopulateOptions {
  int order = 3;
  BinarizationRule rule;
  // Event turns must satisfy the filter to contribute; state context always
  // uses all turns. Null means "all turns".
  std::function<bool(const Turn&)> event_filter;
  // Weight contributed by an event turn; null means 1. Zero-weight events
  // contribute nothing and are not counted.
  std::function<double(const Turn&)> weight_fn;
  std::optional<Role> stratum;  // recorded on the model, not a filter
};

std::function<bool(const Turn&)> role_filter(Role role);

// One model over all conversations pooled; throws ValidationError when the
// total contributed weight is zero.
CodymModel populate_pooled(const Corpus& corpus, const PopulateOptions& options);

struct PerConversationModels {
  std::vector<CodymModel> models;        // metadata holds the conversation id
  std::vector<std::string> excluded_ids; // conversations with no contributing event
};

PerConversationModels populate_per_conversation(const Corpus& corpus,
                                                const PopulateOptions& options);

struct MeanModelResult {
  CodymModel model;                       // per-slot arithmetic means
  std::vector<double> transition_median;  // diagnostics only
  std::vector<double> state_median;
};

MeanModelResult mean_model(std::span<const CodymModel> models);

// Signed per-slot difference between two frequency models of equal order.
// Deltas sum to 0; observed state frequencies ride along for node sizing.
struct DeltaModel {
  int order = 0;
  std::vector<double> delta;      // percentage points per slot
  std::vector<double> state_obs;  // observed state %
};

DeltaModel delta_model(const CodymModel& observed, const CodymModel& expected);

struct ThresholdScan {
  int threshold = 0;               // entropy-maximizing candidate (smallest on ties)
  std::vector<int> candidates;
  std::vector<double> entropy_bits;  // state-distribution entropy per candidate
  std::vector<double> long_rate;     // fraction of turns labeled long per candidate
};

// Scans thresholds t_min..t_max over the pooled corpus at the given order.
// Candidates must sit within the observed word-count range.
ThresholdScan select_threshold(const Corpus& corpus, int order, int t_min, int t_max);

}  // namespace codym
