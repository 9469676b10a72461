#include "codym/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "codym/stats.hpp"

namespace codym {

void check_order(int order) {
  if (order < 1 || order > kMaxOrder)
    throw ValidationError("model order must be in 1.." + std::to_string(kMaxOrder) +
                          ", got " + std::to_string(order));
}

void check_rule(const BinarizationRule& rule) {
  if (rule.threshold < 2)
    throw ValidationError("binarization threshold must be >= 2 (1 labels every turn long)");
}

std::string state_name(StateIndex state, int order) {
  std::string name(std::size_t(order), 'S');
  for (int i = 0; i < order; ++i) {
    if ((state >> (order - 1 - i)) & 1u) name[std::size_t(i)] = 'L';
  }
  return name;
}

std::optional<StateIndex> parse_state(std::string_view name, int order) {
  if (int(name.size()) != order) return std::nullopt;
  StateIndex state = 0;
  for (char c : name) {
    state <<= 1;
    if (c == 'L')
      state |= 1;
    else if (c != 'S')
      return std::nullopt;
  }
  return state;
}

std::string slot_name(int slot, int order) {
  return state_name(slot_state(slot), order) + "-" + label_char(slot_label(slot));
}

std::string transition_name(int slot, int order) {
  StateIndex src = slot_state(slot);
  TurnLabel label = slot_label(slot);
  return state_name(src, order) + "-" + label_char(label) + "->" +
         state_name(shift_state(src, label, order), order);
}

TurnLabel binarize_turn(int word_count, const BinarizationRule& rule) {
  if (word_count < 1) throw ValidationError("word_count must be >= 1");
  check_rule(rule);
  return rule.label_for(word_count);
}

std::vector<TurnLabel> label_conversation(const Conversation& conversation,
                                          const BinarizationRule& rule) {
  check_rule(rule);
  std::vector<TurnLabel> labels;
  labels.reserve(conversation.turns.size());
  for (const auto& turn : conversation.turns) labels.push_back(rule.label_for(turn.word_count));
  return labels;
}

std::vector<StateEvent> state_sequence(std::span<const TurnLabel> labels, int order) {
  check_order(order);
  std::vector<StateEvent> events;
  if (labels.size() <= std::size_t(order)) return events;
  events.reserve(labels.size() - std::size_t(order));

  StateIndex state = 0;
  for (int i = 0; i < order; ++i) state = (state << 1) | StateIndex(labels[std::size_t(i)]);
  for (std::size_t i = std::size_t(order); i < labels.size(); ++i) {
    events.push_back(StateEvent{state, labels[i], i});
    state = shift_state(state, labels[i], order);
  }
  return events;
}

CodymModel make_empty_model(int order) {
  check_order(order);
  CodymModel model;
  model.order = order;
  model.transition_freq.assign(std::size_t(transition_count_for(order)), 0.0);
  model.state_freq.assign(std::size_t(state_count(order)), 0.0);
  model.transition_counts.assign(std::size_t(transition_count_for(order)), 0);
  model.transition_weight.assign(std::size_t(transition_count_for(order)), 0.0);
  return model;
}

void finalize_model(CodymModel& model) {
  const double total = std::accumulate(model.transition_weight.begin(),
                                       model.transition_weight.end(), 0.0);
  model.total_weight = total;
  if (total <= 0.0) {
    std::fill(model.transition_freq.begin(), model.transition_freq.end(), 0.0);
    std::fill(model.state_freq.begin(), model.state_freq.end(), 0.0);
    return;
  }
  for (std::size_t i = 0; i < model.transition_weight.size(); ++i)
    model.transition_freq[i] = 100.0 * model.transition_weight[i] / total;
  // State frequencies are the source-state marginals, computed from the
  // final percentages so the identity holds exactly, not just to rounding.
  for (std::size_t s = 0; s < model.state_freq.size(); ++s)
    model.state_freq[s] = model.transition_freq[2 * s] + model.transition_freq[2 * s + 1];
}

std::function<bool(const Turn&)> role_filter(Role role) {
  return [role](const Turn& turn) { return turn.role == role; };
}

namespace {

// Accumulates one conversation into `model`; returns the number of events
// that contributed weight.
std::int64_t accumulate_conversation(CodymModel& model, const Conversation& conversation,
                                     const PopulateOptions& options) {
  const auto labels = label_conversation(conversation, options.rule);
  const auto events = state_sequence(labels, options.order);
  std::int64_t contributed = 0;
  for (const auto& event : events) {
    const Turn& turn = conversation.turns[event.turn_index];
    if (options.event_filter && !options.event_filter(turn)) continue;
    const double weight = options.weight_fn ? options.weight_fn(turn) : 1.0;
    if (weight < 0.0) throw ValidationError("negative event weight");
    if (weight == 0.0) continue;
    const int slot = slot_of(event.state, event.label);
    model.transition_weight[std::size_t(slot)] += weight;
    model.transition_counts[std::size_t(slot)] += 1;
    ++contributed;
  }
  return contributed;
}

}  // namespace

CodymModel populate_pooled(const Corpus& corpus, const PopulateOptions& options) {
  check_order(options.order);
  check_rule(options.rule);
  if (corpus.conversations.empty()) throw ValidationError("populate: empty corpus");

  CodymModel model = make_empty_model(options.order);
  model.stratum = options.stratum;
  for (const auto& conversation : corpus.conversations)
    model.event_count += accumulate_conversation(model, conversation, options);
  finalize_model(model);
  if (model.total_weight <= 0.0)
    throw ValidationError("populate: no event carried weight (pooled model undefined)");
  return model;
}

PerConversationModels populate_per_conversation(const Corpus& corpus,
                                                const PopulateOptions& options) {
  check_order(options.order);
  check_rule(options.rule);
  if (corpus.conversations.empty()) throw ValidationError("populate: empty corpus");

  PerConversationModels result;
  for (const auto& conversation : corpus.conversations) {
    CodymModel model = make_empty_model(options.order);
    model.stratum = options.stratum;
    model.metadata = conversation.id;
    model.event_count = accumulate_conversation(model, conversation, options);
    finalize_model(model);
    if (model.total_weight > 0.0) {
      result.models.push_back(std::move(model));
    } else {
      result.excluded_ids.push_back(conversation.id);
    }
  }
  return result;
}

namespace {

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

MeanModelResult mean_model(std::span<const CodymModel> models) {
  if (models.empty()) throw ValidationError("mean_model: empty model list");
  const int order = models.front().order;
  for (const auto& m : models)
    if (m.order != order) throw ValidationError("mean_model: mixed model orders");

  MeanModelResult result;
  result.model = make_empty_model(order);
  result.model.stratum = models.front().stratum;
  const double inv = 1.0 / double(models.size());
  for (const auto& m : models) {
    result.model.event_count += m.event_count;
    for (std::size_t i = 0; i < m.transition_freq.size(); ++i) {
      result.model.transition_freq[i] += m.transition_freq[i] * inv;
      result.model.transition_counts[i] += m.transition_counts[i];
    }
  }
  for (std::size_t s = 0; s < result.model.state_freq.size(); ++s)
    result.model.state_freq[s] =
        result.model.transition_freq[2 * s] + result.model.transition_freq[2 * s + 1];
  // A mean model is already in percentage space.
  result.model.transition_weight = result.model.transition_freq;
  result.model.total_weight = 100.0;

  std::vector<double> column(models.size());
  for (std::size_t i = 0; i < result.model.transition_freq.size(); ++i) {
    for (std::size_t k = 0; k < models.size(); ++k) column[k] = models[k].transition_freq[i];
    result.transition_median.push_back(median_of(column));
  }
  for (std::size_t s = 0; s < result.model.state_freq.size(); ++s) {
    for (std::size_t k = 0; k < models.size(); ++k) column[k] = models[k].state_freq[s];
    result.state_median.push_back(median_of(column));
  }
  return result;
}

DeltaModel delta_model(const CodymModel& observed, const CodymModel& expected) {
  if (observed.order != expected.order)
    throw ValidationError("delta_model: mixed model orders");
  DeltaModel delta;
  delta.order = observed.order;
  delta.delta.resize(observed.transition_freq.size());
  for (std::size_t i = 0; i < delta.delta.size(); ++i)
    delta.delta[i] = observed.transition_freq[i] - expected.transition_freq[i];
  delta.state_obs = observed.state_freq;
  return delta;
}

ThresholdScan select_threshold(const Corpus& corpus, int order, int t_min, int t_max) {
  check_order(order);
  if (corpus.conversations.empty() || corpus.total_turns() == 0)
    throw ValidationError("select_threshold: empty corpus");
  if (t_min < 2 || t_max < t_min)
    throw ValidationError("select_threshold: bad candidate range");

  int max_wc = 0;
  for (const auto& conv : corpus.conversations)
    for (const auto& turn : conv.turns) max_wc = std::max(max_wc, turn.word_count);
  if (t_max > max_wc)
    throw ValidationError("select_threshold: candidates exceed observed word counts (max " +
                          std::to_string(max_wc) + ")");

  ThresholdScan scan;
  double best_entropy = -1.0;
  const double total_turns = double(corpus.total_turns());

  for (int t = t_min; t <= t_max; ++t) {
    PopulateOptions options;
    options.order = order;
    options.rule = BinarizationRule{t};
    CodymModel model = make_empty_model(order);
    std::int64_t long_turns = 0;
    for (const auto& conversation : corpus.conversations) {
      model.event_count += accumulate_conversation(model, conversation, options);
      for (const auto& turn : conversation.turns)
        if (turn.word_count >= t) ++long_turns;
    }
    finalize_model(model);

    double entropy = 0.0;
    if (model.total_weight > 0.0) {
      std::vector<double> dist(model.state_freq.size());
      for (std::size_t s = 0; s < dist.size(); ++s) dist[s] = model.state_freq[s] / 100.0;
      entropy = shannon_entropy_bits(dist);
    }
    scan.candidates.push_back(t);
    scan.entropy_bits.push_back(entropy);
    scan.long_rate.push_back(double(long_turns) / total_turns);
    if (entropy > best_entropy + 1e-12) {
      best_entropy = entropy;
      scan.threshold = t;
    }
  }
  return scan;
}

}  // namespace codym
