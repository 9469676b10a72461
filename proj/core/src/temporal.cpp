#include "codym/temporal.hpp"

#include <ostream>

#include "codym/error.hpp"

namespace codym {

namespace {

// Decile of a turn = min(9, floor(10 * words_before / total_words)): the
// decile containing the turn's first word.
int decile_of(std::int64_t words_before, std::int64_t total_words) {
  const std::int64_t d = (10 * words_before) / total_words;
  return int(d > 9 ? 9 : d);
}

}  // namespace

std::vector<int> assign_deciles(const Conversation& conversation, DecileBasis basis) {
  std::vector<int> deciles(conversation.turns.size(), 0);
  if (conversation.turns.empty()) return deciles;

  if (basis == DecileBasis::WholeConversation) {
    std::int64_t total = 0;
    for (const auto& turn : conversation.turns) total += turn.word_count;
    if (total < 1) throw ValidationError("assign_deciles: conversation has no words");
    std::int64_t before = 0;
    for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
      deciles[i] = decile_of(before, total);
      before += conversation.turns[i].word_count;
    }
    return deciles;
  }

  // Per-role basis: boundaries from each role's own word substream.
  for (Role role : {Role::Patient, Role::Clinician, Role::Unknown}) {
    std::int64_t total = 0;
    for (const auto& turn : conversation.turns)
      if (turn.role == role) total += turn.word_count;
    if (total < 1) continue;
    std::int64_t before = 0;
    for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
      if (conversation.turns[i].role != role) continue;
      deciles[i] = decile_of(before, total);
      before += conversation.turns[i].word_count;
    }
  }
  return deciles;
}

DecileSeries decile_transition_histograms(const Corpus& corpus, int order,
                                          const BinarizationRule& rule,
                                          std::optional<Role> role, DecileBasis basis) {
  check_order(order);
  check_rule(rule);
  if (corpus.conversations.empty())
    throw ValidationError("decile_transition_histograms: empty corpus");

  DecileSeries series;
  series.order = order;
  series.role = role;
  series.basis = basis;
  const std::size_t slots = std::size_t(transition_count_for(order));
  series.raw_counts.assign(slots, {});
  series.histogram.assign(slots, {});
  series.populated.assign(slots, false);

  for (const auto& conversation : corpus.conversations) {
    const auto deciles = assign_deciles(conversation, basis);
    const auto labels = label_conversation(conversation, rule);
    for (const auto& event : state_sequence(labels, order)) {
      const Turn& turn = conversation.turns[event.turn_index];
      if (role && turn.role != *role) continue;
      const int slot = slot_of(event.state, event.label);
      series.raw_counts[std::size_t(slot)][std::size_t(deciles[event.turn_index])] += 1;
    }
  }

  for (std::size_t slot = 0; slot < slots; ++slot) {
    std::int64_t total = 0;
    for (auto c : series.raw_counts[slot]) total += c;
    if (total == 0) continue;
    series.populated[slot] = true;
    for (int d = 0; d < 10; ++d)
      series.histogram[slot][std::size_t(d)] =
          double(series.raw_counts[slot][std::size_t(d)]) / double(total);
  }
  return series;
}

void write_decile_csv(const DecileSeries& series, std::ostream& out, bool raw) {
  out << "transition";
  for (int d = 1; d <= 10; ++d) out << ",decile_" << d;
  out << "\n";
  for (std::size_t slot = 0; slot < series.raw_counts.size(); ++slot) {
    out << transition_name(int(slot), series.order);
    for (int d = 0; d < 10; ++d) {
      out << ',';
      if (raw)
        out << series.raw_counts[slot][std::size_t(d)];
      else
        out << series.histogram[slot][std::size_t(d)];
    }
    out << "\n";
  }
}

}  // namespace codym
