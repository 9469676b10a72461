#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "codym/model.hpp"

namespace codym {

// Decile boundaries come from the whole conversation's word stream, or from
// each role's own word substream.
enum class DecileBasis { WholeConversation, PerRole };

// Decile (0..9) of each turn: the decile containing the turn's first word.
std::vector<int> assign_deciles(const Conversation& conversation,
                                DecileBasis basis = DecileBasis::WholeConversation);

struct DecileSeries {
  int order = 0;
  std::optional<Role> role;
  DecileBasis basis = DecileBasis::WholeConversation;

  // [slot][decile]; histogram rows of populated slots sum to 1, rows of
  // never-observed slots stay all-zero and are flagged unpopulated.
  std::vector<std::array<std::int64_t, 10>> raw_counts;
  std::vector<std::array<double, 10>> histogram;
  std::vector<bool> populated;
};

// Pools event counts per (transition slot, decile of the event turn) over
// the whole corpus, then normalizes each slot's ten bins.
DecileSeries decile_transition_histograms(const Corpus& corpus, int order,
                                          const BinarizationRule& rule,
                                          std::optional<Role> role = {},
                                          DecileBasis basis = DecileBasis::WholeConversation);

// Rows "SLS-L->LSL", columns decile_1..decile_10.
void write_decile_csv(const DecileSeries& series, std::ostream& out, bool raw);

}  // namespace codym
