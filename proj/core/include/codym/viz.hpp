#pragma once

#include <string>
#include <vector>

#include "codym/model.hpp"
#include "codym/null_models.hpp"

namespace codym {

enum class VizMode { Frequency, Delta };

// Frequency mode draws raw percentages on a sequential yellow-to-red ramp;
// Delta mode draws signed differences on a diverging blue-white-red ramp
// anchored symmetrically about zero.
struct VizSpec {
  VizMode mode = VizMode::Frequency;
  double edge_width_min = 0.5;
  double edge_width_max = 8.0;
  bool legend = true;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Per-state canvas coordinates, indexed by state. Orders 2 and 3 use fixed
// arrangements (all-short state leftmost, all-long rightmost, the one-way
// exchange loop in the middle); other orders fall back to layers ordered by
// the number of long labels, ties lexicographic.
std::vector<Point> layout_positions(int order);

// Deterministic Graphviz output; byte-identical for identical inputs. When
// a report is given, non-significant transitions are dashed and
// non-significant states gray.
std::string render_dot(const CodymModel& model, const SignificanceReport* report,
                       const VizSpec& spec);
std::string render_dot(const DeltaModel& model, const SignificanceReport* report,
                       const VizSpec& spec);

// Standalone SVG with explicit layout coordinates, circle area proportional
// to state frequency, cubic-curve edges, and an embedded color legend.
std::string render_svg(const CodymModel& model, const SignificanceReport* report,
                       const VizSpec& spec);
std::string render_svg(const DeltaModel& model, const SignificanceReport* report,
                       const VizSpec& spec);

// Fixed-decimal formatting helpers shared by the renderers (locale-free).
std::string format_fixed(double value, int decimals);

}  // namespace codym
