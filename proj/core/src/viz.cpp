#include "codym/viz.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace codym {

std::string format_fixed(double value, int decimals) {
  if (value == 0.0) value = 0.0;  // normalize -0
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::fixed, decimals);
  if (ec != std::errc()) return "0";
  std::string out(buf.data(), ptr);
  if (out == "-0" || out.rfind("-0.", 0) == 0) {
    bool all_zero = true;
    for (char c : out)
      if (c >= '1' && c <= '9') all_zero = false;
    if (all_zero) out.erase(0, 1);  // "-0.0" -> "0.0"
  }
  return out;
}

namespace {

struct Rgb {
  double r, g, b;
};

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
  return Rgb{a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

std::string hex_color(const Rgb& c) {
  char buf[8];
  auto clamp255 = [](double v) { return int(std::lround(std::clamp(v, 0.0, 255.0))); };
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", clamp255(c.r), clamp255(c.g), clamp255(c.b));
  return buf;
}

// Sequential ramp for raw frequencies (light yellow -> deep red).
const Rgb kSeqLow{255, 237, 160};
const Rgb kSeqMid{254, 178, 76};
const Rgb kSeqHigh{189, 0, 38};

// Diverging ramp for signed differences (blue -> near-white -> red).
const Rgb kDivLow{33, 102, 172};
const Rgb kDivMid{247, 247, 247};
const Rgb kDivHigh{178, 24, 43};

std::string sequential_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t < 0.5 ? hex_color(lerp(kSeqLow, kSeqMid, t * 2.0))
                 : hex_color(lerp(kSeqMid, kSeqHigh, (t - 0.5) * 2.0));
}

// t in [-1, 1]; reflections about 0 mirror the ramp.
std::string diverging_color(double t) {
  t = std::clamp(t, -1.0, 1.0);
  return t < 0.0 ? hex_color(lerp(kDivMid, kDivLow, -t)) : hex_color(lerp(kDivMid, kDivHigh, t));
}

// Everything both renderers need, normalized across model kinds.
struct RenderData {
  int order = 0;
  VizMode mode = VizMode::Frequency;
  std::vector<double> edge_weight;  // signed in Delta mode
  std::vector<double> state_pct;
  double max_abs = 0.0;  // colormap/width anchor
};

RenderData prepare(const CodymModel& model, const VizSpec& spec) {
  if (spec.mode != VizMode::Frequency)
    throw ValidationError("render: frequency model requires Frequency mode");
  for (double w : model.transition_freq)
    if (w < 0.0) throw ValidationError("render: negative weight in Frequency mode");
  RenderData data;
  data.order = model.order;
  data.mode = VizMode::Frequency;
  data.edge_weight = model.transition_freq;
  data.state_pct = model.state_freq;
  for (double w : data.edge_weight) data.max_abs = std::max(data.max_abs, std::abs(w));
  return data;
}

RenderData prepare(const DeltaModel& model, const VizSpec& spec) {
  if (spec.mode != VizMode::Delta)
    throw ValidationError("render: delta model requires Delta mode");
  RenderData data;
  data.order = model.order;
  data.mode = VizMode::Delta;
  data.edge_weight = model.delta;
  data.state_pct = model.state_obs;
  for (double w : data.edge_weight) data.max_abs = std::max(data.max_abs, std::abs(w));
  return data;
}

double edge_width(double weight, double max_abs, const VizSpec& spec) {
  if (max_abs <= 0.0) return spec.edge_width_min;
  return spec.edge_width_min +
         (spec.edge_width_max - spec.edge_width_min) * std::abs(weight) / max_abs;
}

std::string edge_color(const RenderData& data, double weight) {
  if (data.max_abs <= 0.0)
    return data.mode == VizMode::Frequency ? sequential_color(0.0) : diverging_color(0.0);
  return data.mode == VizMode::Frequency ? sequential_color(weight / data.max_abs)
                                         : diverging_color(weight / data.max_abs);
}

std::string edge_label(const RenderData& data, int slot) {
  const double w = data.edge_weight[std::size_t(slot)];
  std::string label(1, label_char(slot_label(slot)));
  if (data.mode == VizMode::Delta && w > 0.0)
    return label + " (+" + format_fixed(w, 1) + "%)";
  return label + " (" + format_fixed(w, 1) + "%)";
}

void check_report(const RenderData& data, const SignificanceReport* report) {
  if (!report) return;
  if (report->order != data.order)
    throw ValidationError("render: report order does not match model order");
}

}  // namespace

std::vector<Point> layout_positions(int order) {
  check_order(order);
  if (order == 2) {
    // SS=0, SL=1, LS=2, LL=3
    return {{0.0, 0.0}, {1.5, -0.9}, {1.5, 0.9}, {3.0, 0.0}};
  }
  if (order == 3) {
    // SSS, SSL, SLS, SLL, LSS, LSL, LLS, LLL
    return {{0.0, 0.0},  {1.2, -1.1}, {2.4, 0.75}, {3.6, -1.1},
            {1.2, 1.1},  {2.4, -0.75}, {3.6, 1.1},  {4.8, 0.0}};
  }
  // Layers by number of long labels, lexicographic within a layer.
  const int n = state_count(order);
  std::map<std::pair<int, std::string>, StateIndex> ordering;
  for (StateIndex s = 0; s < StateIndex(n); ++s) {
    const std::string name = state_name(s, order);
    ordering[{int(std::count(name.begin(), name.end(), 'L')), name}] = s;
  }
  std::vector<int> layer_size(std::size_t(order) + 1, 0);
  for (const auto& [key, s] : ordering) layer_size[std::size_t(key.first)] += 1;

  std::vector<Point> points(static_cast<std::size_t>(n));
  std::vector<int> placed(std::size_t(order) + 1, 0);
  for (const auto& [key, s] : ordering) {
    const int layer = key.first;
    const int idx = placed[std::size_t(layer)]++;
    points[std::size_t(s)] = Point{1.5 * double(layer),
                                   double(idx) - 0.5 * double(layer_size[std::size_t(layer)] - 1)};
  }
  return points;
}

// ---- DOT --------------------------------------------------------------

namespace {

std::string render_dot_impl(const RenderData& data, const SignificanceReport* report,
                            const VizSpec& spec) {
  check_report(data, report);
  const auto positions = layout_positions(data.order);
  std::ostringstream out;
  out << "digraph codym {\n";
  out << "  graph [rankdir=LR, splines=true];\n";
  out << "  node [shape=circle, style=filled, fontname=\"Helvetica\"];\n";
  out << "  edge [fontname=\"Helvetica\"];\n";

  double max_state = 0.0;
  for (double p : data.state_pct) max_state = std::max(max_state, p);

  for (int s = 0; s < state_count(data.order); ++s) {
    const std::string name = state_name(StateIndex(s), data.order);
    const double pct = data.state_pct[std::size_t(s)];
    // Node area tracks the state share: diameter ~ sqrt(share).
    const double diameter =
        max_state > 0.0 ? 0.45 + 1.0 * std::sqrt(pct / max_state) : 0.45;
    const bool significant =
        !report || report->states[std::size_t(s)].significant;
    out << "  " << name << " [label=\"" << name << "\\n(" << format_fixed(pct, 1)
        << "%)\", width=" << format_fixed(diameter, 2)
        << ", fixedsize=true, fillcolor=\"" << (significant ? "#000000" : "#bbbbbb")
        << "\", fontcolor=\"#ffffff\", pos=\""
        << format_fixed(positions[std::size_t(s)].x * 120.0, 1) << ","
        << format_fixed(positions[std::size_t(s)].y * 120.0, 1) << "!\"];\n";
  }

  for (int slot = 0; slot < transition_count_for(data.order); ++slot) {
    const StateIndex src = slot_state(slot);
    const TurnLabel label = slot_label(slot);
    const StateIndex dst = shift_state(src, label, data.order);
    const double w = data.edge_weight[std::size_t(slot)];
    const bool significant = !report || report->transitions[std::size_t(slot)].significant;
    out << "  " << state_name(src, data.order) << " -> " << state_name(dst, data.order)
        << " [label=\"" << edge_label(data, slot) << "\", penwidth="
        << format_fixed(edge_width(w, data.max_abs, spec), 2) << ", color=\""
        << edge_color(data, w) << "\""
        << (significant ? "" : ", style=dashed") << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace

std::string render_dot(const CodymModel& model, const SignificanceReport* report,
                       const VizSpec& spec) {
  return render_dot_impl(prepare(model, spec), report, spec);
}

std::string render_dot(const DeltaModel& model, const SignificanceReport* report,
                       const VizSpec& spec) {
  return render_dot_impl(prepare(model, spec), report, spec);
}

// ---- SVG --------------------------------------------------------------

namespace {

struct Canvas {
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  double scale = 130.0, margin = 90.0;

  double x(double lx) const { return margin + (lx - min_x) * scale; }
  double y(double ly) const { return margin + (max_y - ly) * scale; }
  double width() const { return 2 * margin + (max_x - min_x) * scale; }
  double height() const { return 2 * margin + (max_y - min_y) * scale + 60.0; }
};

std::string fmt2(double v) { return format_fixed(v, 2); }

std::string render_svg_impl(const RenderData& data, const SignificanceReport* report,
                            const VizSpec& spec) {
  check_report(data, report);
  const auto positions = layout_positions(data.order);

  Canvas canvas;
  for (const auto& p : positions) {
    canvas.min_x = std::min(canvas.min_x, p.x);
    canvas.max_x = std::max(canvas.max_x, p.x);
    canvas.min_y = std::min(canvas.min_y, p.y);
    canvas.max_y = std::max(canvas.max_y, p.y);
  }

  double max_state = 0.0;
  for (double p : data.state_pct) max_state = std::max(max_state, p);

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
      << fmt2(canvas.width()) << "\" height=\"" << fmt2(canvas.height())
      << "\" viewBox=\"0 0 " << fmt2(canvas.width()) << " " << fmt2(canvas.height())
      << "\">\n";
  out << "  <defs>\n";
  out << "    <marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" "
         "markerWidth=\"7\" markerHeight=\"7\" orient=\"auto-start-reverse\">\n";
  out << "      <path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"context-stroke\"/>\n";
  out << "    </marker>\n";
  if (spec.legend) {
    out << "    <linearGradient id=\"ramp\" x1=\"0\" y1=\"0\" x2=\"1\" y2=\"0\">\n";
    if (data.mode == VizMode::Frequency) {
      out << "      <stop offset=\"0\" stop-color=\"" << sequential_color(0.0) << "\"/>\n";
      out << "      <stop offset=\"0.5\" stop-color=\"" << sequential_color(0.5) << "\"/>\n";
      out << "      <stop offset=\"1\" stop-color=\"" << sequential_color(1.0) << "\"/>\n";
    } else {
      out << "      <stop offset=\"0\" stop-color=\"" << diverging_color(-1.0) << "\"/>\n";
      out << "      <stop offset=\"0.5\" stop-color=\"" << diverging_color(0.0) << "\"/>\n";
      out << "      <stop offset=\"1\" stop-color=\"" << diverging_color(1.0) << "\"/>\n";
    }
    out << "    </linearGradient>\n";
  }
  out << "  </defs>\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  // Edges first so nodes sit on top. Self-loops arc above the node; the
  // paired transitions between two nodes bow to opposite sides.
  out << "  <g fill=\"none\">\n";
  for (int slot = 0; slot < transition_count_for(data.order); ++slot) {
    const StateIndex src = slot_state(slot);
    const TurnLabel label = slot_label(slot);
    const StateIndex dst = shift_state(src, label, data.order);
    const double w = data.edge_weight[std::size_t(slot)];
    const bool significant = !report || report->transitions[std::size_t(slot)].significant;

    const double x1 = canvas.x(positions[std::size_t(src)].x);
    const double y1 = canvas.y(positions[std::size_t(src)].y);
    const double x2 = canvas.x(positions[std::size_t(dst)].x);
    const double y2 = canvas.y(positions[std::size_t(dst)].y);

    std::string path;
    double label_x, label_y;
    if (src == dst) {
      const double r = 42.0;
      path = "M " + fmt2(x1 - 14.0) + " " + fmt2(y1 - 14.0) + " C " + fmt2(x1 - r) + " " +
             fmt2(y1 - r * 1.6) + ", " + fmt2(x1 + r) + " " + fmt2(y1 - r * 1.6) + ", " +
             fmt2(x1 + 14.0) + " " + fmt2(y1 - 14.0);
      label_x = x1;
      label_y = y1 - r * 1.45;
    } else {
      // Perpendicular bow, flipped by transition label to separate pairs.
      const double mx = 0.5 * (x1 + x2), my = 0.5 * (y1 + y2);
      const double dx = x2 - x1, dy = y2 - y1;
      const double len = std::sqrt(dx * dx + dy * dy);
      const double side = label == TurnLabel::S ? 1.0 : -1.0;
      const double px = -dy / len * 28.0 * side, py = dx / len * 28.0 * side;
      path = "M " + fmt2(x1) + " " + fmt2(y1) + " Q " + fmt2(mx + px) + " " + fmt2(my + py) +
             ", " + fmt2(x2) + " " + fmt2(y2);
      label_x = mx + 1.6 * px;
      label_y = my + 1.6 * py;
    }

    out << "    <path d=\"" << path << "\" stroke=\"" << edge_color(data, w)
        << "\" stroke-width=\"" << fmt2(edge_width(w, data.max_abs, spec)) << "\""
        << (significant ? "" : " stroke-dasharray=\"6,4\"")
        << " marker-end=\"url(#arrow)\"/>\n";
    out << "    <text x=\"" << fmt2(label_x) << "\" y=\"" << fmt2(label_y)
        << "\" font-family=\"Helvetica\" font-size=\"11\" fill=\"#333333\" "
           "text-anchor=\"middle\">"
        << edge_label(data, slot) << "</text>\n";
  }
  out << "  </g>\n";

  // Nodes: circle area proportional to the state share.
  out << "  <g font-family=\"Helvetica\" text-anchor=\"middle\">\n";
  for (int s = 0; s < state_count(data.order); ++s) {
    const double pct = data.state_pct[std::size_t(s)];
    const double radius = max_state > 0.0 ? 10.0 + 22.0 * std::sqrt(pct / max_state) : 10.0;
    const bool significant = !report || report->states[std::size_t(s)].significant;
    const double cx = canvas.x(positions[std::size_t(s)].x);
    const double cy = canvas.y(positions[std::size_t(s)].y);
    out << "    <circle cx=\"" << fmt2(cx) << "\" cy=\"" << fmt2(cy) << "\" r=\""
        << fmt2(radius) << "\" fill=\"" << (significant ? "#000000" : "#bbbbbb")
        << "\"/>\n";
    out << "    <text x=\"" << fmt2(cx) << "\" y=\"" << fmt2(cy - 2.0)
        << "\" font-size=\"12\" fill=\"#ffffff\">" << state_name(StateIndex(s), data.order)
        << "</text>\n";
    out << "    <text x=\"" << fmt2(cx) << "\" y=\"" << fmt2(cy + 11.0)
        << "\" font-size=\"10\" fill=\"#ffffff\">" << format_fixed(pct, 1) << "%</text>\n";
  }
  out << "  </g>\n";

  if (spec.legend) {
    const double bar_y = canvas.height() - 42.0;
    const double bar_w = 180.0;
    const double bar_x = canvas.margin;
    out << "  <g font-family=\"Helvetica\" font-size=\"10\" fill=\"#333333\">\n";
    out << "    <rect x=\"" << fmt2(bar_x) << "\" y=\"" << fmt2(bar_y)
        << "\" width=\"" << fmt2(bar_w)
        << "\" height=\"12\" fill=\"url(#ramp)\" stroke=\"#333333\" stroke-width=\"0.5\"/>\n";
    const std::string low = data.mode == VizMode::Frequency
                                ? "0.0"
                                : "-" + format_fixed(data.max_abs, 1);
    const std::string high = format_fixed(data.max_abs, 1);
    out << "    <text x=\"" << fmt2(bar_x) << "\" y=\"" << fmt2(bar_y + 24.0)
        << "\" text-anchor=\"start\">" << low << "</text>\n";
    out << "    <text x=\"" << fmt2(bar_x + bar_w) << "\" y=\"" << fmt2(bar_y + 24.0)
        << "\" text-anchor=\"end\">" << high << "</text>\n";
    out << "    <text x=\"" << fmt2(bar_x + bar_w / 2.0) << "\" y=\"" << fmt2(bar_y + 24.0)
        << "\" text-anchor=\"middle\">"
        << (data.mode == VizMode::Frequency ? "% observed" : "&#916;frequency (points)")
        << "</text>\n";
    out << "  </g>\n";
  }

  out << "</svg>\n";
  return out.str();
}

}  // namespace

std::string render_svg(const CodymModel& model, const SignificanceReport* report,
                       const VizSpec& spec) {
  return render_svg_impl(prepare(model, spec), report, spec);
}

std::string render_svg(const DeltaModel& model, const SignificanceReport* report,
                       const VizSpec& spec) {
  return render_svg_impl(prepare(model, spec), report, spec);
}

}  // namespace codym
