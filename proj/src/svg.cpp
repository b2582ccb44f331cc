#include <cmath>
#include <cstdio>
#include <string>

#include "dminer/recommender.hpp"

namespace dminer {

namespace {

constexpr double kCellW = 200.0;
constexpr double kCellH = 150.0;
constexpr double kMargin = 20.0;
constexpr double kInset = 6.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const Candidate& candidate, std::span<const ViewSpec> views) {
  const double width = kGridSize * kCellW + 2 * kMargin;
  const double height = kGridSize * kCellH + 2 * kMargin;
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
       "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
       num(height) + "\">\n";
  s += "  <defs>\n"
       "    <marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" "
       "markerWidth=\"8\" markerHeight=\"8\" orient=\"auto-start-reverse\">\n"
       "      <path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"#333\"/>\n"
       "    </marker>\n"
       "  </defs>\n";
  s += "  <rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
       "\" fill=\"white\"/>\n";
  for (int k = 0; k <= kGridSize; ++k) {
    const double x = kMargin + k * kCellW;
    const double y = kMargin + k * kCellH;
    s += "  <line class=\"grid\" x1=\"" + num(x) + "\" y1=\"" + num(kMargin) +
         "\" x2=\"" + num(x) + "\" y2=\"" + num(height - kMargin) +
         "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    s += "  <line class=\"grid\" x1=\"" + num(kMargin) + "\" y1=\"" + num(y) +
         "\" x2=\"" + num(width - kMargin) + "\" y2=\"" + num(y) +
         "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
  }

  const std::size_t n = candidate.assignment.size();
  for (std::size_t v = 0; v < n; ++v) {
    const auto& r = candidate.assignment[v];
    const double x = kMargin + r.x * kCellW + kInset;
    const double y = kMargin + r.y * kCellH + kInset;
    const double w = r.w * kCellW - 2 * kInset;
    const double h = r.h * kCellH - 2 * kInset;
    s += "  <rect class=\"view\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" +
         num(w) + "\" height=\"" + num(h) +
         "\" fill=\"#eef3fb\" stroke=\"#4a6fa5\" stroke-width=\"2\"/>\n";
    const std::string label = escape(views[v].id) + " (" +
                              escape(std::string(to_string(views[v].mark))) + ")";
    s += "  <text x=\"" + num(x + w / 2) + "\" y=\"" + num(y + h / 2) +
         "\" text-anchor=\"middle\" dominant-baseline=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">" +
         label + "</text>\n";
  }

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b || candidate.links.empty()) continue;
      const LinkState state = candidate.link(a, b);
      if (state == LinkState::kNone) continue;
      const auto& ra = candidate.assignment[a];
      const auto& rb = candidate.assignment[b];
      double x1 = kMargin + (ra.x + ra.w / 2.0) * kCellW;
      double y1 = kMargin + (ra.y + ra.h / 2.0) * kCellH;
      double x2 = kMargin + (rb.x + rb.w / 2.0) * kCellW;
      double y2 = kMargin + (rb.y + rb.h / 2.0) * kCellH;
      // Offset sideways so the two directions of a pair stay apart.
      const double dx = x2 - x1, dy = y2 - y1;
      const double len = std::hypot(dx, dy);
      if (len > 0) {
        const double ox = -dy / len * 8.0, oy = dx / len * 8.0;
        x1 += ox;
        y1 += oy + 18.0;
        x2 += ox;
        y2 += oy + 18.0;
      }
      s += "  <line class=\"" + std::string(state == LinkState::kFilter ? "filter" : "brush") +
           "\" x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
           "\" y2=\"" + num(y2) + "\" stroke=\"#333\" stroke-width=\"2\"" +
           (state == LinkState::kBrush ? " stroke-dasharray=\"6 4\"" : "") +
           " marker-end=\"url(#arrow)\"/>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace dminer
