#include <string>
#include <vector>

#include "doctest.h"
#include "dminer/mining.hpp"
#include "dminer/recommender.hpp"
#include "support.hpp"

using namespace dminer;

namespace {

DecisionRule make_rule(std::string mapping, Condition cond, Literal target, double importance = 1) {
  DecisionRule r;
  r.mapping = std::move(mapping);
  r.condition = std::move(cond);
  r.target = std::move(target);
  r.coefficient = importance;
  r.importance = importance;
  return r;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("render: text view without y fields has height 1") {
  Thresholds th = testing::reference_thresholds();
  th["gh"] = 1.5;
  th["n_fields_y"] = 0.7;
  const auto r = make_rule("SDE->SA", {{"mark=text", false}, {"n_fields_y", true}}, {"gh", true});
  CHECK(render_rule(r, th) ==
        "If View A is Text, and it does not have fields on Y-axis, then View A should be of the "
        "height of 1.");
}

TEST_CASE("render: single clause and pairwise phrasing") {
  const RuleSet t2 = testing::table2_rules();
  const auto one = make_rule("SDE->PA", {{"mark=text", false}}, {"a_below_b", true});
  CHECK(render_rule(one, t2.thresholds) ==
        "If View A is Text, then View A should not be on the bottom of View B.");

  // Same chart type and same Y fields: every non-horizontal octant is ruled out.
  const auto side = make_rule("PDE->PA", {{"same_mark", false}, {"is_overlapping_y", false}},
                              {"a_above_b", true});
  const std::string s = render_rule(side, t2.thresholds);
  CHECK(s.rfind("If View A and View B are of the same chart type, and they use the same fields "
                "on Y-axis, then ", 0) == 0);
  CHECK(s.find("should not be on the top of View B") != std::string::npos);
  const auto left = make_rule("PDE->PA", {{"same_mark", false}}, {"a_left_of_b", false});
  CHECK(render_rule(left, t2.thresholds).find("to the left of View B") != std::string::npos);

  const auto brush = make_rule("PDE->PC", {{"shared_fraction", false}, {"is_overlapping_color", false}},
                               {"a_brushes_b", false});
  CHECK(render_rule(brush, t2.thresholds) ==
        "If View A and View B share at least 50% of the same fields, and they use color for the "
        "same fields, then View A should brush View B.");
}

TEST_CASE("render: unknown feature falls back to its raw name") {
  const auto r = make_rule("SDE->SA", {{"sparkle_factor", false}}, {"gw", false});
  std::vector<std::string> warnings;
  const std::string s = render_rule(r, testing::reference_thresholds(), &warnings);
  CHECK(s.rfind("If sparkle_factor holds, then ", 0) == 0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("sparkle_factor") != std::string::npos);
  CHECK(render_rule(r, testing::reference_thresholds()) == s);
}

TEST_CASE("report: rules sorted by importance with warnings") {
  RuleSet rs;
  rs.thresholds = testing::reference_thresholds();
  rs.rules.push_back(make_rule("SDE->SA", {{"mark=text", false}}, {"gy", true}, 0.2));
  rs.rules.push_back(make_rule("PDE->PC", {{"same_mark", false}}, {"a_filters_b", false}, 0.9));
  rs.rules.push_back(make_rule("SDE->SA", {{"mystery", false}}, {"gw", false}, 0.5));
  rs.skipped.push_back("SDE->SA:px_x");
  const std::string md = render_report(rs, nullptr);
  const auto first = md.find("View A should filter View B");
  const auto second = md.find("mystery holds");
  const auto third = md.find("View A should be in grid row 0");
  REQUIRE(first != std::string::npos);
  REQUIRE(second != std::string::npos);
  REQUIRE(third != std::string::npos);
  CHECK(first < second);
  CHECK(second < third);
  CHECK(md.find("## Skipped targets") != std::string::npos);
  CHECK(md.find("## Warnings") != std::string::npos);
  CHECK(md.find("mystery") != std::string::npos);
}

TEST_CASE("svg: grid wireframe with labelled views and arrows") {
  const auto views = testing::case_study_views();
  Candidate c = make_candidate(0, std::vector<int>{0, 1, 2, 3});
  c.links.assign(16, LinkState::kNone);
  c.links[2 * 4 + 3] = LinkState::kBrush;
  c.links[3 * 4 + 2] = LinkState::kBrush;
  c.links[0 * 4 + 1] = LinkState::kFilter;
  const std::string svg = render_svg(c, views);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count(svg, "class=\"view\"") == 4);
  CHECK(count(svg, "class=\"brush\"") == 2);
  CHECK(count(svg, "class=\"filter\"") == 1);
  CHECK(count(svg, "stroke-dasharray") == 2);
  CHECK(svg.find("A (text)") != std::string::npos);
  CHECK(svg.find("D (circle)") != std::string::npos);
  CHECK(render_svg(c, views) == svg);

  const std::vector<ViewSpec> one(views.begin(), views.begin() + 1);
  Candidate full = make_candidate(0, std::vector<int>{0});
  full.links.assign(1, LinkState::kNone);
  REQUIRE(full.assignment.size() == 1);
  CHECK(full.assignment[0] == GridRect{0, 0, 4, 4});
  const std::string single = render_svg(full, one);
  CHECK(count(single, "class=\"view\"") == 1);
  CHECK(count(single, "<line class=\"brush\"") + count(single, "<line class=\"filter\"") == 0);
}
