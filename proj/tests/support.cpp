#include "support.hpp"

#include <fstream>
#include <sstream>

#include "dminer/features.hpp"

#ifndef DMINER_TEST_DATA
#define DMINER_TEST_DATA "tests/data"
#endif

namespace dminer::testing {

namespace {

ViewSpec make_view(std::string id, Mark mark,
                   std::vector<std::pair<DataField, int>> fields) {
  ViewSpec v;
  v.id = std::move(id);
  v.mark = mark;
  for (auto& [f, channel] : fields) {
    if (channel >= 0) v.encodings[channel].push_back(f.name);
    v.fields.push_back(std::move(f));
  }
  return v;
}

Literal lit(std::string feature, bool negated = false) {
  return Literal{std::move(feature), negated};
}

DecisionRule rule(std::string mapping, Condition condition, Literal target, double importance) {
  DecisionRule r;
  r.mapping = std::move(mapping);
  r.condition = std::move(condition);
  r.target = std::move(target);
  r.importance = importance;
  r.coefficient = 1.0;
  return r;
}

}  // namespace

std::vector<ViewSpec> random_views(Rng& rng, int n) {
  const int pool = 3 + static_cast<int>(rng.below(4));
  std::vector<DataType> types(pool);
  for (auto& t : types) t = static_cast<DataType>(rng.below(kNumDataTypes));
  std::vector<ViewSpec> views;
  for (int v = 0; v < n; ++v) {
    ViewSpec view;
    view.id = "v" + std::to_string(v + 1);
    view.mark = static_cast<Mark>(rng.below(kNumMarks));
    const int k = 1 + static_cast<int>(rng.below(3));
    for (int f = 0; f < k; ++f) {
      const int idx = static_cast<int>(rng.below(pool));
      const std::string name = "f" + std::to_string(idx + 1);
      bool dup = false;
      for (const auto& existing : view.fields) dup |= existing.name == name;
      if (dup) continue;
      view.fields.push_back(
          DataField{name, types[idx], static_cast<DataOp>(rng.below(kNumDataOps))});
      const auto channel = rng.below(kNumChannels + 1);
      if (channel < static_cast<std::uint64_t>(kNumChannels)) view.encodings[channel].push_back(name);
    }
    views.push_back(std::move(view));
  }
  return views;
}

RuleSet random_rules(Rng& rng, int count, const Thresholds& thresholds) {
  const auto& reg = FeatureRegistry::get();
  const auto& mappings = mapping_registry();
  RuleSet rs;
  rs.thresholds = thresholds;
  for (int r = 0; r < count; ++r) {
    const Mapping& m = mappings[rng.below(mappings.size())];
    const auto cond_bits = bits_in_groups(m.condition_groups);
    const FeatureGroup tg[] = {m.target_group};
    const auto target_bits = bits_in_groups(tg);
    Condition cond;
    const int size = 1 + static_cast<int>(rng.below(2));
    while (static_cast<int>(cond.size()) < size) {
      const std::string name = reg.bit(cond_bits[rng.below(cond_bits.size())]).name;
      bool dup = false;
      for (const auto& l : cond) dup |= l.feature == name;
      if (!dup) cond.push_back(lit(name, rng.bernoulli(0.3)));
    }
    const std::string target = reg.bit(target_bits[rng.below(target_bits.size())]).name;
    rs.rules.push_back(rule(m.id, std::move(cond), lit(target, rng.bernoulli(0.5)),
                            0.05 + 0.95 * rng.uniform()));
  }
  return rs;
}

const Thresholds& reference_thresholds() {
  static const Thresholds table = [] {
    oracle::GeneratorOptions opts;
    opts.count = 200;
    opts.pilot_count = 200;
    return oracle::generate_corpus(oracle::default_planted_rules(), opts).thresholds;
  }();
  return table;
}

RuleSet table2_rules() {
  RuleSet rs;
  rs.thresholds = reference_thresholds();
  rs.thresholds["gh"] = 1.5;
  rs.thresholds["shared_fraction"] = 0.5;
  // 1: a Text view takes the smallest height.
  rs.rules.push_back(rule("SDE->SA", {lit("mark=text")}, lit("gh", true), 6.5));
  // 2: same chart type and same Y fields sit side by side.
  for (const char* octant : {"a_below_left_of_b", "a_below_b", "a_below_right_of_b",
                             "a_above_right_of_b", "a_above_b", "a_above_left_of_b"}) {
    rs.rules.push_back(rule("PDE->PA", {lit("same_mark"), lit("is_overlapping_y")},
                            lit(octant, true), 6.5));
  }
  // 3: mostly shared fields with a shared colour encoding brush.
  rs.rules.push_back(rule("PDE->PC", {lit("shared_fraction"), lit("is_overlapping_color")},
                          lit("a_brushes_b"), 6.25));
  // 4: a Text view sits above, above-left or above-right of the others.
  for (const char* octant : {"a_left_of_b", "a_below_left_of_b", "a_below_b",
                             "a_below_right_of_b", "a_right_of_b"}) {
    rs.rules.push_back(rule("SDE->PA", {lit("mark=text")}, lit(octant, true), 6.0));
  }
  return rs;
}

std::vector<ViewSpec> case_study_views() {
  constexpr int kX = 0, kY = 1, kColor = 2, kShape = 4, kNone = -1;
  const DataField category{"Category", DataType::kNominal, DataOp::kNone};
  const DataField sales{"Sales", DataType::kNumerical, DataOp::kSum};
  const DataField profit{"Profit", DataType::kNumerical, DataOp::kSum};
  const DataField profitable{"Profitable?", DataType::kNominal, DataOp::kNone};
  const DataField region{"Region", DataType::kNominal, DataOp::kNone};
  return {
      make_view("A", Mark::kText, {{sales, kNone}}),
      make_view("B", Mark::kBar, {{region, kX}, {sales, kY}}),
      make_view("C", Mark::kCircle,
                {{category, kNone}, {sales, kX}, {profit, kY}, {profitable, kColor}}),
      make_view("D", Mark::kCircle,
                {{category, kNone}, {sales, kX}, {profit, kY}, {profitable, kColor},
                 {region, kShape}}),
  };
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<oracle::PlantedRule> planted_fixture() {
  return oracle::parse_planted(read_text(std::string(DMINER_TEST_DATA) + "/planted10.json"));
}

}  // namespace dminer::testing
