#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "dminer/features.hpp"
#include "dminer/mining.hpp"
#include "dminer/oracle.hpp"
#include "support.hpp"

using namespace dminer;

namespace {

BitCode bit(const char* name) { return *FeatureRegistry::get().find_bit(name); }

std::vector<FeaturizedDashboard> featurized(const std::vector<DashboardSpec>& corpus) {
  std::vector<FeaturizedDashboard> out;
  for (const auto& d : corpus) out.push_back(featurize(d));
  return out;
}

// Planted fixture with clean rules and 10% label noise.
struct NoisyFixture {
  std::vector<oracle::PlantedRule> planted;
  std::vector<FeaturizedDashboard> corpus;
  MineOptions options;
  RuleSet rules;
};

const NoisyFixture& noisy_fixture() {
  static const NoisyFixture fx = [] {
    NoisyFixture f;
    f.planted = testing::planted_fixture();
    for (auto& p : f.planted) p.p_obey = 1.0;
    oracle::GeneratorOptions go;
    go.count = 854;
    go.noise = 0.1;
    f.corpus = featurized(oracle::generate_corpus(f.planted, go).dashboards);
    f.rules = mine_all(f.corpus, mapping_registry(), f.options);
    return f;
  }();
  return fx;
}

std::pair<MiningData, MiningData> split_data(const NoisyFixture& f) {
  auto [train_idx, test_idx] = split_corpus(f.corpus.size(), f.options.train_frac, f.options.seed);
  std::vector<FeaturizedDashboard> train, test;
  for (auto i : train_idx) train.push_back(f.corpus[i]);
  for (auto i : test_idx) test.push_back(f.corpus[i]);
  return {build_mining_data(train, f.rules.thresholds), build_mining_data(test, f.rules.thresholds)};
}

// Random single-view rows over four condition bits, grouped three per
// dashboard. `target` decides the gh bit from the row.
template <typename F>
std::vector<SubjectRow> synthetic_rows(Rng& rng, std::size_t n, F target) {
  const BitCode cond[] = {bit("mark=text"), bit("uses_x"), bit("uses_y"), bit("uses_color")};
  std::vector<SubjectRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].dashboard = static_cast<std::uint32_t>(i / 3);
    for (BitCode c : cond) {
      if (rng.bernoulli(0.5)) rows[i].bits.single |= 1ull << c;
    }
    if (target(rows[i].bits, rng)) rows[i].bits.single |= 1ull << bit("gh");
  }
  return rows;
}

}  // namespace

TEST_CASE("mappings: ten, six black then four red, disjoint groups") {
  const auto& maps = mapping_registry();
  REQUIRE(maps.size() == 10);
  int red = 0;
  for (const auto& m : maps) {
    red += m.red;
    for (auto g : m.condition_groups) CHECK(g != m.target_group);
  }
  CHECK(red == 4);
  CHECK(find_mapping("SDE->SA").single_subject());
  CHECK_FALSE(find_mapping("PA->PC").single_subject());
}

TEST_CASE("split: sizes, determinism, bad fractions") {
  auto [tr, te] = split_corpus(854, 0.75, kDefaultSeed);
  CHECK(tr.size() == 640);
  CHECK(te.size() == 214);
  auto [tr2, te2] = split_corpus(854, 0.75, kDefaultSeed);
  CHECK(tr == tr2);
  CHECK(te == te2);
  std::set<std::size_t> all(tr.begin(), tr.end());
  all.insert(te.begin(), te.end());
  CHECK(all.size() == 854);

  auto [a, b] = split_corpus(4, 0.75, 1);
  CHECK(a.size() == 3);
  CHECK(b.size() == 1);
  CHECK_THROWS_AS(split_corpus(10, 0.0, 1), InputError);
  CHECK_THROWS_AS(split_corpus(10, 1.0, 1), InputError);
  CHECK_THROWS_AS(split_corpus(3, 0.75, 1), InputError);
}

TEST_CASE("candidates: 2m + 4 C(m,2), no tautologies, no duplicates") {
  const std::vector<std::string> names = {"uses_x", "uses_y", "uses_color", "uses_size"};
  const auto one = generate_candidate_rules(std::span(names).first(1));
  REQUIRE(one.size() == 2);
  CHECK(one[0] == Condition{{"uses_x", false}});
  CHECK(one[1] == Condition{{"uses_x", true}});
  for (std::size_t m = 1; m <= 4; ++m) {
    const auto c = generate_candidate_rules(std::span(names).first(m));
    CHECK(c.size() == 2 * m + 2 * m * (m - 1));
    std::set<std::set<Literal>> seen;
    for (const auto& cond : c) {
      CHECK(cond.size() <= 2);
      if (cond.size() == 2) CHECK(cond[0].feature != cond[1].feature);
      seen.insert(std::set<Literal>(cond.begin(), cond.end()));
    }
    CHECK(seen.size() == c.size());
  }
  CHECK(generate_candidate_rules(std::span(names).first(2)).size() == 8);
  const std::vector<BitCode> codes = {bit("uses_x"), bit("uses_y"), bit("uses_color")};
  CHECK(generate_candidates(codes).size() == 18);
  CHECK(generate_candidates(codes, 1).size() == 6);
}

TEST_CASE("fit: perfect predictor is selected with test accuracy 1") {
  const std::vector<BitCode> codes = {bit("mark=text"), bit("uses_x"), bit("uses_y"),
                                      bit("uses_color")};
  const auto cands = generate_candidates(codes);
  // Candidate: mark=text and not uses_y.
  std::size_t chosen = cands.size();
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const Condition c = to_condition(cands[k]);
    if (c == Condition{{"mark=text", false}, {"uses_y", true}}) chosen = k;
  }
  REQUIRE(chosen < cands.size());
  Rng rng(5);
  auto target = [&](const SubjectBits& b, Rng&) { return cands[chosen].fires(b); };
  const auto train = synthetic_rows(rng, 600, target);
  const auto test = synthetic_rows(rng, 300, target);
  const RuleModel m = fit_rule_model(train, cands, CompiledLiteral{bit("gh"), false}, {}, test);
  REQUIRE_FALSE(m.skipped);
  CHECK(m.test_acc == 1.0);
  const RuleTerm* best = nullptr;
  double best_imp = -1;
  for (const auto& t : m.terms) {
    const double imp = rule_importance(t.coefficient, t.support);
    if (t.coefficient > 0 && imp > best_imp) {
      best_imp = imp;
      best = &t;
    }
  }
  REQUIRE(best != nullptr);
  CHECK(best->candidate == chosen);
}

TEST_CASE("fit: constant target is skipped") {
  Rng rng(9);
  const auto rows = synthetic_rows(rng, 60, [](const SubjectBits&, Rng&) { return true; });
  const auto cands = generate_candidates(std::vector<BitCode>{bit("uses_x"), bit("uses_y")});
  const RuleModel m = fit_rule_model(rows, cands, CompiledLiteral{bit("gh"), false}, {});
  CHECK(m.skipped);
}

TEST_CASE("fit: pure-noise target stays near chance on held-out data") {
  const auto cands = generate_candidates(
      std::vector<BitCode>{bit("mark=text"), bit("uses_x"), bit("uses_y"), bit("uses_color")});
  double sum = 0;
  for (int s = 0; s < 50; ++s) {
    Rng rng(1000 + s);
    auto coin = [](const SubjectBits&, Rng& r) { return r.bernoulli(0.5); };
    const auto train = synthetic_rows(rng, 600, coin);
    const auto test = synthetic_rows(rng, 600, coin);
    FitOptions fo;
    fo.seed = 1000 + s;
    const RuleModel m = fit_rule_model(train, cands, CompiledLiteral{bit("gh"), false}, fo, test);
    CAPTURE(s);
    CHECK(m.test_acc >= 0.42);
    CHECK(m.test_acc <= 0.58);
    sum += m.test_acc;
  }
  CHECK(sum / 50 == doctest::Approx(0.5).epsilon(0.04 / 0.5));
}

TEST_CASE("mine: 10% noise planted corpus") {
  const NoisyFixture& f = noisy_fixture();
  const RuleSet& rs = f.rules;

  SUBCASE("at most three positive rules per model, importance formula") {
    std::map<std::pair<std::string, Literal>, int> per_model;
    for (const auto& r : rs.rules) {
      CHECK(r.coefficient > 0);
      CHECK(r.condition.size() <= 2);
      CHECK(r.importance == doctest::Approx(rule_importance(r.coefficient, r.support)));
      ++per_model[{r.mapping, r.target}];
    }
    for (const auto& [key, n] : per_model) CHECK(n <= 3);
    CHECK(rs.rules.size() <= 3 * rs.models.size());
  }

  SUBCASE("conditions and targets come from the mapping's groups") {
    const auto& reg = FeatureRegistry::get();
    for (const auto& r : rs.rules) {
      const Mapping& m = find_mapping(r.mapping);
      CHECK(reg.bit(*reg.find_bit(r.target.feature)).group == m.target_group);
      for (const auto& l : r.condition) {
        const auto g = reg.bit(*reg.find_bit(l.feature)).group;
        CHECK(std::find(m.condition_groups.begin(), m.condition_groups.end(), g) !=
              m.condition_groups.end());
      }
    }
  }

  SUBCASE("recovered planted rules hold on the test split") {
    const auto [train, test] = split_data(f);
    const EvalReport report = evaluate_rules(rs, test);
    int recovered = 0;
    double precision = 0;
    for (const auto& p : f.planted) {
      for (std::size_t k = 0; k < rs.rules.size(); ++k) {
        if (!rs.rules[k].same_rule(p.rule)) continue;
        REQUIRE(report.rules[k].precision.has_value());
        precision += *report.rules[k].precision;
        ++recovered;
        break;
      }
    }
    CHECK(recovered >= 8);
    REQUIRE(recovered > 0);
    CHECK(precision / recovered >= 0.85);
  }

  SUBCASE("evaluation on the training split reproduces training accuracy") {
    const auto [train, test] = split_data(f);
    const EvalReport on_train = evaluate_rules(rs, train);
    const EvalReport on_test = evaluate_rules(rs, test);
    REQUIRE(on_train.models.size() == rs.models.size());
    for (std::size_t k = 0; k < rs.models.size(); ++k) {
      CAPTURE(rs.models[k].mapping);
      CAPTURE(rs.models[k].target.feature);
      CHECK(on_train.models[k].accuracy == doctest::Approx(rs.models[k].train_acc).epsilon(1e-12));
      CHECK(on_test.models[k].accuracy == doctest::Approx(rs.models[k].test_acc).epsilon(1e-12));
    }
  }

  SUBCASE("serialization round-trips") {
    const std::string text = serialize_ruleset(rs);
    CHECK(text.back() == '\n');
    CHECK(serialize_ruleset(parse_ruleset(text)) == text);
  }
}

TEST_CASE("mine: a lone planted rule at 10% noise has top importance for its target") {
  auto planted = testing::planted_fixture();
  planted.resize(1);
  REQUIRE(planted[0].rule.target == Literal{"gy", true});
  planted[0].p_obey = 1.0;
  oracle::GeneratorOptions go;
  go.count = 854;
  go.noise = 0.1;
  const auto corpus = featurized(oracle::generate_corpus(planted, go).dashboards);
  const std::vector<Mapping> maps = {find_mapping("SDE->SA")};
  const RuleSet rs = mine_all(corpus, maps, MineOptions{});
  const DecisionRule* top = nullptr;
  for (const auto& r : rs.rules) {
    if (r.target == Literal{"gy", true} && (!top || r.importance > top->importance)) top = &r;
  }
  REQUIRE(top != nullptr);
  CHECK(top->coefficient > 0);
  const std::set<Literal> cond(top->condition.begin(), top->condition.end());
  CHECK(cond == std::set<Literal>{{"mark=text", false}, {"n_fields_y", true}});
}

TEST_CASE("evaluate: a model without terms predicts the majority class") {
  RuleSet rs;
  ModelSummary m;
  m.mapping = "SDE->SA";
  m.target = Literal{"gh", false};
  MiningData data;
  data.dashboard_ids = {"d"};
  for (int i = 0; i < 10; ++i) {
    SubjectRow r;
    if (i < 7) r.bits.single |= 1ull << bit("gh");
    data.views.push_back(r);
  }
  m.prior_logit = std::log(7.0 / 3.0);
  rs.models.push_back(m);
  CHECK(evaluate_rules(rs, data).macro_accuracy == doctest::Approx(0.7));
  RuleSet empty;
  CHECK(evaluate_rules(empty, data).models.empty());
}

TEST_CASE("mine: duplicating every dashboard leaves the rules unchanged") {
  oracle::GeneratorOptions go;
  go.count = 120;
  go.seed = 31;
  const auto corpus = featurized(oracle::generate_corpus(testing::planted_fixture(), go).dashboards);
  std::vector<RawFeatures> views, pairs;
  for (const auto& d : corpus) {
    views.insert(views.end(), d.views.begin(), d.views.end());
    pairs.insert(pairs.end(), d.pairs.begin(), d.pairs.end());
  }
  Thresholds th = binarize(views).thresholds;
  for (const auto& [k, v] : binarize(pairs).thresholds) th[k] = v;
  std::vector<FeaturizedDashboard> doubled = corpus;
  doubled.insert(doubled.end(), corpus.begin(), corpus.end());
  Thresholds th2 = th;
  {
    std::vector<RawFeatures> v2, p2;
    for (const auto& d : doubled) {
      v2.insert(v2.end(), d.views.begin(), d.views.end());
      p2.insert(p2.end(), d.pairs.begin(), d.pairs.end());
    }
    th2 = binarize(v2).thresholds;
    for (const auto& [k, v] : binarize(p2).thresholds) th2[k] = v;
  }
  for (const auto& [k, v] : th) CHECK(th2.at(k) == doctest::Approx(v));

  const std::vector<Mapping> maps = {find_mapping("SDE->SA"), find_mapping("PDE->PC")};
  const MiningData none;
  MineOptions mo;
  const RuleSet a = mine_split(build_mining_data(corpus, th), none, th, maps, mo);
  const RuleSet b = mine_split(build_mining_data(doubled, th), none, th, maps, mo);
  REQUIRE(a.rules.size() == b.rules.size());
  for (std::size_t k = 0; k < a.rules.size(); ++k) {
    CHECK(a.rules[k].same_rule(b.rules[k]));
    CHECK(a.rules[k].coefficient == doctest::Approx(b.rules[k].coefficient).epsilon(1e-3));
    CHECK(a.rules[k].support == doctest::Approx(b.rules[k].support));
  }
}

TEST_CASE("mine: identical layouts skip constant arrangement targets") {
  std::vector<FeaturizedDashboard> corpus;
  Rng rng(3);
  for (int d = 0; d < 12; ++d) {
    DashboardSpec spec;
    spec.id = "d" + std::to_string(d);
    spec.canvas = {400, 400};
    for (int v = 0; v < 2; ++v) {
      ViewSpec view;
      view.id = "v" + std::to_string(v);
      view.mark = static_cast<Mark>(rng.below(kNumMarks));
      view.fields.push_back(DataField{"f", DataType::kNumerical, DataOp::kSum});
      if (rng.bernoulli(0.5)) view.encodings[0].push_back("f");
      view.layout = PixelRect{200.0 * v, 0, 200, 400};
      spec.views.push_back(view);
    }
    corpus.push_back(featurize(spec));
  }
  MineOptions mo;
  const std::vector<Mapping> maps = {find_mapping("SDE->SA")};
  const RuleSet rs = mine_all(corpus, maps, mo);
  const std::set<std::string> skipped(rs.skipped.begin(), rs.skipped.end());
  for (const char* t : {"gw", "gh", "gy", "area"}) {
    CAPTURE(t);
    CHECK(skipped.count(std::string("SDE->SA:") + t) == 1);
  }
  for (const auto& r : rs.rules) {
    CHECK(skipped.count("SDE->SA:" + r.target.feature) == 0);
  }
}

TEST_CASE("mine: identical output for any thread count") {
  oracle::GeneratorOptions go;
  go.count = 60;
  go.seed = 12;
  const auto corpus = featurized(oracle::generate_corpus(testing::planted_fixture(), go).dashboards);
  const std::vector<Mapping> maps = {find_mapping("SDE->SA"), find_mapping("PA->PC")};
  MineOptions mo;
  const std::string one = serialize_ruleset(mine_all(corpus, maps, mo));
  mo.threads = 4;
  CHECK(serialize_ruleset(mine_all(corpus, maps, mo)) == one);
}
