#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>
#include <set>

#include "dminer/oracle.hpp"

namespace dminer::oracle {

using nlohmann::json;

namespace {

constexpr double kViewCountWeights[] = {0.30, 0.28, 0.18, 0.11, 0.07, 0.04, 0.02};
constexpr int kMinViews = 2;
// bar line area circle square shape text text_table map pie gantt polygon heatmap
constexpr double kMarkWeights[] = {0.25, 0.12, 0.05, 0.08, 0.04, 0.03, 0.08,
                                   0.08, 0.08, 0.06, 0.03, 0.03, 0.07};
constexpr double kOpWeights[] = {0.50, 0.10, 0.15, 0.15, 0.05, 0.05};
// x y color size shape, then "not encoded"
constexpr double kChannelWeights[] = {0.30, 0.30, 0.15, 0.08, 0.05, 0.12};
constexpr double kLinkWeights[] = {0.70, 0.15, 0.15};
constexpr double kCanvasW = 1600, kCanvasH = 1200;

// Pairwise features whose value is unchanged when A and B swap.
bool swap_invariant(const std::string& feature) {
  static const std::set<std::string> exact = {"distance", "has_any", "is_neighbour"};
  for (const char* prefix : {"same_", "shared_", "is_overlapping_", "count_overlapping_",
                             "is_equal_count_"}) {
    if (feature.rfind(prefix, 0) == 0) return true;
  }
  return exact.contains(feature);
}

// A pair rule reads the same on (a, b) and (b, a) when every literal does;
// both orders then share one coin.
bool mirror_invariant(const DecisionRule& r) {
  if (r.mapping == "SDE->SA" || !swap_invariant(r.target.feature)) return false;
  return std::all_of(r.condition.begin(), r.condition.end(),
                     [](const Literal& l) { return swap_invariant(l.feature); });
}

std::string describe(const DecisionRule& r) {
  std::string s = r.mapping + ": ";
  for (std::size_t k = 0; k < r.condition.size(); ++k) {
    if (k) s += " & ";
    s += (r.condition[k].negated ? "!" : "") + r.condition[k].feature;
  }
  return s + " => " + (r.target.negated ? "!" : "") + r.target.feature;
}

const std::vector<Tiling>& tilings_for(int n) {
  static std::array<std::vector<Tiling>, 9> cache;
  if (cache[n].empty()) cache[n] = brute_force_tilings(n);
  return cache[n];
}

struct Content {
  std::vector<ViewSpec> views;
};

Content sample_content(Rng& rng) {
  Content c;
  const int n = kMinViews + static_cast<int>(rng.weighted(kViewCountWeights));
  const int universe = 3 + static_cast<int>(rng.below(6));
  std::vector<DataType> types(universe);
  for (auto& t : types) t = static_cast<DataType>(rng.below(kNumDataTypes));
  for (int v = 0; v < n; ++v) {
    ViewSpec view;
    view.id = "v" + std::to_string(v + 1);
    view.mark = static_cast<Mark>(rng.weighted(kMarkWeights));
    const int k = 1 + static_cast<int>(rng.below(std::min(4, universe)));
    std::vector<int> order(universe);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<int>(order));
    order.resize(k);
    std::sort(order.begin(), order.end());
    for (int f : order) {
      DataField field{"f" + std::to_string(f + 1), types[f],
                      static_cast<DataOp>(rng.weighted(kOpWeights))};
      const auto ch = rng.weighted(kChannelWeights);
      if (ch < static_cast<std::size_t>(kNumChannels)) view.encodings[ch].push_back(field.name);
      view.fields.push_back(std::move(field));
    }
    c.views.push_back(std::move(view));
  }
  return c;
}

DashboardSpec build_dashboard(std::string id, const Content& content,
                              const std::vector<GridRect>& rects,
                              const std::vector<LinkState>& links) {
  DashboardSpec d;
  d.id = std::move(id);
  d.canvas = Canvas{kCanvasW, kCanvasH};
  const std::size_t n = content.views.size();
  d.views = content.views;
  for (std::size_t v = 0; v < n; ++v) {
    const auto& r = rects[v];
    d.views[v].layout = PixelRect{r.x * kCanvasW / 4, r.y * kCanvasH / 4,
                                  r.w * kCanvasW / 4, r.h * kCanvasH / 4};
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const LinkState s = links[a * n + b];
      if (a == b || s == LinkState::kNone) continue;
      d.coordinations.push_back(Coordination{
          d.views[a].id, d.views[b].id,
          s == LinkState::kFilter ? CoordKind::kFilter : CoordKind::kBrush});
    }
  }
  return d;
}

std::vector<GridRect> random_placement(Rng& rng, std::size_t n) {
  const auto& tilings = tilings_for(static_cast<int>(n));
  const Tiling& t = tilings[rng.below(tilings.size())];
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<int>(perm));
  std::vector<GridRect> rects(n);
  for (std::size_t v = 0; v < n; ++v) rects[v] = t[perm[v]];
  return rects;
}

std::vector<LinkState> random_links(Rng& rng, std::size_t n) {
  std::vector<LinkState> links(n * n, LinkState::kNone);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b) links[a * n + b] = static_cast<LinkState>(rng.weighted(kLinkWeights));
    }
  }
  return links;
}

// Grid placement recovered from a generated dashboard's pixel layout.
std::vector<GridRect> rects_of(const DashboardSpec& d) {
  std::vector<GridRect> out;
  for (const auto& v : d.views) {
    const auto& l = *v.layout;
    out.push_back(GridRect{static_cast<int>(std::lround(l.x * 4 / kCanvasW)),
                           static_cast<int>(std::lround(l.y * 4 / kCanvasH)),
                           static_cast<int>(std::lround(l.w * 4 / kCanvasW)),
                           static_cast<int>(std::lround(l.h * 4 / kCanvasH))});
  }
  return out;
}

std::vector<LinkState> links_of(const DashboardSpec& d) {
  const std::size_t n = d.views.size();
  std::vector<LinkState> links(n * n, LinkState::kNone);
  auto index = [&](const std::string& id) {
    for (std::size_t v = 0; v < n; ++v) {
      if (d.views[v].id == id) return v;
    }
    return n;
  };
  for (const auto& c : d.coordinations) {
    links[index(c.source) * n + index(c.target)] =
        c.kind == CoordKind::kFilter ? LinkState::kFilter : LinkState::kBrush;
  }
  return links;
}

// Arithmetic mean of every numeric feature, single features over views and
// pairwise features over ordered pairs.
Thresholds corpus_means(std::span<const DashboardSpec> corpus) {
  const auto& features = naive_features();
  std::vector<double> sums(features.size(), 0.0);
  double n_views = 0, n_pairs = 0;
  for (const auto& d : corpus) {
    const auto rects = rects_of(d);
    const auto links = links_of(d);
    const std::size_t n = d.views.size();
    for (std::size_t a = 0; a < n; ++a) {
      n_views += 1;
      const NaiveSubject s{&d.views[a], nullptr, rects[a], {}, {}, {}};
      for (std::size_t f = 0; f < features.size(); ++f) {
        if (features[f].numeric && !features[f].pair) sums[f] += naive_value(features[f].name, s);
      }
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        n_pairs += 1;
        const NaiveSubject p{&d.views[a], &d.views[b], rects[a], rects[b],
                             links[a * n + b], links[b * n + a]};
        for (std::size_t f = 0; f < features.size(); ++f) {
          if (features[f].numeric && features[f].pair) sums[f] += naive_value(features[f].name, p);
        }
      }
    }
  }
  Thresholds out;
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (!features[f].numeric) continue;
    const double count = features[f].pair ? n_pairs : n_views;
    out[features[f].name] = count > 0 ? sums[f] / count : 0.0;
  }
  return out;
}

void check_conflicts(std::span<const PlantedRule> planted) {
  auto pair_kind = [](const DecisionRule& r) { return r.mapping != "SDE->SA"; };
  for (std::size_t i = 0; i < planted.size(); ++i) {
    const auto& a = planted[i].rule;
    std::set<std::pair<std::string, bool>> lits;
    for (const auto& l : a.condition) lits.insert({l.feature, l.negated});
    for (const auto& l : a.condition) {
      if (lits.contains({l.feature, !l.negated})) {
        throw InputError("planted rule never fires: " + describe(a));
      }
    }
    for (std::size_t j = i + 1; j < planted.size(); ++j) {
      const auto& b = planted[j].rule;
      if (pair_kind(a) != pair_kind(b) || a.target.feature != b.target.feature ||
          a.target.negated == b.target.negated) {
        continue;
      }
      std::set<Literal> ca(a.condition.begin(), a.condition.end());
      std::set<Literal> cb(b.condition.begin(), b.condition.end());
      if (std::includes(ca.begin(), ca.end(), cb.begin(), cb.end()) ||
          std::includes(cb.begin(), cb.end(), ca.begin(), ca.end())) {
        throw InputError("planted rules conflict: " + describe(a) + " and " + describe(b));
      }
    }
  }
}

// One steered dashboard. Returns false if no placement satisfied the coins
// within the try budget; `failures` counts which rule blocked each try.
bool steer(Rng& rng, const Content& content, const NaiveRules& rules,
           std::span<const PlantedRule> planted, double noise, int tries,
           std::vector<GridRect>& rects, std::vector<LinkState>& links,
           std::vector<std::size_t>& failures) {
  const std::size_t n = content.views.size();
  const std::size_t n_rules = rules.size();
  // coins[r][subject]: the outcome this rule must show if it fires.
  std::vector<std::vector<char>> coins(n_rules);
  for (std::size_t r = 0; r < n_rules; ++r) {
    const double p = planted[r].p_obey;
    const double obey = p * (1 - noise) + (1 - p) * noise;
    const std::size_t subjects = rules.pair_rule(r) ? n * n : n;
    coins[r].resize(subjects);
    for (auto& c : coins[r]) c = rng.bernoulli(obey);
    if (mirror_invariant(planted[r].rule)) {
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) coins[r][b * n + a] = coins[r][a * n + b];
      }
    }
  }
  const auto& views = content.views;
  for (int attempt = 0; attempt < tries; ++attempt) {
    rects = random_placement(rng, n);
    bool ok = true;
    for (std::size_t r = 0; r < n_rules && ok; ++r) {
      if (rules.uses_links(r)) continue;
      if (!rules.pair_rule(r)) {
        for (std::size_t v = 0; v < n && ok; ++v) {
          const Outcome o = rules.evaluate(r, NaiveSubject{&views[v], nullptr, rects[v], {}, {}, {}});
          if (o.fired && o.obeyed != static_cast<bool>(coins[r][v])) ok = false;
        }
      } else {
        for (std::size_t a = 0; a < n && ok; ++a) {
          for (std::size_t b = 0; b < n && ok; ++b) {
            if (a == b) continue;
            const Outcome o = rules.evaluate(r, NaiveSubject{&views[a], &views[b], rects[a], rects[b], {}, {}});
            if (o.fired && o.obeyed != static_cast<bool>(coins[r][a * n + b])) ok = false;
          }
        }
      }
      if (!ok) ++failures[r];
    }
    if (!ok) continue;

    links.assign(n * n, LinkState::kNone);
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = i + 1; j < n && ok; ++j) {
        std::array<double, 9> weight{};
        std::size_t blocking = n_rules;
        for (int c = 0; c < 9; ++c) {
          const auto ij = static_cast<LinkState>(c / 3), ji = static_cast<LinkState>(c % 3);
          bool good = true;
          for (std::size_t r = 0; r < n_rules && good; ++r) {
            if (!rules.uses_links(r)) continue;
            const Outcome f = rules.evaluate(r, NaiveSubject{&views[i], &views[j], rects[i], rects[j], ij, ji});
            const Outcome g = rules.evaluate(r, NaiveSubject{&views[j], &views[i], rects[j], rects[i], ji, ij});
            if ((f.fired && f.obeyed != static_cast<bool>(coins[r][i * n + j])) ||
                (g.fired && g.obeyed != static_cast<bool>(coins[r][j * n + i]))) {
              good = false;
              blocking = r;
            }
          }
          if (good) weight[c] = kLinkWeights[c / 3] * kLinkWeights[c % 3];
        }
        if (std::all_of(weight.begin(), weight.end(), [](double w) { return w == 0; })) {
          ok = false;
          if (blocking < n_rules) ++failures[blocking];
          break;
        }
        const auto c = rng.weighted(weight);
        links[i * n + j] = static_cast<LinkState>(c / 3);
        links[j * n + i] = static_cast<LinkState>(c % 3);
      }
    }
    if (ok) return true;
  }
  return false;
}

json literal_json(const Literal& l) {
  return json{{"feature", l.feature}, {"negated", l.negated}};
}

}  // namespace

std::vector<PlantedRule> parse_planted(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed planted-rule JSON: ") + e.what());
  }
  const json& list = doc.is_object() && doc.contains("rules") ? doc["rules"] : doc;
  if (!list.is_array() || list.empty()) throw InputError("planted rules must be a non-empty array");
  std::set<std::string> known;
  for (const auto& f : naive_features()) known.insert(f.name);
  auto literal = [&](const json& j) {
    Literal l;
    if (j.is_string()) {
      l.feature = j.get<std::string>();
    } else if (j.is_object() && j.contains("feature") && j["feature"].is_string()) {
      l.feature = j["feature"].get<std::string>();
      l.negated = j.value("negated", false);
    } else {
      throw InputError("planted literal needs a feature name");
    }
    const bool is_mark = l.feature.rfind("mark=", 0) == 0 && parse_mark(l.feature.substr(5));
    if (!is_mark && (!known.contains(l.feature) || l.feature == "mark")) {
      throw InputError("planted rule uses unknown feature '" + l.feature + "'");
    }
    return l;
  };
  std::vector<PlantedRule> out;
  for (const auto& r : list) {
    if (!r.is_object() || !r.contains("mapping") || !r.contains("condition") || !r.contains("target")) {
      throw InputError("planted rule needs mapping, condition and target");
    }
    PlantedRule p;
    p.rule.mapping = r["mapping"].get<std::string>();
    try {
      find_mapping(p.rule.mapping);
    } catch (const ConsistencyError& e) {
      throw InputError(e.what());
    }
    if (!r["condition"].is_array() || r["condition"].empty() || r["condition"].size() > 2) {
      throw InputError("planted condition must list one or two literals");
    }
    for (const auto& l : r["condition"]) p.rule.condition.push_back(literal(l));
    p.rule.target = literal(r["target"]);
    p.p_obey = r.value("p_obey", 0.9);
    if (!(p.p_obey > 0.5 && p.p_obey <= 1.0)) {
      throw InputError("p_obey must lie in (0.5, 1]: " + describe(p.rule));
    }
    p.rule.importance = 1.0;
    out.push_back(std::move(p));
  }
  return out;
}

json planted_to_json(std::span<const PlantedRule> planted) {
  json rules = json::array();
  for (const auto& p : planted) {
    json cond = json::array();
    for (const auto& l : p.rule.condition) cond.push_back(literal_json(l));
    rules.push_back({{"mapping", p.rule.mapping},
                     {"condition", std::move(cond)},
                     {"target", literal_json(p.rule.target)},
                     {"p_obey", p.p_obey}});
  }
  return json{{"rules", std::move(rules)}};
}

std::vector<PlantedRule> default_planted_rules(double p_obey) {
  auto rule = [&](std::string mapping, Condition cond, Literal target) {
    PlantedRule p;
    p.rule.mapping = std::move(mapping);
    p.rule.condition = std::move(cond);
    p.rule.target = std::move(target);
    p.rule.importance = 1.0;
    p.p_obey = p_obey;
    return p;
  };
  return {
      rule("SDE->SA", {{"mark=text", false}, {"n_fields_y", true}}, {"gy", true}),
      rule("SDE->PA", {{"mark=map", false}}, {"a_larger_area", false}),
      rule("SDE->PC", {{"mark=text_table", false}}, {"a_filters_b", false}),
      rule("PDE->SA", {{"is_overlapping_y", false}}, {"gw", false}),
      rule("PDE->PA", {{"same_mark", false}}, {"same_height", false}),
      rule("PDE->PC", {{"shared_fraction", false}, {"is_overlapping_color", false}},
           {"a_brushes_b", false}),
      rule("SA->PC", {{"gy", true}, {"gw", false}}, {"a_filters_b", false}),
      rule("PA->PC", {{"a_left_of_b", false}, {"same_height", false}}, {"a_brushes_b", false}),
      rule("PC->PA", {{"b_filters_a", false}}, {"a_below_b", false}),
      rule("PC->SA", {{"a_filters_b", false}}, {"area", true}),
  };
}

GeneratedCorpus generate_corpus(std::span<const PlantedRule> planted,
                                const GeneratorOptions& options) {
  if (options.count < 1) throw InputError("corpus size must be at least 1");
  if (!(options.noise >= 0.0 && options.noise <= 0.5)) {
    throw InputError("noise must lie in [0, 0.5]");
  }
  for (const auto& p : planted) {
    if (!(p.p_obey > 0.5 && p.p_obey <= 1.0)) {
      throw InputError("p_obey must lie in (0.5, 1]: " + describe(p.rule));
    }
  }
  check_conflicts(planted);
  std::vector<DecisionRule> rule_list;
  for (const auto& p : planted) rule_list.push_back(p.rule);

  GeneratedCorpus out;
  Rng master(options.seed);

  // Pilot corpus without planted structure fixes the planning thresholds.
  {
    Rng rng(master.next());
    std::vector<DashboardSpec> pilot;
    for (std::size_t i = 0; i < options.pilot_count; ++i) {
      const Content c = sample_content(rng);
      const auto rects = random_placement(rng, c.views.size());
      const auto links = random_links(rng, c.views.size());
      pilot.push_back(build_dashboard("pilot", c, rects, links));
    }
    out.planning_thresholds = corpus_means(pilot);
  }
  const NaiveRules planning(rule_list, out.planning_thresholds);

  std::vector<std::size_t> failures(planted.size(), 0);
  for (std::size_t i = 0; i < options.count; ++i) {
    Rng rng(master.next());
    char id[32];
    std::snprintf(id, sizeof id, "synth-%04zu", i + 1);
    bool done = false;
    for (int attempt = 0; attempt < options.content_tries && !done; ++attempt) {
      const Content c = sample_content(rng);
      std::vector<GridRect> rects;
      std::vector<LinkState> links;
      if (steer(rng, c, planning, planted, options.noise, options.arrangement_tries, rects,
                links, failures)) {
        out.dashboards.push_back(build_dashboard(id, c, rects, links));
        done = true;
      }
    }
    if (!done) {
      std::vector<std::size_t> order(planted.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return failures[a] > failures[b]; });
      std::string names;
      for (std::size_t k = 0; k < std::min<std::size_t>(2, order.size()); ++k) {
        if (failures[order[k]] == 0) break;
        names += (names.empty() ? "" : "; ") + describe(planted[order[k]].rule);
      }
      throw InputError("planted rules could not be satisfied together: " + names);
    }
  }

  // Ground truth under the thresholds a miner would see on this corpus.
  out.thresholds = corpus_means(out.dashboards);
  const NaiveRules final_rules(rule_list, out.thresholds);
  out.rules.assign(planted.size(), RuleLedger{});
  std::vector<json> firings(planted.size(), json::array());
  json view_count = json::object(), marks = json::object();
  std::int64_t n_views = 0, none = 0, filter = 0, brush = 0;
  for (const auto& d : out.dashboards) {
    const auto rects = rects_of(d);
    const auto links = links_of(d);
    const std::size_t n = d.views.size();
    n_views += static_cast<std::int64_t>(n);
    const std::string vc = std::to_string(n);
    view_count[vc] = view_count.value(vc, 0) + 1;
    for (const auto& v : d.views) {
      const std::string m(to_string(v.mark));
      marks[m] = marks.value(m, 0) + 1;
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        const LinkState s = links[a * n + b];
        (s == LinkState::kNone ? none : s == LinkState::kFilter ? filter : brush) += 1;
      }
    }
    for (std::size_t r = 0; r < planted.size(); ++r) {
      auto record = [&](const NaiveSubject& s, const std::string& subject) {
        const Outcome o = final_rules.evaluate(r, s);
        if (!o.fired) return;
        ++out.rules[r].fired;
        out.rules[r].obeyed += o.obeyed;
        firings[r].push_back({{"dashboard", d.id}, {"subject", subject}, {"obeyed", o.obeyed}});
      };
      if (!final_rules.pair_rule(r)) {
        for (std::size_t a = 0; a < n; ++a) {
          record(NaiveSubject{&d.views[a], nullptr, rects[a], {}, {}, {}}, d.views[a].id);
        }
      } else {
        for (std::size_t a = 0; a < n; ++a) {
          for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            record(NaiveSubject{&d.views[a], &d.views[b], rects[a], rects[b],
                                links[a * n + b], links[b * n + a]},
                   d.views[a].id + "," + d.views[b].id);
          }
        }
      }
    }
  }

  json rules = json::array();
  const json planted_json = planted_to_json(planted)["rules"];
  for (std::size_t r = 0; r < planted.size(); ++r) {
    json entry = planted_json[r];
    entry["fired"] = out.rules[r].fired;
    entry["obeyed"] = out.rules[r].obeyed;
    entry["obedience"] = out.rules[r].fired
                             ? static_cast<double>(out.rules[r].obeyed) / out.rules[r].fired
                             : 0.0;
    entry["firings"] = std::move(firings[r]);
    rules.push_back(std::move(entry));
  }
  json coordination = {{"none", none}};
  if (filter) coordination["filter"] = filter;
  if (brush) coordination["brush"] = brush;
  out.ledger = json{{"seed", options.seed},
                    {"count", options.count},
                    {"noise", options.noise},
                    {"planning_thresholds", out.planning_thresholds},
                    {"thresholds", out.thresholds},
                    {"totals",
                     {{"dashboards", out.dashboards.size()},
                      {"views", n_views},
                      {"view_count", std::move(view_count)},
                      {"marks", std::move(marks)},
                      {"coordination", std::move(coordination)}}},
                    {"rules", std::move(rules)}};
  return out;
}

}  // namespace dminer::oracle
