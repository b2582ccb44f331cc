#include "dminer/mining.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

namespace dminer {

using nlohmann::json;

bool Mapping::single_subject() const {
  if (section_of(target_group) != Section::kSingle) return false;
  return std::all_of(condition_groups.begin(), condition_groups.end(),
                     [](FeatureGroup g) { return section_of(g) == Section::kSingle; });
}

const std::vector<Mapping>& mapping_registry() {
  using G = FeatureGroup;
  static const std::vector<Mapping> registry = [] {
    std::vector<Mapping> out;
    auto add = [&](G from, G to, bool red) {
      out.push_back(Mapping{std::string(to_string(from)) + "->" +
                                std::string(to_string(to)),
                            {from}, to, red});
    };
    for (G from : {G::kSDE, G::kPDE}) {
      for (G to : {G::kSA, G::kPA, G::kPC}) add(from, to, false);
    }
    add(G::kSA, G::kPC, true);
    add(G::kPA, G::kPC, true);
    add(G::kPC, G::kSA, true);
    add(G::kPC, G::kPA, true);
    return out;
  }();
  return registry;
}

const Mapping& find_mapping(std::string_view id) {
  for (const auto& m : mapping_registry()) {
    if (m.id == id) return m;
  }
  throw ConsistencyError("unknown mapping '" + std::string(id) + "'");
}

bool DecisionRule::same_rule(const DecisionRule& other) const {
  if (mapping != other.mapping || target != other.target) return false;
  std::set<Literal> a(condition.begin(), condition.end());
  std::set<Literal> b(other.condition.begin(), other.condition.end());
  return a == b;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json literal_json(const Literal& l) {
  return json{{"feature", l.feature}, {"negated", l.negated}};
}

json condition_json(const Condition& c) {
  json arr = json::array();
  for (const auto& l : c) arr.push_back(literal_json(l));
  return arr;
}

Literal literal_from(const json& j) {
  if (!j.is_object() || !j.contains("feature") || !j["feature"].is_string()) {
    throw InputError("rule literal needs a string 'feature'");
  }
  return Literal{j["feature"].get<std::string>(), j.value("negated", false)};
}

Condition condition_from(const json& j) {
  if (!j.is_array() || j.empty() || j.size() > 2) {
    throw InputError("rule condition must list one or two literals");
  }
  Condition c;
  for (const auto& l : j) c.push_back(literal_from(l));
  return c;
}

double number_or(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  return it != j.end() && it->is_number() ? it->get<double>() : fallback;
}

}  // namespace

json to_json(const RuleSet& rs) {
  json models = json::array();
  for (const auto& m : rs.models) {
    json terms = json::array();
    for (const auto& [cond, coef] : m.terms) {
      terms.push_back(json{{"condition", condition_json(cond)}, {"coefficient", coef}});
    }
    models.push_back(json{{"mapping", m.mapping},
                          {"target", literal_json(m.target)},
                          {"intercept", m.intercept},
                          {"prior_logit", m.prior_logit},
                          {"lambda", m.lambda},
                          {"positive_rate", m.positive_rate},
                          {"train_acc", m.train_acc},
                          {"test_acc", m.test_acc},
                          {"n_train", m.n_train},
                          {"n_test", m.n_test},
                          {"n_candidates", m.n_candidates},
                          {"converged", m.converged},
                          {"terms", std::move(terms)}});
  }
  json rules = json::array();
  for (const auto& r : rs.rules) {
    rules.push_back(json{{"mapping", r.mapping},
                         {"condition", condition_json(r.condition)},
                         {"target", literal_json(r.target)},
                         {"coefficient", r.coefficient},
                         {"importance", r.importance},
                         {"support", r.support},
                         {"train_acc", r.train_acc},
                         {"test_acc", r.test_acc}});
  }
  json thresholds = json::object();
  for (const auto& [k, v] : rs.thresholds) thresholds[k] = v;
  return json{{"provenance",
               {{"corpus", rs.provenance.corpus},
                {"seed", rs.provenance.seed},
                {"train_frac", rs.provenance.train_frac},
                {"n_train", rs.provenance.n_train},
                {"n_test", rs.provenance.n_test}}},
              {"thresholds", std::move(thresholds)},
              {"models", std::move(models)},
              {"rules", std::move(rules)},
              {"skipped", rs.skipped},
              {"warnings", rs.warnings}};
}

RuleSet ruleset_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("rule set must be a JSON object");
  RuleSet rs;
  if (auto it = doc.find("provenance"); it != doc.end() && it->is_object()) {
    rs.provenance.corpus = it->value("corpus", std::string());
    rs.provenance.seed = it->value("seed", std::uint64_t{0});
    rs.provenance.train_frac = it->value("train_frac", 0.75);
    rs.provenance.n_train = it->value("n_train", std::size_t{0});
    rs.provenance.n_test = it->value("n_test", std::size_t{0});
  }
  if (!doc.contains("thresholds") || !doc["thresholds"].is_object()) {
    throw InputError("rule set needs a 'thresholds' object");
  }
  for (const auto& [k, v] : doc["thresholds"].items()) {
    if (!v.is_number()) throw InputError("threshold '" + k + "' is not a number");
    rs.thresholds[k] = v.get<double>();
  }
  if (!doc.contains("rules") || !doc["rules"].is_array()) {
    throw InputError("rule set needs a 'rules' array");
  }
  for (const auto& r : doc["rules"]) {
    if (!r.is_object() || !r.contains("mapping") || !r.contains("condition") ||
        !r.contains("target")) {
      throw InputError("each rule needs mapping, condition and target");
    }
    DecisionRule rule;
    rule.mapping = r["mapping"].get<std::string>();
    find_mapping(rule.mapping);
    rule.condition = condition_from(r["condition"]);
    rule.target = literal_from(r["target"]);
    rule.coefficient = number_or(r, "coefficient", 0.0);
    rule.importance = number_or(r, "importance", 0.0);
    rule.support = number_or(r, "support", 0.0);
    rule.train_acc = number_or(r, "train_acc", 0.0);
    rule.test_acc = number_or(r, "test_acc", 0.0);
    if (rule.importance < 0) throw InputError("rule importance must be >= 0");
    rs.rules.push_back(std::move(rule));
  }
  if (auto it = doc.find("models"); it != doc.end() && it->is_array()) {
    for (const auto& m : *it) {
      ModelSummary s;
      s.mapping = m.at("mapping").get<std::string>();
      find_mapping(s.mapping);
      s.target = literal_from(m.at("target"));
      s.intercept = number_or(m, "intercept", 0.0);
      s.prior_logit = number_or(m, "prior_logit", 0.0);
      s.lambda = number_or(m, "lambda", 0.0);
      s.positive_rate = number_or(m, "positive_rate", 0.0);
      s.train_acc = number_or(m, "train_acc", 0.0);
      s.test_acc = number_or(m, "test_acc", 0.0);
      s.n_train = m.value("n_train", std::size_t{0});
      s.n_test = m.value("n_test", std::size_t{0});
      s.n_candidates = m.value("n_candidates", std::size_t{0});
      s.converged = m.value("converged", true);
      for (const auto& t : m.value("terms", json::array())) {
        s.terms.emplace_back(condition_from(t.at("condition")),
                             t.at("coefficient").get<double>());
      }
      rs.models.push_back(std::move(s));
    }
  }
  rs.skipped = doc.value("skipped", std::vector<std::string>{});
  rs.warnings = doc.value("warnings", std::vector<std::string>{});
  return rs;
}

std::string serialize_ruleset(const RuleSet& rules) {
  return to_json(rules).dump(2) + "\n";
}

RuleSet parse_ruleset(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed rule set JSON: ") + e.what());
  }
  try {
    return ruleset_from_json(doc);
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid rule set: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Candidates

CompiledLiteral compile_literal(const Literal& literal) {
  auto code = FeatureRegistry::get().find_bit(literal.feature);
  if (!code) {
    throw ConsistencyError("rule references unknown feature '" +
                           literal.feature + "'");
  }
  return CompiledLiteral{*code, literal.negated};
}

CompiledCondition compile_condition(const Condition& condition) {
  if (condition.empty() || condition.size() > 2) {
    throw ConsistencyError("conditions hold one or two literals");
  }
  CompiledCondition c;
  for (const auto& l : condition) c.literals[c.size++] = compile_literal(l);
  return c;
}

Literal to_literal(const CompiledLiteral& literal) {
  return Literal{FeatureRegistry::get().bit(literal.code).name, literal.negated};
}

Condition to_condition(const CompiledCondition& condition) {
  Condition out;
  for (std::uint8_t k = 0; k < condition.size; ++k) {
    out.push_back(to_literal(condition.literals[k]));
  }
  return out;
}

std::vector<BitCode> bits_in_groups(std::span<const FeatureGroup> groups) {
  const auto& reg = FeatureRegistry::get();
  std::vector<BitCode> out;
  auto wanted = [&](FeatureGroup g) {
    return std::find(groups.begin(), groups.end(), g) != groups.end();
  };
  const auto single = reg.bits(Section::kSingle);
  for (std::size_t i = 0; i < single.size(); ++i) {
    if (wanted(single[i].group)) out.push_back(static_cast<BitCode>(i));
  }
  const auto pair = reg.bits(Section::kPair);
  for (std::size_t i = 0; i < pair.size(); ++i) {
    if (wanted(pair[i].group)) out.push_back(static_cast<BitCode>(i) + kPairBitOffset);
  }
  return out;
}

namespace {

template <typename T, typename MakeLiteral, typename Out>
void enumerate_candidates(std::span<const T> bits, int max_conditions,
                          MakeLiteral make, Out& out) {
  for (const auto& b : bits) {
    out.push_back({make(b, false)});
    out.push_back({make(b, true)});
  }
  if (max_conditions < 2) return;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    for (std::size_t j = i + 1; j < bits.size(); ++j) {
      for (int mask = 0; mask < 4; ++mask) {
        out.push_back({make(bits[i], (mask & 2) != 0), make(bits[j], (mask & 1) != 0)});
      }
    }
  }
}

}  // namespace

std::vector<Condition> generate_candidate_rules(
    std::span<const std::string> condition_bits, int max_conditions) {
  std::vector<std::string> unique;
  std::set<std::string> seen;
  for (const auto& b : condition_bits) {
    if (seen.insert(b).second) unique.push_back(b);
  }
  std::vector<Condition> out;
  enumerate_candidates<std::string>(
      unique, max_conditions,
      [](const std::string& b, bool neg) { return Literal{b, neg}; }, out);
  return out;
}

std::vector<CompiledCondition> generate_candidates(std::span<const BitCode> bits,
                                                   int max_conditions) {
  std::vector<std::vector<CompiledLiteral>> lists;
  enumerate_candidates<BitCode>(
      bits, max_conditions,
      [](BitCode b, bool neg) { return CompiledLiteral{b, neg}; }, lists);
  std::vector<CompiledCondition> out;
  out.reserve(lists.size());
  for (const auto& l : lists) {
    CompiledCondition c;
    for (const auto& lit : l) c.literals[c.size++] = lit;
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Data

MiningData build_mining_data(std::span<const FeaturizedDashboard> corpus,
                             const Thresholds& thresholds) {
  const auto single_table = threshold_table(Section::kSingle, thresholds, true);
  const auto pair_table = threshold_table(Section::kPair, thresholds, true);
  MiningData data;
  std::map<std::string, std::uint32_t> index;
  for (const auto& d : corpus) {
    auto [it, inserted] =
        index.emplace(d.id, static_cast<std::uint32_t>(data.dashboard_ids.size()));
    if (inserted) data.dashboard_ids.push_back(d.id);
    const std::uint32_t di = it->second;
    std::map<std::string, std::uint64_t> single_bits;
    for (const auto& v : d.views) {
      const auto bits =
          bits_from_values(Section::kSingle, numeric_values(v), single_table);
      single_bits[v.subject.a] = bits;
      data.views.push_back(SubjectRow{di, SubjectBits{bits, 0}});
    }
    for (const auto& p : d.pairs) {
      const auto bits = bits_from_values(Section::kPair, numeric_values(p), pair_table);
      data.pairs.push_back(SubjectRow{di, SubjectBits{single_bits.at(p.subject.a), bits}});
    }
  }
  return data;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_corpus(
    std::size_t n, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw InputError("train fraction must lie in (0, 1)");
  }
  if (n < 4) throw InputError("splitting needs at least 4 dashboards");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * n));
  if (n_train == 0 || n_train == n) {
    throw InputError("train fraction leaves an empty train or test set");
  }
  std::vector<std::size_t> train(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test(order.begin() + n_train, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Fitting

double RuleModel::score(const SubjectBits& bits,
                        std::span<const CompiledCondition> candidates) const {
  double s = intercept;
  for (const auto& t : terms) {
    if (candidates[t.candidate].fires(bits)) s += t.coefficient;
  }
  return s + prior_logit;
}

namespace {

struct RowKey {
  int fold;
  bool y;
  std::uint64_t single;
  std::uint64_t pair;
  bool operator==(const RowKey&) const = default;
};

struct RowKeyHash {
  std::size_t operator()(const RowKey& k) const {
    std::uint64_t h = k.single * 0x9E3779B97F4A7C15ull;
    h ^= k.pair + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.fold * 2 + k.y) + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

struct ColumnHash {
  std::size_t operator()(const std::vector<std::uint32_t>& col) const {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : col) h = (h ^ v) * 1099511628211ull;
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

RuleModel fit_rule_model(std::span<const SubjectRow> train,
                         std::span<const CompiledCondition> candidates,
                         CompiledLiteral target, const FitOptions& options,
                         std::span<const SubjectRow> test) {
  RuleModel model;
  model.n_train = train.size();
  model.n_test = test.size();
  const std::size_t n = train.size();
  std::size_t n_pos = 0;
  for (const auto& r : train) n_pos += target.eval(r.bits);
  if (n == 0 || n_pos == 0 || n_pos == n) {
    model.skipped = true;
    return model;
  }
  const std::size_t n_neg = n - n_pos;
  model.positive_rate = static_cast<double>(n_pos) / n;
  model.prior_logit = std::log(static_cast<double>(n_pos) / n_neg);
  const double w_pos = n / (2.0 * n_pos);
  const double w_neg = n / (2.0 * n_neg);

  // Grouped folds: every subject of a dashboard lands in the same fold.
  std::vector<std::uint32_t> dashboards;
  for (const auto& r : train) dashboards.push_back(r.dashboard);
  std::sort(dashboards.begin(), dashboards.end());
  dashboards.erase(std::unique(dashboards.begin(), dashboards.end()), dashboards.end());
  Rng rng(options.seed);
  rng.shuffle(std::span<std::uint32_t>(dashboards));
  const int n_folds =
      static_cast<int>(std::min<std::size_t>(options.n_folds, dashboards.size()));
  std::unordered_map<std::uint32_t, int> fold_of;
  for (std::size_t k = 0; k < dashboards.size(); ++k) {
    fold_of[dashboards[k]] = n_folds > 0 ? static_cast<int>(k % n_folds) : 0;
  }

  // Only the bits some candidate reads matter; subjects that agree on them
  // (and on fold and label) collapse into one weighted row.
  std::uint64_t mask_single = 0, mask_pair = 0;
  for (const auto& c : candidates) {
    for (std::uint8_t k = 0; k < c.size; ++k) {
      const BitCode code = c.literals[k].code;
      if (code < kPairBitOffset) {
        mask_single |= std::uint64_t{1} << code;
      } else {
        mask_pair |= std::uint64_t{1} << (code - kPairBitOffset);
      }
    }
  }
  std::unordered_map<RowKey, std::uint32_t, RowKeyHash> row_index;
  std::vector<SubjectBits> rows;
  std::vector<double> y, w, count;
  std::vector<int> fold;
  for (const auto& r : train) {
    const bool label = target.eval(r.bits);
    const RowKey key{fold_of[r.dashboard], label, r.bits.single & mask_single,
                     r.bits.pair & mask_pair};
    auto [it, inserted] =
        row_index.emplace(key, static_cast<std::uint32_t>(rows.size()));
    if (inserted) {
      rows.push_back(SubjectBits{key.single, key.pair});
      y.push_back(label ? 1.0 : 0.0);
      w.push_back(0.0);
      count.push_back(0.0);
      fold.push_back(key.fold);
    }
    w[it->second] += label ? w_pos : w_neg;
    count[it->second] += 1.0;
  }

  // Candidate columns: drop never/always firing rules and exact duplicates.
  struct Column {
    std::size_t candidate;
    std::vector<std::uint32_t> rows;
    double support;
    double score;
  };
  std::vector<Column> columns;
  std::unordered_map<std::vector<std::uint32_t>, std::size_t, ColumnHash> seen;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    std::vector<std::uint32_t> col;
    double fired = 0, grad = 0;
    for (std::uint32_t i = 0; i < rows.size(); ++i) {
      if (candidates[c].fires(rows[i])) {
        col.push_back(i);
        fired += count[i];
        grad += w[i] * (y[i] - 0.5);
      }
    }
    if (fired == 0 || fired == static_cast<double>(n)) continue;
    if (!seen.emplace(col, c).second) continue;
    columns.push_back(Column{c, std::move(col), fired / n, std::abs(grad)});
  }
  if (options.max_screened > 0 &&
      columns.size() > static_cast<std::size_t>(options.max_screened)) {
    std::vector<std::size_t> order(columns.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return columns[a].score > columns[b].score;
    });
    order.resize(options.max_screened);
    std::sort(order.begin(), order.end());
    std::vector<Column> kept;
    for (auto k : order) kept.push_back(std::move(columns[k]));
    columns = std::move(kept);
  }
  model.n_candidates = columns.size();

  BinaryDesign design;
  design.n_rows = rows.size();
  for (const auto& c : columns) {
    design.columns.push_back(c.rows);
    design.penalty_factor.push_back(
        candidates[c.candidate].size > 1 ? options.conjunction_penalty : 1.0);
  }

  L1Logistic probe(design, y, w);
  const double lmax = probe.lambda_max();
  if (!columns.empty() && lmax > 0) {
    const auto grid = lambda_grid(lmax, options.n_lambdas, options.lambda_min_ratio);
    std::vector<double> path;
    if (options.fixed_lambda_ratio) {
      const double target_lambda = lmax * *options.fixed_lambda_ratio;
      for (double l : grid) {
        if (l > target_lambda) path.push_back(l);
      }
      path.push_back(target_lambda);
    } else if (n_folds >= 2) {
      std::vector<double> cv_loss(grid.size(), 0.0);
      std::vector<double> wf(w.size()), we(w.size());
      for (int f = 0; f < n_folds; ++f) {
        double held = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
          wf[i] = fold[i] == f ? 0.0 : w[i];
          we[i] = fold[i] == f ? w[i] : 0.0;
          held += we[i];
        }
        if (held == 0) continue;
        L1Logistic cv(design, y, wf);
        for (std::size_t k = 0; k < grid.size(); ++k) {
          cv.solve(grid[k], options.solve);
          cv_loss[k] += cv.log_loss(we) * held;
        }
      }
      const auto best = static_cast<std::size_t>(
          std::min_element(cv_loss.begin(), cv_loss.end()) - cv_loss.begin());
      path.assign(grid.begin(), grid.begin() + best + 1);
    } else {
      path = grid;
    }
    L1Logistic fit(design, y, w);
    for (double l : path) model.converged = fit.solve(l, options.solve);
    model.lambda = path.back();
    model.intercept = fit.intercept();
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (fit.beta()[j] != 0.0) {
        model.terms.push_back(
            RuleTerm{columns[j].candidate, fit.beta()[j], columns[j].support});
      }
    }
    if (!model.converged) {
      model.warnings.push_back("coordinate descent hit its iteration limit");
    }
  } else {
    // Nothing informative: balanced intercept-only model.
    model.intercept = 0.0;
  }

  auto accuracy = [&](std::span<const SubjectRow> data) {
    if (data.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& r : data) {
      const bool predicted = model.score(r.bits, candidates) > 0;
      correct += predicted == target.eval(r.bits);
    }
    return static_cast<double>(correct) / data.size();
  };
  model.train_acc = accuracy(train);
  model.test_acc = accuracy(test);
  return model;
}

// ---------------------------------------------------------------------------
// Mining

RuleSet mine_split(const MiningData& train, const MiningData& test,
                   const Thresholds& thresholds, std::span<const Mapping> mappings,
                   const MineOptions& options) {
  struct Job {
    std::size_t mapping;
    BitCode target;
  };
  std::vector<std::vector<CompiledCondition>> candidates;
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < mappings.size(); ++m) {
    const auto cond_bits = bits_in_groups(mappings[m].condition_groups);
    candidates.push_back(generate_candidates(cond_bits, options.max_conditions));
    const FeatureGroup tg[] = {mappings[m].target_group};
    for (BitCode t : bits_in_groups(tg)) jobs.push_back(Job{m, t});
  }

  FitOptions fit = options.fit;
  fit.seed = options.seed;
  std::vector<RuleModel> models(jobs.size());
  parallel_for(jobs.size(), options.threads, [&](std::size_t k) {
    const Mapping& m = mappings[jobs[k].mapping];
    models[k] = fit_rule_model(train.rows_for(m), candidates[jobs[k].mapping],
                               CompiledLiteral{jobs[k].target, false}, fit,
                               test.rows_for(m));
  });

  RuleSet rs;
  rs.thresholds = thresholds;
  rs.provenance.corpus = options.corpus_name;
  rs.provenance.seed = options.seed;
  rs.provenance.train_frac = options.train_frac;
  rs.provenance.n_train = train.dashboard_ids.size();
  rs.provenance.n_test = test.dashboard_ids.size();
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const Mapping& mapping = mappings[jobs[k].mapping];
    const auto& cands = candidates[jobs[k].mapping];
    const RuleModel& model = models[k];
    const std::string target_name = FeatureRegistry::get().bit(jobs[k].target).name;
    const std::string label = mapping.id + ":" + target_name;
    if (model.skipped) {
      rs.skipped.push_back(label);
      rs.warnings.push_back(label + ": target is constant on the training set; model skipped");
      continue;
    }
    for (const auto& wmsg : model.warnings) rs.warnings.push_back(label + ": " + wmsg);

    // The logistic loss, class weights and L1 penalty are symmetric under
    // y -> 1 - y, so the model for the negated target is this fit with every
    // sign flipped.
    for (bool negated : {false, true}) {
      const double sign = negated ? -1.0 : 1.0;
      ModelSummary s;
      s.mapping = mapping.id;
      s.target = Literal{target_name, negated};
      s.intercept = sign * model.intercept;
      s.prior_logit = sign * model.prior_logit;
      s.lambda = model.lambda;
      s.positive_rate = negated ? 1.0 - model.positive_rate : model.positive_rate;
      s.train_acc = model.train_acc;
      s.test_acc = model.test_acc;
      s.n_train = model.n_train;
      s.n_test = model.n_test;
      s.n_candidates = model.n_candidates;
      s.converged = model.converged;

      std::vector<std::pair<const RuleTerm*, double>> positive;
      for (const auto& t : model.terms) {
        s.terms.emplace_back(to_condition(cands[t.candidate]), sign * t.coefficient);
        if (sign * t.coefficient > 0) {
          positive.emplace_back(&t, rule_importance(t.coefficient, t.support));
        }
      }
      std::stable_sort(positive.begin(), positive.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      if (positive.size() > static_cast<std::size_t>(options.top_rules)) {
        positive.resize(options.top_rules);
      }
      for (const auto& [term, importance] : positive) {
        DecisionRule r;
        r.mapping = mapping.id;
        r.condition = to_condition(cands[term->candidate]);
        r.target = s.target;
        r.coefficient = sign * term->coefficient;
        r.importance = importance;
        r.support = term->support;
        r.train_acc = model.train_acc;
        r.test_acc = model.test_acc;
        rs.rules.push_back(std::move(r));
      }
      rs.models.push_back(std::move(s));
    }
  }
  return rs;
}

RuleSet mine_all(std::span<const FeaturizedDashboard> corpus,
                 std::span<const Mapping> mappings, const MineOptions& options) {
  auto [train_idx, test_idx] = split_corpus(corpus.size(), options.train_frac, options.seed);
  std::vector<FeaturizedDashboard> train, test;
  for (auto i : train_idx) train.push_back(corpus[i]);
  for (auto i : test_idx) test.push_back(corpus[i]);

  std::vector<RawFeatures> views, pairs;
  for (const auto& d : train) {
    views.insert(views.end(), d.views.begin(), d.views.end());
    pairs.insert(pairs.end(), d.pairs.begin(), d.pairs.end());
  }
  auto single = binarize(views);
  auto pair = binarize(pairs);
  Thresholds thresholds = single.thresholds;
  thresholds.insert(pair.thresholds.begin(), pair.thresholds.end());

  const MiningData train_data = build_mining_data(train, thresholds);
  const MiningData test_data = build_mining_data(test, thresholds);
  RuleSet rs = mine_split(train_data, test_data, thresholds, mappings, options);
  std::vector<std::string> warnings = single.warnings;
  warnings.insert(warnings.end(), pair.warnings.begin(), pair.warnings.end());
  warnings.insert(warnings.end(), rs.warnings.begin(), rs.warnings.end());
  rs.warnings = std::move(warnings);
  return rs;
}

EvalReport evaluate_rules(const RuleSet& rules, const MiningData& data) {
  EvalReport report;
  double acc_sum = 0;
  for (const auto& m : rules.models) {
    const Mapping& mapping = find_mapping(m.mapping);
    const auto target = compile_literal(m.target);
    std::vector<CompiledCondition> conds;
    RuleModel model;
    model.intercept = m.intercept;
    model.prior_logit = m.prior_logit;
    for (std::size_t k = 0; k < m.terms.size(); ++k) {
      conds.push_back(compile_condition(m.terms[k].first));
      model.terms.push_back(RuleTerm{k, m.terms[k].second, 0.0});
    }
    const auto rows = data.rows_for(mapping);
    std::size_t correct = 0;
    for (const auto& r : rows) {
      correct += (model.score(r.bits, conds) > 0) == target.eval(r.bits);
    }
    ModelEval e{m.mapping, m.target,
                rows.empty() ? 0.0 : static_cast<double>(correct) / rows.size(),
                rows.size()};
    acc_sum += e.accuracy;
    report.models.push_back(std::move(e));
  }
  report.macro_accuracy = report.models.empty() ? 0.0 : acc_sum / report.models.size();

  for (std::size_t k = 0; k < rules.rules.size(); ++k) {
    const auto& rule = rules.rules[k];
    const auto cond = compile_condition(rule.condition);
    const auto target = compile_literal(rule.target);
    const auto rows = data.rows_for(find_mapping(rule.mapping));
    std::size_t fired = 0, hit = 0;
    for (const auto& r : rows) {
      if (cond.fires(r.bits)) {
        ++fired;
        hit += target.eval(r.bits);
      }
    }
    RuleEval e;
    e.rule = k;
    e.fire_rate = rows.empty() ? 0.0 : static_cast<double>(fired) / rows.size();
    if (fired) e.precision = static_cast<double>(hit) / fired;
    report.rules.push_back(e);
  }
  return report;
}

}  // namespace dminer
