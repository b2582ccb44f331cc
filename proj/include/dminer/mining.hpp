#ifndef DMINER_MINING_HPP_
#define DMINER_MINING_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dminer/common.hpp"
#include "dminer/features.hpp"
#include "dminer/logistic.hpp"
#include "json.hpp"

namespace dminer {

// A condition-group -> target-group pairing. Mappings whose groups are all
// single-view (SDE -> SA) are mined over views; every other mapping is mined
// over ordered view pairs (A, B), where single-view features refer to A.
struct Mapping {
  std::string id;
  std::vector<FeatureGroup> condition_groups;
  FeatureGroup target_group;
  bool red = false;  // arrangement <-> coordination mapping

  bool single_subject() const;
};

// The ten mappings, six black then four red.
const std::vector<Mapping>& mapping_registry();
const Mapping& find_mapping(std::string_view id);

struct Literal {
  std::string feature;  // a binarized bit name, e.g. "mark=text" or "gh"
  bool negated = false;

  auto operator<=>(const Literal&) const = default;
};

using Condition = std::vector<Literal>;

struct DecisionRule {
  std::string mapping;
  Condition condition;  // one or two literals
  Literal target;
  double coefficient = 0;
  double importance = 0;
  double support = 0;
  double train_acc = 0;
  double test_acc = 0;

  // Same mapping, same literal set, same target.
  bool same_rule(const DecisionRule& other) const;
};

// A fitted rule model for one target literal: every non-zero rule term, the
// intercept, and the log prior odds that turns class-balanced scores back
// into calibrated predictions.
struct ModelSummary {
  std::string mapping;
  Literal target;
  double intercept = 0;
  double prior_logit = 0;
  double lambda = 0;
  std::vector<std::pair<Condition, double>> terms;
  double positive_rate = 0;
  double train_acc = 0;
  double test_acc = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_candidates = 0;
  bool converged = true;
};

struct Provenance {
  std::string corpus;
  std::uint64_t seed = 0;
  double train_frac = 0.75;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct RuleSet {
  Provenance provenance;
  Thresholds thresholds;
  std::vector<ModelSummary> models;
  std::vector<DecisionRule> rules;
  std::vector<std::string> skipped;   // "mapping:target" of constant targets
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const RuleSet& rules);
RuleSet ruleset_from_json(const nlohmann::json& doc);
std::string serialize_ruleset(const RuleSet& rules);
RuleSet parse_ruleset(std::string_view json_text);

// ---------------------------------------------------------------------------
// Compiled form used by the fitting and scoring loops.

struct CompiledLiteral {
  BitCode code = 0;
  bool negated = false;

  bool eval(const SubjectBits& s) const { return s.test(code) != negated; }
  auto operator<=>(const CompiledLiteral&) const = default;
};

struct CompiledCondition {
  std::array<CompiledLiteral, 2> literals{};
  std::uint8_t size = 0;

  bool fires(const SubjectBits& s) const {
    for (std::uint8_t k = 0; k < size; ++k) {
      if (!literals[k].eval(s)) return false;
    }
    return true;
  }
};

CompiledLiteral compile_literal(const Literal& literal);
CompiledCondition compile_condition(const Condition& condition);
Literal to_literal(const CompiledLiteral& literal);
Condition to_condition(const CompiledCondition& condition);

// Bits whose group belongs to `groups`, in registry order.
std::vector<BitCode> bits_in_groups(std::span<const FeatureGroup> groups);

// All single literals (bit, then its negation) followed by all two-literal
// conjunctions over distinct bits, in index order. Length 2m + 4 C(m, 2).
std::vector<Condition> generate_candidate_rules(
    std::span<const std::string> condition_bits, int max_conditions = 2);
std::vector<CompiledCondition> generate_candidates(std::span<const BitCode> bits,
                                                   int max_conditions = 2);

// ---------------------------------------------------------------------------
// Training data.

struct SubjectRow {
  std::uint32_t dashboard = 0;  // index into MiningData::dashboard_ids
  SubjectBits bits;
};

struct MiningData {
  std::vector<std::string> dashboard_ids;
  std::vector<SubjectRow> views;
  std::vector<SubjectRow> pairs;

  std::span<const SubjectRow> rows_for(const Mapping& m) const {
    return m.single_subject() ? std::span<const SubjectRow>(views)
                              : std::span<const SubjectRow>(pairs);
  }
};

// Binarizes every view and ordered pair with `thresholds`. Dashboards that
// share an id share a dashboard index.
MiningData build_mining_data(std::span<const FeaturizedDashboard> corpus,
                             const Thresholds& thresholds);

// Shuffled split of `n` dashboards into floor(n * train_frac) training and
// the rest test indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_corpus(
    std::size_t n, double train_frac, std::uint64_t seed);

struct FitOptions {
  int n_lambdas = 20;
  double lambda_min_ratio = 0.01;
  int n_folds = 5;
  // Candidate pool size after support filtering and de-duplication, ranked
  // by univariate association with the target.
  int max_screened = 256;
  std::uint64_t seed = kDefaultSeed;
  // L1 penalty multiplier for two-literal conditions relative to single
  // literals, so a conjunction enters only when it beats its simpler form.
  double conjunction_penalty = 1.5;
  // Fit at this lambda (relative to lambda_max) instead of cross-validating.
  std::optional<double> fixed_lambda_ratio;
  SolveOptions solve;
};

struct RuleTerm {
  std::size_t candidate = 0;  // index into the candidate list
  double coefficient = 0;
  double support = 0;  // fraction of training subjects where it fires
};

struct RuleModel {
  bool skipped = false;  // target constant on the training data
  double intercept = 0;
  double prior_logit = 0;
  double lambda = 0;
  double positive_rate = 0;
  std::vector<RuleTerm> terms;
  double train_acc = 0;
  double test_acc = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_candidates = 0;  // after screening
  bool converged = true;
  std::vector<std::string> warnings;

  // Logit of P(target) with the class-balance correction applied.
  double score(const SubjectBits& bits,
               std::span<const CompiledCondition> candidates) const;
};

// Fits an L1-penalized logistic model of `target` over the candidate rule
// indicators, with class-balanced sample weights and lambda picked by
// grouped (per-dashboard) k-fold cross-validated log-loss.
RuleModel fit_rule_model(std::span<const SubjectRow> train,
                         std::span<const CompiledCondition> candidates,
                         CompiledLiteral target, const FitOptions& options,
                         std::span<const SubjectRow> test = {});

inline double rule_importance(double coefficient, double support) {
  return std::abs(coefficient) * std::sqrt(support * (1.0 - support));
}

struct MineOptions {
  double train_frac = 0.75;
  std::uint64_t seed = kDefaultSeed;
  int top_rules = 3;
  int max_conditions = 2;
  unsigned threads = 1;
  std::string corpus_name;
  FitOptions fit;
};

// Splits, binarizes on the training part, fits one model per
// (mapping, target literal) and keeps the top positive rules by importance.
RuleSet mine_all(std::span<const FeaturizedDashboard> corpus,
                 std::span<const Mapping> mappings, const MineOptions& options);

// Same as mine_all with an explicit split and thresholds.
RuleSet mine_split(const MiningData& train, const MiningData& test,
                   const Thresholds& thresholds,
                   std::span<const Mapping> mappings, const MineOptions& options);

struct ModelEval {
  std::string mapping;
  Literal target;
  double accuracy = 0;
  std::size_t n = 0;
};

struct RuleEval {
  std::size_t rule = 0;  // index into RuleSet::rules
  double fire_rate = 0;
  std::optional<double> precision;  // empty if the rule never fires
};

struct EvalReport {
  std::vector<ModelEval> models;
  std::vector<RuleEval> rules;
  double macro_accuracy = 0;
};

// Accuracy of every stored model plus per-rule firing statistics on `data`,
// which must be binarized with the rule set's thresholds.
EvalReport evaluate_rules(const RuleSet& rules, const MiningData& data);

// "If <conditions>, then <target>." Unknown feature names fall back to the
// raw name and append a warning.
std::string render_rule(const DecisionRule& rule, const Thresholds& thresholds,
                        std::vector<std::string>* warnings = nullptr);

std::string render_report(const RuleSet& rules, const EvalReport* test_eval);

}  // namespace dminer

#endif  // DMINER_MINING_HPP_
