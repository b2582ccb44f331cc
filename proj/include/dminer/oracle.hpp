#ifndef DMINER_ORACLE_HPP_
#define DMINER_ORACLE_HPP_

// Reference implementations used to check the main pipeline. They re-derive
// features from dashboard specs by name and never call the feature,
// binarization or recommender code they are meant to check.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dminer/corpus.hpp"
#include "dminer/mining.hpp"
#include "dminer/recommender.hpp"
#include "json.hpp"

namespace dminer::oracle {

// Every labeling of the 16 cells into n groups (restricted growth order)
// whose groups are solid rectangles, as sorted rectangle lists in sorted
// order.
std::vector<Tiling> brute_force_tilings(int n_views);

// ---------------------------------------------------------------------------
// Naive evaluator

// Everything a literal can look at: view A (and B for pairs), their grid
// rectangles and the two link directions.
struct NaiveSubject {
  const ViewSpec* a = nullptr;
  const ViewSpec* b = nullptr;
  GridRect ra, rb;
  LinkState ab = LinkState::kNone;
  LinkState ba = LinkState::kNone;
};

// Raw value of a feature by name, computed directly from the subject.
// Booleans are 0/1, the mark is its category index.
double naive_value(const std::string& feature, const NaiveSubject& s);

// Every feature name the naive evaluator understands, with whether it is
// numeric and whether it needs a pair.
struct NaiveFeatureInfo {
  std::string name;
  bool numeric;
  bool pair;
};
const std::vector<NaiveFeatureInfo>& naive_features();

struct Outcome {
  bool fired = false;
  bool obeyed = false;
};

class NaiveRules {
 public:
  NaiveRules(std::span<const DecisionRule> rules, const Thresholds& thresholds);

  std::size_t size() const { return rules_.size(); }
  bool pair_rule(std::size_t r) const { return rules_[r].pair; }
  double importance(std::size_t r) const { return rules_[r].importance; }
  // True if the rule reads a coordination feature anywhere.
  bool uses_links(std::size_t r) const { return rules_[r].links; }

  Outcome evaluate(std::size_t r, const NaiveSubject& s) const;
  // Sum over single-view rules (pair == false) or pair rules.
  Tally tally(const NaiveSubject& s, bool pair) const;

 private:
  struct Lit {
    int feature;  // index into naive_features()
    int category = -1;
    double threshold = 0;
    bool numeric = false;
    bool negated = false;
    bool holds(const NaiveSubject& s) const;
  };
  struct Rule {
    std::vector<Lit> condition;
    Lit target;
    double importance;
    bool pair;
    bool links;
  };
  std::vector<Rule> rules_;
};

// ---------------------------------------------------------------------------
// Exhaustive recommendation

struct ExhaustiveResult {
  std::uint64_t index = 0;  // canonical candidate index
  std::vector<GridRect> assignment;
  std::vector<LinkState> links;  // n x n
  double cost = 0;
  double obeyed = 0;
};

// Joint brute force over all 9^P link combinations for a fixed placement.
// Ties: lower cost, then fewer links, then lexicographic combination order.
ExhaustiveResult joint_coordination(std::span<const ViewSpec> views,
                                    std::span<const GridRect> assignment,
                                    const RuleSet& rules);

// Every tiling, permutation and joint link combination; returns the argmin
// of (cost, -obeyed, canonical index).
ExhaustiveResult exhaustive_recommend(std::span<const ViewSpec> views,
                                      const RuleSet& rules);

// ---------------------------------------------------------------------------
// Synthetic corpus with planted rules

struct PlantedRule {
  DecisionRule rule;
  double p_obey = 0.9;
};

std::vector<PlantedRule> parse_planted(std::string_view json_text);
nlohmann::json planted_to_json(std::span<const PlantedRule> planted);

// The ten-rule fixture used by the recovery tests.
std::vector<PlantedRule> default_planted_rules(double p_obey = 0.9);

struct GeneratorOptions {
  std::size_t count = 854;
  double noise = 0.0;
  std::uint64_t seed = kDefaultSeed;
  std::size_t pilot_count = 400;
  int arrangement_tries = 400;
  int content_tries = 200;
};

struct RuleLedger {
  std::size_t fired = 0;
  std::size_t obeyed = 0;
};

struct GeneratedCorpus {
  std::vector<DashboardSpec> dashboards;
  Thresholds planning_thresholds;  // pilot-corpus means used while steering
  Thresholds thresholds;           // means over the generated corpus
  std::vector<RuleLedger> rules;   // aligned with the planted list
  nlohmann::json ledger;
};

// Throws InputError naming the rules when the planted set cannot be
// satisfied together.
GeneratedCorpus generate_corpus(std::span<const PlantedRule> planted,
                                const GeneratorOptions& options);

}  // namespace dminer::oracle

#endif  // DMINER_ORACLE_HPP_
