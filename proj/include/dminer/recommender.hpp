#ifndef DMINER_RECOMMENDER_HPP_
#define DMINER_RECOMMENDER_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dminer/features.hpp"
#include "dminer/mining.hpp"
#include "json.hpp"

namespace dminer {

inline constexpr int kMaxRecommendViews = 8;

// An exact tiling of the 4 x 4 grid, rectangles sorted ascending.
using Tiling = std::vector<GridRect>;

// All tilings of the grid into n_views rectangles, in canonical
// (lexicographic) order. Computed once per n and cached.
const std::vector<Tiling>& enumerate_tilings(int n_views);

// Dense id in [0, 100) of a rectangle inside the 4 x 4 grid.
int rect_id(const GridRect& r);

inline constexpr int kCoordCombos = 9;
// Combination c means (A -> B, B -> A) = (c / 3, c % 3) as LinkState values.
inline LinkState combo_forward(int c) { return static_cast<LinkState>(c / 3); }
inline LinkState combo_backward(int c) { return static_cast<LinkState>(c % 3); }

struct RuleCheck {
  std::size_t rule = 0;  // index into RuleSet::rules
  std::string subject;   // "a" or "a,b"
  bool obeyed = false;
  double importance = 0;
};

struct Candidate {
  // Canonical position: tiling * n! + lexicographic rank of `permutation`.
  std::uint64_t index = 0;
  std::size_t tiling = 0;
  std::vector<int> permutation;        // view v gets tiling rect permutation[v]
  std::vector<GridRect> assignment;    // aligned with the views
  std::vector<LinkState> links;        // n x n, row = source, col = target
  double s2s_score = 0;
  double full_cost = 0;
  double obeyed = 0;  // importance of fired-and-obeyed rules
  std::vector<RuleCheck> breakdown;    // every fired rule

  LinkState link(std::size_t a, std::size_t b) const {
    return links[a * assignment.size() + b];
  }
};

struct Tally {
  double cost = 0;
  double obeyed = 0;
};

struct PairChoice {
  int combo = 0;
  Tally tally;
};

// Compiled rules bound to a fixed list of views. Evaluates rules over the
// views' feature bits for any placement and coordination state.
class CandidateScorer {
 public:
  CandidateScorer(std::span<const ViewSpec> views, const RuleSet& rules);

  std::size_t n_views() const { return views_.size(); }
  bool has_s2s_rules() const { return has_s2s_; }

  // Sum of obeyed minus violated SDE -> SA importance for view v at r.
  double s2s(std::size_t v, const GridRect& r) const;
  Tally single(std::size_t v, const GridRect& r) const;
  // Both ordered subjects of the pair (i, j) under one coordination combo.
  Tally pair(std::size_t i, std::size_t j, const GridRect& ri, const GridRect& rj,
             int combo) const;
  // Minimum cost combo; ties go to fewer links, then the lower combo index.
  PairChoice best_pair(std::size_t i, std::size_t j, const GridRect& ri,
                       const GridRect& rj) const;

  // Cost, obeyed importance and breakdown under the candidate's own links.
  void score(Candidate& c) const;

  SubjectBits view_bits(std::size_t v, const GridRect& r) const;
  SubjectBits pair_bits(std::size_t a, std::size_t b, const GridRect& ra,
                        const GridRect& rb, LinkState ab, LinkState ba) const;

 private:
  struct Compiled {
    std::size_t index;
    CompiledCondition condition;
    CompiledLiteral target;
    double importance;
    bool s2s;
  };
  void tally(const SubjectBits& bits, bool pair_rules, Tally& t,
             std::vector<RuleCheck>* out, const std::string& subject) const;

  std::vector<ViewSpec> views_;
  std::vector<double> single_table_;
  std::vector<double> pair_table_;
  std::vector<Compiled> single_rules_;
  std::vector<Compiled> pair_rules_;
  bool has_s2s_ = false;
};

// Orders candidate costs: equal within 1e-9 counts as a tie.
std::int64_t cost_key(double value);

struct RecommendOptions {
  int k = 3;
  double prune_frac = 0.01;
  int prune_min = 10;
  unsigned threads = 1;
};

struct Recommendation {
  std::vector<Candidate> candidates;  // best first
  std::size_t n_tilings = 0;
  std::uint64_t n_candidates = 0;
  std::uint64_t n_scored = 0;
  bool pruned = false;
  std::vector<std::string> warnings;
};

// Candidates surviving single-view pruning, in canonical order, with
// s2s_score set. Without SDE -> SA rules every candidate survives.
std::vector<Candidate> s2s_prune(std::span<const ViewSpec> views, const RuleSet& rules,
                                 double prune_frac = 0.01, int prune_min = 10,
                                 std::vector<std::string>* warnings = nullptr);

// Picks the best link combination for every unordered view pair.
Candidate optimize_coordination(Candidate candidate, std::span<const ViewSpec> views,
                                const RuleSet& rules);

// Fills full_cost, obeyed and breakdown from the candidate's links.
Candidate score_full(Candidate candidate, std::span<const ViewSpec> views,
                     const RuleSet& rules);

// enumerate -> prune -> coordinate -> score -> rank. Throws CapacityError
// above eight views and InputError below two.
Recommendation recommend(std::span<const ViewSpec> views, const RuleSet& rules,
                         const RecommendOptions& options = {});

// Builds a candidate from a tiling index and permutation.
Candidate make_candidate(std::size_t tiling, std::span<const int> permutation);

nlohmann::json to_json(const Recommendation& rec, std::span<const ViewSpec> views,
                       const RuleSet& rules);
std::string serialize_recommendation(const Recommendation& rec,
                                     std::span<const ViewSpec> views,
                                     const RuleSet& rules);

std::string render_svg(const Candidate& candidate, std::span<const ViewSpec> views);

}  // namespace dminer

#endif  // DMINER_RECOMMENDER_HPP_
