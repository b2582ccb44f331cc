#include "dminer/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

namespace dminer {

using nlohmann::json;

namespace {

constexpr int kRects = 100;

std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t k = 2; k <= n; ++k) f *= k;
  return f;
}

std::uint64_t permutation_rank(std::span<const int> perm) {
  std::uint64_t rank = 0;
  const std::size_t n = perm.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t smaller = 0;
    for (std::size_t j = i + 1; j < n; ++j) smaller += perm[j] < perm[i];
    rank += smaller * factorial(n - 1 - i);
  }
  return rank;
}

void check_views(std::span<const ViewSpec> views, std::size_t min_views = 2) {
  if (views.size() > static_cast<std::size_t>(kMaxRecommendViews)) {
    throw CapacityError("recommendation supports at most 8 views, got " +
                        std::to_string(views.size()));
  }
  if (views.size() < min_views) {
    throw InputError("recommendation needs at least " + std::to_string(min_views) + " views");
  }
  std::set<std::string> ids;
  for (const auto& v : views) {
    if (!ids.insert(v.id).second) throw InputError("duplicate view id '" + v.id + "'");
  }
}

void check_pruning(double prune_frac, int prune_min) {
  if (!(prune_frac > 0.0 && prune_frac <= 1.0)) {
    throw InputError("prune fraction must lie in (0, 1]");
  }
  if (prune_min < 1) throw InputError("prune minimum must be at least 1");
}

// Calls fn(tiling, perm, index) for every candidate in canonical order.
template <typename Fn>
void for_each_candidate(std::size_t n, Fn&& fn) {
  const auto& tilings = enumerate_tilings(static_cast<int>(n));
  std::vector<int> perm(n);
  std::uint64_t index = 0;
  for (std::size_t t = 0; t < tilings.size(); ++t) {
    std::iota(perm.begin(), perm.end(), 0);
    do {
      fn(t, perm, index++);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

int link_count(int combo) {
  return (combo_forward(combo) != LinkState::kNone) +
         (combo_backward(combo) != LinkState::kNone);
}

}  // namespace

std::int64_t cost_key(double value) { return std::llround(value * 1e9); }

// ---------------------------------------------------------------------------
// CandidateScorer

CandidateScorer::CandidateScorer(std::span<const ViewSpec> views, const RuleSet& rules)
    : views_(views.begin(), views.end()) {
  const auto& reg = FeatureRegistry::get();
  auto check_threshold = [&](const CompiledLiteral& lit, const std::string& name) {
    const Section section =
        lit.code < kPairBitOffset ? Section::kSingle : Section::kPair;
    const auto& def = reg.features(section)[reg.bit(lit.code).feature];
    if (def.numeric() && !rules.thresholds.contains(def.name)) {
      throw ConsistencyError("rule set has no threshold for feature '" + name + "'");
    }
  };
  for (std::size_t k = 0; k < rules.rules.size(); ++k) {
    const auto& r = rules.rules[k];
    const Mapping& mapping = find_mapping(r.mapping);
    Compiled c{k, compile_condition(r.condition), compile_literal(r.target),
               r.importance, mapping.single_subject()};
    for (std::uint8_t i = 0; i < c.condition.size; ++i) {
      check_threshold(c.condition.literals[i], r.condition[i].feature);
    }
    check_threshold(c.target, r.target.feature);
    if (c.s2s) {
      has_s2s_ = true;
      single_rules_.push_back(c);
    } else {
      pair_rules_.push_back(c);
    }
  }
  single_table_ = threshold_table(Section::kSingle, rules.thresholds, false);
  pair_table_ = threshold_table(Section::kPair, rules.thresholds, false);
}

SubjectBits CandidateScorer::view_bits(std::size_t v, const GridRect& r) const {
  std::array<double, kNumSingleFeatures> values{};
  single_view_values(views_[v], r, std::nullopt, values);
  return SubjectBits{bits_from_values(Section::kSingle, values, single_table_), 0};
}

SubjectBits CandidateScorer::pair_bits(std::size_t a, std::size_t b, const GridRect& ra,
                                       const GridRect& rb, LinkState ab,
                                       LinkState ba) const {
  std::array<double, kNumPairFeatures> values{};
  pair_values(views_[a], views_[b], ra, rb, ab, ba, values);
  return SubjectBits{view_bits(a, ra).single,
                     bits_from_values(Section::kPair, values, pair_table_)};
}

void CandidateScorer::tally(const SubjectBits& bits, bool pair_rules, Tally& t,
                            std::vector<RuleCheck>* out,
                            const std::string& subject) const {
  for (const auto& r : pair_rules ? pair_rules_ : single_rules_) {
    if (!r.condition.fires(bits)) continue;
    const bool ok = r.target.eval(bits);
    (ok ? t.obeyed : t.cost) += r.importance;
    if (out) out->push_back(RuleCheck{r.index, subject, ok, r.importance});
  }
}

double CandidateScorer::s2s(std::size_t v, const GridRect& r) const {
  Tally t;
  tally(view_bits(v, r), false, t, nullptr, {});
  return t.obeyed - t.cost;
}

Tally CandidateScorer::single(std::size_t v, const GridRect& r) const {
  Tally t;
  tally(view_bits(v, r), false, t, nullptr, {});
  return t;
}

Tally CandidateScorer::pair(std::size_t i, std::size_t j, const GridRect& ri,
                           const GridRect& rj, int combo) const {
  Tally t;
  const LinkState ij = combo_forward(combo), ji = combo_backward(combo);
  tally(pair_bits(i, j, ri, rj, ij, ji), true, t, nullptr, {});
  tally(pair_bits(j, i, rj, ri, ji, ij), true, t, nullptr, {});
  return t;
}

PairChoice CandidateScorer::best_pair(std::size_t i, std::size_t j, const GridRect& ri,
                                      const GridRect& rj) const {
  std::array<double, kNumPairFeatures> fwd{}, bwd{};
  pair_values(views_[i], views_[j], ri, rj, LinkState::kNone, LinkState::kNone, fwd);
  pair_values(views_[j], views_[i], rj, ri, LinkState::kNone, LinkState::kNone, bwd);
  const std::uint64_t single_i = view_bits(i, ri).single;
  const std::uint64_t single_j = view_bits(j, rj).single;
  PairChoice best;
  bool first = true;
  for (int c = 0; c < kCoordCombos; ++c) {
    const LinkState ij = combo_forward(c), ji = combo_backward(c);
    set_link_values(ij, ji, fwd);
    set_link_values(ji, ij, bwd);
    Tally t;
    tally(SubjectBits{single_i, bits_from_values(Section::kPair, fwd, pair_table_)},
          true, t, nullptr, {});
    tally(SubjectBits{single_j, bits_from_values(Section::kPair, bwd, pair_table_)},
          true, t, nullptr, {});
    const auto key = cost_key(t.cost), best_key = cost_key(best.tally.cost);
    if (first || key < best_key ||
        (key == best_key && link_count(c) < link_count(best.combo))) {
      best = PairChoice{c, t};
      first = false;
    }
  }
  return best;
}

void CandidateScorer::score(Candidate& c) const {
  const std::size_t n = views_.size();
  Tally total;
  c.breakdown.clear();
  for (std::size_t v = 0; v < n; ++v) {
    tally(view_bits(v, c.assignment[v]), false, total, &c.breakdown, views_[v].id);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const LinkState ij = c.link(i, j), ji = c.link(j, i);
      tally(pair_bits(i, j, c.assignment[i], c.assignment[j], ij, ji), true, total,
            &c.breakdown, views_[i].id + "," + views_[j].id);
      tally(pair_bits(j, i, c.assignment[j], c.assignment[i], ji, ij), true, total,
            &c.breakdown, views_[j].id + "," + views_[i].id);
    }
  }
  c.full_cost = total.cost;
  c.obeyed = total.obeyed;
}

// ---------------------------------------------------------------------------
// Pipeline

Candidate make_candidate(std::size_t tiling, std::span<const int> permutation) {
  const std::size_t n = permutation.size();
  const auto& tilings = enumerate_tilings(static_cast<int>(n));
  Candidate c;
  c.tiling = tiling;
  c.permutation.assign(permutation.begin(), permutation.end());
  c.index = tiling * factorial(n) + permutation_rank(permutation);
  for (std::size_t v = 0; v < n; ++v) {
    c.assignment.push_back(tilings.at(tiling).at(permutation[v]));
  }
  c.links.assign(n * n, LinkState::kNone);
  return c;
}

namespace {

// Per-view S2S score for every grid rectangle.
std::vector<std::array<double, kRects>> s2s_table(const CandidateScorer& scorer) {
  std::vector<std::array<double, kRects>> table(scorer.n_views());
  for (std::size_t v = 0; v < scorer.n_views(); ++v) {
    for (int x = 0; x < kGridSize; ++x) {
      for (int y = 0; y < kGridSize; ++y) {
        for (int w = 1; x + w <= kGridSize; ++w) {
          for (int h = 1; y + h <= kGridSize; ++h) {
            const GridRect r{x, y, w, h};
            table[v][rect_id(r)] = scorer.s2s(v, r);
          }
        }
      }
    }
  }
  return table;
}

struct Survivor {
  std::int64_t key;  // quantized S2S score
  std::uint64_t index;
  double score;
  std::size_t tiling;
  std::vector<int> perm;
};

// Better survivors first: higher score, then canonical order.
struct SurvivorBetter {
  bool operator()(const Survivor& a, const Survivor& b) const {
    return a.key != b.key ? a.key > b.key : a.index < b.index;
  }
};

std::vector<Candidate> prune(const CandidateScorer& scorer, double prune_frac,
                             int prune_min, bool& pruned, std::uint64_t& total) {
  const std::size_t n = scorer.n_views();
  const auto& tilings = enumerate_tilings(static_cast<int>(n));
  total = tilings.size() * factorial(n);
  const auto table = s2s_table(scorer);
  const auto keep = std::max<std::uint64_t>(
      static_cast<std::uint64_t>(std::ceil(prune_frac * static_cast<double>(total))),
      static_cast<std::uint64_t>(prune_min));
  pruned = scorer.has_s2s_rules() && keep < total;

  std::vector<std::array<int, kMaxRecommendViews>> ids(tilings.size());
  for (std::size_t t = 0; t < tilings.size(); ++t) {
    for (std::size_t r = 0; r < n; ++r) ids[t][r] = rect_id(tilings[t][r]);
  }
  std::priority_queue<Survivor, std::vector<Survivor>, SurvivorBetter> heap;
  for_each_candidate(n, [&](std::size_t t, const std::vector<int>& perm,
                            std::uint64_t index) {
    double sum = 0;
    for (std::size_t v = 0; v < n; ++v) sum += table[v][ids[t][perm[v]]];
    const double score = sum / static_cast<double>(n);
    Survivor s{cost_key(score), index, score, t, {}};
    if (pruned && heap.size() >= keep) {
      if (!SurvivorBetter{}(s, heap.top())) return;
      heap.pop();
    }
    s.perm = perm;
    heap.push(std::move(s));
  });
  std::vector<Survivor> kept;
  kept.reserve(heap.size());
  while (!heap.empty()) {
    kept.push_back(heap.top());
    heap.pop();
  }
  std::sort(kept.begin(), kept.end(),
            [](const Survivor& a, const Survivor& b) { return a.index < b.index; });
  std::vector<Candidate> out;
  out.reserve(kept.size());
  for (const auto& s : kept) {
    Candidate c = make_candidate(s.tiling, s.perm);
    c.s2s_score = s.score;
    out.push_back(std::move(c));
  }
  return out;
}

bool ranks_before(const Candidate& a, const Candidate& b) {
  const auto ca = cost_key(a.full_cost), cb = cost_key(b.full_cost);
  if (ca != cb) return ca < cb;
  const auto oa = cost_key(a.obeyed), ob = cost_key(b.obeyed);
  if (oa != ob) return oa > ob;
  return a.index < b.index;
}

class PairCache {
 public:
  PairCache(const CandidateScorer& scorer)
      : scorer_(scorer),
        n_(scorer.n_views()),
        choices_(n_ * n_ * kRects * kRects),
        ready_(choices_.size(), 0) {}

  std::size_t slot(std::size_t i, std::size_t j, int ri, int rj) const {
    return ((i * n_ + j) * kRects + ri) * kRects + rj;
  }

  // Computes every missing slot the candidates need, in parallel.
  void fill(std::span<const Candidate> candidates, unsigned threads) {
    struct Key {
      std::size_t slot, i, j;
      GridRect ri, rj;
    };
    std::vector<Key> keys;
    for (const auto& c : candidates) {
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) {
          const auto s = slot(i, j, rect_id(c.assignment[i]), rect_id(c.assignment[j]));
          if (ready_[s]) continue;
          ready_[s] = 1;
          keys.push_back(Key{s, i, j, c.assignment[i], c.assignment[j]});
        }
      }
    }
    parallel_for(keys.size(), threads, [&](std::size_t k) {
      const Key& key = keys[k];
      choices_[key.slot] = scorer_.best_pair(key.i, key.j, key.ri, key.rj);
    });
  }

  const PairChoice& get(std::size_t i, std::size_t j, const GridRect& ri,
                        const GridRect& rj) {
    const auto s = slot(i, j, rect_id(ri), rect_id(rj));
    if (!ready_[s]) {
      choices_[s] = scorer_.best_pair(i, j, ri, rj);
      ready_[s] = 1;
    }
    return choices_[s];
  }

 private:
  const CandidateScorer& scorer_;
  std::size_t n_;
  std::vector<PairChoice> choices_;
  std::vector<char> ready_;
};

// Chooses links per pair and totals the cost from the caches.
void coordinate_and_total(Candidate& c, PairCache& pairs,
                          const std::vector<std::array<Tally, kRects>>& singles) {
  const std::size_t n = c.assignment.size();
  Tally total;
  for (std::size_t v = 0; v < n; ++v) {
    const Tally& t = singles[v][rect_id(c.assignment[v])];
    total.cost += t.cost;
    total.obeyed += t.obeyed;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const PairChoice& p = pairs.get(i, j, c.assignment[i], c.assignment[j]);
      c.links[i * n + j] = combo_forward(p.combo);
      c.links[j * n + i] = combo_backward(p.combo);
      total.cost += p.tally.cost;
      total.obeyed += p.tally.obeyed;
    }
  }
  c.full_cost = total.cost;
  c.obeyed = total.obeyed;
}

std::vector<std::array<Tally, kRects>> single_table(const CandidateScorer& scorer) {
  std::vector<std::array<Tally, kRects>> table(scorer.n_views());
  for (std::size_t v = 0; v < scorer.n_views(); ++v) {
    for (int x = 0; x < kGridSize; ++x) {
      for (int y = 0; y < kGridSize; ++y) {
        for (int w = 1; x + w <= kGridSize; ++w) {
          for (int h = 1; y + h <= kGridSize; ++h) {
            const GridRect r{x, y, w, h};
            table[v][rect_id(r)] = scorer.single(v, r);
          }
        }
      }
    }
  }
  return table;
}

}  // namespace

std::vector<Candidate> s2s_prune(std::span<const ViewSpec> views, const RuleSet& rules,
                                 double prune_frac, int prune_min,
                                 std::vector<std::string>* warnings) {
  check_views(views, 1);
  check_pruning(prune_frac, prune_min);
  CandidateScorer scorer(views, rules);
  if (!scorer.has_s2s_rules() && warnings) {
    warnings->push_back("rule set has no SDE->SA rules; pruning disabled");
  }
  bool pruned = false;
  std::uint64_t total = 0;
  return prune(scorer, prune_frac, prune_min, pruned, total);
}

Candidate optimize_coordination(Candidate candidate, std::span<const ViewSpec> views,
                                const RuleSet& rules) {
  CandidateScorer scorer(views, rules);
  const std::size_t n = views.size();
  candidate.links.assign(n * n, LinkState::kNone);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto p = scorer.best_pair(i, j, candidate.assignment[i], candidate.assignment[j]);
      candidate.links[i * n + j] = combo_forward(p.combo);
      candidate.links[j * n + i] = combo_backward(p.combo);
    }
  }
  return candidate;
}

Candidate score_full(Candidate candidate, std::span<const ViewSpec> views,
                     const RuleSet& rules) {
  CandidateScorer scorer(views, rules);
  if (candidate.links.size() != views.size() * views.size()) {
    candidate.links.assign(views.size() * views.size(), LinkState::kNone);
  }
  scorer.score(candidate);
  return candidate;
}

Recommendation recommend(std::span<const ViewSpec> views, const RuleSet& rules,
                         const RecommendOptions& options) {
  check_views(views);
  check_pruning(options.prune_frac, options.prune_min);
  if (options.k < 1) throw InputError("k must be at least 1");
  CandidateScorer scorer(views, rules);
  Recommendation rec;
  const std::size_t n = views.size();
  rec.n_tilings = enumerate_tilings(static_cast<int>(n)).size();
  rec.n_candidates = rec.n_tilings * factorial(n);
  if (!scorer.has_s2s_rules()) {
    rec.warnings.push_back("rule set has no SDE->SA rules; pruning disabled");
  }

  const auto singles = single_table(scorer);
  PairCache pairs(scorer);
  const auto k = static_cast<std::size_t>(options.k);
  auto worse = [](const Candidate& a, const Candidate& b) { return ranks_before(a, b); };

  const bool prunable =
      scorer.has_s2s_rules() &&
      std::max<std::uint64_t>(
          static_cast<std::uint64_t>(
              std::ceil(options.prune_frac * static_cast<double>(rec.n_candidates))),
          static_cast<std::uint64_t>(options.prune_min)) < rec.n_candidates;

  std::vector<Candidate> best;
  if (prunable) {
    std::uint64_t total = 0;
    auto survivors = prune(scorer, options.prune_frac, options.prune_min, rec.pruned, total);
    pairs.fill(survivors, options.threads);
    parallel_for(survivors.size(), options.threads, [&](std::size_t i) {
      coordinate_and_total(survivors[i], pairs, singles);
    });
    rec.n_scored = survivors.size();
    std::sort(survivors.begin(), survivors.end(), ranks_before);
    if (survivors.size() > k) survivors.resize(k);
    best = std::move(survivors);
  } else {
    // Everything survives: stream straight into full scoring, keeping the
    // current top k in a heap whose top is the worst kept candidate.
    const auto s2s = s2s_table(scorer);
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> heap(worse);
    const auto& tilings = enumerate_tilings(static_cast<int>(n));
    for_each_candidate(n, [&](std::size_t t, const std::vector<int>& perm,
                              std::uint64_t index) {
      Candidate c;
      c.index = index;
      c.tiling = t;
      c.permutation = perm;
      c.links.assign(n * n, LinkState::kNone);
      double s = 0;
      for (std::size_t v = 0; v < n; ++v) {
        c.assignment.push_back(tilings[t][perm[v]]);
        s += s2s[v][rect_id(c.assignment[v])];
      }
      c.s2s_score = s / static_cast<double>(n);
      coordinate_and_total(c, pairs, singles);
      ++rec.n_scored;
      if (heap.size() < k) {
        heap.push(std::move(c));
      } else if (ranks_before(c, heap.top())) {
        heap.pop();
        heap.push(std::move(c));
      }
    });
    while (!heap.empty()) {
      best.push_back(heap.top());
      heap.pop();
    }
    std::sort(best.begin(), best.end(), ranks_before);
  }

  for (auto& c : best) {
    Candidate full = c;
    scorer.score(full);
    c.breakdown = std::move(full.breakdown);
  }
  rec.candidates = std::move(best);
  return rec;
}

// ---------------------------------------------------------------------------
// Output

json to_json(const Recommendation& rec, std::span<const ViewSpec> views,
             const RuleSet& rules) {
  json candidates = json::array();
  int rank = 0;
  for (const auto& c : rec.candidates) {
    json assignment = json::object();
    for (std::size_t v = 0; v < views.size(); ++v) {
      const auto& r = c.assignment[v];
      assignment[views[v].id] = {{"gx", r.x}, {"gy", r.y}, {"gw", r.w}, {"gh", r.h}};
    }
    json coordination = json::array();
    for (std::size_t a = 0; a < views.size(); ++a) {
      for (std::size_t b = 0; b < views.size(); ++b) {
        if (a == b || c.link(a, b) == LinkState::kNone) continue;
        coordination.push_back(
            {{"source", views[a].id},
             {"target", views[b].id},
             {"type", c.link(a, b) == LinkState::kFilter ? "filter" : "brush"}});
      }
    }
    json breakdown = json::array();
    for (const auto& check : c.breakdown) {
      const auto& r = rules.rules[check.rule];
      breakdown.push_back({{"rule", check.rule},
                           {"mapping", r.mapping},
                           {"subject", check.subject},
                           {"status", check.obeyed ? "obeyed" : "violated"},
                           {"importance", check.importance},
                           {"text", render_rule(r, rules.thresholds)}});
    }
    candidates.push_back({{"rank", ++rank},
                          {"index", c.index},
                          {"assignment", std::move(assignment)},
                          {"coordination", std::move(coordination)},
                          {"s2s_score", c.s2s_score},
                          {"full_cost", c.full_cost},
                          {"obeyed_importance", c.obeyed},
                          {"breakdown", std::move(breakdown)}});
  }
  json ids = json::array();
  for (const auto& v : views) ids.push_back(v.id);
  return json{{"views", std::move(ids)},
              {"n_tilings", rec.n_tilings},
              {"n_candidates", rec.n_candidates},
              {"n_scored", rec.n_scored},
              {"pruned", rec.pruned},
              {"warnings", rec.warnings},
              {"candidates", std::move(candidates)}};
}

std::string serialize_recommendation(const Recommendation& rec,
                                     std::span<const ViewSpec> views,
                                     const RuleSet& rules) {
  return to_json(rec, views, rules).dump(2) + "\n";
}

}  // namespace dminer
