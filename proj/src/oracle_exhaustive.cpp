#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "dminer/oracle.hpp"

namespace dminer::oracle {

namespace {

std::int64_t q(double v) { return std::llround(v * 1e9); }

struct PairTable {
  std::size_t i, j;
  std::array<Tally, 9> by_combo;
};

std::vector<PairTable> pair_tables(std::span<const ViewSpec> views,
                                   std::span<const GridRect> rects,
                                   const NaiveRules& rules) {
  std::vector<PairTable> out;
  for (std::size_t i = 0; i < views.size(); ++i) {
    for (std::size_t j = i + 1; j < views.size(); ++j) {
      PairTable p{i, j, {}};
      for (int s_ij = 0; s_ij < 3; ++s_ij) {
        for (int s_ji = 0; s_ji < 3; ++s_ji) {
          const auto ij = static_cast<LinkState>(s_ij);
          const auto ji = static_cast<LinkState>(s_ji);
          const Tally fwd = rules.tally(NaiveSubject{&views[i], &views[j], rects[i], rects[j], ij, ji}, true);
          const Tally bwd = rules.tally(NaiveSubject{&views[j], &views[i], rects[j], rects[i], ji, ij}, true);
          p.by_combo[s_ij * 3 + s_ji] = Tally{fwd.cost + bwd.cost, fwd.obeyed + bwd.obeyed};
        }
      }
      out.push_back(p);
    }
  }
  return out;
}

// Joint search given single-view totals and per-pair tables.
ExhaustiveResult joint(std::size_t n, const Tally& singles,
                       const std::vector<PairTable>& pairs) {
  const std::size_t p = pairs.size();
  std::vector<int> digits(p, 0);
  std::vector<int> best_digits;
  Tally best;
  int best_links = 0;
  bool first = true;
  while (true) {
    Tally t = singles;
    int links = 0;
    for (std::size_t k = 0; k < p; ++k) {
      const Tally& pt = pairs[k].by_combo[digits[k]];
      t.cost += pt.cost;
      t.obeyed += pt.obeyed;
      links += (digits[k] / 3 != 0) + (digits[k] % 3 != 0);
    }
    if (first || q(t.cost) < q(best.cost) ||
        (q(t.cost) == q(best.cost) && links < best_links)) {
      best = t;
      best_links = links;
      best_digits = digits;
      first = false;
    }
    // Next combination in lexicographic order.
    std::size_t k = p;
    while (k > 0 && digits[k - 1] == 8) digits[--k] = 0;
    if (k == 0) break;
    ++digits[k - 1];
  }
  ExhaustiveResult r;
  r.cost = best.cost;
  r.obeyed = best.obeyed;
  r.links.assign(n * n, LinkState::kNone);
  for (std::size_t k = 0; k < p; ++k) {
    r.links[pairs[k].i * n + pairs[k].j] = static_cast<LinkState>(best_digits[k] / 3);
    r.links[pairs[k].j * n + pairs[k].i] = static_cast<LinkState>(best_digits[k] % 3);
  }
  return r;
}

Tally single_total(std::span<const ViewSpec> views, std::span<const GridRect> rects,
                   const NaiveRules& rules) {
  Tally t;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const Tally s = rules.tally(NaiveSubject{&views[v], nullptr, rects[v], {}, {}, {}}, false);
    t.cost += s.cost;
    t.obeyed += s.obeyed;
  }
  return t;
}

}  // namespace

ExhaustiveResult joint_coordination(std::span<const ViewSpec> views,
                                    std::span<const GridRect> assignment,
                                    const RuleSet& rules) {
  const NaiveRules naive(rules.rules, rules.thresholds);
  auto r = joint(views.size(), single_total(views, assignment, naive),
                 pair_tables(views, assignment, naive));
  r.assignment.assign(assignment.begin(), assignment.end());
  return r;
}

ExhaustiveResult exhaustive_recommend(std::span<const ViewSpec> views,
                                      const RuleSet& rules) {
  const std::size_t n = views.size();
  if (n < 1) throw InputError("no views");
  const NaiveRules naive(rules.rules, rules.thresholds);
  const auto tilings = brute_force_tilings(static_cast<int>(n));
  ExhaustiveResult best;
  bool first = true;
  std::uint64_t index = 0;
  for (const auto& tiling : tilings) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::vector<GridRect> rects(n);
      for (std::size_t v = 0; v < n; ++v) rects[v] = tiling[perm[v]];
      ExhaustiveResult r = joint(n, single_total(views, rects, naive),
                                 pair_tables(views, rects, naive));
      r.assignment = rects;
      r.index = index++;
      if (first || q(r.cost) < q(best.cost) ||
          (q(r.cost) == q(best.cost) && q(r.obeyed) > q(best.obeyed))) {
        best = std::move(r);
        first = false;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return best;
}

}  // namespace dminer::oracle
