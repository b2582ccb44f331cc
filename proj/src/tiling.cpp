#include <algorithm>
#include <array>
#include <bit>
#include <map>
#include <mutex>

#include "dminer/common.hpp"
#include "dminer/recommender.hpp"

namespace dminer {

namespace {

constexpr int kN = kGridSize;
constexpr std::uint32_t kFull = (1u << (kN * kN)) - 1;

std::uint32_t rect_mask(int x, int y, int w, int h) {
  std::uint32_t m = 0;
  for (int dy = 0; dy < h; ++dy) {
    for (int dx = 0; dx < w; ++dx) m |= 1u << ((y + dy) * kN + x + dx);
  }
  return m;
}

class TilingEnumerator {
 public:
  // Tilings of the uncovered cells of `mask` into exactly k rectangles,
  // each placing a rectangle at the topmost-leftmost free cell first.
  const std::vector<Tiling>& solve(std::uint32_t mask, int k) {
    const auto key = std::make_pair(mask, k);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<Tiling> out;
    const int free_cells = kN * kN - std::popcount(mask);
    if (mask == kFull) {
      if (k == 0) out.emplace_back();
    } else if (k > 0 && k <= free_cells) {
      const int cell = std::countr_one(mask);
      const int x = cell % kN, y = cell / kN;
      for (int h = 1; y + h <= kN; ++h) {
        for (int w = 1; x + w <= kN; ++w) {
          const std::uint32_t r = rect_mask(x, y, w, h);
          if (r & mask) break;  // wider rectangles hit the same cell
          for (const auto& rest : solve(mask | r, k - 1)) {
            Tiling t;
            t.reserve(rest.size() + 1);
            t.push_back(GridRect{x, y, w, h});
            t.insert(t.end(), rest.begin(), rest.end());
            out.push_back(std::move(t));
          }
        }
      }
    }
    return memo_.emplace(key, std::move(out)).first->second;
  }

 private:
  std::map<std::pair<std::uint32_t, int>, std::vector<Tiling>> memo_;
};

}  // namespace

const std::vector<Tiling>& enumerate_tilings(int n_views) {
  if (n_views < 1 || n_views > kN * kN) {
    throw InputError("tilings exist for 1 to 16 views");
  }
  static std::mutex lock;
  static std::array<std::vector<Tiling>, kN * kN + 1> cache;
  static std::array<bool, kN * kN + 1> ready{};
  std::lock_guard guard(lock);
  if (!ready[n_views]) {
    TilingEnumerator e;
    std::vector<Tiling> tilings = e.solve(0, n_views);
    for (auto& t : tilings) std::sort(t.begin(), t.end());
    std::sort(tilings.begin(), tilings.end());
    cache[n_views] = std::move(tilings);
    ready[n_views] = true;
  }
  return cache[n_views];
}

int rect_id(const GridRect& r) {
  // Rectangles with top-left (x, y) and size (w, h), enumerated x, y, w, h.
  static const std::array<int, 256> table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    int next = 0;
    for (int x = 0; x < kN; ++x) {
      for (int y = 0; y < kN; ++y) {
        for (int w = 1; x + w <= kN; ++w) {
          for (int h = 1; y + h <= kN; ++h) {
            t[((x * kN + y) * kN + (w - 1)) * kN + (h - 1)] = next++;
          }
        }
      }
    }
    return t;
  }();
  if (r.x < 0 || r.y < 0 || r.w < 1 || r.h < 1 || r.x + r.w > kN || r.y + r.h > kN) {
    throw InputError("rectangle outside the grid");
  }
  return table[((r.x * kN + r.y) * kN + (r.w - 1)) * kN + (r.h - 1)];
}

}  // namespace dminer
