#include <algorithm>
#include <array>

#include "dminer/oracle.hpp"

namespace dminer::oracle {

namespace {

constexpr int kSide = 4;
constexpr int kCells = kSide * kSide;

struct Search {
  int n;
  std::array<int, kCells> label{};
  std::vector<Tiling> found;

  // Every assigned cell inside a group's bounding box (so far) must carry
  // that group's label; a group that ends up rectangular always passes.
  bool prefix_ok(int upto) const {
    for (int g = 0; g < n; ++g) {
      int x0 = kSide, y0 = kSide, x1 = -1, y1 = -1;
      for (int c = 0; c <= upto; ++c) {
        if (label[c] != g) continue;
        x0 = std::min(x0, c % kSide);
        x1 = std::max(x1, c % kSide);
        y0 = std::min(y0, c / kSide);
        y1 = std::max(y1, c / kSide);
      }
      if (x1 < 0) continue;
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const int c = y * kSide + x;
          if (c <= upto && label[c] != g) return false;
        }
      }
    }
    return true;
  }

  void finish() {
    Tiling t;
    for (int g = 0; g < n; ++g) {
      int x0 = kSide, y0 = kSide, x1 = -1, y1 = -1, count = 0;
      for (int c = 0; c < kCells; ++c) {
        if (label[c] != g) continue;
        ++count;
        x0 = std::min(x0, c % kSide);
        x1 = std::max(x1, c % kSide);
        y0 = std::min(y0, c / kSide);
        y1 = std::max(y1, c / kSide);
      }
      const int w = x1 - x0 + 1, h = y1 - y0 + 1;
      if (count != w * h) return;
      t.push_back(GridRect{x0, y0, w, h});
    }
    std::sort(t.begin(), t.end());
    found.push_back(std::move(t));
  }

  void run(int cell, int used) {
    if (cell == kCells) {
      if (used == n) finish();
      return;
    }
    // Each remaining cell can open at most one new group.
    if (used + (kCells - cell) < n) return;
    for (int g = 0; g <= std::min(used, n - 1); ++g) {
      label[cell] = g;
      if (prefix_ok(cell)) run(cell + 1, std::max(used, g + 1));
    }
    label[cell] = -1;
  }
};

}  // namespace

std::vector<Tiling> brute_force_tilings(int n_views) {
  if (n_views < 1 || n_views > kCells) return {};
  Search s;
  s.n = n_views;
  s.label.fill(-1);
  s.run(0, 0);
  std::sort(s.found.begin(), s.found.end());
  s.found.erase(std::unique(s.found.begin(), s.found.end()), s.found.end());
  return std::move(s.found);
}

}  // namespace dminer::oracle
