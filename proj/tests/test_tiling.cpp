#include <algorithm>
#include <array>
#include <set>

#include "doctest.h"
#include "dminer/oracle.hpp"
#include "dminer/recommender.hpp"

using namespace dminer;

TEST_CASE("tilings: anchor counts") {
  CHECK(enumerate_tilings(1).size() == 1);
  CHECK(enumerate_tilings(1)[0] == Tiling{GridRect{0, 0, 4, 4}});
  CHECK(enumerate_tilings(2).size() == 6);
  CHECK(enumerate_tilings(16).size() == 1);
  CHECK(enumerate_tilings(3).size() == 42);
}

TEST_CASE("tilings: exact covers in canonical order") {
  for (int n = 1; n <= 6; ++n) {
    const auto& all = enumerate_tilings(n);
    CHECK(std::is_sorted(all.begin(), all.end()));
    CHECK(std::set<Tiling>(all.begin(), all.end()).size() == all.size());
    for (const auto& t : all) {
      REQUIRE(t.size() == static_cast<std::size_t>(n));
      CHECK(std::is_sorted(t.begin(), t.end()));
      std::array<int, 16> cover{};
      for (const auto& r : t) {
        CHECK(r.x + r.w <= 4);
        CHECK(r.y + r.h <= 4);
        for (int x = r.x; x < r.x + r.w; ++x) {
          for (int y = r.y; y < r.y + r.h; ++y) ++cover[y * 4 + x];
        }
      }
      CHECK(std::all_of(cover.begin(), cover.end(), [](int c) { return c == 1; }));
    }
  }
}

TEST_CASE("tilings: agree with the cell-labelling brute force") {
  for (int n = 1; n <= 5; ++n) {
    CAPTURE(n);
    CHECK(enumerate_tilings(n) == oracle::brute_force_tilings(n));
  }
}

TEST_CASE("rect ids are dense and distinct") {
  std::set<int> ids;
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) {
      for (int w = 1; x + w <= 4; ++w) {
        for (int h = 1; y + h <= 4; ++h) ids.insert(rect_id(GridRect{x, y, w, h}));
      }
    }
  }
  CHECK(ids.size() == 100);
  CHECK(*ids.begin() == 0);
  CHECK(*ids.rbegin() == 99);
}
