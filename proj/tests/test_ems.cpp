#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <random>

#include "oracles.hpp"
#include "tap/ems.hpp"

using namespace tap;

namespace {

HeightMap random_map(std::mt19937_64& rng, int hmax = 8) {
  HeightMap hm({8, 8, 8});
  // Mix of flat plateaus and noise so equal-height regions occur.
  std::uniform_int_distribution<int> h(0, hmax), coin(0, 2);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) hm.set(x, y, coin(rng) == 0 ? h(rng) : (x > 0 ? hm.at(x - 1, y) : h(rng)));
  return hm;
}

std::set<oracle::Box6> as_set(const std::vector<Ems>& v, std::optional<EmsKind> kind = std::nullopt) {
  std::set<oracle::Box6> s;
  for (const auto& e : v) {
    if (!kind || e.kind == *kind) s.insert(oracle::as_box6(e));
  }
  return s;
}

HeightMap map_with_box(ContainerSpec spec, Footprint f, int h) {
  HeightMap hm(spec);
  hm.raise(f, h);
  return hm;
}

}  // namespace

TEST_CASE("empty container has one seed and one EMS") {
  const HeightMap hm({100, 100, 100});
  const auto seeds = seed_corners(hm);
  REQUIRE(seeds.size() == 1);
  CHECK(seeds[0] == Cell3{0, 0, 0});
  const auto all = extract_all(hm);
  REQUIRE(all.size() == 1);
  CHECK(all[0].corner == std::array<int, 3>{0, 0, 0});
  CHECK(all[0].dims == Dims3{100, 100, 100});
  CHECK(extract_original(hm, {0, 0, 0}).dims == Dims3{100, 100, 100});
  CHECK(extract_constrained(hm, {0, 0, 0}).dims == Dims3{100, 100, 100});
}

TEST_CASE("full container yields no EMS") {
  HeightMap hm({6, 6, 6});
  hm.raise({0, 0, 6, 6}, 6);
  CHECK(seed_corners(hm).empty());
  CHECK(extract_all(hm).empty());
  CHECK(extract_all(hm, EmsMode::original_only).empty());
}

TEST_CASE("one box at origin seeds its top and the floor corners beside it") {
  const HeightMap hm = map_with_box({100, 100, 100}, {0, 0, 40, 40}, 40);
  const auto seeds = seed_corners(hm);
  const auto has = [&](Cell3 c) { return std::find(seeds.begin(), seeds.end(), c) != seeds.end(); };
  CHECK(has({0, 0, 40}));
  CHECK(has({40, 0, 0}));
  CHECK(has({0, 40, 0}));
  std::vector<Cell3> expect;
  for (auto s : oracle::seeds(hm)) expect.push_back({s[0], s[1], s[2]});
  CHECK(seeds == expect);

  // At the box top the whole container floor area is free.
  const Ems top = extract_original(hm, {0, 0, 40});
  CHECK(top.corner == std::array<int, 3>{0, 0, 40});
  CHECK(top.dims == Dims3{100, 100, 60});
}

TEST_CASE("constrained EMS differs next to a tall box and agrees when unobstructed") {
  // Corner on top of a low box whose -x neighbour is lower: the original EMS
  // spreads back over the floor, the constrained one stays at the corner.
  HeightMap hm({10, 10, 10});
  hm.raise({3, 0, 3, 3}, 2);
  hm.raise({0, 5, 10, 5}, 9);  // tall block behind
  const Cell3 corner{3, 0, 2};
  const auto seeds = seed_corners(hm);
  REQUIRE(std::find(seeds.begin(), seeds.end(), corner) != seeds.end());
  const Ems orig = extract_original(hm, corner);
  const Ems cons = extract_constrained(hm, corner);
  CHECK(orig.corner == std::array<int, 3>{0, 0, 2});
  CHECK(orig.dims == Dims3{10, 5, 8});
  CHECK(cons.dims == Dims3{7, 5, 8});
  CHECK_FALSE(orig.same_box(cons));
  CHECK(cons.corner == std::array<int, 3>{3, 0, 2});

  const HeightMap open = map_with_box({10, 10, 10}, {0, 0, 4, 4}, 3);
  const Cell3 free_corner{0, 0, 3};
  CHECK(extract_original(open, free_corner).same_box(extract_constrained(open, free_corner)));
}

TEST_CASE("seed corners match the scan oracle on random maps") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 300; ++t) {
    const HeightMap hm = random_map(rng);
    std::vector<Cell3> expect;
    for (auto s : oracle::seeds(hm)) expect.push_back({s[0], s[1], s[2]});
    CHECK(seed_corners(hm) == expect);
  }
}

TEST_CASE("original-only extract_all equals exhaustive maximal enumeration") {
  std::mt19937_64 rng(1234);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const HeightMap hm = random_map(rng);
    if (as_set(extract_all(hm, EmsMode::original_only)) != oracle::maximal_boxes(hm)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("per-seed original EMS is maximal, empty and contains its seed") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const HeightMap hm = random_map(rng);
    const auto maximal = oracle::maximal_boxes(hm);
    for (const Cell3& s : seed_corners(hm)) {
      const Ems e = extract_original(hm, s);
      CHECK(maximal.count(oracle::as_box6(e)) == 1);
      CHECK(e.corner[0] <= s.x);
      CHECK(s.x < e.corner[0] + e.dims.x);
      CHECK(e.corner[1] <= s.y);
      CHECK(s.y < e.corner[1] + e.dims.y);
      CHECK(e.corner[2] == s.z);
    }
  }
}

TEST_CASE("constrained EMS equals the directional oracle") {
  std::mt19937_64 rng(4321);
  for (int t = 0; t < 200; ++t) {
    const HeightMap hm = random_map(rng);
    for (auto s : oracle::seeds(hm)) {
      const Ems e = extract_constrained(hm, {s[0], s[1], s[2]});
      CHECK(oracle::as_box6(e) == oracle::constrained_box(hm, s));
      CHECK(oracle::constrained_maximal(hm, oracle::as_box6(e)));
      CHECK(e.kind == EmsKind::constrained);
    }
  }
}

TEST_CASE("with_constrained mode is maximal spaces plus per-seed constrained spaces") {
  std::mt19937_64 rng(555);
  for (int t = 0; t < 200; ++t) {
    const HeightMap hm = random_map(rng);
    auto expect = oracle::maximal_boxes(hm);
    for (auto s : oracle::seeds(hm)) expect.insert(oracle::constrained_box(hm, s));
    const auto all = extract_all(hm, EmsMode::with_constrained);
    CHECK(as_set(all) == expect);
    CHECK(as_set(all).size() == all.size());  // no duplicate (corner, dims)
  }
}

TEST_CASE("every EMS is empty and reaches the ceiling") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const HeightMap hm = random_map(rng, 7);
    const auto all = extract_all(hm);
    CHECK(!all.empty());
    for (const Ems& e : all) {
      CHECK(oracle::rect_max(hm, e.corner[0], e.corner[1], e.dims.x, e.dims.y) <= e.corner[2]);
      CHECK(e.corner[2] + e.dims.z == 8);
    }
  }
}

TEST_CASE("adding a box never enlarges a surviving EMS that avoids it") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 150; ++t) {
    HeightMap hm = random_map(rng, 5);
    const auto before = extract_all(hm, EmsMode::original_only);
    std::uniform_int_distribution<int> c(0, 6);
    const Footprint f{c(rng), c(rng), 2, 2};
    const int top = std::min(8, hm.max_under(f) + 2);
    hm.raise(f, top);
    const auto after = extract_all(hm, EmsMode::original_only);
    for (const Ems& a : after) {
      const bool avoids = a.corner[0] + a.dims.x <= f.x0 || f.x0 + f.w <= a.corner[0] ||
                          a.corner[1] + a.dims.y <= f.y0 || f.y0 + f.d <= a.corner[1];
      if (!avoids) continue;
      // Some EMS of the old map contains it: adding material never frees space.
      bool covered = false;
      for (const Ems& b : before) {
        covered = covered || (b.corner[2] <= a.corner[2] && b.corner[0] <= a.corner[0] && b.corner[1] <= a.corner[1] &&
                              a.corner[0] + a.dims.x <= b.corner[0] + b.dims.x &&
                              a.corner[1] + a.dims.y <= b.corner[1] + b.dims.y);
      }
      CHECK(covered);
    }
  }
}

TEST_CASE("indices are stable for a given map") {
  std::mt19937_64 rng(2);
  const HeightMap hm = random_map(rng);
  CHECK(extract_all(hm) == extract_all(hm));
}

TEST_CASE("seed validation") {
  HeightMap hm({4, 4, 4});
  hm.raise({0, 0, 1, 1}, 2);
  CHECK_THROWS_AS(extract_original(hm, {5, 0, 0}), Error);
  CHECK_THROWS_AS(extract_constrained(hm, {0, 0, 1}), Error);
}
