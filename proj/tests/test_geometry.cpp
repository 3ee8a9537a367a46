#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tap/geometry.hpp"

using namespace tap;

namespace {

HeightMap random_map(std::mt19937_64& rng, int w, int d, int hmax, int ceiling) {
  std::uniform_int_distribution<int> h(0, hmax);
  HeightMap hm({w, d, ceiling});
  for (int y = 0; y < d; ++y)
    for (int x = 0; x < w; ++x) hm.set(x, y, h(rng));
  return hm;
}

int naive_max(const HeightMap& hm, const Footprint& f) {
  int m = 0;
  for (int y = f.y0; y < f.y0 + f.d; ++y)
    for (int x = f.x0; x < f.x0 + f.w; ++x) m = std::max(m, hm.at(x, y));
  return m;
}

}  // namespace

TEST_CASE("orient_dims follows the six-state table") {
  const Dims3 d{2, 3, 5};
  CHECK(orient_dims(d, StateIndex(0)) == Dims3{2, 3, 5});
  CHECK(orient_dims(d, StateIndex(1)) == Dims3{3, 2, 5});
  CHECK(orient_dims(d, StateIndex(2)) == Dims3{3, 5, 2});
  CHECK(orient_dims(d, StateIndex(3)) == Dims3{5, 3, 2});
  CHECK(orient_dims(d, StateIndex(4)) == Dims3{2, 5, 3});
  CHECK(orient_dims(d, StateIndex(5)) == Dims3{5, 2, 3});
}

TEST_CASE("grasp axis becomes the packed height") {
  const Dims3 d{2, 3, 5};
  for (int s = 0; s < 6; ++s) {
    const StateIndex st(s);
    const int along = st.grasp() == GraspAxis::z ? d.z : st.grasp() == GraspAxis::x ? d.x : d.y;
    CHECK(orient_dims(d, st).z == along);
    CHECK(orient_dims(d, st).volume() == d.volume());
  }
}

TEST_CASE("state index rejects values outside 0..5") {
  CHECK_THROWS_AS(StateIndex(6), Error);
  CHECK_THROWS_AS(StateIndex(-1), Error);
}

TEST_CASE("quantize never underestimates and lands on multiples") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> v(1, 120), u(1, 12);
  for (int i = 0; i < 2000; ++i) {
    const Dims3 d{v(rng), v(rng), v(rng)};
    const int unit = u(rng);
    const Dims3 q = quantize_dims(d, unit);
    for (auto [a, b] : {std::pair{q.x, d.x}, {q.y, d.y}, {q.z, d.z}}) {
      CHECK(a >= b);
      CHECK(a % unit == 0);
      CHECK(a - b < unit);
    }
  }
  CHECK(quantize_dims({7, 10, 1}, 5) == Dims3{10, 10, 5});
  CHECK(quantize_dims({7, 10, 1}, 1) == Dims3{7, 10, 1});
}

TEST_CASE("max_under matches a cell scan on random 8x8 maps") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    const HeightMap hm = random_map(rng, 8, 8, 8, 8);
    const RangeMax2D rm(hm);
    std::uniform_int_distribution<int> c(0, 7);
    for (int q = 0; q < 20; ++q) {
      const int x0 = c(rng), y0 = c(rng);
      const int w = 1 + std::uniform_int_distribution<int>(0, 7 - x0)(rng);
      const int d = 1 + std::uniform_int_distribution<int>(0, 7 - y0)(rng);
      const Footprint f{x0, y0, w, d};
      CHECK(hm.max_under(f) == naive_max(hm, f));
      CHECK(rm.query(f) == naive_max(hm, f));
    }
  }
}

TEST_CASE("range max works on non-square maps") {
  std::mt19937_64 rng(5);
  const HeightMap hm = random_map(rng, 13, 5, 40, 50);
  const RangeMax2D rm(hm);
  for (int x0 = 0; x0 < 13; ++x0)
    for (int y0 = 0; y0 < 5; ++y0)
      for (int w = 1; x0 + w <= 13; ++w)
        for (int d = 1; y0 + d <= 5; ++d) CHECK(rm.query({x0, y0, w, d}) == naive_max(hm, {x0, y0, w, d}));
}

TEST_CASE("raise increases the integral by the summed lift") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    HeightMap hm = random_map(rng, 8, 8, 5, 12);
    std::uniform_int_distribution<int> c(0, 7);
    const int x0 = c(rng), y0 = c(rng);
    const Footprint f{x0, y0, 1 + std::uniform_int_distribution<int>(0, 7 - x0)(rng),
                      1 + std::uniform_int_distribution<int>(0, 7 - y0)(rng)};
    const int top = naive_max(hm, f) + std::uniform_int_distribution<int>(0, 12 - naive_max(hm, f))(rng);
    std::int64_t lift = 0;
    for (int y = f.y0; y < f.y0 + f.d; ++y)
      for (int x = f.x0; x < f.x0 + f.w; ++x) lift += top - hm.at(x, y);
    const auto before = hm.integral();
    const HeightMap raised = raise_footprint(hm, f, top);
    CHECK(raised.integral() - before == lift);
    CHECK(lift >= f.area() * (top - naive_max(hm, f)));
  }
}

TEST_CASE("height map errors") {
  HeightMap hm({4, 4, 10});
  CHECK_THROWS_AS(hm.max_under({3, 3, 2, 1}), Error);
  try {
    hm.raise({0, 0, 2, 2}, 11);
    FAIL("expected overflow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::overflow);
  }
  hm.raise({0, 0, 2, 2}, 5);
  try {
    hm.raise({0, 0, 1, 1}, 3);
    FAIL("expected contract");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::contract);
  }
  CHECK_THROWS_AS(HeightMap({2, 2, 5}, std::vector<int>{1, 2, 3}), Error);
  CHECK(hm.integral() == 20);
}
