#include "tap/ems.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace tap {

namespace {

void require_seed(const HeightMap& hm, const Cell3& seed) {
  if (seed.x < 0 || seed.y < 0 || seed.x >= hm.width() || seed.y >= hm.depth()) {
    throw Error(Errc::range, "seed outside height map");
  }
  if (seed.z < hm.at(seed.x, seed.y) || seed.z >= hm.spec().height) {
    throw Error(Errc::contract, "seed level must lie between the cell height and the ceiling");
  }
}

Ems make_ems(const HeightMap& hm, int x0, int y0, int w, int d, int z, EmsKind kind) {
  return {{x0, y0, z}, {w, d, hm.spec().height - z}, kind};
}

auto ordering_key(const Ems& e) {
  return std::tuple(e.corner[2], e.corner[1], e.corner[0], e.dims.x, e.dims.y, static_cast<int>(e.kind));
}

}  // namespace

std::vector<Cell3> seed_corners(const HeightMap& hm) {
  std::vector<Cell3> seeds;
  for (int y = 0; y < hm.depth(); ++y) {
    for (int x = 0; x < hm.width(); ++x) {
      const int h = hm.at(x, y);
      if (h >= hm.spec().height) continue;
      const bool left_edge = x == 0 || hm.at(x - 1, y) != h;
      const bool back_edge = y == 0 || hm.at(x, y - 1) != h;
      if (left_edge && back_edge) seeds.push_back({x, y, h});
    }
  }
  return seeds;
}

Ems extract_original(const HeightMap& hm, const Cell3& seed) {
  require_seed(hm, seed);
  const int z = seed.z;
  auto free = [&](int x, int y) { return hm.at(x, y) <= z; };

  // Run [lo, hi) through column seed.x in every row that is free there.
  std::vector<int> lo(hm.depth(), -1);
  std::vector<int> hi(hm.depth(), -1);
  for (int y = 0; y < hm.depth(); ++y) {
    if (!free(seed.x, y)) continue;
    int l = seed.x;
    while (l > 0 && free(l - 1, y)) --l;
    int r = seed.x + 1;
    while (r < hm.width() && free(r, y)) ++r;
    lo[y] = l;
    hi[y] = r;
  }

  struct Best {
    std::int64_t area = -1;
    int x0 = 0, y0 = 0, w = 0, d = 0;
  } best;
  auto consider = [&](int x0, int x1, int y0, int y1) {
    const int w = x1 - x0;
    const int d = y1 - y0 + 1;
    const std::int64_t area = static_cast<std::int64_t>(w) * d;
    const auto key = std::tuple(-area, x0, y0, -w);
    const auto best_key = std::tuple(-best.area, best.x0, best.y0, -best.w);
    if (best.area < 0 || key < best_key) best = {area, x0, y0, w, d};
  };

  int down_lo = lo[seed.y];
  int down_hi = hi[seed.y];
  for (int y0 = seed.y; y0 >= 0 && lo[y0] >= 0; --y0) {
    down_lo = std::max(down_lo, lo[y0]);
    down_hi = std::min(down_hi, hi[y0]);
    int l = down_lo;
    int r = down_hi;
    for (int y1 = seed.y; y1 < hm.depth() && lo[y1] >= 0; ++y1) {
      l = std::max(l, lo[y1]);
      r = std::min(r, hi[y1]);
      consider(l, r, y0, y1);
    }
  }
  return make_ems(hm, best.x0, best.y0, best.w, best.d, z, EmsKind::original);
}

Ems extract_constrained(const HeightMap& hm, const Cell3& seed) {
  require_seed(hm, seed);
  const int z = seed.z;
  std::int64_t best_area = -1;
  int best_w = 0;
  int best_d = 0;
  int reach = hm.width();
  for (int y = seed.y; y < hm.depth() && hm.at(seed.x, y) <= z; ++y) {
    int r = seed.x;
    while (r < reach && hm.at(r, y) <= z) ++r;
    reach = r;
    const int w = reach - seed.x;
    const int d = y - seed.y + 1;
    const std::int64_t area = static_cast<std::int64_t>(w) * d;
    if (area > best_area || (area == best_area && w > best_w)) {
      best_area = area;
      best_w = w;
      best_d = d;
    }
  }
  return make_ems(hm, seed.x, seed.y, best_w, best_d, z, EmsKind::constrained);
}

std::vector<Ems> extract_all(const HeightMap& hm, EmsMode mode) {
  const int width = hm.width();
  const int depth = hm.depth();
  const int ceiling = hm.spec().height;
  std::vector<Ems> out;

  std::set<int> levels;
  for (int h : hm.cells()) {
    if (h < ceiling) levels.insert(h);
  }
  if (levels.empty()) return out;

  const RangeMax2D range_max(hm);
  std::vector<int> column_run(width);
  std::vector<int> left(width);
  std::vector<int> right(width);
  std::vector<int> stack;
  std::vector<std::tuple<int, int, int>> spans;  // (left, right, height)
  std::vector<int> blocked_next(width + 1);

  for (int z : levels) {
    std::fill(column_run.begin(), column_run.end(), 0);
    for (int y = 0; y < depth; ++y) {
      for (int x = 0; x < width; ++x) column_run[x] = hm.at(x, y) <= z ? column_run[x] + 1 : 0;

      stack.clear();
      for (int x = 0; x < width; ++x) {
        while (!stack.empty() && column_run[stack.back()] >= column_run[x]) stack.pop_back();
        left[x] = stack.empty() ? 0 : stack.back() + 1;
        stack.push_back(x);
      }
      stack.clear();
      for (int x = width - 1; x >= 0; --x) {
        while (!stack.empty() && column_run[stack.back()] >= column_run[x]) stack.pop_back();
        right[x] = stack.empty() ? width : stack.back();
        stack.push_back(x);
      }

      spans.clear();
      for (int x = 0; x < width; ++x) {
        if (column_run[x] > 0) spans.emplace_back(left[x], right[x], column_run[x]);
      }
      std::sort(spans.begin(), spans.end());
      spans.erase(std::unique(spans.begin(), spans.end()), spans.end());

      // A span that the next row could extend upward is not maximal.
      const bool last_row = y + 1 == depth;
      if (!last_row) {
        blocked_next[0] = 0;
        for (int x = 0; x < width; ++x) blocked_next[x + 1] = blocked_next[x] + (hm.at(x, y + 1) > z ? 1 : 0);
      }
      for (const auto& [l, r, h] : spans) {
        if (!last_row && blocked_next[r] - blocked_next[l] == 0) continue;
        const Footprint f{l, y - h + 1, r - l, h};
        if (range_max.query(f) != z) continue;
        out.push_back(make_ems(hm, f.x0, f.y0, f.w, f.d, z, EmsKind::original));
      }
    }
  }

  if (mode == EmsMode::with_constrained) {
    for (const Cell3& seed : seed_corners(hm)) out.push_back(extract_constrained(hm, seed));
  }

  std::sort(out.begin(), out.end(), [](const Ems& a, const Ems& b) { return ordering_key(a) < ordering_key(b); });
  // Originals sort ahead of an identical constrained box, so unique keeps them.
  out.erase(std::unique(out.begin(), out.end(), [](const Ems& a, const Ems& b) { return a.same_box(b); }),
            out.end());
  return out;
}

}  // namespace tap
