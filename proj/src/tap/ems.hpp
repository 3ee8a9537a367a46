#pragma once

#include <array>
#include <vector>

#include "tap/geometry.hpp"

namespace tap {

enum class EmsKind : int { original = 0, constrained = 1 };

/// Empty maximal space: DBL corner plus extents, always reaching the ceiling.
struct Ems {
  std::array<int, 3> corner{};
  Dims3 dims;
  EmsKind kind = EmsKind::original;

  Footprint footprint() const noexcept { return {corner[0], corner[1], dims.x, dims.y}; }
  bool same_box(const Ems& o) const noexcept { return corner == o.corner && dims == o.dims; }
  friend bool operator==(const Ems&, const Ems&) = default;
};

struct Cell3 {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const Cell3&, const Cell3&) = default;
  friend auto operator<=>(const Cell3&, const Cell3&) = default;
};

enum class EmsMode : int {
  original_only = 0,
  with_constrained = 1,
};

/// Left-bottom corner cells of the constant-height regions: a cell qualifies
/// when its -x and -y neighbours are each a wall or a different height.
/// Cells already at the container ceiling are skipped.
std::vector<Cell3> seed_corners(const HeightMap& hm);

/// Largest-area empty rectangle containing the seed at level seed.z.
/// Ties go to smaller x0, then smaller y0, then wider.
Ems extract_original(const HeightMap& hm, const Cell3& seed);

/// Largest-area empty rectangle whose DBL corner is the seed (grows +x/+y only).
/// Ties go to the wider rectangle.
Ems extract_constrained(const HeightMap& hm, const Cell3& seed);

/// Every maximal empty space of the height map, plus the constrained space of
/// every seed corner in `with_constrained` mode. Deduplicated on (corner, dims),
/// sorted by (z, y, x, dims) so indices are stable for a given map.
std::vector<Ems> extract_all(const HeightMap& hm, EmsMode mode = EmsMode::with_constrained);

}  // namespace tap
