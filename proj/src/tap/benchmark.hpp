#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tap/geometry.hpp"

namespace tap {

enum class SourceKind : int { fix = 0, rand = 1, ppsg = 2 };

/// Inclusive integer bounds for each box extent.
struct DimsRange {
  int lo = 10;
  int hi = 50;
  friend bool operator==(const DimsRange&, const DimsRange&) = default;
};

/// Independent uniform extents, each a multiple of `unit` inside the range.
std::vector<Dims3> gen_rand(int count, DimsRange range, int unit, std::uint64_t seed);

/// A catalogue of `catalogue_size` boxes drawn from `range` with the catalogue
/// seed, then `count` boxes sampled from it with replacement.
std::vector<Dims3> gen_fix(int count, int catalogue_size, DimsRange range, std::uint64_t catalogue_seed,
                           std::uint64_t seed);

struct PpsgPlacement {
  int box = 0;  // index into PpsgInstance::boxes
  std::array<int, 3> corner{};
};

/// Boxes that exactly tile one container, with the tiling as a bottom-up
/// placement order.
struct PpsgInstance {
  ContainerSpec spec;
  std::vector<Dims3> boxes;
  std::vector<PpsgPlacement> solution;
};

/// Recursive guillotine split into exactly `count` pieces: a piece is chosen
/// with probability proportional to volume and cut across its longest axis at
/// a uniform position keeping both halves at least 2 units long. Pieces are
/// emitted in shuffled order. Errc::scene_generation after 100 failed attempts.
PpsgInstance gen_ppsg(int count, ContainerSpec spec, std::uint64_t seed, int unit = 1);

/// Derives an independent stream seed from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) noexcept;

}  // namespace tap
