#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tap/error.hpp"

namespace tap {

/// Integer box extents in units of the quantization length.
struct Dims3 {
  int x = 1;
  int y = 1;
  int z = 1;

  std::int64_t volume() const noexcept {
    return static_cast<std::int64_t>(x) * y * z;
  }
  bool valid() const noexcept { return x >= 1 && y >= 1 && z >= 1; }
  std::array<int, 3> as_array() const noexcept { return {x, y, z}; }

  friend bool operator==(const Dims3&, const Dims3&) = default;
};

struct ContainerSpec {
  int width = 100;
  int depth = 100;
  int height = 100;

  std::int64_t volume() const noexcept {
    return static_cast<std::int64_t>(width) * depth * height;
  }
  bool valid() const noexcept { return width >= 1 && depth >= 1 && height >= 1; }

  friend bool operator==(const ContainerSpec&, const ContainerSpec&) = default;
};

/// Axis the gripper approaches along; it becomes world-Z once packed.
enum class GraspAxis : int { z = 0, x = 1, y = 2 };

/// One of the six packing states, s = 2 * grasp + yaw.
class StateIndex {
 public:
  static constexpr int kCount = 6;

  explicit StateIndex(int s);

  int value() const noexcept { return s_; }
  GraspAxis grasp() const noexcept { return static_cast<GraspAxis>(s_ / 2); }
  bool yawed() const noexcept { return (s_ % 2) == 1; }

  friend bool operator==(const StateIndex&, const StateIndex&) = default;

 private:
  int s_;
};

/// Footprint-and-height extents of a box packed in state s.
///   s=0 (x,y,z)  s=1 (y,x,z)  s=2 (y,z,x)  s=3 (z,y,x)  s=4 (x,z,y)  s=5 (z,x,y)
Dims3 orient_dims(const Dims3& dims, StateIndex s);

/// Rounds every extent up to the next multiple of `unit`.
Dims3 quantize_dims(const Dims3& dims, int unit);

/// Axis-aligned cell rectangle [x0, x0+w) x [y0, y0+d) on a height map.
struct Footprint {
  int x0 = 0;
  int y0 = 0;
  int w = 1;
  int d = 1;

  std::int64_t area() const noexcept { return static_cast<std::int64_t>(w) * d; }
  friend bool operator==(const Footprint&, const Footprint&) = default;
};

/// Top-surface heights of a container, one integer per grid cell (row-major, y rows).
class HeightMap {
 public:
  HeightMap() = default;
  explicit HeightMap(ContainerSpec spec);
  HeightMap(ContainerSpec spec, std::vector<int> cells);

  const ContainerSpec& spec() const noexcept { return spec_; }
  int width() const noexcept { return spec_.width; }
  int depth() const noexcept { return spec_.depth; }

  int at(int x, int y) const { return cells_[index(x, y)]; }
  void set(int x, int y, int h);
  std::span<const int> cells() const noexcept { return cells_; }

  bool contains(const Footprint& f) const noexcept;

  /// Maximum height over the footprint. Throws Errc::range when out of bounds.
  int max_under(const Footprint& f) const;

  /// Sets every footprint cell to `new_top`. Throws Errc::overflow above the
  /// container ceiling and Errc::contract if any cell would be lowered.
  void raise(const Footprint& f, int new_top);

  /// Sum of all cell heights (occupied volume in the 2.5D model).
  std::int64_t integral() const noexcept;

  friend bool operator==(const HeightMap&, const HeightMap&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * spec_.width + x;
  }

  ContainerSpec spec_{};
  std::vector<int> cells_;
};

int max_under_footprint(const HeightMap& hm, const Footprint& f);
HeightMap raise_footprint(HeightMap hm, const Footprint& f, int new_top);

/// O(1) rectangle-maximum queries over a frozen height map (2D sparse table).
class RangeMax2D {
 public:
  explicit RangeMax2D(const HeightMap& hm);

  int query(const Footprint& f) const;

 private:
  int level_index(int kx, int ky) const noexcept { return kx * levels_y_ + ky; }

  int width_;
  int depth_;
  int levels_x_;
  int levels_y_;
  std::vector<int> log2_;
  std::vector<std::vector<int>> table_;
};

}  // namespace tap
