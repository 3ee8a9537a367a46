#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tap/geometry.hpp"

namespace tap {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned extents of the source workspace floor.
struct Workspace {
  double width = 200.0;
  double depth = 200.0;
};

/// A box resting in the source workspace. Only yaw rotations occur, so the
/// local z axis is always world up. `position` is the footprint centre in x,y
/// and the bottom face height in z.
struct SceneBox {
  int id = 0;
  Dims3 dims;
  Dims3 observed_dims;
  std::array<double, 3> position{};
  double yaw = 0.0;

  double bottom() const noexcept { return position[2]; }
  double top() const noexcept { return position[2] + dims.z; }
  /// World-frame footprint corners, counter-clockwise.
  std::array<Vec2, 4> footprint() const;
};

struct Scene {
  Workspace workspace;
  std::vector<SceneBox> boxes;
};

struct SceneOptions {
  Workspace workspace;
  double min_support_ratio = 0.3;
  int max_attempts = 50;
  /// Probability that one axis of a box's observed dims is misestimated.
  double occlusion_probability = 0.1;
  /// Misestimates are drawn from {1..max_perturbation} cells, either sign.
  int max_perturbation = 2;
  /// Drop each box on a uniformly chosen face instead of the given z extent.
  bool random_resting_face = false;
};

/// Drops the boxes one by one at random poses. Deterministic in `seed`.
/// Throws Errc::scene_generation when a box cannot be supported within the
/// attempt budget.
Scene generate_scene(std::span<const Dims3> dims, const SceneOptions& options, std::uint64_t seed);

enum class Axis : int { x = 0, y = 1, z = 2 };
enum class Side : int { neg = 0, pos = 1 };

Axis axis_of(GraspAxis g) noexcept;
char axis_name(Axis a) noexcept;

struct MbEdge {
  int blocker = 0;
  int blocked = 0;
  friend bool operator==(const MbEdge&, const MbEdge&) = default;
  friend auto operator<=>(const MbEdge&, const MbEdge&) = default;
};

struct AbEdge {
  int blocker = 0;
  int blocked = 0;
  Side side = Side::pos;
  friend bool operator==(const AbEdge&, const AbEdge&) = default;
  friend auto operator<=>(const AbEdge&, const AbEdge&) = default;
};

struct PrecedenceOptions {
  /// A box counts as on top when its bottom is at least (other top - tolerance).
  double mb_tolerance = 0.5;
  /// Lateral and vertical widening of every access corridor.
  double corridor_margin = 0.0;
};

/// Movement-block edges: blocker sits (partly) on top of blocked.
std::vector<MbEdge> extract_mb(const Scene& scene, double tolerance = 0.5);

/// Access-block edges along one local axis. Ground contact yields a Z- self-edge.
std::vector<AbEdge> extract_ab(const Scene& scene, Axis axis, double margin = 0.0);

/// MB and per-axis AB edges with per-box blocker lists for fast queries.
class PrecedenceGraph {
 public:
  PrecedenceGraph() = default;
  PrecedenceGraph(int n, std::vector<MbEdge> mb, std::array<std::vector<AbEdge>, 3> ab);

  int size() const noexcept { return n_; }
  const std::vector<MbEdge>& mb() const noexcept { return mb_; }
  const std::vector<AbEdge>& ab(Axis a) const noexcept { return ab_[static_cast<int>(a)]; }

  const std::vector<int>& mb_blockers(int i) const { return mb_blockers_.at(i); }
  const std::vector<int>& ab_blockers(int i, Axis a, Side s) const {
    return ab_blockers_[static_cast<int>(a)][static_cast<int>(s)].at(i);
  }

 private:
  int n_ = 0;
  std::vector<MbEdge> mb_;
  std::array<std::vector<AbEdge>, 3> ab_;
  std::vector<std::vector<int>> mb_blockers_;
  std::array<std::array<std::vector<std::vector<int>>, 2>, 3> ab_blockers_;
};

PrecedenceGraph extract_precedence(const Scene& scene, const PrecedenceOptions& options = {});

/// Two rows over all n boxes: MB blockers of i, and AB blockers of i on
/// either side of the grasp axis of s (a self-edge sets bit i).
struct StatePrecedence {
  std::vector<std::uint8_t> movement;
  std::vector<std::uint8_t> access;

  friend bool operator==(const StatePrecedence&, const StatePrecedence&) = default;
};

StatePrecedence state_precedence(const PrecedenceGraph& graph, int i, StateIndex s);

/// True iff no remaining box movement-blocks i and at least one side of the
/// grasp axis has no remaining access blocker. Self-edges are never removed.
bool accessible(const PrecedenceGraph& graph, int i, StateIndex s, const std::vector<bool>& removed);

}  // namespace tap
