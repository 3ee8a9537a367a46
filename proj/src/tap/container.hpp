#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tap/ems.hpp"
#include "tap/geometry.hpp"

namespace tap {

enum class ContainerMode : int { single = 0, multi_all = 1, multi_last = 2 };

/// How a box is aligned inside its chosen EMS.
enum class CornerRule : int {
  dbl = 0,           // deepest-bottom-left corner only
  four_corners = 1,  // best of the four bottom corners of the EMS footprint
};

struct PlacementRules {
  double min_support_ratio = 0.3;
  CornerRule corner = CornerRule::dbl;

  friend bool operator==(const PlacementRules&, const PlacementRules&) = default;
};

/// Where a box would come to rest and whether it would stay there.
struct PlannedPlacement {
  std::array<int, 3> corner{};
  Dims3 dims;
  bool stable = true;
};

/// Oriented dims fit inside the EMS componentwise.
bool fits(const Dims3& oriented, const Ems& ems) noexcept;

/// Support cells are footprint cells at exactly z_rest. Stable iff they cover
/// at least `min_ratio` of the footprint and the footprint centroid lies in
/// their bounding rectangle grown by half a cell.
bool stability_check(const HeightMap& before, const Footprint& f, int z_rest, double min_ratio);

/// Gravity-dropped placement of `oriented` inside `ems`. Precondition: fits().
PlannedPlacement plan_placement(const HeightMap& hm, const Ems& ems, const Dims3& oriented,
                                const PlacementRules& rules);
/// Same, with rest heights answered by a prebuilt range-maximum table.
PlannedPlacement plan_placement(const HeightMap& hm, const RangeMax2D& range_max, const Ems& ems,
                                const Dims3& oriented, const PlacementRules& rules);

struct Placement {
  int box_id = -1;
  int state = 0;
  Dims3 dims;  // occupied (oriented) extents
  std::array<int, 3> corner{};
  int container = 0;
  std::int64_t volume = 0;  // counted volume; may be below dims.volume() under quantization
  bool stable = true;
};

struct ContainerState {
  ContainerSpec spec;
  HeightMap heights;
  std::vector<Placement> placements;
  std::int64_t packed_volume = 0;
  bool terminated = false;  // an unstable placement ended this container

  explicit ContainerState(ContainerSpec s) : spec(s), heights(s) {}
};

/// Packed volume over container volume.
double compactness(const ContainerState& container) noexcept;

/// An EMS offered for packing, tagged with its container.
struct Candidate {
  Ems ems;
  int container = 0;
};

struct SessionConfig {
  ContainerSpec spec;
  ContainerMode mode = ContainerMode::single;
  PlacementRules rules;
  EmsMode ems_mode = EmsMode::with_constrained;
  bool unstable_penalty = false;
};

constexpr double kUnstablePenalty = 0.1;

/// Containers of one episode. Single-owner mutable state.
class PackingSession {
 public:
  explicit PackingSession(SessionConfig config);
  PackingSession(const PackingSession& other);
  PackingSession& operator=(const PackingSession& other);
  PackingSession(PackingSession&&) noexcept = default;
  PackingSession& operator=(PackingSession&&) noexcept = default;

  const SessionConfig& config() const noexcept { return config_; }
  const std::vector<ContainerState>& containers() const noexcept { return containers_; }
  int unstable_events() const noexcept { return unstable_events_; }

  /// Whether container c currently contributes candidates under the mode.
  bool exposed(int c) const;
  bool any_exposed() const;

  const std::vector<Ems>& ems_of(int c) const;
  std::vector<Candidate> candidates() const;

  /// Places at the planned corner of the candidate. An unstable placement
  /// consumes the box without counting it and terminates the container.
  Placement place(const Candidate& candidate, int box_id, int state, const Dims3& oriented, std::int64_t volume);

  /// Places with the footprint's DBL corner at (x, y), dropping to rest.
  Placement place_at(int container, int box_id, int state, const Dims3& oriented, int x, int y,
                     std::int64_t volume);

  /// Appends an empty container. Errc::session in Single mode.
  int open_new_container();

 private:
  Placement commit(int container, int box_id, int state, const Dims3& oriented, const Footprint& f,
                   std::int64_t volume);

  SessionConfig config_;
  std::vector<ContainerState> containers_;
  int unstable_events_ = 0;
  mutable std::vector<std::unique_ptr<std::vector<Ems>>> ems_cache_;
};

/// Single: compactness of the container. Multi: mean over opened containers.
/// Penalised by kUnstablePenalty per unstable event when enabled.
double session_reward(const PackingSession& session);

struct SessionMetrics {
  double c_mean = 0.0;
  int n_t = 0;
  int n_t_star = 0;
  int delta_n_t = 0;
};

/// N_t* = ceil(sum V_i / V_t) over all source boxes.
SessionMetrics session_metrics(const PackingSession& session, std::span<const std::int64_t> source_volumes);

/// One packing-state row for mask construction.
struct StateRow {
  Dims3 dims;
  bool accessible = false;
  bool packed = false;
};

class ValidityMask {
 public:
  ValidityMask() = default;
  ValidityMask(int rows, int cols) : rows_(rows), cols_(cols), bits_(static_cast<std::size_t>(rows) * cols, 0) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  bool at(int j, int k) const { return bits_.at(static_cast<std::size_t>(j) * cols_ + k) != 0; }
  void set(int j, int k, bool v) { bits_.at(static_cast<std::size_t>(j) * cols_ + k) = v ? 1 : 0; }
  bool row_any(int j) const;
  bool any() const;
  std::size_t count() const;

  friend bool operator==(const ValidityMask&, const ValidityMask&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// V_jk = fit(j, k) and accessible(j) and not packed(j). Candidates are
/// already restricted to exposed containers.
ValidityMask validity_mask(std::span<const StateRow> states, std::span<const Candidate> candidates);

}  // namespace tap
