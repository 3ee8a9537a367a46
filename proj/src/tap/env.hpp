#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "tap/benchmark.hpp"
#include "tap/container.hpp"
#include "tap/observation.hpp"
#include "tap/scene.hpp"

namespace tap {

struct EpisodeConfig {
  SourceKind source = SourceKind::rand;
  ContainerMode mode = ContainerMode::single;
  int n_source = 20;
  int n_fixed = 5;
  std::uint64_t catalogue_seed = 20240501;
  ContainerSpec container{100, 100, 100};
  /// Representation unit: boxes are observed and packed at extents rounded up
  /// to multiples of it, while compactness counts the true volume.
  int unit = 1;
  DimsRange rand_range{36, 72};
  double occlusion_probability = 0.1;
  int max_perturbation = 2;
  /// Conveyor mode: this many boxes visible at once, top picks only, no precedence.
  std::optional<int> conveyor_window;
  bool dense_reward = false;
  bool unstable_penalty = false;
  PlacementRules rules;
  EmsMode ems_mode = EmsMode::with_constrained;
  /// Workspace floor sides are this multiple of the container sides.
  double workspace_scale = 3.0;
  double corridor_margin = 0.0;
  std::uint64_t seed = 1;
  /// Explicit source boxes (from a dataset); overrides the generator.
  std::vector<Dims3> boxes;
};

/// Reports the dims every source box would get for a config, without a scene.
std::vector<Dims3> source_dims(const EpisodeConfig& config);

using StepOutcome = std::variant<StepResult, ReviseRequest>;

/// One episode: source workspace, precedence, containers and the step loop.
class Environment {
 public:
  explicit Environment(EpisodeConfig config);

  const EpisodeConfig& config() const noexcept { return config_; }

  /// Builds the source (scene or conveyor queue) and empty containers.
  const Observation& reset();

  /// Executes a pair, or asks for a new EMS when the pick reveals other dims.
  /// Errc::invalid_action for pairs outside the mask (counted, state unchanged).
  StepOutcome step(const Action& action);

  /// Completes a pending revise with EMS index k of the revise request.
  StepResult revise(int k);

  bool done() const noexcept { return done_; }
  bool revise_pending() const noexcept { return pending_.has_value(); }
  const Observation& observation() const noexcept { return obs_; }
  const ReviseRequest& revise_request() const;

  const PackingSession& session() const;
  const Scene& scene() const noexcept { return scene_; }
  const PrecedenceGraph& precedence() const noexcept { return graph_; }
  const std::vector<std::int64_t>& source_volumes() const noexcept { return volumes_; }
  const std::vector<bool>& removed() const noexcept { return removed_; }
  int invalid_actions() const noexcept { return invalid_actions_; }
  int steps() const noexcept { return step_; }
  SessionMetrics metrics() const;
  double reward() const;

  /// Oriented dims of a box as the observation reports them (before a pick).
  Dims3 observed_oriented(int box, int s) const;
  /// Oriented dims the box actually occupies once picked.
  Dims3 true_oriented(int box, int s) const;
  bool conveyor() const noexcept { return config_.conveyor_window.has_value(); }

 private:
  struct Pending {
    int j = 0;
    int box = 0;
    int s = 0;
    Dims3 dims;
    std::vector<Candidate> candidates;
    ReviseRequest request;
    StepInfo info;
  };

  void build_observation();
  std::vector<int> visible_boxes() const;
  bool state_accessible(int box, int s) const;
  StepResult execute(int box, int s, const Dims3& dims, const Candidate& candidate, StepInfo info);
  std::optional<StepResult> prepare_revise(int j, int box, int s, const Dims3& dims, StepInfo& info);
  StepResult finish(StepInfo info);
  StepResult advance(StepInfo info);
  std::vector<ContainerObs> container_observations() const;
  void require_reset() const;

  EpisodeConfig config_;
  Scene scene_;
  PrecedenceGraph graph_;
  std::vector<Dims3> true_dims_;      // local-frame true extents
  std::vector<Dims3> observed_dims_;  // local-frame observed extents
  std::vector<std::int64_t> volumes_;
  std::vector<bool> removed_;
  std::vector<int> queue_;  // conveyor order
  std::optional<PackingSession> session_;
  std::vector<Candidate> candidates_;
  Observation obs_;
  std::optional<Pending> pending_;
  bool done_ = false;
  int step_ = 0;
  int invalid_actions_ = 0;
  double last_reward_ = 0.0;
};

}  // namespace tap
