#pragma once

#include <cstdint>
#include <vector>

#include "tap/container.hpp"
#include "tap/scene.hpp"

namespace tap {

struct BoxStateObs {
  int j = 0;
  int box = 0;  // source box id
  int s = 0;
  Dims3 dims;  // observed, oriented
  StatePrecedence prec;
};

struct EmsObs {
  int k = 0;
  Ems ems;
  int container = 0;
};

struct ContainerObs {
  int index = 0;
  bool exposed = false;
  bool terminated = false;
  std::int64_t packed_volume = 0;
  HeightMap heights;
};

/// Everything a policy sees before choosing a (box state, EMS) pair.
struct Observation {
  int step = 0;
  ContainerSpec spec;
  PlacementRules rules;
  std::vector<int> box_ids;  // visible boxes; column order of the precedence rows
  std::vector<BoxStateObs> states;
  std::vector<EmsObs> ems;
  ValidityMask validity;
  std::vector<ContainerObs> containers;

  const ContainerObs& container(int index) const;
};

struct Action {
  int j = 0;
  int k = 0;
  friend bool operator==(const Action&, const Action&) = default;
};

/// Sent after a pick reveals different dims: choose a new EMS for state j.
struct ReviseRequest {
  int j = 0;
  int box = 0;
  int s = 0;
  Dims3 dims;  // true oriented dims
  std::vector<std::uint8_t> row;
  std::vector<EmsObs> ems;
  std::vector<ContainerObs> containers;
  PlacementRules rules;

  const ContainerObs& container(int index) const;
};

struct StepInfo {
  bool unstable = false;
  bool revised = false;
  int containers_opened = 0;
  int invalid_actions = 0;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

}  // namespace tap
