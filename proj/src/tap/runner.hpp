#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tap/env.hpp"
#include "tap/policies.hpp"

namespace tap {

struct StepRecord {
  enum class Kind : int { action = 0, revise = 1 };
  Kind kind = Kind::action;
  int j = 0;
  int k = 0;
  double reward = 0.0;
  bool done = false;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct EpisodeRecord {
  EpisodeConfig config;
  std::string policy;
  std::vector<StepRecord> steps;
  std::vector<Placement> placements;  // grouped by container
  SessionMetrics metrics;
  double reward = 0.0;
  int unstable_events = 0;
  int invalid_actions = 0;
  int decisions = 0;  // placements attempted
  // Set when the episode was aborted; metrics then describe the partial state.
  Errc error = Errc::ok;
  std::string error_message;
};

nlohmann::json record_to_json(const EpisodeRecord& r);
EpisodeRecord record_from_json(const nlohmann::json& j);

/// Runs one episode to completion. Policy errors and invalid decisions abort
/// the episode by throwing.
EpisodeRecord run_episode(const EpisodeConfig& config, Policy& policy);

struct BatchOptions {
  EpisodeConfig config;  // seed is replaced by seed_base + i
  std::string policy = "greedy";
  int episodes = 1;
  std::uint64_t seed_base = 1;
  int threads = 0;  // 0 = hardware concurrency
};

/// Episodes in parallel, each with its own environment and policy. Failed
/// episodes carry their error in the record instead of throwing.
std::vector<EpisodeRecord> run_batch(const BatchOptions& options);

struct BatchSummary {
  int episodes = 0;
  int failed = 0;
  double c_mean = 0.0;
  double n_t_mean = 0.0;
  double n_t_star_mean = 0.0;
  double delta_n_t_mean = 0.0;
  double steps_mean = 0.0;  // picks per episode; a revise is not counted
  double unstable_mean = 0.0;
};

/// Means over episodes that completed.
BatchSummary summarize(const std::vector<EpisodeRecord>& records);
nlohmann::json summary_to_json(const BatchSummary& s);
/// Columns: seed,source,mode,C,N_t,dNt,steps,unstable_events
std::string batch_csv(const std::vector<EpisodeRecord>& records);

struct ReplayReport {
  int steps = 0;
  SessionMetrics metrics;
  double reward = 0.0;
};

/// Re-executes the recorded actions. Errc::diverged names the first step
/// whose outcome differs from the record.
ReplayReport replay(const EpisodeRecord& record);

/// Session reached by re-executing a record.
PackingSession replay_session(const EpisodeRecord& record);

/// Executes a PPSG recorded solution in a Single container.
PackingSession replay_solution(const PpsgInstance& instance);

struct TableRow {
  SourceKind source = SourceKind::rand;
  ContainerMode mode = ContainerMode::single;
  int episodes = 0;
  int failed = 0;
  double c_mean = 0.0;
  double n_t_mean = 0.0;
  double delta_n_t_mean = 0.0;
};

struct TableOptions {
  EpisodeConfig base;
  std::vector<SourceKind> sources{SourceKind::fix, SourceKind::rand, SourceKind::ppsg};
  std::vector<ContainerMode> modes{ContainerMode::single, ContainerMode::multi_all, ContainerMode::multi_last};
  std::string policy = "greedy";
  int episodes = 200;
  std::uint64_t seed_base = 1;
  int threads = 0;
};

/// PPSG cells use N_s = 10; the others use the base N_s.
std::vector<TableRow> run_table(const TableOptions& options);
std::string table_csv(const std::vector<TableRow>& rows);
nlohmann::json table_json(const std::vector<TableRow>& rows);
std::string table_text(const std::vector<TableRow>& rows);

/// Each placement as a closed axis-aligned cuboid; containers are laid out
/// side by side along x.
std::string session_obj(const PackingSession& session);

}  // namespace tap
