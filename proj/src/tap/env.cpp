#include "tap/env.hpp"

#include <algorithm>
#include <string>

namespace tap {

std::vector<Dims3> source_dims(const EpisodeConfig& c) {
  if (!c.boxes.empty()) return c.boxes;
  switch (c.source) {
    case SourceKind::rand: return gen_rand(c.n_source, c.rand_range, 1, derive_seed(c.seed, 1));
    case SourceKind::fix:
      return gen_fix(c.n_source, c.n_fixed, c.rand_range, c.catalogue_seed, derive_seed(c.seed, 2));
    case SourceKind::ppsg: return gen_ppsg(c.n_source, c.container, derive_seed(c.seed, 3)).boxes;
  }
  throw Error(Errc::contract, "unknown source kind");
}

Environment::Environment(EpisodeConfig config) : config_(std::move(config)) {
  if (!config_.container.valid()) throw Error(Errc::contract, "invalid container spec");
  if (config_.unit < 1) throw Error(Errc::contract, "unit must be >= 1");
  if (config_.conveyor_window && *config_.conveyor_window < 1) throw Error(Errc::contract, "conveyor window must be >= 1");
}

const Observation& Environment::reset() {
  const auto dims = source_dims(config_);
  const int n = static_cast<int>(dims.size());
  if (n < 1) throw Error(Errc::contract, "episode needs at least one source box");

  queue_.clear();
  if (conveyor()) {
    scene_ = Scene{};
    true_dims_ = dims;
    observed_dims_ = dims;
    graph_ = PrecedenceGraph(n, {}, {});
    for (int i = 0; i < n; ++i) queue_.push_back(i);
  } else {
    SceneOptions opts;
    opts.workspace = {config_.workspace_scale * config_.container.width,
                      config_.workspace_scale * config_.container.depth};
    opts.min_support_ratio = config_.rules.min_support_ratio;
    opts.occlusion_probability = config_.occlusion_probability;
    opts.max_perturbation = config_.max_perturbation;
    const std::uint64_t scene_seed = derive_seed(config_.seed, 10);
    for (int grow = 0;; ++grow) {
      try {
        scene_ = generate_scene(dims, opts, scene_seed);
        break;
      } catch (const Error& e) {
        if (e.code() != Errc::scene_generation || grow >= 5) throw;
        opts.workspace.width *= 1.25;
        opts.workspace.depth *= 1.25;
      }
    }
    true_dims_.clear();
    observed_dims_.clear();
    for (const auto& b : scene_.boxes) {
      true_dims_.push_back(b.dims);
      observed_dims_.push_back(b.observed_dims);
    }
    graph_ = extract_precedence(scene_, {0.5, config_.corridor_margin});
  }

  volumes_.clear();
  for (const auto& d : true_dims_) volumes_.push_back(d.volume());
  removed_.assign(static_cast<std::size_t>(n), false);
  session_.emplace(SessionConfig{config_.container, config_.mode, config_.rules, config_.ems_mode,
                                 config_.unstable_penalty});
  pending_.reset();
  done_ = false;
  step_ = 0;
  invalid_actions_ = 0;
  last_reward_ = 0.0;
  build_observation();
  if (!obs_.validity.any()) done_ = true;
  return obs_;
}

void Environment::require_reset() const {
  if (!session_) throw Error(Errc::session, "environment used before reset");
}

const PackingSession& Environment::session() const {
  require_reset();
  return *session_;
}

const ReviseRequest& Environment::revise_request() const {
  if (!pending_) throw Error(Errc::session, "no revise pending");
  return pending_->request;
}

Dims3 Environment::observed_oriented(int box, int s) const {
  return orient_dims(quantize_dims(observed_dims_.at(box), config_.unit), StateIndex(s));
}

Dims3 Environment::true_oriented(int box, int s) const {
  return orient_dims(quantize_dims(true_dims_.at(box), config_.unit), StateIndex(s));
}

std::vector<int> Environment::visible_boxes() const {
  std::vector<int> out;
  if (conveyor()) {
    const auto m = static_cast<std::size_t>(*config_.conveyor_window);
    for (std::size_t i = 0; i < queue_.size() && i < m; ++i) out.push_back(queue_[i]);
    return out;
  }
  for (int i = 0; i < static_cast<int>(removed_.size()); ++i) {
    if (!removed_[i]) out.push_back(i);
  }
  return out;
}

bool Environment::state_accessible(int box, int s) const {
  if (conveyor()) return StateIndex(s).grasp() == GraspAxis::z;
  return accessible(graph_, box, StateIndex(s), removed_);
}

std::vector<ContainerObs> Environment::container_observations() const {
  std::vector<ContainerObs> out;
  const auto& cs = session_->containers();
  for (int c = 0; c < static_cast<int>(cs.size()); ++c) {
    out.push_back({c, session_->exposed(c), cs[c].terminated, cs[c].packed_volume, cs[c].heights});
  }
  return out;
}

void Environment::build_observation() {
  obs_ = Observation{};
  obs_.step = step_;
  obs_.spec = config_.container;
  obs_.rules = config_.rules;
  obs_.box_ids = visible_boxes();

  const int n_vis = static_cast<int>(obs_.box_ids.size());
  std::vector<StateRow> rows;
  rows.reserve(static_cast<std::size_t>(n_vis) * StateIndex::kCount);
  for (int idx = 0; idx < n_vis; ++idx) {
    const int box = obs_.box_ids[idx];
    for (int s = 0; s < StateIndex::kCount; ++s) {
      BoxStateObs st;
      st.j = idx * StateIndex::kCount + s;
      st.box = box;
      st.s = s;
      st.dims = observed_oriented(box, s);
      st.prec.movement.assign(static_cast<std::size_t>(n_vis), 0);
      st.prec.access.assign(static_cast<std::size_t>(n_vis), 0);
      if (!conveyor()) {
        const StatePrecedence full = state_precedence(graph_, box, StateIndex(s));
        for (int col = 0; col < n_vis; ++col) {
          st.prec.movement[col] = full.movement[obs_.box_ids[col]];
          st.prec.access[col] = full.access[obs_.box_ids[col]];
        }
      }
      rows.push_back({st.dims, state_accessible(box, s), false});
      obs_.states.push_back(std::move(st));
    }
  }

  candidates_ = session_->candidates();
  for (int k = 0; k < static_cast<int>(candidates_.size()); ++k) {
    obs_.ems.push_back({k, candidates_[k].ems, candidates_[k].container});
  }
  obs_.validity = validity_mask(rows, candidates_);
  obs_.containers = container_observations();
}

StepOutcome Environment::step(const Action& a) {
  require_reset();
  if (done_) throw Error(Errc::session, "episode already finished");
  if (pending_) throw Error(Errc::session, "a revise is pending; answer it first");
  if (a.j < 0 || a.j >= obs_.validity.rows() || a.k < 0 || a.k >= obs_.validity.cols() ||
      !obs_.validity.at(a.j, a.k)) {
    ++invalid_actions_;
    throw Error(Errc::invalid_action,
                "pair (" + std::to_string(a.j) + ", " + std::to_string(a.k) + ") is not valid in this observation");
  }
  const BoxStateObs& st = obs_.states[a.j];
  const int box = st.box;
  const int s = st.s;
  const Dims3 actual = true_oriented(box, s);
  StepInfo info;
  if (actual != st.dims) {
    info.revised = true;
    if (auto ended = prepare_revise(a.j, box, s, actual, info)) return *ended;
    return pending_->request;
  }
  return execute(box, s, actual, candidates_[a.k], info);
}

std::optional<StepResult> Environment::prepare_revise(int j, int box, int s, const Dims3& dims, StepInfo& info) {
  auto row_for = [&](const std::vector<Candidate>& cands) {
    std::vector<std::uint8_t> row(cands.size(), 0);
    for (std::size_t k = 0; k < cands.size(); ++k) row[k] = fits(dims, cands[k].ems) ? 1 : 0;
    return row;
  };
  auto any = [](const std::vector<std::uint8_t>& row) {
    return std::any_of(row.begin(), row.end(), [](std::uint8_t b) { return b != 0; });
  };

  std::vector<Candidate> cands = session_->candidates();
  std::vector<std::uint8_t> row = row_for(cands);
  if (!any(row) && config_.mode != ContainerMode::single) {
    session_->open_new_container();
    ++info.containers_opened;
    cands = session_->candidates();
    row = row_for(cands);
  }
  if (!any(row)) {
    // The grasped box cannot go anywhere; it is consumed.
    removed_[box] = true;
    queue_.erase(std::remove(queue_.begin(), queue_.end(), box), queue_.end());
    ++step_;
    return finish(info);
  }

  Pending p;
  p.j = j;
  p.box = box;
  p.s = s;
  p.dims = dims;
  p.info = info;
  p.request.j = j;
  p.request.box = box;
  p.request.s = s;
  p.request.dims = dims;
  p.request.row = std::move(row);
  for (int k = 0; k < static_cast<int>(cands.size()); ++k) p.request.ems.push_back({k, cands[k].ems, cands[k].container});
  p.request.containers = container_observations();
  p.request.rules = config_.rules;
  p.candidates = std::move(cands);
  pending_ = std::move(p);
  return std::nullopt;
}

StepResult Environment::revise(int k) {
  require_reset();
  if (!pending_) throw Error(Errc::session, "no revise pending");
  const auto& row = pending_->request.row;
  if (k < 0 || k >= static_cast<int>(row.size()) || !row[k]) {
    ++invalid_actions_;
    throw Error(Errc::invalid_action, "revised EMS index " + std::to_string(k) + " is not valid for the picked box");
  }
  Pending p = std::move(*pending_);
  pending_.reset();
  return execute(p.box, p.s, p.dims, p.candidates[k], p.info);
}

StepResult Environment::execute(int box, int s, const Dims3& dims, const Candidate& candidate, StepInfo info) {
  const Placement placed = session_->place(candidate, box, s, dims, volumes_[box]);
  removed_[box] = true;
  queue_.erase(std::remove(queue_.begin(), queue_.end(), box), queue_.end());
  ++step_;
  info.unstable = !placed.stable;
  return advance(info);
}

StepResult Environment::advance(StepInfo info) {
  const bool single = config_.mode == ContainerMode::single;
  if (std::none_of(removed_.begin(), removed_.end(), [](bool r) { return !r; })) return finish(info);
  if (info.unstable) {
    if (single) return finish(info);
    session_->open_new_container();
    ++info.containers_opened;
  }
  build_observation();
  if (!obs_.validity.any()) {
    if (single || session_->containers().back().placements.empty()) return finish(info);
    session_->open_new_container();
    ++info.containers_opened;
    build_observation();
    if (!obs_.validity.any()) return finish(info);
  }
  StepResult r;
  r.info = info;
  r.info.invalid_actions = invalid_actions_;
  if (config_.dense_reward) {
    const double now = session_reward(*session_);
    r.reward = now - last_reward_;
    last_reward_ = now;
  }
  return r;
}

StepResult Environment::finish(StepInfo info) {
  done_ = true;
  obs_.containers = container_observations();
  StepResult r;
  r.done = true;
  r.info = info;
  r.info.invalid_actions = invalid_actions_;
  const double total = session_reward(*session_);
  r.reward = config_.dense_reward ? total - last_reward_ : total;
  last_reward_ = total;
  return r;
}

SessionMetrics Environment::metrics() const { return session_metrics(session(), volumes_); }

double Environment::reward() const { return session_reward(session()); }

}  // namespace tap
