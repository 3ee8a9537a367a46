#include "tap/container.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>

namespace tap {

bool fits(const Dims3& o, const Ems& e) noexcept {
  return o.x <= e.dims.x && o.y <= e.dims.y && o.z <= e.dims.z;
}

bool stability_check(const HeightMap& before, const Footprint& f, int z_rest, double min_ratio) {
  std::int64_t support = 0;
  int lo_x = f.x0 + f.w, hi_x = -1, lo_y = f.y0 + f.d, hi_y = -1;
  for (int y = f.y0; y < f.y0 + f.d; ++y) {
    for (int x = f.x0; x < f.x0 + f.w; ++x) {
      if (before.at(x, y) != z_rest) continue;
      ++support;
      lo_x = std::min(lo_x, x);
      hi_x = std::max(hi_x, x);
      lo_y = std::min(lo_y, y);
      hi_y = std::max(hi_y, y);
    }
  }
  if (support == 0) return false;
  if (static_cast<double>(support) / static_cast<double>(f.area()) < min_ratio) return false;
  const double cx = f.x0 + f.w / 2.0;
  const double cy = f.y0 + f.d / 2.0;
  return cx >= lo_x - 0.5 && cx <= hi_x + 1.5 && cy >= lo_y - 0.5 && cy <= hi_y + 1.5;
}

namespace {

template <typename RestHeight>
PlannedPlacement plan_with(const HeightMap& hm, RestHeight&& rest, const Ems& ems, const Dims3& o,
                           const PlacementRules& rules) {
  if (!fits(o, ems)) throw Error(Errc::contract, "box does not fit the EMS");
  const int x_far = ems.corner[0] + ems.dims.x - o.x;
  const int y_far = ems.corner[1] + ems.dims.y - o.y;
  std::array<std::array<int, 2>, 4> corners{{{ems.corner[0], ems.corner[1]},
                                             {x_far, ems.corner[1]},
                                             {ems.corner[0], y_far},
                                             {x_far, y_far}}};
  const int tries = rules.corner == CornerRule::dbl ? 1 : 4;

  PlannedPlacement best;
  auto best_key = std::tuple(2, 0, 0);
  for (int c = 0; c < tries; ++c) {
    const Footprint f{corners[c][0], corners[c][1], o.x, o.y};
    const int z = rest(f);
    const bool stable = stability_check(hm, f, z, rules.min_support_ratio);
    const auto key = std::tuple(stable ? 0 : 1, z, c);
    if (key < best_key) {
      best_key = key;
      best = {{f.x0, f.y0, z}, o, stable};
    }
  }
  return best;
}

}  // namespace

PlannedPlacement plan_placement(const HeightMap& hm, const Ems& ems, const Dims3& o, const PlacementRules& rules) {
  return plan_with(hm, [&](const Footprint& f) { return hm.max_under(f); }, ems, o, rules);
}

PlannedPlacement plan_placement(const HeightMap& hm, const RangeMax2D& range_max, const Ems& ems, const Dims3& o,
                                const PlacementRules& rules) {
  return plan_with(hm, [&](const Footprint& f) { return range_max.query(f); }, ems, o, rules);
}

double compactness(const ContainerState& c) noexcept {
  return static_cast<double>(c.packed_volume) / static_cast<double>(c.spec.volume());
}

PackingSession::PackingSession(SessionConfig config) : config_(config) {
  if (!config_.spec.valid()) throw Error(Errc::contract, "invalid container spec");
  containers_.emplace_back(config_.spec);
  ems_cache_.resize(1);
}

// The EMS cache is rebuilt lazily in the copy.
PackingSession::PackingSession(const PackingSession& o)
    : config_(o.config_), containers_(o.containers_), unstable_events_(o.unstable_events_) {
  ems_cache_.resize(containers_.size());
}

PackingSession& PackingSession::operator=(const PackingSession& o) {
  if (this != &o) *this = PackingSession(o);
  return *this;
}

bool PackingSession::exposed(int c) const {
  if (c < 0 || c >= static_cast<int>(containers_.size())) throw Error(Errc::range, "container index out of range");
  if (containers_[c].terminated) return false;
  if (config_.mode == ContainerMode::multi_all) return true;
  return c == static_cast<int>(containers_.size()) - 1;
}

bool PackingSession::any_exposed() const {
  for (int c = 0; c < static_cast<int>(containers_.size()); ++c) {
    if (exposed(c)) return true;
  }
  return false;
}

const std::vector<Ems>& PackingSession::ems_of(int c) const {
  if (c < 0 || c >= static_cast<int>(containers_.size())) throw Error(Errc::range, "container index out of range");
  auto& slot = ems_cache_[c];
  if (!slot) slot = std::make_unique<std::vector<Ems>>(extract_all(containers_[c].heights, config_.ems_mode));
  return *slot;
}

std::vector<Candidate> PackingSession::candidates() const {
  std::vector<Candidate> out;
  for (int c = 0; c < static_cast<int>(containers_.size()); ++c) {
    if (!exposed(c)) continue;
    for (const Ems& e : ems_of(c)) out.push_back({e, c});
  }
  return out;
}

Placement PackingSession::place(const Candidate& cand, int box_id, int state, const Dims3& o, std::int64_t volume) {
  if (cand.container < 0 || cand.container >= static_cast<int>(containers_.size())) {
    throw Error(Errc::range, "container index out of range");
  }
  if (containers_[cand.container].terminated) throw Error(Errc::session, "container already terminated");
  if (!exposed(cand.container)) throw Error(Errc::contract, "container is not open for packing in this mode");
  const auto& hm = containers_[cand.container].heights;
  const PlannedPlacement plan = plan_placement(hm, cand.ems, o, config_.rules);
  return commit(cand.container, box_id, state, o, {plan.corner[0], plan.corner[1], o.x, o.y}, volume);
}

Placement PackingSession::place_at(int container, int box_id, int state, const Dims3& o, int x, int y,
                                   std::int64_t volume) {
  if (container < 0 || container >= static_cast<int>(containers_.size())) {
    throw Error(Errc::range, "container index out of range");
  }
  if (containers_[container].terminated) throw Error(Errc::session, "container already terminated");
  return commit(container, box_id, state, o, {x, y, o.x, o.y}, volume);
}

Placement PackingSession::commit(int container, int box_id, int state, const Dims3& o, const Footprint& f,
                                 std::int64_t volume) {
  ContainerState& c = containers_[container];
  const int z_rest = c.heights.max_under(f);
  if (z_rest + o.z > c.spec.height) {
    throw Error(Errc::overflow, "placement would exceed the container height");
  }
  Placement p;
  p.box_id = box_id;
  p.state = state;
  p.dims = o;
  p.corner = {f.x0, f.y0, z_rest};
  p.container = container;
  p.volume = volume;
  p.stable = stability_check(c.heights, f, z_rest, config_.rules.min_support_ratio);
  if (p.stable) {
    c.heights.raise(f, z_rest + o.z);
    c.packed_volume += volume;
    ems_cache_[container].reset();
  } else {
    c.terminated = true;
    ++unstable_events_;
  }
  c.placements.push_back(p);
  return p;
}

int PackingSession::open_new_container() {
  if (config_.mode == ContainerMode::single) {
    throw Error(Errc::session, "single-container sessions cannot open another container");
  }
  containers_.emplace_back(config_.spec);
  ems_cache_.emplace_back();
  return static_cast<int>(containers_.size()) - 1;
}

double session_reward(const PackingSession& session) {
  const auto& cs = session.containers();
  double sum = 0.0;
  for (const auto& c : cs) sum += compactness(c);
  double reward = session.config().mode == ContainerMode::single ? compactness(cs.front())
                                                                 : sum / static_cast<double>(cs.size());
  if (session.config().unstable_penalty) reward -= kUnstablePenalty * session.unstable_events();
  return reward;
}

SessionMetrics session_metrics(const PackingSession& session, std::span<const std::int64_t> source_volumes) {
  SessionMetrics m;
  const auto& cs = session.containers();
  double sum = 0.0;
  for (const auto& c : cs) sum += compactness(c);
  m.n_t = static_cast<int>(cs.size());
  m.c_mean = sum / static_cast<double>(m.n_t);
  const std::int64_t total = std::accumulate(source_volumes.begin(), source_volumes.end(), std::int64_t{0});
  const std::int64_t vt = session.config().spec.volume();
  m.n_t_star = static_cast<int>((total + vt - 1) / vt);
  m.delta_n_t = m.n_t - m.n_t_star;
  return m;
}

bool ValidityMask::row_any(int j) const {
  const auto begin = bits_.begin() + static_cast<std::ptrdiff_t>(j) * cols_;
  return std::any_of(begin, begin + cols_, [](std::uint8_t b) { return b != 0; });
}

bool ValidityMask::any() const {
  return std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

std::size_t ValidityMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

ValidityMask validity_mask(std::span<const StateRow> states, std::span<const Candidate> candidates) {
  ValidityMask v(static_cast<int>(states.size()), static_cast<int>(candidates.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    const StateRow& row = states[j];
    if (row.packed || !row.accessible) continue;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (fits(row.dims, candidates[k].ems)) v.set(static_cast<int>(j), static_cast<int>(k), true);
    }
  }
  return v;
}

}  // namespace tap
