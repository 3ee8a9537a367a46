#include "tap/serialize.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace tap {

namespace {

template <class T>
void opt(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

std::vector<int> bits_to_ints(const std::vector<std::uint8_t>& bits) { return {bits.begin(), bits.end()}; }

std::vector<std::uint8_t> ints_to_bits(const Json& j) {
  std::vector<std::uint8_t> out;
  for (const auto& v : j) {
    const int b = v.get<int>();
    if (b != 0 && b != 1) throw Error(Errc::parse, "bit rows hold only 0 and 1");
    out.push_back(static_cast<std::uint8_t>(b));
  }
  return out;
}

template <class E, std::size_t N>
E enum_from(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  throw Error(Errc::parse, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::string_view, 3> kSourceNames{"fix", "rand", "ppsg"};
constexpr std::array<std::string_view, 3> kModeNames{"single", "multi_all", "multi_last"};
constexpr std::array<std::string_view, 2> kCornerNames{"dbl", "four_corners"};
constexpr std::array<std::string_view, 2> kKindNames{"original", "constrained"};
constexpr std::array<std::string_view, 2> kEmsModeNames{"original_only", "with_constrained"};

}  // namespace

std::string to_string(SourceKind k) { return std::string(kSourceNames.at(static_cast<int>(k))); }
std::string to_string(ContainerMode m) { return std::string(kModeNames.at(static_cast<int>(m))); }
SourceKind parse_source(std::string_view s) { return enum_from<SourceKind>(s, kSourceNames, "source"); }
ContainerMode parse_mode(std::string_view s) { return enum_from<ContainerMode>(s, kModeNames, "container mode"); }

void to_json(Json& j, const Dims3& d) { j = Json::array({d.x, d.y, d.z}); }
void from_json(const Json& j, Dims3& d) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::parse, "dims must be [x, y, z]");
  d = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
  if (!d.valid()) throw Error(Errc::parse, "dims must be positive");
}

void to_json(Json& j, const ContainerSpec& s) { j = {{"width", s.width}, {"depth", s.depth}, {"height", s.height}}; }
void from_json(const Json& j, ContainerSpec& s) {
  s = {j.at("width").get<int>(), j.at("depth").get<int>(), j.at("height").get<int>()};
  if (!s.valid()) throw Error(Errc::parse, "container extents must be positive");
}

void to_json(Json& j, const HeightMap& h) {
  j = {{"width", h.spec().width},
       {"depth", h.spec().depth},
       {"height", h.spec().height},
       {"cells", std::vector<int>(h.cells().begin(), h.cells().end())}};
}
void from_json(const Json& j, HeightMap& h) {
  ContainerSpec spec;
  from_json(j, spec);
  auto cells = j.at("cells").get<std::vector<int>>();
  if (!spec.valid() || cells.size() != static_cast<std::size_t>(spec.width) * spec.depth) {
    throw Error(Errc::parse, "height map cells do not match width x depth");
  }
  for (int c : cells) {
    if (c < 0 || c > spec.height) throw Error(Errc::parse, "height map cell outside [0, height]");
  }
  h = HeightMap(spec, std::move(cells));
}

void to_json(Json& j, const PlacementRules& r) {
  j = {{"min_support_ratio", r.min_support_ratio}, {"corner", kCornerNames.at(static_cast<int>(r.corner))}};
}
void from_json(const Json& j, PlacementRules& r) {
  opt(j, "min_support_ratio", r.min_support_ratio);
  if (j.contains("corner")) r.corner = enum_from<CornerRule>(j.at("corner").get<std::string>(), kCornerNames, "corner rule");
}

void to_json(Json& j, const Ems& e) {
  j = {{"corner", e.corner}, {"dims", e.dims}, {"kind", kKindNames.at(static_cast<int>(e.kind))}};
}
void from_json(const Json& j, Ems& e) {
  e.corner = j.at("corner").get<std::array<int, 3>>();
  e.dims = j.at("dims").get<Dims3>();
  e.kind = enum_from<EmsKind>(j.value("kind", std::string("original")), kKindNames, "EMS kind");
}

void to_json(Json& j, const StatePrecedence& p) {
  j = Json::array({bits_to_ints(p.movement), bits_to_ints(p.access)});
}
void from_json(const Json& j, StatePrecedence& p) {
  if (!j.is_array() || j.size() != 2) throw Error(Errc::parse, "precedence must be two bit rows");
  p.movement = ints_to_bits(j[0]);
  p.access = ints_to_bits(j[1]);
}

void to_json(Json& j, const ValidityMask& v) {
  j = Json::array();
  for (int r = 0; r < v.rows(); ++r) {
    std::vector<int> row(static_cast<std::size_t>(v.cols()));
    for (int c = 0; c < v.cols(); ++c) row[c] = v.at(r, c) ? 1 : 0;
    j.push_back(std::move(row));
  }
}
void from_json(const Json& j, ValidityMask& v) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows ? static_cast<int>(j[0].size()) : 0;
  v = ValidityMask(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto bits = ints_to_bits(j[r]);
    if (static_cast<int>(bits.size()) != cols) throw Error(Errc::parse, "ragged validity mask");
    for (int c = 0; c < cols; ++c) v.set(r, c, bits[c] != 0);
  }
}

void to_json(Json& j, const BoxStateObs& b) {
  j = {{"j", b.j}, {"box", b.box}, {"s", b.s}, {"dims", b.dims}, {"prec", b.prec}};
}
void from_json(const Json& j, BoxStateObs& b) {
  b.j = j.at("j").get<int>();
  b.box = j.at("box").get<int>();
  b.s = j.at("s").get<int>();
  b.dims = j.at("dims").get<Dims3>();
  b.prec = j.at("prec").get<StatePrecedence>();
}

void to_json(Json& j, const EmsObs& e) {
  to_json(j, e.ems);
  j["k"] = e.k;
  j["container"] = e.container;
}
void from_json(const Json& j, EmsObs& e) {
  from_json(j, e.ems);
  e.k = j.at("k").get<int>();
  e.container = j.at("container").get<int>();
}

void to_json(Json& j, const ContainerObs& c) {
  j = {{"index", c.index},
       {"exposed", c.exposed},
       {"terminated", c.terminated},
       {"packed_volume", c.packed_volume},
       {"heights", c.heights}};
}
void from_json(const Json& j, ContainerObs& c) {
  c.index = j.at("index").get<int>();
  c.exposed = j.at("exposed").get<bool>();
  c.terminated = j.at("terminated").get<bool>();
  c.packed_volume = j.at("packed_volume").get<std::int64_t>();
  c.heights = j.at("heights").get<HeightMap>();
}

void to_json(Json& j, const Observation& o) {
  j = {{"step", o.step},         {"spec", o.spec},   {"rules", o.rules},         {"box_ids", o.box_ids},
       {"box_states", o.states}, {"ems", o.ems},     {"validity", o.validity},   {"containers", o.containers}};
}
void from_json(const Json& j, Observation& o) {
  o.step = j.at("step").get<int>();
  o.spec = j.at("spec").get<ContainerSpec>();
  o.rules = j.at("rules").get<PlacementRules>();
  o.box_ids = j.at("box_ids").get<std::vector<int>>();
  o.states = j.at("box_states").get<std::vector<BoxStateObs>>();
  o.ems = j.at("ems").get<std::vector<EmsObs>>();
  o.validity = j.at("validity").get<ValidityMask>();
  o.containers = j.at("containers").get<std::vector<ContainerObs>>();
  if (o.validity.rows() != static_cast<int>(o.states.size()) ||
      (o.validity.rows() > 0 && o.validity.cols() != static_cast<int>(o.ems.size()))) {
    throw Error(Errc::parse, "validity mask shape disagrees with box states and EMS list");
  }
}

void to_json(Json& j, const Action& a) { j = {{"j", a.j}, {"k", a.k}}; }
void from_json(const Json& j, Action& a) {
  a.j = j.at("j").get<int>();
  a.k = j.at("k").get<int>();
}

void to_json(Json& j, const ReviseRequest& r) {
  j = {{"j", r.j},     {"box", r.box},         {"s", r.s},
       {"dims", r.dims}, {"row", bits_to_ints(r.row)}, {"ems", r.ems},
       {"containers", r.containers}, {"rules", r.rules}};
}
void from_json(const Json& j, ReviseRequest& r) {
  r.j = j.at("j").get<int>();
  r.box = j.at("box").get<int>();
  r.s = j.at("s").get<int>();
  r.dims = j.at("dims").get<Dims3>();
  r.row = ints_to_bits(j.at("row"));
  r.ems = j.at("ems").get<std::vector<EmsObs>>();
  r.containers = j.at("containers").get<std::vector<ContainerObs>>();
  r.rules = j.at("rules").get<PlacementRules>();
  if (r.row.size() != r.ems.size()) throw Error(Errc::parse, "revise row length differs from the EMS list");
}

void to_json(Json& j, const StepInfo& i) {
  j = {{"unstable", i.unstable},
       {"revised", i.revised},
       {"containers_opened", i.containers_opened},
       {"invalid_actions", i.invalid_actions}};
}
void from_json(const Json& j, StepInfo& i) {
  opt(j, "unstable", i.unstable);
  opt(j, "revised", i.revised);
  opt(j, "containers_opened", i.containers_opened);
  opt(j, "invalid_actions", i.invalid_actions);
}

void to_json(Json& j, const StepResult& r) { j = {{"reward", r.reward}, {"done", r.done}, {"info", r.info}}; }
void from_json(const Json& j, StepResult& r) {
  r.reward = j.at("reward").get<double>();
  r.done = j.at("done").get<bool>();
  opt(j, "info", r.info);
}

void to_json(Json& j, const Placement& p) {
  j = {{"box", p.box_id},       {"state", p.state},   {"dims", p.dims},     {"corner", p.corner},
       {"container", p.container}, {"volume", p.volume}, {"stable", p.stable}};
}
void from_json(const Json& j, Placement& p) {
  p.box_id = j.at("box").get<int>();
  p.state = j.at("state").get<int>();
  p.dims = j.at("dims").get<Dims3>();
  p.corner = j.at("corner").get<std::array<int, 3>>();
  p.container = j.at("container").get<int>();
  p.volume = j.at("volume").get<std::int64_t>();
  p.stable = j.at("stable").get<bool>();
}

void to_json(Json& j, const SessionMetrics& m) {
  j = {{"C", m.c_mean}, {"N_t", m.n_t}, {"N_t_star", m.n_t_star}, {"dNt", m.delta_n_t}};
}
void from_json(const Json& j, SessionMetrics& m) {
  m.c_mean = j.at("C").get<double>();
  m.n_t = j.at("N_t").get<int>();
  m.n_t_star = j.at("N_t_star").get<int>();
  m.delta_n_t = j.at("dNt").get<int>();
}

Json session_to_json(const PackingSession& session) {
  Json containers = Json::array();
  for (const auto& c : session.containers()) {
    containers.push_back({{"spec", c.spec},
                          {"compactness", compactness(c)},
                          {"packed_volume", c.packed_volume},
                          {"terminated", c.terminated},
                          {"placements", c.placements}});
  }
  return {{"mode", to_string(session.config().mode)},
          {"unstable_events", session.unstable_events()},
          {"reward", session_reward(session)},
          {"containers", std::move(containers)}};
}

void to_json(Json& j, const Scene& s) {
  Json boxes = Json::array();
  for (const auto& b : s.boxes) {
    boxes.push_back({{"id", b.id}, {"dims", b.dims}, {"observed_dims", b.observed_dims}, {"pos", b.position}, {"yaw", b.yaw}});
  }
  j = {{"workspace", {{"w", s.workspace.width}, {"d", s.workspace.depth}}}, {"boxes", std::move(boxes)}};
}
void from_json(const Json& j, Scene& s) {
  s.workspace = {j.at("workspace").at("w").get<double>(), j.at("workspace").at("d").get<double>()};
  s.boxes.clear();
  for (const auto& b : j.at("boxes")) {
    SceneBox box;
    box.id = b.at("id").get<int>();
    box.dims = b.at("dims").get<Dims3>();
    box.observed_dims = b.value("observed_dims", box.dims);
    box.position = b.at("pos").get<std::array<double, 3>>();
    box.yaw = b.value("yaw", 0.0);
    s.boxes.push_back(box);
  }
}

Json precedence_to_json(const PrecedenceGraph& g) {
  Json mb = Json::array();
  for (const auto& e : g.mb()) mb.push_back({e.blocker, e.blocked});
  Json out = {{"n", g.size()}, {"mb", std::move(mb)}};
  for (const Axis a : {Axis::x, Axis::y, Axis::z}) {
    Json edges = Json::array();
    for (const auto& e : g.ab(a)) edges.push_back({e.blocker, e.blocked, e.side == Side::pos ? "+" : "-"});
    out[std::string(1, axis_name(a)) + "ab"] = std::move(edges);
  }
  return out;
}

void to_json(Json& j, const DimsRange& r) { j = {{"lo", r.lo}, {"hi", r.hi}}; }
void from_json(const Json& j, DimsRange& r) {
  if (j.is_array() && j.size() == 2) {
    r = {j[0].get<int>(), j[1].get<int>()};
  } else {
    r = {j.at("lo").get<int>(), j.at("hi").get<int>()};
  }
  if (r.lo < 1 || r.lo > r.hi) throw Error(Errc::parse, "dims range needs 1 <= lo <= hi");
}

void to_json(Json& j, const PpsgPlacement& p) { j = {{"box", p.box}, {"state", 0}, {"corner", p.corner}}; }
void from_json(const Json& j, PpsgPlacement& p) {
  p.box = j.at("box").get<int>();
  p.corner = j.at("corner").get<std::array<int, 3>>();
}

void to_json(Json& j, const EpisodeConfig& c) {
  j = {{"source", to_string(c.source)},
       {"mode", to_string(c.mode)},
       {"n_source", c.n_source},
       {"n_fixed", c.n_fixed},
       {"catalogue_seed", c.catalogue_seed},
       {"container", c.container},
       {"unit", c.unit},
       {"rand_range", c.rand_range},
       {"occlusion_probability", c.occlusion_probability},
       {"max_perturbation", c.max_perturbation},
       {"conveyor_window", c.conveyor_window ? Json(*c.conveyor_window) : Json(nullptr)},
       {"dense_reward", c.dense_reward},
       {"unstable_penalty", c.unstable_penalty},
       {"rules", c.rules},
       {"ems_mode", kEmsModeNames.at(static_cast<int>(c.ems_mode))},
       {"workspace_scale", c.workspace_scale},
       {"corridor_margin", c.corridor_margin},
       {"seed", c.seed}};
  if (!c.boxes.empty()) j["boxes"] = c.boxes;
}

void from_json(const Json& j, EpisodeConfig& c) {
  if (!j.is_object()) throw Error(Errc::parse, "episode config must be an object");
  static const std::set<std::string> known{"source", "mode", "n_source", "n_fixed", "catalogue_seed", "container",
                                           "unit", "rand_range", "occlusion_probability", "max_perturbation",
                                           "conveyor_window", "dense_reward", "unstable_penalty", "rules", "ems_mode",
                                           "workspace_scale", "corridor_margin", "seed", "boxes"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(Errc::parse, "unknown episode config key '" + key + "'");
  }
  if (j.contains("source")) c.source = parse_source(j.at("source").get<std::string>());
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  opt(j, "n_source", c.n_source);
  opt(j, "n_fixed", c.n_fixed);
  opt(j, "catalogue_seed", c.catalogue_seed);
  opt(j, "container", c.container);
  opt(j, "unit", c.unit);
  opt(j, "rand_range", c.rand_range);
  opt(j, "occlusion_probability", c.occlusion_probability);
  opt(j, "max_perturbation", c.max_perturbation);
  if (auto it = j.find("conveyor_window"); it != j.end()) {
    c.conveyor_window = it->is_null() ? std::nullopt : std::optional<int>(it->get<int>());
  }
  opt(j, "dense_reward", c.dense_reward);
  opt(j, "unstable_penalty", c.unstable_penalty);
  opt(j, "rules", c.rules);
  if (j.contains("ems_mode")) c.ems_mode = enum_from<EmsMode>(j.at("ems_mode").get<std::string>(), kEmsModeNames, "EMS mode");
  opt(j, "workspace_scale", c.workspace_scale);
  opt(j, "corridor_margin", c.corridor_margin);
  opt(j, "seed", c.seed);
  opt(j, "boxes", c.boxes);
  if (c.n_source < 1) throw Error(Errc::parse, "n_source must be >= 1");
  if (c.unit < 1) throw Error(Errc::parse, "unit must be >= 1");
  if (c.occlusion_probability < 0.0 || c.occlusion_probability > 1.0) {
    throw Error(Errc::parse, "occlusion_probability must lie in [0, 1]");
  }
}

void to_json(Json& j, const Dataset& d) {
  j = {{"spec", d.spec}, {"seed", d.seed}, {"source", to_string(d.source)}, {"boxes", d.boxes}};
  if (!d.solution.empty()) j["solution"] = d.solution;
}
void from_json(const Json& j, Dataset& d) {
  d.spec = j.at("spec").get<ContainerSpec>();
  d.seed = j.value("seed", std::uint64_t{0});
  d.source = parse_source(j.value("source", std::string("rand")));
  d.boxes = j.at("boxes").get<std::vector<Dims3>>();
  d.solution.clear();
  opt(j, "solution", d.solution);
  for (const auto& p : d.solution) {
    if (p.box < 0 || p.box >= static_cast<int>(d.boxes.size())) throw Error(Errc::parse, "solution names an unknown box");
  }
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(Errc::parse, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace tap
