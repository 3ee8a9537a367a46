#include "tap/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "tap/log.hpp"
#include "tap/serialize.hpp"

namespace tap {

using nlohmann::json;

namespace {

const char* kind_name(StepRecord::Kind k) { return k == StepRecord::Kind::action ? "action" : "revise"; }

std::vector<Placement> all_placements(const PackingSession& session) {
  std::vector<Placement> out;
  for (const auto& c : session.containers()) out.insert(out.end(), c.placements.begin(), c.placements.end());
  return out;
}

void finish_record(EpisodeRecord& rec, const Environment& env) {
  rec.placements = all_placements(env.session());
  rec.metrics = env.metrics();
  rec.reward = env.reward();
  rec.unstable_events = env.session().unstable_events();
  rec.invalid_actions = env.invalid_actions();
}

std::string diverged_at(std::size_t step, const std::string& what) {
  return "record diverges at step " + std::to_string(step) + ": " + what;
}

bool same_metrics(const SessionMetrics& a, const SessionMetrics& b) {
  return a.c_mean == b.c_mean && a.n_t == b.n_t && a.n_t_star == b.n_t_star && a.delta_n_t == b.delta_n_t;
}

bool same_placement(const Placement& a, const Placement& b) {
  return a.box_id == b.box_id && a.state == b.state && a.dims == b.dims && a.corner == b.corner &&
         a.container == b.container && a.volume == b.volume && a.stable == b.stable;
}

int resolve_threads(int requested, int work) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n, 1, std::max(work, 1));
}

}  // namespace

json record_to_json(const EpisodeRecord& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"type", kind_name(s.kind)}, {"j", s.j}, {"k", s.k}, {"reward", s.reward}, {"done", s.done}});
  }
  json out = {{"format", "tapcore-record"},
              {"version", 1},
              {"config", r.config},
              {"policy", r.policy},
              {"steps", std::move(steps)},
              {"placements", r.placements},
              {"metrics", r.metrics},
              {"reward", r.reward},
              {"unstable_events", r.unstable_events},
              {"invalid_actions", r.invalid_actions},
              {"decisions", r.decisions}};
  if (r.error != Errc::ok) {
    out["error"] = {{"code", static_cast<int>(r.error)}, {"name", errc_name(r.error)}, {"message", r.error_message}};
  }
  return out;
}

EpisodeRecord record_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != "tapcore-record") throw Error(Errc::parse, "not an episode record");
    EpisodeRecord r;
    r.config = j.at("config").get<EpisodeConfig>();
    r.policy = j.value("policy", std::string());
    for (const auto& s : j.at("steps")) {
      StepRecord step;
      const auto type = s.at("type").get<std::string>();
      if (type == "action") {
        step.kind = StepRecord::Kind::action;
      } else if (type == "revise") {
        step.kind = StepRecord::Kind::revise;
      } else {
        throw Error(Errc::parse, "unknown step type '" + type + "'");
      }
      step.j = s.at("j").get<int>();
      step.k = s.at("k").get<int>();
      step.reward = s.at("reward").get<double>();
      step.done = s.at("done").get<bool>();
      r.steps.push_back(step);
    }
    r.placements = j.at("placements").get<std::vector<Placement>>();
    r.metrics = j.at("metrics").get<SessionMetrics>();
    r.reward = j.at("reward").get<double>();
    r.unstable_events = j.at("unstable_events").get<int>();
    r.invalid_actions = j.value("invalid_actions", 0);
    r.decisions = j.value("decisions", 0);
    if (j.contains("error")) {
      r.error = static_cast<Errc>(j.at("error").at("code").get<int>());
      r.error_message = j.at("error").value("message", std::string());
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("malformed episode record: ") + e.what());
  }
}

EpisodeRecord run_episode(const EpisodeConfig& config, Policy& policy) {
  EpisodeRecord rec;
  rec.config = config;
  rec.policy = policy.name();
  Environment env(config);
  env.reset();
  policy.begin_episode(json(config).dump());
  while (!env.done()) {
    const auto d = policy.decide(env.observation());
    if (!d) throw Error(Errc::invalid_action, "policy returned no decision although valid pairs exist");
    ++rec.decisions;
    StepOutcome outcome = env.step({d->j, d->k});
    StepRecord step{StepRecord::Kind::action, d->j, d->k, 0.0, false};
    if (const auto* req = std::get_if<ReviseRequest>(&outcome)) {
      rec.steps.push_back(step);
      const auto k = policy.revise(*req);
      if (!k) throw Error(Errc::invalid_action, "policy returned no EMS for a revise request");
      outcome = env.revise(*k);
      step = {StepRecord::Kind::revise, d->j, *k, 0.0, false};
    }
    const auto& result = std::get<StepResult>(outcome);
    step.reward = result.reward;
    step.done = result.done;
    rec.steps.push_back(step);
    policy.observe_result(result);
  }
  policy.end_episode();
  finish_record(rec, env);
  return rec;
}

std::vector<EpisodeRecord> run_batch(const BatchOptions& options) {
  if (options.episodes < 0) throw Error(Errc::contract, "episode count must be >= 0");
  make_policy(options.policy, 0);  // fail fast on a bad spec
  std::vector<EpisodeRecord> records(static_cast<std::size_t>(options.episodes));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < options.episodes; i = next++) {
      EpisodeConfig cfg = options.config;
      cfg.seed = options.seed_base + static_cast<std::uint64_t>(i);
      EpisodeRecord& rec = records[static_cast<std::size_t>(i)];
      try {
        auto policy = make_policy(options.policy, derive_seed(cfg.seed, 77));
        rec = run_episode(cfg, *policy);
      } catch (const Error& e) {
        rec = EpisodeRecord{};
        rec.config = cfg;
        rec.policy = options.policy;
        rec.error = e.code();
        rec.error_message = e.what();
        log_warn("episode seed " + std::to_string(cfg.seed) + " failed: " + e.what());
      } catch (const std::exception& e) {
        rec = EpisodeRecord{};
        rec.config = cfg;
        rec.policy = options.policy;
        rec.error = Errc::internal;
        rec.error_message = e.what();
      }
    }
  };
  const int n = resolve_threads(options.threads, options.episodes);
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return records;
}

BatchSummary summarize(const std::vector<EpisodeRecord>& records) {
  BatchSummary s;
  s.episodes = static_cast<int>(records.size());
  int ok = 0;
  for (const auto& r : records) {
    if (r.error != Errc::ok) {
      ++s.failed;
      continue;
    }
    ++ok;
    s.c_mean += r.metrics.c_mean;
    s.n_t_mean += r.metrics.n_t;
    s.n_t_star_mean += r.metrics.n_t_star;
    s.delta_n_t_mean += r.metrics.delta_n_t;
    s.steps_mean += r.decisions;
    s.unstable_mean += r.unstable_events;
  }
  if (ok > 0) {
    s.c_mean /= ok;
    s.n_t_mean /= ok;
    s.n_t_star_mean /= ok;
    s.delta_n_t_mean /= ok;
    s.steps_mean /= ok;
    s.unstable_mean /= ok;
  }
  return s;
}

json summary_to_json(const BatchSummary& s) {
  return {{"episodes", s.episodes},    {"failed", s.failed},       {"C", s.c_mean},
          {"N_t", s.n_t_mean},         {"N_t_star", s.n_t_star_mean}, {"dNt", s.delta_n_t_mean},
          {"steps", s.steps_mean},     {"unstable_events", s.unstable_mean}};
}

std::string batch_csv(const std::vector<EpisodeRecord>& records) {
  std::ostringstream out;
  out << "seed,source,mode,C,N_t,dNt,steps,unstable_events\n";
  char c[32];
  for (const auto& r : records) {
    if (r.error != Errc::ok) continue;
    std::snprintf(c, sizeof c, "%.17g", r.metrics.c_mean);
    out << r.config.seed << ',' << to_string(r.config.source) << ',' << to_string(r.config.mode) << ',' << c << ','
        << r.metrics.n_t << ',' << r.metrics.delta_n_t << ',' << r.decisions << ',' << r.unstable_events << '\n';
  }
  return out.str();
}

namespace {

// Drives an environment through the recorded steps; returns it at the end.
Environment reenact(const EpisodeRecord& record) {
  Environment env(record.config);
  env.reset();
  const auto& steps = record.steps;
  std::size_t i = 0;
  while (i < steps.size()) {
    const StepRecord& s = steps[i];
    if (env.done()) throw Error(Errc::diverged, diverged_at(i, "episode already finished"));
    if (s.kind != StepRecord::Kind::action) throw Error(Errc::diverged, diverged_at(i, "revise without a pick"));
    StepOutcome outcome;
    try {
      outcome = env.step({s.j, s.k});
    } catch (const Error& e) {
      throw Error(Errc::diverged, diverged_at(i, e.what()));
    }
    if (std::holds_alternative<ReviseRequest>(outcome)) {
      if (i + 1 >= steps.size() || steps[i + 1].kind != StepRecord::Kind::revise) {
        throw Error(Errc::diverged, diverged_at(i, "engine asked for a revise the record lacks"));
      }
      ++i;
      try {
        outcome = env.revise(steps[i].k);
      } catch (const Error& e) {
        throw Error(Errc::diverged, diverged_at(i, e.what()));
      }
    } else if (i + 1 < steps.size() && steps[i + 1].kind == StepRecord::Kind::revise) {
      throw Error(Errc::diverged, diverged_at(i + 1, "record has a revise the engine did not ask for"));
    }
    const auto& r = std::get<StepResult>(outcome);
    if (r.reward != steps[i].reward || r.done != steps[i].done) {
      throw Error(Errc::diverged, diverged_at(i, "reward or termination differs"));
    }
    ++i;
  }
  if (!env.done()) throw Error(Errc::diverged, diverged_at(steps.size(), "record ends before the episode does"));
  return env;
}

}  // namespace

ReplayReport replay(const EpisodeRecord& record) {
  if (record.error != Errc::ok) throw Error(Errc::diverged, "record of an aborted episode: " + record.error_message);
  const Environment env = reenact(record);
  ReplayReport rep;
  rep.steps = static_cast<int>(record.steps.size());
  rep.metrics = env.metrics();
  rep.reward = env.reward();
  const std::size_t last = record.steps.empty() ? 0 : record.steps.size() - 1;
  if (!same_metrics(rep.metrics, record.metrics) || rep.reward != record.reward ||
      env.session().unstable_events() != record.unstable_events) {
    throw Error(Errc::diverged, diverged_at(last, "final metrics differ"));
  }
  const auto placements = all_placements(env.session());
  if (placements.size() != record.placements.size() ||
      !std::equal(placements.begin(), placements.end(), record.placements.begin(), same_placement)) {
    throw Error(Errc::diverged, diverged_at(last, "placements differ"));
  }
  return rep;
}

PackingSession replay_session(const EpisodeRecord& record) { return reenact(record).session(); }

PackingSession replay_solution(const PpsgInstance& inst) {
  PackingSession session(SessionConfig{inst.spec, ContainerMode::single, {}, EmsMode::original_only, false});
  for (const auto& p : inst.solution) {
    const Dims3& d = inst.boxes.at(p.box);
    const Placement placed = session.place_at(0, p.box, 0, d, p.corner[0], p.corner[1], d.volume());
    if (placed.corner != p.corner) {
      throw Error(Errc::contract, "solution places box " + std::to_string(p.box) + " above its resting height");
    }
  }
  return session;
}

std::vector<TableRow> run_table(const TableOptions& options) {
  std::vector<TableRow> rows;
  for (const SourceKind source : options.sources) {
    for (const ContainerMode mode : options.modes) {
      BatchOptions b;
      b.config = options.base;
      b.config.source = source;
      b.config.mode = mode;
      if (source == SourceKind::ppsg) b.config.n_source = 10;
      b.policy = options.policy;
      b.episodes = options.episodes;
      b.seed_base = options.seed_base;
      b.threads = options.threads;
      const auto summary = summarize(run_batch(b));
      rows.push_back({source, mode, summary.episodes, summary.failed, summary.c_mean, summary.n_t_mean,
                      summary.delta_n_t_mean});
    }
  }
  return rows;
}

std::string table_csv(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "source,mode,episodes,failed,C,N_t,dNt\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%s,%s,%d,%d,%.6f,%.4f,%.4f\n", to_string(r.source).c_str(),
                  to_string(r.mode).c_str(), r.episodes, r.failed, r.c_mean, r.n_t_mean, r.delta_n_t_mean);
    out << line;
  }
  return out.str();
}

json table_json(const std::vector<TableRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"source", to_string(r.source)},
                   {"mode", to_string(r.mode)},
                   {"episodes", r.episodes},
                   {"failed", r.failed},
                   {"C", r.c_mean},
                   {"N_t", r.n_t_mean},
                   {"dNt", r.delta_n_t_mean}});
  }
  return out;
}

std::string table_text(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %-11s %8s %7s %7s %7s\n", "source", "mode", "episodes", "C", "N_t", "dNt");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-6s %-11s %8d %7.3f %7.2f %7.2f%s\n", to_string(r.source).c_str(),
                  to_string(r.mode).c_str(), r.episodes, r.c_mean, r.n_t_mean, r.delta_n_t_mean,
                  r.failed ? "  (failures)" : "");
    out << line;
  }
  return out.str();
}

std::string session_obj(const PackingSession& session) {
  std::ostringstream out;
  out << "# tapcore packing export\n";
  const int gap = 10;
  int vertex = 1;
  const auto& containers = session.containers();
  for (std::size_t c = 0; c < containers.size(); ++c) {
    const int offset = static_cast<int>(c) * (containers[c].spec.width + gap);
    for (const auto& p : containers[c].placements) {
      if (!p.stable) continue;
      out << "o container" << c << "_box" << p.box_id << "\n";
      const int x0 = p.corner[0] + offset, y0 = p.corner[1], z0 = p.corner[2];
      const int x1 = x0 + p.dims.x, y1 = y0 + p.dims.y, z1 = z0 + p.dims.z;
      const int xs[2] = {x0, x1}, ys[2] = {y0, y1}, zs[2] = {z0, z1};
      for (int i = 0; i < 8; ++i) out << "v " << xs[i & 1] << ' ' << ys[(i >> 1) & 1] << ' ' << zs[(i >> 2) & 1] << "\n";
      // Outward-facing quads over the 8 corners (bit0 = x, bit1 = y, bit2 = z).
      static constexpr int faces[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                          {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
      for (const auto& f : faces) {
        out << 'f';
        for (int v : f) out << ' ' << vertex + v;
        out << "\n";
      }
      vertex += 8;
    }
  }
  return out.str();
}

}  // namespace tap
