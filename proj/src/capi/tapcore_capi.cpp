#include "tapcore/tapcore.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "tap/ems.hpp"
#include "tap/env.hpp"
#include "tap/protocol.hpp"
#include "tap/runner.hpp"
#include "tap/serialize.hpp"

struct tap_env {
  explicit tap_env(tap::EpisodeConfig c) : env(std::move(c)) {}
  tap::Environment env;
  bool reset = false;
};

struct tap_server {
  std::unique_ptr<tap::TcpServer> server;
};

namespace {

thread_local std::string last_error;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tap_status fail(tap_status st, const std::string& msg) {
  last_error = msg;
  return st;
}

// Runs f, translating exceptions into status codes.
template <class F>
tap_status guard(F&& f) {
  try {
    last_error.clear();
    f();
    return TAP_OK;
  } catch (const tap::Error& e) {
    return fail(static_cast<tap_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(TAP_E_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TAP_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TAP_E_INTERNAL, e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw tap::Error(tap::Errc::contract, std::string(what) + " must not be NULL");
}

void emit(char** out, const std::string& text) {
  require(out, "output pointer");
  *out = dup(text);
  if (*out == nullptr) throw std::bad_alloc();
}

tap::EpisodeConfig config_from(const char* text) {
  if (text == nullptr || *text == '\0') return {};
  return tap::parse_as<tap::EpisodeConfig>(tap::parse_json(text), "episode config");
}

std::string message(const std::string& type, tap::Json payload) {
  return tap::Json{{"type", type}, {"payload", std::move(payload)}}.dump();
}

std::string outcome_message(const tap::Environment& env, const tap::StepOutcome& outcome) {
  if (const auto* req = std::get_if<tap::ReviseRequest>(&outcome)) return message("revise", *req);
  const auto& r = std::get<tap::StepResult>(outcome);
  if (r.done) {
    tap::Json p = r;
    p["metrics"] = env.metrics();
    return message("result", std::move(p));
  }
  tap::Json obs = env.observation();
  obs["last_result"] = r;
  return message("observation", std::move(obs));
}

tap_env& checked(tap_env* env) {
  require(env, "environment");
  if (!env->reset) throw tap::Error(tap::Errc::session, "reset the environment first");
  return *env;
}

}  // namespace

extern "C" {

const char* tap_version(void) { return "1.0.0"; }

const char* tap_status_name(tap_status status) { return tap::errc_name(static_cast<tap::Errc>(status)); }

const char* tap_last_error(void) { return last_error.c_str(); }

void tap_free(char* text) { std::free(text); }

tap_status tap_default_config(char** out_json) {
  return guard([&] { emit(out_json, tap::Json(tap::EpisodeConfig{}).dump()); });
}

tap_status tap_generate_dataset(const char* config_json, char** out_json) {
  return guard([&] {
    const auto cfg = config_from(config_json);
    tap::Dataset d;
    d.spec = cfg.container;
    d.seed = cfg.seed;
    d.source = cfg.source;
    if (cfg.source == tap::SourceKind::ppsg) {
      const auto inst = tap::gen_ppsg(cfg.n_source, cfg.container, tap::derive_seed(cfg.seed, 3));
      d.boxes = inst.boxes;
      d.solution = inst.solution;
    } else {
      d.boxes = tap::source_dims(cfg);
    }
    emit(out_json, tap::Json(d).dump());
  });
}

tap_status tap_generate_scene(const char* config_json, char** out_json) {
  return guard([&] {
    auto cfg = config_from(config_json);
    cfg.conveyor_window.reset();
    tap::Environment env(cfg);
    env.reset();
    emit(out_json, tap::Json{{"scene", env.scene()}, {"precedence", tap::precedence_to_json(env.precedence())}}.dump());
  });
}

tap_status tap_extract_ems(const char* heightmap_json, int with_constrained, char** out_json) {
  return guard([&] {
    require(heightmap_json, "height map");
    const auto hm = tap::parse_as<tap::HeightMap>(tap::parse_json(heightmap_json), "height map");
    const auto ems = tap::extract_all(hm, with_constrained ? tap::EmsMode::with_constrained : tap::EmsMode::original_only);
    emit(out_json, tap::Json(ems).dump());
  });
}

tap_status tap_env_create(const char* config_json, tap_env** out_env) {
  return guard([&] {
    require(out_env, "output pointer");
    *out_env = new tap_env(config_from(config_json));
  });
}

void tap_env_destroy(tap_env* env) { delete env; }

tap_status tap_env_reset(tap_env* env, char** out_message) {
  return guard([&] {
    require(env, "environment");
    env->env.reset();
    env->reset = true;
    if (env->env.done()) {
      tap::Json p = tap::StepResult{env->env.reward(), true, {}};
      p["metrics"] = env->env.metrics();
      emit(out_message, message("result", std::move(p)));
    } else {
      emit(out_message, message("observation", env->env.observation()));
    }
  });
}

tap_status tap_env_step(tap_env* env, int j, int k, char** out_message) {
  return guard([&] {
    auto& e = checked(env);
    const auto outcome = e.env.step({j, k});
    emit(out_message, outcome_message(e.env, outcome));
  });
}

tap_status tap_env_revise(tap_env* env, int k, char** out_message) {
  return guard([&] {
    auto& e = checked(env);
    const tap::StepOutcome outcome = e.env.revise(k);
    emit(out_message, outcome_message(e.env, outcome));
  });
}

tap_status tap_env_snapshot(const tap_env* env, char** out_json) {
  return guard([&] {
    require(env, "environment");
    if (!env->reset) throw tap::Error(tap::Errc::session, "reset the environment first");
    tap::Json s = tap::session_to_json(env->env.session());
    s["metrics"] = env->env.metrics();
    s["done"] = env->env.done();
    emit(out_json, s.dump());
  });
}

tap_status tap_run_episode(const char* config_json, const char* policy, char** out_record_json) {
  return guard([&] {
    const auto cfg = config_from(config_json);
    auto p = tap::make_policy(policy ? policy : "greedy", tap::derive_seed(cfg.seed, 77));
    emit(out_record_json, tap::record_to_json(tap::run_episode(cfg, *p)).dump());
  });
}

tap_status tap_run_batch(const char* config_json, const char* policy, int episodes, uint64_t seed_base, int threads,
                         char** out_json) {
  return guard([&] {
    tap::BatchOptions o;
    o.config = config_from(config_json);
    o.policy = policy ? policy : "greedy";
    o.episodes = episodes;
    o.seed_base = seed_base;
    o.threads = threads;
    const auto records = tap::run_batch(o);
    // An unreachable policy endpoint fails every episode the same way.
    for (const auto& r : records) {
      if (r.error == tap::Errc::unreachable) throw tap::Error(r.error, r.error_message);
    }
    tap::Json recs = tap::Json::array();
    for (const auto& r : records) recs.push_back(tap::record_to_json(r));
    emit(out_json, tap::Json{{"records", std::move(recs)},
                             {"summary", tap::summary_to_json(tap::summarize(records))},
                             {"csv", tap::batch_csv(records)}}
                       .dump());
  });
}

tap_status tap_run_table(const char* request_json, char** out_json) {
  return guard([&] {
    const tap::Json req = request_json && *request_json ? tap::parse_json(request_json) : tap::Json::object();
    tap::TableOptions o;
    if (req.contains("config")) o.base = tap::parse_as<tap::EpisodeConfig>(req.at("config"), "episode config");
    if (req.contains("sources")) {
      o.sources.clear();
      for (const auto& s : req.at("sources")) o.sources.push_back(tap::parse_source(s.get<std::string>()));
    }
    if (req.contains("modes")) {
      o.modes.clear();
      for (const auto& m : req.at("modes")) o.modes.push_back(tap::parse_mode(m.get<std::string>()));
    }
    o.policy = req.value("policy", o.policy);
    o.episodes = req.value("episodes", o.episodes);
    o.seed_base = req.value("seed_base", o.seed_base);
    o.threads = req.value("threads", o.threads);
    const auto rows = tap::run_table(o);
    emit(out_json, tap::Json{{"rows", tap::table_json(rows)}, {"csv", tap::table_csv(rows)}, {"text", tap::table_text(rows)}}
                       .dump());
  });
}

tap_status tap_replay(const char* record_json, char** out_report_json) {
  return guard([&] {
    require(record_json, "record");
    const auto rec = tap::record_from_json(tap::parse_json(record_json));
    const auto rep = tap::replay(rec);
    emit(out_report_json,
         tap::Json{{"ok", true}, {"steps", rep.steps}, {"metrics", rep.metrics}, {"reward", rep.reward}}.dump());
  });
}

tap_status tap_export(const char* input_json, const char* format, char** out_text) {
  return guard([&] {
    require(input_json, "input");
    const std::string fmt = format ? format : "obj";
    if (fmt != "obj" && fmt != "json") throw tap::Error(tap::Errc::contract, "format must be obj or json");
    const tap::Json in = tap::parse_json(input_json);
    std::optional<tap::PackingSession> session;
    if (in.contains("steps")) {
      session.emplace(tap::replay_session(tap::record_from_json(in)));
    } else if (in.contains("solution")) {
      const auto d = tap::parse_as<tap::Dataset>(in, "dataset");
      session.emplace(tap::replay_solution({d.spec, d.boxes, d.solution}));
    } else {
      throw tap::Error(tap::Errc::parse, "export needs an episode record or a dataset with a solution");
    }
    emit(out_text, fmt == "obj" ? tap::session_obj(*session) : tap::session_to_json(*session).dump(2));
  });
}

tap_status tap_server_start(int port, tap_server** out_server) {
  return guard([&] {
    require(out_server, "output pointer");
    *out_server = new tap_server{tap::start_episode_server(port)};
  });
}

tap_status tap_policy_server_start(const char* policy, uint64_t seed, int port, tap_server** out_server) {
  return guard([&] {
    require(out_server, "output pointer");
    require(policy, "policy");
    *out_server = new tap_server{tap::start_policy_server(policy, seed, port)};
  });
}

int tap_server_port(const tap_server* server) { return server ? server->server->port() : -1; }

void tap_server_stop(tap_server* server) {
  if (!server) return;
  server->server->stop();
  delete server;
}

tap_status tap_serve_stdio(void) {
  return guard([&] {
    tap::LineChannel ch(0, 1, false);
    tap::serve_episode_channel(ch);
  });
}

}  // extern "C"
