#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <string>

#include "tapcore/tapcore.h"

using nlohmann::json;

namespace {

json take(char* text) {
  REQUIRE(text != nullptr);
  json j = json::parse(text);
  tap_free(text);
  return j;
}

}  // namespace

TEST_CASE("version, status names and defaults") {
  CHECK(std::string(tap_version()) == "1.0.0");
  CHECK(std::string(tap_status_name(TAP_OK)) == "ok");
  CHECK(std::string(tap_status_name(TAP_E_DIVERGED)) == "replay diverged");
  char* out = nullptr;
  REQUIRE(tap_default_config(&out) == TAP_OK);
  const json cfg = take(out);
  CHECK(cfg.at("mode") == "single");
  CHECK(cfg.at("source") == "rand");
}

TEST_CASE("bad input maps to status codes and a thread-local message") {
  char* out = nullptr;
  CHECK(tap_default_config(nullptr) == TAP_E_CONTRACT);
  CHECK(std::string(tap_last_error()).find("NULL") != std::string::npos);
  CHECK(tap_run_episode("{oops", "greedy", &out) == TAP_E_PARSE);
  CHECK(std::string(tap_last_error()).size() > 0);
  CHECK(tap_run_episode("{}", "nonsense", &out) == TAP_E_PARSE);
  CHECK(tap_run_episode("{}", "external:127.0.0.1:1", &out) == TAP_E_UNREACHABLE);
  CHECK(out == nullptr);
  REQUIRE(tap_default_config(&out) == TAP_OK);
  tap_free(out);
  CHECK(std::string(tap_last_error()).empty());
}

TEST_CASE("environment handle lifecycle") {
  tap_env* env = nullptr;
  REQUIRE(tap_env_create(R"({"seed": 12, "mode": "multi_last"})", &env) == TAP_OK);
  char* out = nullptr;
  CHECK(tap_env_step(env, 0, 0, &out) == TAP_E_SESSION);
  REQUIRE(tap_env_reset(env, &out) == TAP_OK);
  json msg = take(out);
  int guard = 0;
  while (msg.at("type") != "result" && guard++ < 1000) {
    if (msg.at("type") == "observation") {
      const auto& v = msg.at("payload").at("validity");
      int j = -1, k = -1;
      for (std::size_t r = 0; r < v.size() && j < 0; ++r)
        for (std::size_t c = 0; c < v[r].size(); ++c)
          if (v[r][c] == 1) {
            j = int(r);
            k = int(c);
            break;
          }
      REQUIRE(j >= 0);
      REQUIRE(tap_env_step(env, j, k, &out) == TAP_OK);
    } else {
      REQUIRE(msg.at("type") == "revise");
      const auto& row = msg.at("payload").at("row");
      int k = 0;
      while (row[k] != 1) ++k;
      REQUIRE(tap_env_revise(env, k, &out) == TAP_OK);
    }
    msg = take(out);
  }
  CHECK(msg.at("type") == "result");
  CHECK(msg.at("payload").at("done") == true);
  REQUIRE(tap_env_snapshot(env, &out) == TAP_OK);
  const json snap = take(out);
  CHECK(snap.at("done") == true);
  CHECK(snap.at("metrics").at("N_t").get<int>() >= 1);
  CHECK(tap_env_step(env, 0, 0, &out) == TAP_E_SESSION);
  tap_env_destroy(env);
  tap_env_destroy(nullptr);
}

TEST_CASE("batch, replay and export through the C API") {
  char* out = nullptr;
  REQUIRE(tap_run_batch(R"({"source": "ppsg", "n_source": 10})", "greedy", 4, 10, 2, &out) == TAP_OK);
  const json batch = take(out);
  CHECK(batch.at("records").size() == 4);
  CHECK(batch.at("summary").at("episodes") == 4);
  const std::string rec = batch.at("records").at(0).dump();
  REQUIRE(tap_replay(rec.c_str(), &out) == TAP_OK);
  const json rep = take(out);
  CHECK(rep.at("ok") == true);
  CHECK(rep.at("metrics").at("C") == batch.at("records").at(0).at("metrics").at("C"));

  json tampered = batch.at("records").at(0);
  tampered["steps"][0]["k"] = 99999;
  CHECK(tap_replay(tampered.dump().c_str(), &out) == TAP_E_DIVERGED);
  CHECK(std::string(tap_last_error()).find("step 0") != std::string::npos);

  REQUIRE(tap_export(rec.c_str(), "obj", &out) == TAP_OK);
  const std::string obj = out;
  tap_free(out);
  CHECK(obj.find("\nv ") != std::string::npos);
  CHECK(tap_export(rec.c_str(), "stl", &out) == TAP_E_CONTRACT);
}

TEST_CASE("datasets, scenes and EMS extraction") {
  char* out = nullptr;
  REQUIRE(tap_generate_dataset(R"({"source": "ppsg", "n_source": 10, "seed": 4})", &out) == TAP_OK);
  const json d = take(out);
  CHECK(d.at("boxes").size() == 10);
  CHECK(d.at("solution").size() == 10);
  REQUIRE(tap_export(d.dump().c_str(), "json", &out) == TAP_OK);
  const json packed = take(out);
  CHECK(packed.at("containers").at(0).at("packed_volume") == 1000000);

  REQUIRE(tap_generate_scene(R"({"n_source": 6, "seed": 2})", &out) == TAP_OK);
  const json sc = take(out);
  CHECK(sc.at("scene").at("boxes").size() == 6);
  CHECK(sc.at("precedence").contains("mb"));

  REQUIRE(tap_extract_ems(R"({"width": 4, "depth": 4, "height": 4, "cells": [0,0,0,0, 0,0,0,0, 0,0,0,0, 0,0,0,0]})", 1,
                          &out) == TAP_OK);
  const json ems = take(out);
  REQUIRE(ems.size() == 1);
  CHECK(ems[0].at("dims") == json::array({4, 4, 4}));
  CHECK(tap_extract_ems(R"({"width": 4, "depth": 4, "height": 4, "cells": [0]})", 1, &out) == TAP_E_PARSE);
}

TEST_CASE("servers start, report a port and stop") {
  tap_server* s = nullptr;
  REQUIRE(tap_server_start(0, &s) == TAP_OK);
  CHECK(tap_server_port(s) > 0);
  tap_server_stop(s);
  REQUIRE(tap_policy_server_start("greedy", 1, 0, &s) == TAP_OK);
  CHECK(tap_server_port(s) > 0);
  tap_server_stop(s);
  CHECK(tap_policy_server_start("bogus", 1, 0, &s) == TAP_E_PARSE);
  CHECK(tap_server_port(nullptr) == -1);
}
