#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/socket.h>

#include <thread>

#include "tap/protocol.hpp"
#include "tap/runner.hpp"
#include "tap/serialize.hpp"

using namespace tap;

namespace {

// Plays one episode against a server channel with the local greedy policy and
// returns the actions taken plus the final result payload.
std::pair<std::vector<StepRecord>, Json> play(LineChannel& ch, const EpisodeConfig& cfg) {
  GreedyPolicy g;
  std::vector<StepRecord> steps;
  ch.send("reset", Json{{"config", cfg}});
  for (;;) {
    auto m = ch.receive();
    REQUIRE(m);
    if (m->type == "result") return {steps, m->payload};
    if (m->type == "observation") {
      const auto obs = parse_as<Observation>(m->payload, "observation");
      const auto d = g.decide(obs);
      REQUIRE(d);
      steps.push_back({StepRecord::Kind::action, d->j, d->k, 0.0, false});
      ch.send("action", Json{{"j", d->j}, {"k", d->k}});
    } else if (m->type == "revise") {
      const auto req = parse_as<ReviseRequest>(m->payload, "revise");
      const int k = *g.revise(req);
      steps.push_back({StepRecord::Kind::revise, req.j, k, 0.0, false});
      ch.send("revise", Json{{"k", k}});
    } else {
      FAIL("unexpected message " << m->type << ": " << m->payload.dump());
      return {};
    }
  }
}

bool same_actions(const std::vector<StepRecord>& a, const std::vector<StepRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].kind != b[i].kind || a[i].k != b[i].k) return false;
    if (a[i].kind == StepRecord::Kind::action && a[i].j != b[i].j) return false;
  }
  return true;
}

EpisodeConfig config(std::uint64_t seed, ContainerMode mode = ContainerMode::single) {
  EpisodeConfig c;
  c.seed = seed;
  c.mode = mode;
  return c;
}

}  // namespace

TEST_CASE("messages carry the protocol version") {
  const std::string line = encode_message({"action", Json{{"j", 1}, {"k", 2}}});
  CHECK(line.find('\n') == std::string::npos);
  const Json j = Json::parse(line);
  CHECK(j.at("proto") == 1);
  const Message m = decode_message(line);
  CHECK(m.type == "action");
  CHECK(m.payload.at("k") == 2);

  auto code = [](std::string_view text) {
    try {
      decode_message(text);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::ok;
  };
  CHECK(code(R"({"proto":2,"type":"reset","payload":{}})") == Errc::protocol);
  CHECK(code(R"({"proto":1,"payload":{}})") == Errc::protocol);
  CHECK(code("not json") == Errc::protocol);
}

TEST_CASE("episode channel reproduces the in-process trajectory") {
  int sv[2];
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, sv) == 0);
  std::thread server([fd = sv[0]] {
    LineChannel ch(fd, fd, true);
    serve_episode_channel(ch);
  });
  {
    LineChannel client(sv[1], sv[1], true);
    for (std::uint64_t seed : {1, 2, 3}) {
      for (auto mode : {ContainerMode::single, ContainerMode::multi_last}) {
        const auto cfg = config(seed, mode);
        const auto [steps, result] = play(client, cfg);
        GreedyPolicy g;
        const auto rec = run_episode(cfg, g);
        CHECK(same_actions(steps, rec.steps));
        CHECK(result.at("metrics").get<SessionMetrics>().c_mean == rec.metrics.c_mean);
        CHECK(result.at("reward").get<double>() == rec.reward);
        CHECK(result.at("done") == true);
      }
    }
  }
  server.join();
}

TEST_CASE("episode channel reports errors and keeps serving") {
  int sv[2];
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, sv) == 0);
  std::thread server([fd = sv[0]] {
    LineChannel ch(fd, fd, true);
    serve_episode_channel(ch);
  });
  {
    LineChannel c(sv[1], sv[1], true);
    auto expect_error = [&](int code) {
      const auto m = c.receive();
      REQUIRE(m);
      CHECK(m->type == "error");
      CHECK(m->payload.at("code") == code);
      CHECK(m->payload.contains("message"));
    };
    c.send("action", Json{{"j", 0}, {"k", 0}});
    expect_error(static_cast<int>(Errc::session));
    c.write_line("garbage");
    expect_error(static_cast<int>(Errc::protocol));
    c.send("dance", Json::object());
    expect_error(static_cast<int>(Errc::protocol));
    c.send("reset", Json{{"config", {{"bogus", 1}}}});
    expect_error(static_cast<int>(Errc::parse));
    c.send("reset", Json{{"config", config(4)}});
    auto m = c.receive();
    REQUIRE(m);
    REQUIRE(m->type == "observation");
    c.send("action", Json{{"j", 100000}, {"k", 0}});
    expect_error(static_cast<int>(Errc::invalid_action));
    c.send("revise", Json{{"k", 0}});
    expect_error(static_cast<int>(Errc::session));
    // The raw config is accepted as the reset payload too.
    c.send("reset", Json(config(4)));
    m = c.receive();
    REQUIRE(m);
    CHECK(m->type == "observation");
  }
  server.join();
}

TEST_CASE("TCP episode server handles concurrent independent sessions") {
  auto server = start_episode_server(0);
  REQUIRE(server->port() > 0);
  std::vector<std::thread> clients;
  std::vector<int> ok(6, 0);
  std::vector<std::vector<StepRecord>> got(6);
  std::vector<double> got_c(6);
  for (int i = 0; i < 6; ++i) {
    clients.emplace_back([&, i] {
      const int fd = connect_tcp("127.0.0.1", server->port());
      LineChannel ch(fd, fd, true);
      const auto [steps, result] = play(ch, config(100 + i, ContainerMode::multi_all));
      got[i] = steps;
      got_c[i] = result.at("metrics").at("C").get<double>();
      ok[i] = 1;
    });
  }
  for (auto& t : clients) t.join();
  for (int i = 0; i < 6; ++i) {
    CHECK(ok[i] == 1);
    GreedyPolicy g;
    const auto rec = run_episode(config(100 + i, ContainerMode::multi_all), g);
    CHECK(same_actions(got[i], rec.steps));
    CHECK(got_c[i] == rec.metrics.c_mean);
  }
  server->stop();
}

TEST_CASE("external policy over TCP matches the in-process policy") {
  for (std::string spec : {"greedy", "random"}) {
    auto server = start_policy_server(spec, 77, 0);
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      for (auto mode : {ContainerMode::single, ContainerMode::multi_all}) {
        const auto cfg = config(seed, mode);
        auto remote = make_policy("external:127.0.0.1:" + std::to_string(server->port()), 0);
        auto local = make_policy(spec, 77);
        const auto a = run_episode(cfg, *remote);
        const auto b = run_episode(cfg, *local);
        CHECK(a.steps == b.steps);
        CHECK(a.metrics.c_mean == b.metrics.c_mean);
        CHECK(a.policy.rfind("external:", 0) == 0);
      }
    }
    server->stop();
  }
}

TEST_CASE("unreachable policy endpoint") {
  int port = 0;
  {
    TcpListener l(0);
    port = l.port();
  }
  auto p = make_policy("external:127.0.0.1:" + std::to_string(port), 0);
  try {
    run_episode(config(1), *p);
    FAIL("expected unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unreachable);
  }
  CHECK_THROWS_AS(make_policy("external:nohostport", 0), Error);
  CHECK_THROWS_AS(make_policy("clever", 0), Error);
}
