#include "tap/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "tap/env.hpp"
#include "tap/log.hpp"
#include "tap/serialize.hpp"

namespace tap {

std::string encode_message(const Message& m) {
  return Json{{"proto", kProtocolVersion}, {"type", m.type}, {"payload", m.payload}}.dump();
}

Message decode_message(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::exception& e) {
    throw Error(Errc::protocol, std::string("malformed message: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::protocol, "message must be a JSON object");
  const auto proto = j.find("proto");
  if (proto == j.end() || !proto->is_number_integer() || proto->get<int>() != kProtocolVersion) {
    throw Error(Errc::protocol, "unsupported or missing proto version (expected 1)");
  }
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw Error(Errc::protocol, "message lacks a string 'type'");
  Message m{type->get<std::string>(), j.value("payload", Json::object())};
  return m;
}

LineChannel::LineChannel(int in_fd, int out_fd, bool owns_fds) : in_fd_(in_fd), out_fd_(out_fd), owns_(owns_fds) {}

LineChannel::~LineChannel() {
  if (!owns_) return;
  ::close(in_fd_);
  if (out_fd_ != in_fd_) ::close(out_fd_);
}

std::optional<std::string> LineChannel::read_line() {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    char chunk[8192];
    const ssize_t n = ::read(in_fd_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string rest = std::move(buffer_);
      buffer_.clear();
      return rest;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void LineChannel::write_line(std::string_view line) {
  std::string data(line);
  data.push_back('\n');
  std::size_t off = 0;
  bool socket = true;
  while (off < data.size()) {
    ssize_t n = socket ? ::send(out_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL) : -1;
    if (n < 0 && socket && errno == ENOTSOCK) {
      socket = false;
      continue;
    }
    if (!socket) n = ::write(out_fd_, data.data() + off, data.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(Errc::io, std::string("write failed: ") + std::strerror(errno));
    off += static_cast<std::size_t>(n);
  }
}

std::optional<Message> LineChannel::receive() {
  for (;;) {
    auto line = read_line();
    if (!line) return std::nullopt;
    if (line->find_first_not_of(" \t") == std::string::npos) continue;
    return decode_message(*line);
  }
}

void LineChannel::send(const Message& m) { write_line(encode_message(m)); }
void LineChannel::send(std::string_view type, Json payload) { send(Message{std::string(type), std::move(payload)}); }

void LineChannel::shutdown() { ::shutdown(in_fd_, SHUT_RDWR); }

int connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string where = host + ":" + std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found); rc != 0) {
    throw Error(Errc::unreachable, "cannot resolve " + where + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  int last_errno = 0;
  for (addrinfo* a = found; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    last_errno = errno;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw Error(Errc::unreachable, "cannot connect to " + where + ": " + std::strerror(last_errno));
  return fd;
}

TcpListener::TcpListener(int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(Errc::io, std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 64) != 0) {
    const int err = errno;
    ::close(fd);
    throw Error(Errc::io, "cannot listen on port " + std::to_string(port) + ": " + std::strerror(err));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  fd_ = fd;
}

TcpListener::~TcpListener() { close(); }

int TcpListener::accept() {
  for (;;) {
    const int fd = fd_.load();
    if (fd < 0) return -1;
    const int client = ::accept(fd, nullptr, nullptr);
    if (client >= 0) return client;
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return -1;
  }
}

void TcpListener::close() {
  const int fd = fd_.exchange(-1);
  if (fd < 0) return;
  ::shutdown(fd, SHUT_RDWR);
  ::close(fd);
}

namespace {

Json error_payload(const Error& e) {
  return {{"code", static_cast<int>(e.code())}, {"name", errc_name(e.code())}, {"message", e.what()}};
}

Json result_payload(const Environment& env, const StepResult& r) {
  Json p = r;
  p["metrics"] = env.metrics();
  p["steps"] = env.steps();
  p["unstable_events"] = env.session().unstable_events();
  return p;
}

void reply(LineChannel& ch, const Environment& env, const StepOutcome& outcome) {
  if (const auto* req = std::get_if<ReviseRequest>(&outcome)) {
    ch.send("revise", *req);
    return;
  }
  const auto& r = std::get<StepResult>(outcome);
  if (r.done) {
    ch.send("result", result_payload(env, r));
    return;
  }
  Json obs = env.observation();
  obs["last_result"] = r;
  ch.send("observation", std::move(obs));
}

}  // namespace

void serve_episode_channel(LineChannel& channel) {
  std::optional<Environment> env;
  for (;;) {
    std::optional<Message> msg;
    try {
      msg = channel.receive();
    } catch (const Error& e) {
      channel.send("error", error_payload(e));
      continue;
    }
    if (!msg) return;
    try {
      if (msg->type == "reset") {
        const Json& cfg = msg->payload.contains("config") ? msg->payload.at("config") : msg->payload;
        env.emplace(parse_as<EpisodeConfig>(cfg, "episode config"));
        env->reset();
        if (env->done()) {
          channel.send("result", result_payload(*env, StepResult{env->reward(), true, {}}));
        } else {
          channel.send("observation", env->observation());
        }
      } else if (msg->type == "action" || msg->type == "revise") {
        if (!env) throw Error(Errc::session, "send reset before " + msg->type);
        if (msg->type == "action") {
          const auto a = parse_as<Action>(msg->payload, "action");
          reply(channel, *env, env->step(a));
        } else {
          const int k = parse_as<int>(msg->payload.at("k"), "revise k");
          reply(channel, *env, StepOutcome{env->revise(k)});
        }
      } else {
        throw Error(Errc::protocol, "unexpected message type '" + msg->type + "'");
      }
    } catch (const Error& e) {
      channel.send("error", error_payload(e));
    } catch (const Json::exception& e) {
      channel.send("error", error_payload(Error(Errc::parse, e.what())));
    }
  }
}

void serve_policy_channel(LineChannel& channel, Policy& policy) {
  for (;;) {
    std::optional<Message> msg;
    try {
      msg = channel.receive();
    } catch (const Error& e) {
      channel.send("error", error_payload(e));
      continue;
    }
    if (!msg) return;
    try {
      if (msg->type == "reset") {
        policy.begin_episode(msg->payload.value("config", Json::object()).dump());
      } else if (msg->type == "observation") {
        if (msg->payload.contains("last_result")) policy.observe_result(msg->payload.at("last_result").get<StepResult>());
        const auto obs = parse_as<Observation>(msg->payload, "observation");
        const auto d = policy.decide(obs);
        if (!d) throw Error(Errc::invalid_action, "policy found no decision");
        channel.send("action", Json{{"j", d->j}, {"k", d->k}});
      } else if (msg->type == "revise") {
        const auto req = parse_as<ReviseRequest>(msg->payload, "revise request");
        const auto k = policy.revise(req);
        if (!k) throw Error(Errc::invalid_action, "policy found no revised EMS");
        channel.send("action", Json{{"j", req.j}, {"k", *k}});
      } else if (msg->type == "result") {
        policy.observe_result(parse_as<StepResult>(msg->payload, "result"));
        policy.end_episode();
      } else {
        throw Error(Errc::protocol, "unexpected message type '" + msg->type + "'");
      }
    } catch (const Error& e) {
      channel.send("error", error_payload(e));
    } catch (const Json::exception& e) {
      channel.send("error", error_payload(Error(Errc::parse, e.what())));
    }
  }
}

TcpServer::TcpServer(int port, Handler handler) : listener_(port), handler_(std::move(handler)) {
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::accept_loop() {
  for (;;) {
    const int fd = listener_.accept();
    if (fd < 0 || stopping_) {
      if (fd >= 0) ::close(fd);
      return;
    }
    auto channel = std::make_shared<LineChannel>(fd, fd, true);
    std::lock_guard lock(mu_);
    open_.push_back(channel.get());
    workers_.emplace_back([this, channel] {
      try {
        handler_(*channel);
      } catch (const std::exception& e) {
        log_warn(std::string("connection handler failed: ") + e.what());
      }
      std::lock_guard lock(mu_);
      open_.erase(std::remove(open_.begin(), open_.end(), channel.get()), open_.end());
    });
  }
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (auto* ch : open_) ch->shutdown();
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

std::unique_ptr<TcpServer> start_episode_server(int port) {
  return std::make_unique<TcpServer>(port, [](LineChannel& ch) { serve_episode_channel(ch); });
}

std::unique_ptr<TcpServer> start_policy_server(const std::string& spec, std::uint64_t seed, int port) {
  make_policy(spec, seed);  // reject bad specs before binding
  return std::make_unique<TcpServer>(port, [spec, seed](LineChannel& ch) {
    auto policy = make_policy(spec, seed);
    serve_policy_channel(ch, *policy);
  });
}

ExternalPolicy::ExternalPolicy(std::string host, int port) : host_(std::move(host)), port_(port) {}

ExternalPolicy::~ExternalPolicy() = default;

std::string ExternalPolicy::name() const { return "external:" + host_ + ":" + std::to_string(port_); }

LineChannel& ExternalPolicy::channel() {
  if (!channel_) {
    const int fd = connect_tcp(host_, port_);
    channel_ = std::make_unique<LineChannel>(fd, fd, true);
  }
  return *channel_;
}

Message ExternalPolicy::expect_action() {
  auto m = channel().receive();
  if (!m) throw Error(Errc::protocol, "policy endpoint closed the connection");
  if (m->type == "error") {
    throw Error(Errc::protocol, "policy endpoint reported: " + m->payload.value("message", std::string("?")));
  }
  if (m->type != "action") throw Error(Errc::protocol, "expected an action, got '" + m->type + "'");
  return *m;
}

void ExternalPolicy::begin_episode(std::string_view config_json) {
  last_.reset();
  channel().send("reset", Json{{"config", parse_json(config_json)}});
}

std::optional<Decision> ExternalPolicy::decide(const Observation& obs) {
  Json payload = obs;
  if (last_) payload["last_result"] = *last_;
  channel().send("observation", std::move(payload));
  const auto m = expect_action();
  try {
    return Decision{m.payload.at("j").get<int>(), m.payload.at("k").get<int>()};
  } catch (const Json::exception& e) {
    throw Error(Errc::protocol, std::string("malformed action: ") + e.what());
  }
}

std::optional<int> ExternalPolicy::revise(const ReviseRequest& req) {
  channel().send("revise", req);
  const auto m = expect_action();
  try {
    return m.payload.at("k").get<int>();
  } catch (const Json::exception& e) {
    throw Error(Errc::protocol, std::string("malformed revise reply: ") + e.what());
  }
}

void ExternalPolicy::observe_result(const StepResult& result) {
  last_ = result;
  if (result.done) channel().send("result", result);
}

void ExternalPolicy::end_episode() { channel_.reset(); }

}  // namespace tap
