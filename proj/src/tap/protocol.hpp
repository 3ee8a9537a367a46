#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tap/policies.hpp"

namespace tap {

constexpr int kProtocolVersion = 1;

using Json = nlohmann::json;

/// A protocol message: {proto: 1, type, payload}.
struct Message {
  std::string type;
  Json payload;
};

std::string encode_message(const Message& m);
/// Errc::protocol on malformed JSON, a missing type or a wrong version.
Message decode_message(std::string_view line);

/// Newline-delimited text over a pair of file descriptors.
class LineChannel {
 public:
  LineChannel(int in_fd, int out_fd, bool owns_fds);
  ~LineChannel();
  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;

  /// nullopt at end of stream.
  std::optional<std::string> read_line();
  void write_line(std::string_view line);

  std::optional<Message> receive();
  void send(const Message& m);
  void send(std::string_view type, Json payload);

  /// Unblocks a pending read from another thread.
  void shutdown();

 private:
  int in_fd_;
  int out_fd_;
  bool owns_;
  std::string buffer_;
};

/// Errc::unreachable when the endpoint cannot be reached.
int connect_tcp(const std::string& host, int port);

class TcpListener {
 public:
  /// Binds 127.0.0.1:port; port 0 picks a free port.
  explicit TcpListener(int port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  int port() const noexcept { return port_; }
  /// -1 once closed.
  int accept();
  void close();

 private:
  std::atomic<int> fd_{-1};
  int port_ = 0;
};

/// Serves the episode protocol on one channel until the peer hangs up.
///   client: reset{config} | action{j,k} | revise{k}
///   server: observation | revise | result | error
void serve_episode_channel(LineChannel& channel);

/// Serves the policy side on one channel.
///   engine: reset{config} | observation | revise | result
///   policy: action{j,k} in reply to observation and revise
void serve_policy_channel(LineChannel& channel, Policy& policy);

/// Accepts TCP connections on a background thread, one handler thread per
/// connection, each with its own state.
class TcpServer {
 public:
  using Handler = std::function<void(LineChannel&)>;

  TcpServer(int port, Handler handler);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  int port() const noexcept { return listener_.port(); }
  void stop();

 private:
  void accept_loop();

  TcpListener listener_;
  Handler handler_;
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<LineChannel*> open_;
  std::atomic<bool> stopping_{false};
};

std::unique_ptr<TcpServer> start_episode_server(int port);
/// Every connection gets a fresh policy from `make_policy(spec, seed)`.
std::unique_ptr<TcpServer> start_policy_server(const std::string& spec, std::uint64_t seed, int port);

/// Runs the policy on a remote endpoint speaking serve_policy_channel.
class ExternalPolicy final : public Policy {
 public:
  ExternalPolicy(std::string host, int port);
  ~ExternalPolicy() override;

  std::string name() const override;
  void begin_episode(std::string_view config_json) override;
  std::optional<Decision> decide(const Observation& obs) override;
  std::optional<int> revise(const ReviseRequest& req) override;
  void observe_result(const StepResult& result) override;
  void end_episode() override;

 private:
  LineChannel& channel();
  Message expect_action();

  std::string host_;
  int port_;
  std::unique_ptr<LineChannel> channel_;
  std::optional<StepResult> last_;
};

}  // namespace tap
