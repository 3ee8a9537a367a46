#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "tap/observation.hpp"

namespace tap {

struct Decision {
  int j = 0;
  int k = 0;
  friend bool operator==(const Decision&, const Decision&) = default;
};

/// Chooses pairs for one episode. Returning nullopt means "no decision".
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual void begin_episode(std::string_view /*config_json*/) {}
  virtual std::optional<Decision> decide(const Observation& obs) = 0;
  virtual std::optional<int> revise(const ReviseRequest& req) = 0;
  virtual void observe_result(const StepResult& /*result*/) {}
  virtual void end_episode() {}
};

/// Maximises the session compactness after the step: the largest stable
/// volume wins; ties go to lower rest height, then smaller k, then smaller j.
std::optional<Decision> greedy_ems(const Observation& obs);

/// Greedy scoring restricted to the revised row.
std::optional<int> greedy_revise(const ReviseRequest& req);

/// Uniform over valid pairs.
std::optional<Decision> random_valid(const Observation& obs, std::mt19937_64& rng);
std::optional<int> random_revise(const ReviseRequest& req, std::mt19937_64& rng);

class GreedyPolicy final : public Policy {
 public:
  std::string name() const override { return "greedy"; }
  std::optional<Decision> decide(const Observation& obs) override { return greedy_ems(obs); }
  std::optional<int> revise(const ReviseRequest& req) override { return greedy_revise(req); }
};

class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  std::optional<Decision> decide(const Observation& obs) override { return random_valid(obs, rng_); }
  std::optional<int> revise(const ReviseRequest& req) override { return random_revise(req, rng_); }

 private:
  std::mt19937_64 rng_;
};

/// Parses "greedy", "random" or "external:<host>:<port>". `seed` feeds the
/// random policy. External endpoints are connected lazily per episode.
std::unique_ptr<Policy> make_policy(std::string_view spec, std::uint64_t seed);

}  // namespace tap
