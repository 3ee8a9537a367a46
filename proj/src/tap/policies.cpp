#include "tap/policies.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "tap/protocol.hpp"

namespace tap {

namespace {

// Range-maximum tables per container, built on first use.
class RestOracle {
 public:
  explicit RestOracle(const std::vector<ContainerObs>& containers) : containers_(containers) {}

  const HeightMap& heights(int c) const { return find(c).heights; }
  const RangeMax2D& table(int c) {
    auto it = tables_.find(c);
    if (it == tables_.end()) it = tables_.emplace(c, std::make_unique<RangeMax2D>(find(c).heights)).first;
    return *it->second;
  }

 private:
  const ContainerObs& find(int c) const {
    for (const auto& obs : containers_) {
      if (obs.index == c) return obs;
    }
    throw Error(Errc::protocol, "observation lacks a container referenced by an EMS");
  }

  const std::vector<ContainerObs>& containers_;
  std::map<int, std::unique_ptr<RangeMax2D>> tables_;
};

struct Scored {
  std::int64_t volume = 0;
  int z = 0;
  int k = 0;
  int j = 0;
  bool stable_known = false;
  bool stable = false;
};

}  // namespace

std::optional<Decision> greedy_ems(const Observation& obs) {
  RestOracle rest(obs.containers);
  const bool dbl = obs.rules.corner == CornerRule::dbl;
  std::vector<Scored> pairs;
  for (int j = 0; j < obs.validity.rows(); ++j) {
    if (!obs.validity.row_any(j)) continue;
    const Dims3& d = obs.states[j].dims;
    for (int k = 0; k < obs.validity.cols(); ++k) {
      if (!obs.validity.at(j, k)) continue;
      const EmsObs& e = obs.ems[k];
      Scored s{d.volume(), 0, k, j};
      if (dbl) {
        s.z = rest.table(e.container).query({e.ems.corner[0], e.ems.corner[1], d.x, d.y});
      } else {
        const auto plan = plan_placement(rest.heights(e.container), rest.table(e.container), e.ems, d, obs.rules);
        s.z = plan.corner[2];
        s.stable_known = true;
        s.stable = plan.stable;
      }
      pairs.push_back(s);
    }
  }
  if (pairs.empty()) return std::nullopt;

  // Larger volume first; stability is only checked until the first stable hit.
  std::sort(pairs.begin(), pairs.end(), [](const Scored& a, const Scored& b) {
    return std::tuple(-a.volume, a.z, a.k, a.j) < std::tuple(-b.volume, b.z, b.k, b.j);
  });
  for (Scored& s : pairs) {
    if (!s.stable_known) {
      const EmsObs& e = obs.ems[s.k];
      const Dims3& d = obs.states[s.j].dims;
      s.stable = stability_check(rest.heights(e.container), {e.ems.corner[0], e.ems.corner[1], d.x, d.y}, s.z,
                                 obs.rules.min_support_ratio);
    }
    if (s.stable) return Decision{s.j, s.k};
  }
  // Every pair falls over, so every pair scores the same.
  const auto worst = std::min_element(pairs.begin(), pairs.end(), [](const Scored& a, const Scored& b) {
    return std::tuple(a.z, a.k, a.j) < std::tuple(b.z, b.k, b.j);
  });
  return Decision{worst->j, worst->k};
}

std::optional<int> greedy_revise(const ReviseRequest& req) {
  RestOracle rest(req.containers);
  std::optional<std::tuple<int, int, int>> best;  // (unstable, z, k)
  for (int k = 0; k < static_cast<int>(req.row.size()); ++k) {
    if (!req.row[k]) continue;
    const EmsObs& e = req.ems.at(k);
    const auto plan = plan_placement(rest.heights(e.container), rest.table(e.container), e.ems, req.dims, req.rules);
    const auto key = std::tuple(plan.stable ? 0 : 1, plan.corner[2], k);
    if (!best || key < *best) best = key;
  }
  if (!best) return std::nullopt;
  return std::get<2>(*best);
}

std::optional<Decision> random_valid(const Observation& obs, std::mt19937_64& rng) {
  std::vector<Decision> valid;
  for (int j = 0; j < obs.validity.rows(); ++j) {
    for (int k = 0; k < obs.validity.cols(); ++k) {
      if (obs.validity.at(j, k)) valid.push_back({j, k});
    }
  }
  if (valid.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  return valid[pick(rng)];
}

std::optional<int> random_revise(const ReviseRequest& req, std::mt19937_64& rng) {
  std::vector<int> valid;
  for (int k = 0; k < static_cast<int>(req.row.size()); ++k) {
    if (req.row[k]) valid.push_back(k);
  }
  if (valid.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  return valid[pick(rng)];
}

std::unique_ptr<Policy> make_policy(std::string_view spec, std::uint64_t seed) {
  if (spec == "greedy") return std::make_unique<GreedyPolicy>();
  if (spec == "random") return std::make_unique<RandomPolicy>(seed);
  constexpr std::string_view prefix = "external:";
  if (spec.substr(0, prefix.size()) == prefix) {
    const auto address = spec.substr(prefix.size());
    const auto colon = address.rfind(':');
    if (colon == std::string_view::npos) throw Error(Errc::parse, "external policy needs <host>:<port>");
    int port = 0;
    try {
      port = std::stoi(std::string(address.substr(colon + 1)));
    } catch (const std::exception&) {
      throw Error(Errc::parse, "bad port in external policy address");
    }
    return std::make_unique<ExternalPolicy>(std::string(address.substr(0, colon)), port);
  }
  throw Error(Errc::parse, "unknown policy '" + std::string(spec) + "'");
}

}  // namespace tap
