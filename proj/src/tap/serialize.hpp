#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "tap/benchmark.hpp"
#include "tap/container.hpp"
#include "tap/env.hpp"
#include "tap/observation.hpp"
#include "tap/scene.hpp"

namespace tap {

using Json = nlohmann::json;

void to_json(Json& j, const Dims3& d);
void from_json(const Json& j, Dims3& d);
void to_json(Json& j, const ContainerSpec& s);
void from_json(const Json& j, ContainerSpec& s);
void to_json(Json& j, const HeightMap& h);
void from_json(const Json& j, HeightMap& h);
void to_json(Json& j, const PlacementRules& r);
void from_json(const Json& j, PlacementRules& r);
void to_json(Json& j, const Ems& e);
void from_json(const Json& j, Ems& e);
void to_json(Json& j, const StatePrecedence& p);
void from_json(const Json& j, StatePrecedence& p);
void to_json(Json& j, const ValidityMask& v);
void from_json(const Json& j, ValidityMask& v);

void to_json(Json& j, const BoxStateObs& b);
void from_json(const Json& j, BoxStateObs& b);
void to_json(Json& j, const EmsObs& e);
void from_json(const Json& j, EmsObs& e);
void to_json(Json& j, const ContainerObs& c);
void from_json(const Json& j, ContainerObs& c);
void to_json(Json& j, const Observation& o);
void from_json(const Json& j, Observation& o);
void to_json(Json& j, const Action& a);
void from_json(const Json& j, Action& a);
void to_json(Json& j, const ReviseRequest& r);
void from_json(const Json& j, ReviseRequest& r);
void to_json(Json& j, const StepInfo& i);
void from_json(const Json& j, StepInfo& i);
void to_json(Json& j, const StepResult& r);
void from_json(const Json& j, StepResult& r);

void to_json(Json& j, const Placement& p);
void from_json(const Json& j, Placement& p);
void to_json(Json& j, const SessionMetrics& m);
void from_json(const Json& j, SessionMetrics& m);
/// Containers, placements and metrics-free session state.
Json session_to_json(const PackingSession& session);

void to_json(Json& j, const Scene& s);
void from_json(const Json& j, Scene& s);
Json precedence_to_json(const PrecedenceGraph& g);

void to_json(Json& j, const DimsRange& r);
void from_json(const Json& j, DimsRange& r);
void to_json(Json& j, const PpsgPlacement& p);
void from_json(const Json& j, PpsgPlacement& p);
/// Missing keys keep their defaults, so `{}` is the default episode.
void to_json(Json& j, const EpisodeConfig& c);
void from_json(const Json& j, EpisodeConfig& c);

std::string to_string(SourceKind k);
std::string to_string(ContainerMode m);
SourceKind parse_source(std::string_view s);
ContainerMode parse_mode(std::string_view s);

/// Dataset file: {spec, seed, source, boxes, solution?}.
struct Dataset {
  ContainerSpec spec;
  std::uint64_t seed = 0;
  SourceKind source = SourceKind::rand;
  std::vector<Dims3> boxes;
  std::vector<PpsgPlacement> solution;  // PPSG only
};
void to_json(Json& j, const Dataset& d);
void from_json(const Json& j, Dataset& d);

/// Parses text, mapping JSON and schema errors to Errc::parse.
Json parse_json(std::string_view text);

template <class T>
T parse_as(const Json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string(what) + ": " + e.what());
  }
}

}  // namespace tap
