#include "tap/observation.hpp"

#include <algorithm>
#include <string>

namespace tap {

namespace {
const ContainerObs& find_container(const std::vector<ContainerObs>& cs, int index) {
  auto it = std::find_if(cs.begin(), cs.end(), [index](const ContainerObs& c) { return c.index == index; });
  if (it == cs.end()) throw Error(Errc::protocol, "observation lacks container " + std::to_string(index));
  return *it;
}
}  // namespace

const ContainerObs& Observation::container(int index) const { return find_container(containers, index); }

const ContainerObs& ReviseRequest::container(int index) const { return find_container(containers, index); }

}  // namespace tap
