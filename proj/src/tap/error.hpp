#pragma once

#include <stdexcept>
#include <string>

namespace tap {

// Mirrors tap_status in the C API one-to-one.
enum class Errc : int {
  ok = 0,
  contract = 1,
  range = 2,
  overflow = 3,
  scene_generation = 4,
  session = 5,
  protocol = 6,
  invalid_action = 7,
  unreachable = 8,
  diverged = 9,
  io = 10,
  parse = 11,
  internal = 99,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tap
