#pragma once

#include <stdexcept>
#include <string>

namespace fading_flock {

/// Base exception for every contract violation raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fading_flock
