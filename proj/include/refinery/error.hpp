#pragma once

#include <stdexcept>
#include <string>

namespace refinery {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace refinery
