#pragma once

#include <string>
#include <string_view>

#include "refinery/error.hpp"

namespace refinery {

enum class Role { system, user, assistant };

inline std::string_view role_name(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

inline Role role_from_name(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  throw Error("unknown role: " + std::string(name));
}

}  // namespace refinery
