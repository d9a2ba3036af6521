#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "refinery/json_util.hpp"

namespace refinery {

/// A Dungeon Master turn: observation plus the evaluation of the player's
/// previous action. DM turns sit at even indices.
struct DmTurn {
  int turn = 0;
  std::string thought;
  std::string observation;
  bool parameter_error = false;
  bool place_error = false;
  bool logic_error = false;
  double progress_rate = 0.0;
  bool finished = false;

  bool operator==(const DmTurn&) const = default;
};

/// A player turn in ReAct style. Player turns sit at odd indices.
struct PlayerTurn {
  int turn = 0;
  std::string thought;
  std::string action;

  bool operator==(const PlayerTurn&) const = default;
};

using Turn = std::variant<DmTurn, PlayerTurn>;

inline bool is_dm(const Turn& t) { return std::holds_alternative<DmTurn>(t); }
inline int turn_number(const Turn& t) {
  return is_dm(t) ? std::get<DmTurn>(t).turn : std::get<PlayerTurn>(t).turn;
}

/// True when the DM flagged any of the three error kinds.
inline bool error_flag(const DmTurn& turn) {
  return turn.parameter_error || turn.place_error || turn.logic_error;
}

struct Trajectory {
  std::vector<Turn> turns;

  bool operator==(const Trajectory&) const = default;
};

struct TrajectoryParseError {
  enum class Kind {
    NoJsonFound,
    AmbiguousJson,
    JsonSyntax,
    KeyMismatch,
    RoleOrderViolation,
    RangeViolation,
  };
  Kind kind;
  int at_turn = 0;  // earliest offending turn index
  std::string message;
  std::vector<std::string> keys;  // KeyMismatch: missing/extra/mistyped keys
  std::string field;              // RangeViolation: offending field
};

/// Parse outcome. On failure, `turns` still holds every turn before the
/// offending one so a verifier can truncate instead of discarding.
struct TrajectoryParseResult {
  std::vector<Turn> turns;
  std::optional<TrajectoryParseError> error;

  bool ok() const { return !error.has_value(); }
  Trajectory trajectory() const { return Trajectory{turns}; }
};

/// Parses a full trajectory (first turn must be DM turn 0).
TrajectoryParseResult parse_trajectory(std::string_view text);

/// Parses a turn list starting at `first_turn`, as emitted when the model
/// continues a truncated trajectory. Turn numbers and roles are validated
/// against absolute positions.
TrajectoryParseResult parse_turns(std::string_view text, int first_turn);

/// Canonical JSON rendering; deterministic, loss-free for valid turns.
std::string serialize_trajectory(const Trajectory& traj);
std::string serialize_turns(const std::vector<Turn>& turns);
ojson turns_to_json(const std::vector<Turn>& turns);
ojson turn_to_json(const Turn& turn);

}  // namespace refinery
