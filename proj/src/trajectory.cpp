#include "refinery/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace refinery {

namespace {

constexpr std::array<std::string_view, 9> kDmKeys = {
    "turn",        "role",        "Thought",       "Observation", "parameter_error",
    "place_error", "logic_error", "progress_rate", "finished"};

constexpr std::array<std::string_view, 4> kPlayerKeys = {"turn", "role", "Thought",
                                                         "Action"};

// Strips a leading "Thought:" / "Action:" label (case-insensitive) that
// models often leave in despite the format note, plus following blanks.
std::string strip_label(std::string_view text, std::string_view label) {
  if (text.size() >= label.size()) {
    bool match = true;
    for (std::size_t i = 0; i < label.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(text[i])) !=
          std::tolower(static_cast<unsigned char>(label[i]))) {
        match = false;
        break;
      }
    }
    if (match) {
      std::size_t i = label.size();
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
      return std::string(text.substr(i));
    }
  }
  return std::string(text);
}

TrajectoryParseError key_mismatch(int turn, std::vector<std::string> keys,
                                  std::string message) {
  return {TrajectoryParseError::Kind::KeyMismatch, turn, std::move(message),
          std::move(keys), {}};
}

TrajectoryParseError range_violation(int turn, std::string field,
                                     std::string message) {
  return {TrajectoryParseError::Kind::RangeViolation, turn, std::move(message),
          {}, std::move(field)};
}

// Converts one parsed element into a Turn, enforcing the exact key set for
// its role and the value ranges. `index` is the absolute turn position.
std::optional<TrajectoryParseError> convert_turn(const ojson& element, int index,
                                                 Turn* out) {
  if (!element.is_object()) {
    return key_mismatch(index, {}, "turn is not a JSON object");
  }

  auto role_it = element.find("role");
  if (role_it == element.end() || !role_it->is_string()) {
    return key_mismatch(index, {"role"}, "missing or mistyped \"role\"");
  }
  const std::string role = role_it->get<std::string>();
  if (role != "DM" && role != "Player") {
    return key_mismatch(index, {"role"}, "unknown role \"" + role + "\"");
  }

  const bool dm_expected = index % 2 == 0;
  if ((role == "DM") != dm_expected) {
    return TrajectoryParseError{TrajectoryParseError::Kind::RoleOrderViolation,
                                index,
                                "expected role \"" +
                                    std::string(dm_expected ? "DM" : "Player") +
                                    "\" at turn " + std::to_string(index) +
                                    ", found \"" + role + "\"",
                                {},
                                {}};
  }

  // Exact key-set match: anything missing or unexpected is a violation.
  std::vector<std::string> defects;
  const auto& expected = role == "DM"
                             ? std::vector<std::string_view>(kDmKeys.begin(), kDmKeys.end())
                             : std::vector<std::string_view>(kPlayerKeys.begin(),
                                                             kPlayerKeys.end());
  for (auto key : expected) {
    if (!element.contains(std::string(key))) {
      defects.push_back(std::string(key) + " (missing)");
    }
  }
  for (auto it = element.begin(); it != element.end(); ++it) {
    if (std::find(expected.begin(), expected.end(), it.key()) == expected.end()) {
      defects.push_back(it.key() + " (unexpected)");
    }
  }
  if (!defects.empty()) {
    return key_mismatch(index, std::move(defects), "turn keys do not match the format");
  }

  auto require = [&](const char* key, bool ok) -> std::optional<std::string> {
    if (!ok) return std::string(key) + " (wrong type)";
    return std::nullopt;
  };
  std::vector<std::string> mistyped;
  auto check = [&](const char* key, bool ok) {
    if (auto d = require(key, ok)) mistyped.push_back(*d);
  };

  check("turn", element["turn"].is_number_integer());
  check("Thought", element["Thought"].is_string());
  if (role == "DM") {
    check("Observation", element["Observation"].is_string());
    check("parameter_error", element["parameter_error"].is_boolean());
    check("place_error", element["place_error"].is_boolean());
    check("logic_error", element["logic_error"].is_boolean());
    check("progress_rate", element["progress_rate"].is_number());
    check("finished", element["finished"].is_boolean());
  } else {
    check("Action", element["Action"].is_string());
  }
  if (!mistyped.empty()) {
    return key_mismatch(index, std::move(mistyped), "turn keys do not match the format");
  }

  const int declared = element["turn"].get<int>();
  if (declared != index) {
    return range_violation(index, "turn",
                           "turn number " + std::to_string(declared) +
                               " does not match position " + std::to_string(index));
  }

  if (role == "DM") {
    DmTurn dm;
    dm.turn = declared;
    dm.thought = strip_label(element["Thought"].get<std::string>(), "Thought:");
    dm.observation = element["Observation"].get<std::string>();
    dm.parameter_error = element["parameter_error"].get<bool>();
    dm.place_error = element["place_error"].get<bool>();
    dm.logic_error = element["logic_error"].get<bool>();
    dm.progress_rate = element["progress_rate"].get<double>();
    dm.finished = element["finished"].get<bool>();
    if (dm.progress_rate < 0.0 || dm.progress_rate > 1.0) {
      return range_violation(index, "progress_rate",
                             "progress_rate must lie in [0, 1]");
    }
    if (dm.finished && dm.progress_rate != 1.0) {
      return range_violation(index, "finished",
                             "finished turns must report progress_rate 1.0");
    }
    *out = std::move(dm);
  } else {
    PlayerTurn player;
    player.turn = declared;
    player.thought = strip_label(element["Thought"].get<std::string>(), "Thought:");
    player.action = strip_label(element["Action"].get<std::string>(), "Action:");
    if (player.action.empty()) {
      return range_violation(index, "Action", "player action is empty");
    }
    *out = std::move(player);
  }
  return std::nullopt;
}

}  // namespace

TrajectoryParseResult parse_turns(std::string_view text, int first_turn) {
  TrajectoryParseResult result;

  ArrayScan scan = scan_json_object_array(text);
  if (!scan.found) {
    result.error = TrajectoryParseError{TrajectoryParseError::Kind::NoJsonFound,
                                        first_turn,
                                        "no JSON array found in the output",
                                        {},
                                        {}};
    return result;
  }
  if (scan.ambiguous) {
    result.error = TrajectoryParseError{TrajectoryParseError::Kind::AmbiguousJson,
                                        first_turn, scan.error, {}, {}};
    return result;
  }

  for (std::size_t i = 0; i < scan.elements.size(); ++i) {
    const int index = first_turn + static_cast<int>(i);
    Turn turn;
    if (auto err = convert_turn(scan.elements[i], index, &turn)) {
      result.error = std::move(err);
      return result;
    }
    result.turns.push_back(std::move(turn));
  }

  if (scan.bad_element) {
    const int index = first_turn + static_cast<int>(*scan.bad_element);
    result.error = TrajectoryParseError{TrajectoryParseError::Kind::JsonSyntax,
                                        index, scan.error, {}, {}};
    return result;
  }

  if (first_turn == 0 && result.turns.empty()) {
    result.error = key_mismatch(0, {}, "trajectory has no turns");
  }
  return result;
}

TrajectoryParseResult parse_trajectory(std::string_view text) {
  return parse_turns(text, 0);
}

ojson turn_to_json(const Turn& turn) {
  ojson o = ojson::object();
  if (is_dm(turn)) {
    const auto& dm = std::get<DmTurn>(turn);
    o["turn"] = dm.turn;
    o["role"] = "DM";
    o["Thought"] = dm.thought;
    o["Observation"] = dm.observation;
    o["parameter_error"] = dm.parameter_error;
    o["place_error"] = dm.place_error;
    o["logic_error"] = dm.logic_error;
    o["progress_rate"] = dm.progress_rate;
    o["finished"] = dm.finished;
  } else {
    const auto& player = std::get<PlayerTurn>(turn);
    o["turn"] = player.turn;
    o["role"] = "Player";
    o["Thought"] = player.thought;
    o["Action"] = player.action;
  }
  return o;
}

ojson turns_to_json(const std::vector<Turn>& turns) {
  ojson arr = ojson::array();
  for (const auto& turn : turns) arr.push_back(turn_to_json(turn));
  return arr;
}

std::string serialize_turns(const std::vector<Turn>& turns) {
  return turns_to_json(turns).dump(4) + "\n";
}

std::string serialize_trajectory(const Trajectory& traj) {
  return serialize_turns(traj.turns);
}

}  // namespace refinery
