#include "refinery/dataset.hpp"

#include <algorithm>
#include <sstream>

namespace refinery {

namespace {

std::string action_summary(const Script& script) {
  std::string out;
  for (const auto& spec : script.actions) {
    out += "- " + spec.name;
    if (spec.description) out += ": " + *spec.description;
    out += "\n";
  }
  return out;
}

std::string system_message(const Script& script) {
  std::string out =
      "You are a player in a text adventure. At every turn, reason about the "
      "latest observation, then act.\n";
  out += "Goal: " + script.goal + "\n";
  out += "Available actions:\n" + action_summary(script);
  out +=
      "Reply with exactly two lines:\nThought: <your reasoning>\nAction: <one "
      "action in the given format>";
  return out;
}

}  // namespace

std::string_view mask_mode_name(MaskMode mode) {
  switch (mode) {
    case MaskMode::standard: return "standard";
    case MaskMode::no_refinement: return "no_refinement";
    case MaskMode::mask_refinement: return "mask_refinement";
    case MaskMode::learn_all: return "learn_all";
  }
  return "standard";
}

MaskMode mask_mode_from_name(std::string_view name) {
  if (name == "standard") return MaskMode::standard;
  if (name == "no_refinement") return MaskMode::no_refinement;
  if (name == "mask_refinement") return MaskMode::mask_refinement;
  if (name == "learn_all") return MaskMode::learn_all;
  throw Error("unknown mask mode: " + std::string(name));
}

std::vector<bool> DatasetRecord::assistant_mask() const {
  std::vector<bool> mask;
  for (const auto& message : messages) {
    if (message.role == Role::assistant) mask.push_back(message.loss);
  }
  return mask;
}

DatasetRecord compile_record(const Script& script, const Trajectory& traj,
                             MaskMode mode, std::string id,
                             std::string persona_id) {
  if (mode == MaskMode::no_refinement) {
    throw ModeUnavailable(
        "no_refinement is a separate generation corpus, not a compile mode");
  }

  TrajectoryParseResult outcome;
  outcome.turns = traj.turns;
  VerifyResult verdict = verify_trajectory(script, outcome, {});
  if (verdict.signal.kind != SignalKind::Accept) {
    throw NotAccepted("trajectory was not accepted by the verifier (" +
                      std::string(signal_kind_name(verdict.signal.kind)) + ")");
  }

  DatasetRecord record;
  record.id = std::move(id);
  record.persona_id = std::move(persona_id);
  record.source = mode;
  record.messages.push_back({Role::system, system_message(script), false});

  // Turns come as DM 0, Player 1, DM 2, ..., DM n-1 (accepted trajectories
  // end on the finishing DM turn). Assistant message i is player turn
  // 2i+1; its evaluation is DM turn 2i+2.
  const auto& turns = traj.turns;
  const std::size_t pairs = (turns.size() - 1) / 2;
  std::vector<bool> error_positions(pairs, false);
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto& dm_before = std::get<DmTurn>(turns[2 * i]);
    const auto& player = std::get<PlayerTurn>(turns[2 * i + 1]);
    const auto& dm_after = std::get<DmTurn>(turns[2 * i + 2]);

    std::string user = dm_before.observation;
    if (i == 0) {
      user = "Your task: " + script.goal + "\nObservation: " + dm_before.observation;
    }
    record.messages.push_back({Role::user, std::move(user), false});

    record.messages.push_back(
        {Role::assistant, "Thought: " + player.thought + "\nAction: " + player.action,
         true});
    error_positions[i] = error_flag(dm_after);
    if (error_positions[i]) record.error_turn_indices.push_back(static_cast<int>(i));
  }

  // Loss flags by mode.
  std::size_t assistant_seen = 0;
  bool previous_was_error = false;
  for (auto& message : record.messages) {
    if (message.role != Role::assistant) continue;
    const std::size_t i = assistant_seen++;
    switch (mode) {
      case MaskMode::standard:
        message.loss = !error_positions[i];
        break;
      case MaskMode::learn_all:
        message.loss = true;
        break;
      case MaskMode::mask_refinement:
        // Mask errors and the first clean step after each error run.
        message.loss = !error_positions[i] && !previous_was_error;
        break;
      case MaskMode::no_refinement:
        break;  // unreachable
    }
    previous_was_error = error_positions[i];
  }
  return record;
}

double masked_loss(const DatasetRecord& record,
                   const std::vector<double>& per_message_losses) {
  const std::vector<bool> mask = record.assistant_mask();
  if (mask.size() != per_message_losses.size()) {
    throw LengthMismatch("expected " + std::to_string(mask.size()) +
                         " per-message losses, got " +
                         std::to_string(per_message_losses.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) total += per_message_losses[i];
  }
  return total;
}

std::map<int, long> error_run_histogram(const std::vector<DatasetRecord>& records) {
  std::map<int, long> histogram;
  for (const auto& record : records) {
    const std::vector<bool> mask = record.assistant_mask();
    int run = 0;
    for (bool keep : mask) {
      if (!keep) {
        ++run;
      } else if (run > 0) {
        ++histogram[run];
        run = 0;
      }
    }
    if (run > 0) ++histogram[run];
  }
  return histogram;
}

ojson record_to_json(const DatasetRecord& record) {
  ojson o = ojson::object();
  o["id"] = record.id;
  o["persona_id"] = record.persona_id;
  o["source"] = std::string(mask_mode_name(record.source));
  ojson messages = ojson::array();
  for (const auto& message : record.messages) {
    ojson m = ojson::object();
    m["role"] = std::string(role_name(message.role));
    m["content"] = message.content;
    m["loss"] = message.loss;
    messages.push_back(std::move(m));
  }
  o["messages"] = std::move(messages);
  o["error_turn_indices"] = record.error_turn_indices;
  return o;
}

DatasetRecord record_from_json(const ojson& doc, std::size_t line) {
  auto fail = [line](const std::string& what) -> JsonlError {
    return JsonlError(line, what);
  };
  if (!doc.is_object()) throw fail("record is not an object");

  static const std::vector<std::string> kKeys = {"id", "persona_id", "source",
                                                 "messages", "error_turn_indices"};
  for (const auto& key : kKeys) {
    if (!doc.contains(key)) throw fail("missing key \"" + key + "\"");
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (std::find(kKeys.begin(), kKeys.end(), it.key()) == kKeys.end()) {
      throw fail("unknown key \"" + it.key() + "\"");
    }
  }
  if (!doc["id"].is_string() || !doc["persona_id"].is_string() ||
      !doc["source"].is_string() || !doc["messages"].is_array() ||
      !doc["error_turn_indices"].is_array()) {
    throw fail("mistyped record field");
  }

  DatasetRecord record;
  record.id = doc["id"].get<std::string>();
  record.persona_id = doc["persona_id"].get<std::string>();
  try {
    record.source = mask_mode_from_name(doc["source"].get<std::string>());
  } catch (const Error& e) {
    throw fail(e.what());
  }

  for (const auto& m : doc["messages"]) {
    if (!m.is_object() || !m.contains("role") || !m.contains("content") ||
        !m.contains("loss") || m.size() != 3 || !m["role"].is_string() ||
        !m["content"].is_string() || !m["loss"].is_boolean()) {
      throw fail("malformed message entry");
    }
    MaskedMessage message;
    try {
      message.role = role_from_name(m["role"].get<std::string>());
    } catch (const Error& e) {
      throw fail(e.what());
    }
    message.content = m["content"].get<std::string>();
    message.loss = m["loss"].get<bool>();
    if (message.loss && message.role != Role::assistant) {
      throw fail("loss flag set on a non-assistant message");
    }
    record.messages.push_back(std::move(message));
  }

  for (const auto& v : doc["error_turn_indices"]) {
    if (!v.is_number_integer()) throw fail("error_turn_indices must be integers");
    record.error_turn_indices.push_back(v.get<int>());
  }
  return record;
}

std::string export_jsonl(const std::vector<DatasetRecord>& records) {
  std::string out;
  for (const auto& record : records) {
    out += record_to_json(record).dump();
    out += "\n";
  }
  return out;
}

std::vector<DatasetRecord> import_jsonl(std::string_view stream) {
  std::vector<DatasetRecord> records;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < stream.size()) {
    std::size_t nl = stream.find('\n', start);
    std::string_view line = stream.substr(
        start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      ojson doc;
      try {
        doc = parse_json_strict(line);
      } catch (const std::exception& e) {
        throw JsonlError(line_number, e.what());
      }
      records.push_back(record_from_json(doc, line_number));
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return records;
}

}  // namespace refinery
