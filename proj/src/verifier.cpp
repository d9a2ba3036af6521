#include "refinery/verifier.hpp"

#include <algorithm>

namespace refinery {

namespace {

const re::Regex& compiled_code(const ActionSpec& spec,
                               std::vector<re::Regex>& storage,
                               std::vector<const re::Regex*>& table,
                               std::size_t index) {
  if (table[index]) return *table[index];
  if (spec.compiled) {
    table[index] = spec.compiled.get();
    return *table[index];
  }
  try {
    storage.push_back(re::Regex::compile(spec.verification_code));
  } catch (const re::RegexError& e) {
    throw InvalidScript("action \"" + spec.name +
                        "\": verification code does not compile: " + e.what());
  }
  table[index] = &storage.back();
  return storage.back();
}

SignalReason reason_for_parse_error(const TrajectoryParseError& err) {
  switch (err.kind) {
    case TrajectoryParseError::Kind::NoJsonFound:
    case TrajectoryParseError::Kind::AmbiguousJson:
    case TrajectoryParseError::Kind::JsonSyntax:
      return SignalReason::JsonFormat;
    case TrajectoryParseError::Kind::KeyMismatch:
    case TrajectoryParseError::Kind::RoleOrderViolation:
    case TrajectoryParseError::Kind::RangeViolation:
      return SignalReason::KeySchema;
  }
  return SignalReason::JsonFormat;
}

// Truncation at turn 0 keeps nothing, which is a regeneration.
VerifyResult truncate_at(const std::vector<Turn>& turns, int at_turn,
                         SignalReason reason) {
  VerifyResult result;
  if (at_turn <= 0) {
    result.signal = {SignalKind::Regenerate, std::nullopt, reason};
    return result;
  }
  result.verified_prefix.assign(turns.begin(), turns.begin() + at_turn);
  result.signal = {SignalKind::TruncateAndContinue, at_turn, reason};
  return result;
}

}  // namespace

std::string_view signal_kind_name(SignalKind kind) {
  switch (kind) {
    case SignalKind::Accept: return "accept";
    case SignalKind::TruncateAndContinue: return "truncate_and_continue";
    case SignalKind::Regenerate: return "regenerate";
  }
  return "accept";
}

std::string_view signal_reason_name(SignalReason reason) {
  switch (reason) {
    case SignalReason::JsonFormat: return "json_format";
    case SignalReason::KeySchema: return "key_schema";
    case SignalReason::UnmatchedAction: return "unmatched_action";
    case SignalReason::UnfinishedTask: return "unfinished_task";
    case SignalReason::FinalTurnHasError: return "final_turn_has_error";
    case SignalReason::TooFewErrorRefineTurns: return "too_few_error_refine_turns";
  }
  return "json_format";
}

ojson signal_to_json(const VerificationSignal& signal) {
  ojson o = ojson::object();
  o["kind"] = std::string(signal_kind_name(signal.kind));
  if (signal.at_turn) o["at_turn"] = *signal.at_turn;
  if (signal.reason) o["reason"] = std::string(signal_reason_name(*signal.reason));
  return o;
}

MatchResult match_action(std::string_view action_text,
                         const std::vector<ActionSpec>& specs) {
  MatchResult result;
  std::vector<re::Regex> storage;
  storage.reserve(specs.size());
  std::vector<const re::Regex*> table(specs.size(), nullptr);

  for (std::size_t s = 0; s < specs.size(); ++s) {
    const ActionSpec& spec = specs[s];
    const re::Regex& rx = compiled_code(spec, storage, table, s);
    auto groups = rx.full_match(action_text);
    if (!groups) continue;

    result.matched = true;
    result.action_name = spec.name;

    const std::vector<std::string> placeholders = extract_placeholders(spec.name);
    const std::size_t usable = std::min(placeholders.size(), rx.group_count());
    for (std::size_t g = 0; g < usable; ++g) {
      const auto& cap = (*groups)[g + 1];
      if (!cap) continue;
      result.captures[placeholders[g]] =
          std::string(action_text.substr(cap->begin, cap->end - cap->begin));
    }

    if (!spec.verifiable) {
      result.params_valid = true;
      return result;
    }
    result.params_valid = true;
    for (const auto& [placeholder, value] : result.captures) {
      const auto* allowed = spec.allowed_values(placeholder);
      if (!allowed ||
          std::find(allowed->begin(), allowed->end(), value) == allowed->end()) {
        result.params_valid = false;
        break;
      }
    }
    return result;
  }
  return result;
}

int count_error_turns(const Trajectory& traj) {
  int n = 0;
  for (const auto& turn : traj.turns) {
    if (is_dm(turn) && error_flag(std::get<DmTurn>(turn))) ++n;
  }
  return n;
}

VerifyResult verify_trajectory(const Script& script,
                               const TrajectoryParseResult& outcome,
                               const std::vector<Turn>& prior_prefix) {
  // Compile everything up front so a bad script fails loudly, not at some
  // arbitrary turn.
  std::vector<re::Regex> storage;
  storage.reserve(script.actions.size());
  std::vector<const re::Regex*> table(script.actions.size(), nullptr);
  for (std::size_t s = 0; s < script.actions.size(); ++s) {
    compiled_code(script.actions[s], storage, table, s);
  }

  const std::vector<Turn>& turns = outcome.turns;
  const int n = static_cast<int>(turns.size());
  const int trusted = static_cast<int>(prior_prefix.size());

  int error_num = 0;
  for (int i = 0; i < n; ++i) {
    const Turn& turn = turns[i];
    if (is_dm(turn)) {
      if (error_flag(std::get<DmTurn>(turn))) ++error_num;
      continue;
    }

    // Player turn: match the action only when the DM that evaluated it
    // (the next turn) flags no error, and only when at least one side of
    // that pair lies outside the trusted prefix.
    if (i + 1 >= n) break;  // trailing player turn, resolved after the loop
    if (i + 1 < trusted) continue;

    const auto& player = std::get<PlayerTurn>(turn);
    const auto& dm_after = std::get<DmTurn>(turns[i + 1]);
    MatchResult match = match_action(player.action, script.actions);
    if (match.matched && match.params_valid) continue;
    if (!match.matched && error_flag(dm_after)) continue;  // any flag excuses
    if (match.matched && !match.params_valid && dm_after.parameter_error) continue;
    return truncate_at(turns, i, SignalReason::UnmatchedAction);
  }

  if (outcome.error) {
    return truncate_at(turns, outcome.error->at_turn,
                       reason_for_parse_error(*outcome.error));
  }

  if (n == 0) {
    return {{}, {SignalKind::Regenerate, std::nullopt, SignalReason::JsonFormat}};
  }

  // A trajectory ending on a player turn cannot be judged finished; keep
  // everything and ask for the DM turn onward.
  if (!is_dm(turns[n - 1])) {
    VerifyResult result;
    result.verified_prefix = turns;
    result.signal = {SignalKind::TruncateAndContinue, n, SignalReason::UnfinishedTask};
    return result;
  }

  const auto& final_dm = std::get<DmTurn>(turns[n - 1]);
  if (error_flag(final_dm)) {
    return truncate_at(turns, n - 1, SignalReason::FinalTurnHasError);
  }
  if (!final_dm.finished ||
      final_dm.observation.find(kCompletionMarker) == std::string::npos) {
    return truncate_at(turns, n - 1, SignalReason::UnfinishedTask);
  }
  if (error_num <= 1) {
    return {{}, {SignalKind::Regenerate, std::nullopt,
                 SignalReason::TooFewErrorRefineTurns}};
  }

  VerifyResult result;
  result.verified_prefix = turns;
  result.signal = {SignalKind::Accept, std::nullopt, std::nullopt};
  return result;
}

}  // namespace refinery
