#include "refinery/runtime.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace refinery {

namespace {

// Verbs that reveal a node's information string when the action mentions
// its name. Mirrors the format note on when "information" becomes visible.
constexpr std::string_view kRevealVerbs[] = {"examine", "open",  "look", "read",
                                             "inspect", "check", "go",   "enter",
                                             "step"};

bool template_has_reveal_verb(std::string_view tmpl) {
  std::size_t start = 0;
  while (start < tmpl.size()) {
    std::size_t end = start;
    while (end < tmpl.size() && tmpl[end] != ' ') ++end;
    std::string_view word = tmpl.substr(start, end - start);
    for (auto verb : kRevealVerbs) {
      if (word == verb) return true;
    }
    start = end + 1;
  }
  return false;
}

const EnvironmentNode* find_node(const EnvironmentNode& root,
                                 std::string_view name) {
  for (const auto& child : root.children) {
    if (child.name == name) return &child;
    if (const auto* hit = find_node(child, name)) return hit;
  }
  return nullptr;
}

// Tries to read `tmpl` out of `text` starting anywhere, consuming literal
// segments verbatim and placeholders from the allowed candidate lists.
// Returns placeholder values on success. Candidate-driven matching keeps
// prose around the template from leaking into the values.
struct TemplatePiece {
  bool placeholder = false;
  std::string text;  // literal text or placeholder name
};

std::vector<TemplatePiece> split_template(std::string_view tmpl) {
  std::vector<TemplatePiece> pieces;
  std::string literal;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i);
      if (close != std::string_view::npos && close > i + 1) {
        if (!literal.empty()) {
          pieces.push_back({false, literal});
          literal.clear();
        }
        pieces.push_back({true, std::string(tmpl.substr(i + 1, close - i - 1))});
        i = close;
        continue;
      }
    }
    literal.push_back(tmpl[i]);
  }
  if (!literal.empty()) pieces.push_back({false, literal});
  return pieces;
}

std::optional<std::vector<std::pair<std::string, std::string>>> match_template_at(
    std::string_view text, std::size_t pos, const std::vector<TemplatePiece>& pieces,
    const ActionSpec& spec) {
  std::vector<std::pair<std::string, std::string>> values;
  std::function<bool(std::size_t, std::size_t)> walk = [&](std::size_t piece,
                                                           std::size_t at) -> bool {
    if (piece == pieces.size()) return true;
    const TemplatePiece& p = pieces[piece];
    if (!p.placeholder) {
      if (text.compare(at, p.text.size(), p.text) != 0) return false;
      return walk(piece + 1, at + p.text.size());
    }
    const auto* allowed = spec.allowed_values(p.text);
    if (allowed && !allowed->empty()) {
      for (const auto& candidate : *allowed) {
        if (text.compare(at, candidate.size(), candidate) == 0) {
          values.emplace_back(p.text, candidate);
          if (walk(piece + 1, at + candidate.size())) return true;
          values.pop_back();
        }
      }
      return false;
    }
    // Free placeholder: shortest capture that lets the rest match.
    const std::string_view rest =
        piece + 1 < pieces.size() && !pieces[piece + 1].placeholder
            ? std::string_view(pieces[piece + 1].text)
            : std::string_view();
    if (rest.empty()) {
      values.emplace_back(p.text, std::string(text.substr(at)));
      return piece + 1 == pieces.size();
    }
    std::size_t found = text.find(rest, at);
    while (found != std::string_view::npos) {
      values.emplace_back(p.text, std::string(text.substr(at, found - at)));
      if (walk(piece + 1, found)) return true;
      values.pop_back();
      found = text.find(rest, found + 1);
    }
    return false;
  };
  if (walk(0, pos)) return values;
  return std::nullopt;
}

std::optional<ConditionBinding> derive_binding(int index,
                                               const std::string& condition,
                                               const Script& script) {
  for (const auto& spec : script.actions) {
    const auto pieces = split_template(spec.name);
    if (pieces.empty()) continue;
    for (std::size_t pos = 0; pos < condition.size(); ++pos) {
      auto values = match_template_at(condition, pos, pieces, spec);
      if (!values) continue;
      ConditionBinding binding;
      binding.condition = index;
      binding.derivable = true;
      binding.spec_name = spec.name;
      binding.values = *values;
      std::vector<std::pair<std::string, std::string>> substitution(values->begin(),
                                                                    values->end());
      binding.canonical_action = instantiate_template(spec.name, substitution);
      return binding;
    }
  }
  return std::nullopt;
}

}  // namespace

double EnvState::progress() const {
  const std::size_t total =
      diagnostics_->bindings.size() - diagnostics_->manual_conditions.size();
  if (total == 0) return done_ ? 1.0 : 0.0;
  return static_cast<double>(satisfied_.size()) / static_cast<double>(total);
}

EnvState init(const Script& script, int max_steps) {
  auto violations = validate_script(script);
  if (!violations.empty()) {
    std::string what = "script does not validate:";
    for (const auto& v : violations) what += " [" + v.subject + "] " + v.message;
    throw InvalidScript(what);
  }

  auto diagnostics = std::make_shared<InitDiagnostics>();
  for (std::size_t i = 0; i < script.completion_conditions.size(); ++i) {
    auto binding = derive_binding(static_cast<int>(i),
                                  script.completion_conditions[i], script);
    if (binding) {
      diagnostics->bindings.push_back(std::move(*binding));
    } else {
      ConditionBinding manual;
      manual.condition = static_cast<int>(i);
      manual.derivable = false;
      diagnostics->bindings.push_back(std::move(manual));
      diagnostics->manual_conditions.push_back(static_cast<int>(i));
    }
  }

  EnvState state;
  state.script_ = std::make_shared<const Script>(script);
  state.diagnostics_ = std::move(diagnostics);
  state.max_steps_ = max_steps;
  return state;
}

std::pair<EnvState, StepOutcome> step(const EnvState& state,
                                      std::string_view action_text) {
  if (state.done()) throw EpisodeOver("episode already finished");
  if (state.step_count() >= state.max_steps()) {
    throw StepBudgetExhausted("step budget of " + std::to_string(state.max_steps()) +
                              " exhausted");
  }

  const Script& script = state.script();
  MatchResult match = match_action(action_text, script.actions);

  EnvState next = state;
  next.history_.emplace_back(std::string(action_text), match);

  StepOutcome outcome;
  if (!match.matched) {
    outcome.unmatched = true;
    outcome.observation = "Nothing happens.";
    outcome.progress = next.progress();
    return {std::move(next), outcome};
  }
  if (!match.params_valid) {
    outcome.parameter_error = true;
    outcome.observation = "You cannot do that here.";
    outcome.progress = next.progress();
    return {std::move(next), outcome};
  }

  // Condition bookkeeping: an action satisfies a condition when it is the
  // same template filled with the same values the condition was bound to.
  for (const auto& binding : state.diagnostics().bindings) {
    if (!binding.derivable) continue;
    if (next.satisfied_.count(binding.condition)) continue;
    if (binding.spec_name != *match.action_name) continue;
    bool same = true;
    for (const auto& [placeholder, value] : binding.values) {
      auto it = match.captures.find(placeholder);
      if (it == match.captures.end() || it->second != value) {
        same = false;
        break;
      }
    }
    if (same) next.satisfied_.insert(binding.condition);
  }

  const std::size_t trackable =
      state.diagnostics().bindings.size() -
      state.diagnostics().manual_conditions.size();
  next.done_ = trackable > 0 && next.satisfied_.size() == trackable;

  // Observation: reveal node information for examine-style actions.
  std::string observation;
  if (template_has_reveal_verb(*match.action_name)) {
    for (const auto& [placeholder, value] : match.captures) {
      const EnvironmentNode* node = find_node(script.environment, value);
      if (node && node->information) {
        observation = *node->information;
        break;
      }
    }
  }
  if (observation.empty()) {
    observation = "You " + std::string(action_text) + ".";
  }
  if (next.done_) observation += " Task Succeed.";

  outcome.observation = std::move(observation);
  outcome.progress = next.progress();
  outcome.done = next.done_;
  return {std::move(next), outcome};
}

int ReplayReport::inconsistency_count() const {
  int n = 0;
  for (const auto& entry : entries) {
    if (!entry.consistent) ++n;
  }
  return n;
}

ojson replay_report_to_json(const ReplayReport& report) {
  ojson arr = ojson::array();
  for (const auto& entry : report.entries) {
    ojson o = ojson::object();
    o["turn"] = entry.turn;
    o["matched"] = entry.matched;
    o["params_valid"] = entry.params_valid;
    o["dm_flag"] = entry.dm_flag;
    o["consistent"] = entry.consistent;
    arr.push_back(std::move(o));
  }
  return arr;
}

ReplayReport replay(const Script& script, const Trajectory& traj) {
  ReplayReport report;
  const auto& turns = traj.turns;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (is_dm(turns[i])) continue;
    const auto& player = std::get<PlayerTurn>(turns[i]);
    MatchResult match = match_action(player.action, script.actions);

    ReplayEntry entry;
    entry.turn = player.turn;
    entry.matched = match.matched;
    entry.params_valid = match.params_valid;

    if (i + 1 < turns.size() && is_dm(turns[i + 1])) {
      const auto& dm = std::get<DmTurn>(turns[i + 1]);
      entry.dm_flag = error_flag(dm);
      if (!match.matched) {
        entry.consistent = entry.dm_flag;
      } else if (!match.params_valid) {
        entry.consistent = dm.parameter_error;
      } else {
        entry.consistent = true;  // over-flagging is the DM's prerogative
      }
    } else {
      entry.dm_flag = false;
      entry.consistent = true;  // no evaluation to compare against
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace refinery
