#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/json_util.hpp"
#include "refinery/regex.hpp"

namespace refinery {

/// A professional/interest sketch used to seed one unique script.
struct Persona {
  std::string id;
  std::string description;

  bool operator==(const Persona&) const = default;
};

/// A DM-only fact attached to an environment node. The source format keys
/// these facts by free-form labels, so both halves are retained.
struct DmNote {
  std::string label;
  std::string text;

  bool operator==(const DmNote&) const = default;
};

/// One place or object in the environment tree.
struct EnvironmentNode {
  std::string name;
  std::optional<std::string> information;  // player-visible on examine
  std::optional<std::string> location;     // relative to the parent node
  std::vector<std::string> relative_locations;
  std::vector<DmNote> dm_notes;
  std::vector<EnvironmentNode> children;

  bool operator==(const EnvironmentNode&) const = default;

  const EnvironmentNode* find(std::string_view child_name) const;
};

/// An action template with its verification code and allowed parameters.
struct ActionSpec {
  std::string name;  // may contain {placeholder} slots
  std::optional<std::string> description;
  std::optional<std::string> special_format;
  std::string verification_code;
  std::vector<std::pair<std::string, std::vector<std::string>>> parameters;
  bool verifiable = true;
  bool verifiable_explicit = false;  // true when the source JSON carried the key

  // Compiled form of verification_code; immutable and shared.
  std::shared_ptr<const re::Regex> compiled;

  bool operator==(const ActionSpec& other) const {
    return name == other.name && description == other.description &&
           special_format == other.special_format &&
           verification_code == other.verification_code &&
           parameters == other.parameters && verifiable == other.verifiable;
  }

  const std::vector<std::string>* allowed_values(std::string_view placeholder) const;
};

/// A generated world definition: environment tree, goal, completion
/// conditions, and the action grammar.
struct Script {
  std::string thought;
  std::string initial_state;
  EnvironmentNode environment;  // synthetic root, children are top-level places
  std::string player_info;
  std::string goal;
  std::vector<std::string> completion_conditions;
  std::vector<ActionSpec> actions;  // ordered, names unique

  bool operator==(const Script& other) const {
    return thought == other.thought && initial_state == other.initial_state &&
           environment == other.environment && player_info == other.player_info &&
           goal == other.goal &&
           completion_conditions == other.completion_conditions &&
           actions == other.actions;
  }

  const ActionSpec* find_action(std::string_view name) const;
};

struct ScriptParseError {
  enum class Kind { NoJsonFound, JsonSyntax, SchemaViolation, RegexCompile, AmbiguousJson };
  Kind kind;
  std::string message;
  std::size_t position = 0;          // JsonSyntax
  std::vector<std::string> details;  // SchemaViolation: missing/mistyped keys
  std::string action;                // RegexCompile: offending action name
};

struct ScriptParseResult {
  std::optional<Script> script;
  std::optional<ScriptParseError> error;

  bool ok() const { return script.has_value(); }
};

/// Extracts and parses a script from raw model output. On success every
/// type invariant holds and all verification codes are compiled.
ScriptParseResult parse_script(std::string_view text);

/// Parses an already-extracted canonical script JSON value.
ScriptParseResult script_from_json(const ojson& doc);

struct Violation {
  enum class Kind {
    SelfMatchFailure,       // template instantiation rejected by its own code
    RegexCompileError,
    MissingParameterValues, // verifiable action with an unlisted placeholder
    EmptyGoal,
    NoCompletionConditions,
    NoActions,
    EmptyPersona,
  };
  Kind kind;
  std::string subject;  // action name or field
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Checks the script against its own action grammar: each verifiable
/// action's template, instantiated with the first allowed value of every
/// placeholder, must be accepted by its own verification code.
/// Non-verifiable actions are skipped. Pure; violations are returned.
std::vector<Violation> validate_script(const Script& script);

/// Canonical JSON rendering. Deterministic; parse_script of the output
/// reproduces the same Script.
std::string serialize_script(const Script& script);
ojson script_to_json(const Script& script);

/// Placeholders in `{name}` syntax, in order of first occurrence.
std::vector<std::string> extract_placeholders(std::string_view tmpl);

/// Replaces each {placeholder} with its value. Unknown placeholders are
/// left in place.
std::string instantiate_template(
    std::string_view tmpl,
    const std::vector<std::pair<std::string, std::string>>& values);

/// Builds an anchored verification code from a template: literal segments
/// are escaped, placeholders with allowed values become alternation groups,
/// placeholders without become (.+).
std::string build_verification_code(
    std::string_view tmpl,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& parameters);

}  // namespace refinery
