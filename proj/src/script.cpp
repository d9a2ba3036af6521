#include "refinery/script.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace refinery {

namespace {

constexpr std::string_view kInformationKey = "information";
constexpr std::string_view kLocationKey = "location";
constexpr std::string_view kRelativeLocationKey = "relative location";

bool is_placeholder_start(char c) {
  return c == '_' || std::isalpha(static_cast<unsigned char>(c));
}

bool is_placeholder_char(char c) {
  return c == '_' || std::isalnum(static_cast<unsigned char>(c));
}

// Reads a {name} placeholder starting at text[pos] == '{'. Returns the
// placeholder name and advances *end past the closing brace, or nullopt.
std::optional<std::string> read_placeholder(std::string_view text,
                                            std::size_t pos, std::size_t* end) {
  if (pos >= text.size() || text[pos] != '{') return std::nullopt;
  std::size_t i = pos + 1;
  if (i >= text.size() || !is_placeholder_start(text[i])) return std::nullopt;
  std::size_t start = i;
  while (i < text.size() && is_placeholder_char(text[i])) ++i;
  if (i >= text.size() || text[i] != '}') return std::nullopt;
  *end = i + 1;
  return std::string(text.substr(start, i - start));
}

class SchemaReader {
 public:
  explicit SchemaReader(std::vector<std::string>* details) : details_(details) {}

  const ojson* object(const ojson& parent, const std::string& key, bool required,
                      const std::string& path) {
    const ojson* v = member(parent, key, required, path);
    if (v && !v->is_object()) {
      details_->push_back(path + key + ": expected an object");
      return nullptr;
    }
    return v;
  }

  std::optional<std::string> string(const ojson& parent, const std::string& key,
                                    bool required, const std::string& path) {
    const ojson* v = member(parent, key, required, path);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      details_->push_back(path + key + ": expected a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<std::vector<std::string>> string_list(const ojson& parent,
                                                      const std::string& key,
                                                      bool required,
                                                      const std::string& path) {
    const ojson* v = member(parent, key, required, path);
    if (!v) return std::nullopt;
    if (!v->is_array()) {
      details_->push_back(path + key + ": expected a list of strings");
      return std::nullopt;
    }
    std::vector<std::string> out;
    for (const auto& item : *v) {
      if (!item.is_string()) {
        details_->push_back(path + key + ": expected a list of strings");
        return std::nullopt;
      }
      out.push_back(item.get<std::string>());
    }
    return out;
  }

 private:
  const ojson* member(const ojson& parent, const std::string& key, bool required,
                      const std::string& path) {
    auto it = parent.find(key);
    if (it == parent.end()) {
      if (required) details_->push_back(path + key + ": missing");
      return nullptr;
    }
    return &*it;
  }

  std::vector<std::string>* details_;
};

EnvironmentNode read_node(const std::string& name, const ojson& body,
                          const std::string& path, SchemaReader& reader,
                          std::vector<std::string>* details) {
  EnvironmentNode node;
  node.name = name;
  for (auto it = body.begin(); it != body.end(); ++it) {
    const std::string& key = it.key();
    const ojson& value = it.value();
    if (key == kInformationKey) {
      if (value.is_string()) {
        node.information = value.get<std::string>();
      } else {
        details->push_back(path + key + ": expected a string");
      }
    } else if (key == kLocationKey) {
      if (value.is_string()) {
        node.location = value.get<std::string>();
      } else {
        details->push_back(path + key + ": expected a string");
      }
    } else if (key == kRelativeLocationKey) {
      auto list = reader.string_list(body, key, false, path);
      if (list) node.relative_locations = std::move(*list);
    } else if (value.is_object()) {
      node.children.push_back(
          read_node(key, value, path + key + ".", reader, details));
    } else if (value.is_string()) {
      node.dm_notes.push_back(DmNote{key, value.get<std::string>()});
    } else {
      details->push_back(path + key + ": expected an object or a string");
    }
  }
  return node;
}

ojson node_body_to_json(const EnvironmentNode& node) {
  ojson body = ojson::object();
  if (node.information) body[std::string(kInformationKey)] = *node.information;
  if (node.location) body[std::string(kLocationKey)] = *node.location;
  if (!node.relative_locations.empty()) {
    body[std::string(kRelativeLocationKey)] = node.relative_locations;
  }
  for (const auto& note : node.dm_notes) body[note.label] = note.text;
  for (const auto& child : node.children) {
    body[child.name] = node_body_to_json(child);
  }
  return body;
}

ScriptParseResult fail(ScriptParseError err) {
  ScriptParseResult r;
  r.error = std::move(err);
  return r;
}

}  // namespace

const EnvironmentNode* EnvironmentNode::find(std::string_view child_name) const {
  for (const auto& child : children) {
    if (child.name == child_name) return &child;
  }
  return nullptr;
}

const std::vector<std::string>* ActionSpec::allowed_values(
    std::string_view placeholder) const {
  for (const auto& [key, values] : parameters) {
    if (key == placeholder) return &values;
  }
  return nullptr;
}

const ActionSpec* Script::find_action(std::string_view name) const {
  for (const auto& spec : actions) {
    if (spec.name == name) return &spec;
  }
  return nullptr;
}

std::vector<std::string> extract_placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') continue;
    std::size_t end = 0;
    auto name = read_placeholder(tmpl, i, &end);
    if (!name) continue;
    if (std::find(out.begin(), out.end(), *name) == out.end()) out.push_back(*name);
    i = end - 1;
  }
  return out;
}

std::string instantiate_template(
    std::string_view tmpl,
    const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{') {
      std::size_t end = 0;
      auto name = read_placeholder(tmpl, i, &end);
      if (name) {
        auto it = std::find_if(values.begin(), values.end(),
                               [&](const auto& kv) { return kv.first == *name; });
        if (it != values.end()) {
          out += it->second;
          i = end - 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
  }
  return out;
}

std::string build_verification_code(
    std::string_view tmpl,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& parameters) {
  std::string out = "^";
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{') {
      std::size_t end = 0;
      auto name = read_placeholder(tmpl, i, &end);
      if (name) {
        const std::vector<std::string>* allowed = nullptr;
        for (const auto& [key, values] : parameters) {
          if (key == *name && !values.empty()) allowed = &values;
        }
        if (allowed) {
          out += "(";
          for (std::size_t k = 0; k < allowed->size(); ++k) {
            if (k) out += "|";
            out += re::escape_literal((*allowed)[k]);
          }
          out += ")";
        } else {
          out += "(.+)";
        }
        i = end - 1;
        continue;
      }
    }
    out += re::escape_literal(tmpl.substr(i, 1));
  }
  out += "$";
  return out;
}

ScriptParseResult script_from_json(const ojson& doc) {
  if (!doc.is_object()) {
    return fail({ScriptParseError::Kind::SchemaViolation,
                 "top-level JSON value is not an object",
                 0,
                 {"(root): expected an object"},
                 {}});
  }

  std::vector<std::string> details;
  SchemaReader reader(&details);
  Script script;

  if (auto v = reader.string(doc, "Thought", true, "")) script.thought = *v;

  const ojson* env = reader.object(doc, "Environment", true, "");
  if (env) {
    if (auto v = reader.string(*env, "initial state", true, "Environment.")) {
      script.initial_state = *v;
    }
    const ojson* places =
        reader.object(*env, "places and objects", true, "Environment.");
    if (places) {
      script.environment = read_node("places and objects", *places,
                                     "Environment.places and objects.", reader,
                                     &details);
      script.environment.name.clear();  // synthetic root
    }
    const ojson* player = reader.object(*env, "player", true, "Environment.");
    if (player) {
      if (auto v = reader.string(*player, "information", true, "Environment.player.")) {
        script.player_info = *v;
      }
    }
  }

  if (auto v = reader.string(doc, "Goal", true, "")) script.goal = *v;
  if (auto v = reader.string_list(doc, "Completion Conditions", true, "")) {
    script.completion_conditions = std::move(*v);
  }

  const ojson* actions = reader.object(doc, "Available Actions", true, "");
  if (actions) {
    for (auto it = actions->begin(); it != actions->end(); ++it) {
      const std::string& name = it.key();
      const ojson& body = it.value();
      const std::string path = "Available Actions." + name + ".";
      if (!body.is_object()) {
        details.push_back("Available Actions." + name + ": expected an object");
        continue;
      }
      ActionSpec spec;
      spec.name = name;
      spec.description = reader.string(body, "description", false, path);
      spec.special_format = reader.string(body, "special format", false, path);
      if (auto v = reader.string(body, "verification code", true, path)) {
        spec.verification_code = *v;
      }
      if (auto params = body.find("parameters"); params != body.end()) {
        if (!params->is_object()) {
          details.push_back(path + "parameters: expected an object");
        } else {
          for (auto p = params->begin(); p != params->end(); ++p) {
            auto values = reader.string_list(*params, p.key(), false, path + "parameters.");
            if (values) spec.parameters.emplace_back(p.key(), std::move(*values));
          }
        }
      }
      if (auto v = body.find("verifiable"); v != body.end()) {
        if (!v->is_boolean()) {
          details.push_back(path + "verifiable: expected a boolean");
        } else {
          spec.verifiable = v->get<bool>();
          spec.verifiable_explicit = true;
        }
      }
      if (!spec.verifiable_explicit) {
        // Actions with an unlisted placeholder have a near-infinite
        // parameter space and are exempt from verification by default.
        spec.verifiable = true;
        for (const auto& ph : extract_placeholders(spec.name)) {
          const auto* allowed = spec.allowed_values(ph);
          if (!allowed || allowed->empty()) {
            spec.verifiable = false;
            break;
          }
        }
      } else if (spec.verifiable) {
        for (const auto& ph : extract_placeholders(spec.name)) {
          const auto* allowed = spec.allowed_values(ph);
          if (!allowed || allowed->empty()) {
            details.push_back(path + "parameters." + ph +
                              ": verifiable action lacks allowed values");
          }
        }
      }
      script.actions.push_back(std::move(spec));
    }
    if (script.actions.empty()) {
      details.push_back("Available Actions: must not be empty");
    }
  }

  if (doc.contains("Goal") && doc["Goal"].is_string() && script.goal.empty()) {
    details.push_back("Goal: must not be empty");
  }
  if (doc.contains("Completion Conditions") &&
      doc["Completion Conditions"].is_array() &&
      script.completion_conditions.empty()) {
    details.push_back("Completion Conditions: must not be empty");
  }

  if (!details.empty()) {
    return fail({ScriptParseError::Kind::SchemaViolation,
                 "script schema violation",
                 0,
                 std::move(details),
                 {}});
  }

  for (auto& spec : script.actions) {
    try {
      spec.compiled = std::make_shared<const re::Regex>(
          re::Regex::compile(spec.verification_code));
    } catch (const re::RegexError& e) {
      return fail({ScriptParseError::Kind::RegexCompile, e.message(), e.position(),
                   {}, spec.name});
    }
  }

  ScriptParseResult result;
  result.script = std::move(script);
  return result;
}

ScriptParseResult parse_script(std::string_view text) {
  Extracted extracted = extract_json_object(text);
  switch (extracted.status) {
    case Extracted::Status::NotFound:
      return fail({ScriptParseError::Kind::NoJsonFound,
                   "no JSON object found in the output", 0, {}, {}});
    case Extracted::Status::Ambiguous:
      return fail({ScriptParseError::Kind::AmbiguousJson, extracted.error, 0, {}, {}});
    case Extracted::Status::Syntax:
      return fail({ScriptParseError::Kind::JsonSyntax, extracted.error,
                   extracted.error_pos, {}, {}});
    case Extracted::Status::Ok:
      break;
  }
  return script_from_json(extracted.value);
}

std::vector<Violation> validate_script(const Script& script) {
  std::vector<Violation> out;
  if (script.goal.empty()) {
    out.push_back({Violation::Kind::EmptyGoal, "Goal", "goal is empty"});
  }
  if (script.completion_conditions.empty()) {
    out.push_back({Violation::Kind::NoCompletionConditions, "Completion Conditions",
                   "no completion conditions"});
  }
  if (script.actions.empty()) {
    out.push_back({Violation::Kind::NoActions, "Available Actions", "no actions"});
  }

  for (const auto& spec : script.actions) {
    if (!spec.verifiable) continue;  // exempt per footnote semantics

    std::shared_ptr<const re::Regex> rx = spec.compiled;
    if (!rx) {
      try {
        rx = std::make_shared<const re::Regex>(
            re::Regex::compile(spec.verification_code));
      } catch (const re::RegexError& e) {
        out.push_back({Violation::Kind::RegexCompileError, spec.name, e.message()});
        continue;
      }
    }

    std::vector<std::pair<std::string, std::string>> first_values;
    bool missing = false;
    for (const auto& ph : extract_placeholders(spec.name)) {
      const auto* allowed = spec.allowed_values(ph);
      if (!allowed || allowed->empty()) {
        out.push_back({Violation::Kind::MissingParameterValues, spec.name,
                       "placeholder {" + ph + "} has no allowed values"});
        missing = true;
        continue;
      }
      first_values.emplace_back(ph, allowed->front());
    }
    if (missing) continue;

    const std::string probe = instantiate_template(spec.name, first_values);
    if (!rx->matches(probe)) {
      out.push_back({Violation::Kind::SelfMatchFailure, spec.name,
                     "instantiation \"" + probe +
                         "\" is rejected by the action's own verification code"});
    }
  }
  return out;
}

ojson script_to_json(const Script& script) {
  ojson doc = ojson::object();
  doc["Thought"] = script.thought;

  ojson env = ojson::object();
  env["initial state"] = script.initial_state;
  env["places and objects"] = node_body_to_json(script.environment);
  env["player"] = ojson::object({{"information", script.player_info}});
  doc["Environment"] = std::move(env);

  doc["Goal"] = script.goal;
  doc["Completion Conditions"] = script.completion_conditions;

  ojson actions = ojson::object();
  for (const auto& spec : script.actions) {
    ojson body = ojson::object();
    if (spec.description) body["description"] = *spec.description;
    if (spec.special_format) body["special format"] = *spec.special_format;
    body["verification code"] = spec.verification_code;
    if (!spec.parameters.empty()) {
      ojson params = ojson::object();
      for (const auto& [key, values] : spec.parameters) params[key] = values;
      body["parameters"] = std::move(params);
    }
    // Emitted only when it cannot be inferred from the parameter lists, so
    // canonical output stays in the source format's vocabulary.
    bool inferred = true;
    for (const auto& ph : extract_placeholders(spec.name)) {
      const auto* allowed = spec.allowed_values(ph);
      if (!allowed || allowed->empty()) {
        inferred = false;
        break;
      }
    }
    if (spec.verifiable != inferred) body["verifiable"] = spec.verifiable;
    actions[spec.name] = std::move(body);
  }
  doc["Available Actions"] = std::move(actions);
  return doc;
}

std::string serialize_script(const Script& script) {
  return script_to_json(script).dump(4) + "\n";
}

}  // namespace refinery
