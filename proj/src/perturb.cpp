#include "refinery/perturb.hpp"

#include <algorithm>
#include <cctype>

namespace refinery {

namespace {

bool is_word_char(char c) {
  return c == '_' || std::isalnum(static_cast<unsigned char>(c));
}

// Replaces whole-word occurrences of `from` with `to`. Word boundaries keep
// "with" out of "without".
std::string replace_word(std::string_view text, std::string_view from,
                         std::string_view to, bool* changed) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, from.size(), from) == 0) {
      const bool left_ok = i == 0 || !is_word_char(text[i - 1]);
      const std::size_t after = i + from.size();
      const bool right_ok = after >= text.size() || !is_word_char(text[after]);
      if (left_ok && right_ok) {
        out += to;
        i = after;
        if (changed) *changed = true;
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

struct TemplatePiece {
  bool placeholder = false;
  std::string text;
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

// Rewrites occurrences of the instantiated source template inside `text`
// into the target template, capturing placeholder values from the spec's
// allowed lists. Used for completion conditions, which carry instantiated
// action strings, not templates.
std::string rewrite_instantiated(std::string_view text, std::string_view src_tmpl,
                                 std::string_view dst_tmpl, const ActionSpec& spec,
                                 bool* changed) {
  const auto pieces = split_template(src_tmpl);
  if (pieces.empty()) return std::string(text);

  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    // Try to read the instantiated template at `pos`.
    std::vector<std::pair<std::string, std::string>> values;
    std::size_t at = pos;
    bool hit = true;
    for (const auto& piece : pieces) {
      if (!piece.placeholder) {
        if (text.compare(at, piece.text.size(), piece.text) != 0) {
          hit = false;
          break;
        }
        at += piece.text.size();
        continue;
      }
      const auto* allowed = spec.allowed_values(piece.text);
      if (!allowed || allowed->empty()) {
        hit = false;
        break;
      }
      bool got = false;
      for (const auto& candidate : *allowed) {
        if (text.compare(at, candidate.size(), candidate) == 0) {
          values.emplace_back(piece.text, candidate);
          at += candidate.size();
          got = true;
          break;
        }
      }
      if (!got) {
        hit = false;
        break;
      }
    }
    if (hit && at > pos) {
      out += instantiate_template(dst_tmpl, values);
      pos = at;
      if (changed) *changed = true;
      continue;
    }
    out.push_back(text[pos++]);
  }
  return out;
}

std::vector<std::string> sorted(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

std::string_view rule_kind_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::SynonymSwap: return "synonym_swap";
    case RuleKind::VerbRename: return "verb_rename";
    case RuleKind::ArgReorder: return "arg_reorder";
    case RuleKind::WhitespaceSquash: return "whitespace_squash";
    case RuleKind::IndFilter: return "ind_filter";
  }
  return "synonym_swap";
}

RuleKind rule_kind_from_name(std::string_view name) {
  if (name == "synonym_swap") return RuleKind::SynonymSwap;
  if (name == "verb_rename") return RuleKind::VerbRename;
  if (name == "arg_reorder") return RuleKind::ArgReorder;
  if (name == "whitespace_squash") return RuleKind::WhitespaceSquash;
  if (name == "ind_filter") return RuleKind::IndFilter;
  throw Error("unknown perturbation kind: " + std::string(name));
}

std::vector<PerturbationRule> rules_from_json(const ojson& doc) {
  if (!doc.is_array()) throw Error("rules file must hold a JSON array");
  std::vector<PerturbationRule> rules;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("kind") || !entry["kind"].is_string()) {
      throw Error("each rule needs a string \"kind\"");
    }
    PerturbationRule rule;
    rule.kind = rule_kind_from_name(entry["kind"].get<std::string>());
    if (rule.kind == RuleKind::IndFilter) {
      if (!entry.contains("names") || !entry["names"].is_array()) {
        throw Error("ind_filter rules need a \"names\" list");
      }
      for (const auto& name : entry["names"]) {
        rule.names.push_back(name.get<std::string>());
      }
    } else if (rule.kind != RuleKind::WhitespaceSquash) {
      if (!entry.contains("from") || !entry.contains("to") ||
          !entry["from"].is_string() || !entry["to"].is_string()) {
        throw Error(std::string(rule_kind_name(rule.kind)) +
                    " rules need string \"from\" and \"to\"");
      }
      rule.from = entry["from"].get<std::string>();
      rule.to = entry["to"].get<std::string>();
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<PerturbationRule> load_rules(const std::string& path) {
  return rules_from_json(parse_json_strict(read_file(path)));
}

std::string squash_name_number(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ' ' && !out.empty() &&
        std::isalpha(static_cast<unsigned char>(out.back()))) {
      std::size_t j = i;
      while (j < text.size() && text[j] == ' ') ++j;
      if (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
        i = j;  // drop the gap
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

bool rule_applies(const ActionSpec& spec, const PerturbationRule& rule) {
  bool changed = false;
  switch (rule.kind) {
    case RuleKind::SynonymSwap:
    case RuleKind::VerbRename:
      replace_word(spec.name, rule.from, rule.to, &changed);
      return changed;
    case RuleKind::ArgReorder:
      return spec.name == rule.from;
    case RuleKind::WhitespaceSquash: {
      if (squash_name_number(spec.name) != spec.name) return true;
      for (const auto& [key, values] : spec.parameters) {
        for (const auto& value : values) {
          if (squash_name_number(value) != value) return true;
        }
      }
      return false;
    }
    case RuleKind::IndFilter:
      return false;
  }
  return false;
}

ActionSpec perturb_action_spec(const ActionSpec& spec, const PerturbationRule& rule) {
  if (rule.kind == RuleKind::IndFilter) {
    throw RuleNotApplicable("ind_filter operates on records, not action specs");
  }
  if (!rule_applies(spec, rule)) {
    throw RuleNotApplicable("rule " + std::string(rule_kind_name(rule.kind)) +
                            " does not apply to action \"" + spec.name + "\"");
  }

  ActionSpec out = spec;
  switch (rule.kind) {
    case RuleKind::SynonymSwap:
    case RuleKind::VerbRename:
      out.name = replace_word(spec.name, rule.from, rule.to, nullptr);
      break;
    case RuleKind::ArgReorder: {
      auto src = extract_placeholders(rule.from);
      auto dst = extract_placeholders(rule.to);
      if (sorted(src) != sorted(dst)) {
        throw RegexRewriteFailure(
            "arg_reorder target must permute the source placeholders");
      }
      out.name = rule.to;
      break;
    }
    case RuleKind::WhitespaceSquash: {
      out.name = squash_name_number(spec.name);
      for (auto& [key, values] : out.parameters) {
        for (auto& value : values) value = squash_name_number(value);
      }
      break;
    }
    case RuleKind::IndFilter:
      break;  // unreachable
  }

  // The code is rebuilt from the template, never patched in place.
  out.verification_code = build_verification_code(out.name, out.parameters);
  try {
    out.compiled = std::make_shared<const re::Regex>(
        re::Regex::compile(out.verification_code));
  } catch (const re::RegexError& e) {
    throw RegexRewriteFailure("rebuilt code does not compile: " +
                              std::string(e.what()));
  }
  return out;
}

PerturbOutcome perturb_script(const Script& script,
                              const std::vector<PerturbationRule>& rules) {
  PerturbOutcome outcome;
  outcome.script = script;

  for (const auto& rule : rules) {
    if (rule.kind == RuleKind::IndFilter) continue;
    bool applied_anywhere = false;

    for (auto& spec : outcome.script.actions) {
      if (!rule_applies(spec, rule)) continue;
      const ActionSpec before = spec;
      spec = perturb_action_spec(spec, rule);
      applied_anywhere = true;

      // Keep completion conditions in the same surface language.
      for (auto& condition : outcome.script.completion_conditions) {
        switch (rule.kind) {
          case RuleKind::SynonymSwap:
          case RuleKind::VerbRename:
            condition = replace_word(condition, rule.from, rule.to, nullptr);
            break;
          case RuleKind::ArgReorder:
            condition =
                rewrite_instantiated(condition, rule.from, rule.to, before, nullptr);
            break;
          default:
            break;
        }
      }
    }

    if (rule.kind == RuleKind::WhitespaceSquash) {
      for (auto& condition : outcome.script.completion_conditions) {
        std::string squashed = squash_name_number(condition);
        if (squashed != condition) {
          condition = std::move(squashed);
          applied_anywhere = true;
        }
      }
    }

    if (!applied_anywhere) {
      throw RuleNotApplicable("rule " + std::string(rule_kind_name(rule.kind)) +
                              " (" + rule.from + " -> " + rule.to +
                              ") applies to nothing in this script");
    }
  }

  for (std::size_t i = 0; i < script.actions.size(); ++i) {
    if (!(script.actions[i] == outcome.script.actions[i])) ++outcome.changed_specs;
  }
  return outcome;
}

std::vector<DatasetRecord> filter_ind(
    const std::vector<DatasetRecord>& records,
    const std::set<std::string>& env_names,
    const std::function<std::string(const DatasetRecord&)>& attribute) {
  std::vector<DatasetRecord> out;
  for (const auto& record : records) {
    if (env_names.count(attribute(record))) continue;
    out.push_back(record);
  }
  return out;
}

}  // namespace refinery
