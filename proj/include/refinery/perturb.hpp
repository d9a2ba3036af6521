#pragma once

#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/dataset.hpp"
#include "refinery/script.hpp"

namespace refinery {

class RuleNotApplicable : public Error {
 public:
  using Error::Error;
};

class RegexRewriteFailure : public Error {
 public:
  using Error::Error;
};

enum class RuleKind {
  SynonymSwap,       // replace one word inside templates (with -> using)
  VerbRename,        // replace a leading verb phrase (go to -> move to)
  ArgReorder,        // permute a template's placeholders
  WhitespaceSquash,  // drop spaces between item names and numbers
  IndFilter,         // drop records attributed to held-in environments
};

std::string_view rule_kind_name(RuleKind kind);
RuleKind rule_kind_from_name(std::string_view name);

/// A semantics-preserving rewrite of action surface forms, or a held-in
/// data filter. `from`/`to` carry the word pair (SynonymSwap, VerbRename)
/// or the template pair (ArgReorder); `names` carries IndFilter's
/// environment names.
struct PerturbationRule {
  RuleKind kind = RuleKind::SynonymSwap;
  std::string from;
  std::string to;
  std::vector<std::string> names;
};

std::vector<PerturbationRule> rules_from_json(const ojson& doc);
std::vector<PerturbationRule> load_rules(const std::string& path);

/// True when the rule has something to rewrite in this spec.
bool rule_applies(const ActionSpec& spec, const PerturbationRule& rule);

/// Rewrites the spec's template (and, for WhitespaceSquash, its parameter
/// values), then rebuilds the verification code from the rewritten template
/// and allowed lists so the code accepts exactly the rewritten surface
/// forms. Throws RuleNotApplicable when the rule has no effect.
ActionSpec perturb_action_spec(const ActionSpec& spec, const PerturbationRule& rule);

struct PerturbOutcome {
  Script script;
  int changed_specs = 0;
};

/// Applies every rule to every applicable action and rewrites completion
/// conditions that mention the rewritten surface forms. Each rule must
/// apply somewhere. The result passes validate_script.
PerturbOutcome perturb_script(const Script& script,
                              const std::vector<PerturbationRule>& rules);

/// Removes records attributed to any name in `env_names`; order preserved.
/// Attribution is caller-supplied since it is dataset-specific.
std::vector<DatasetRecord> filter_ind(
    const std::vector<DatasetRecord>& records,
    const std::set<std::string>& env_names,
    const std::function<std::string(const DatasetRecord&)>& attribute);

/// Drops whitespace between a word and a following number ("lamp 1" ->
/// "lamp1"); the WhitespaceSquash primitive.
std::string squash_name_number(std::string_view text);

}  // namespace refinery
