#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/verifier.hpp"

namespace refinery {

class EpisodeOver : public Error {
 public:
  using Error::Error;
};

class StepBudgetExhausted : public Error {
 public:
  using Error::Error;
};

/// How a completion condition was bound to a concrete action at init time.
struct ConditionBinding {
  int condition = 0;            // index into completion_conditions
  bool derivable = false;       // false: no action instantiation found
  std::string spec_name;        // bound action template
  std::vector<std::pair<std::string, std::string>> values;  // placeholder values
  std::string canonical_action; // the instantiation that satisfies it
};

struct InitDiagnostics {
  std::vector<ConditionBinding> bindings;
  std::vector<int> manual_conditions;  // excluded from progress tracking
};

struct StepOutcome {
  std::string observation;
  bool parameter_error = false;
  bool unmatched = false;
  double progress = 0.0;
  bool done = false;
};

/// Immutable episode state; step() returns a new value.
class EnvState {
 public:
  const Script& script() const { return *script_; }
  const InitDiagnostics& diagnostics() const { return *diagnostics_; }
  const std::set<int>& satisfied() const { return satisfied_; }
  const std::vector<std::pair<std::string, MatchResult>>& history() const {
    return history_;
  }
  int step_count() const { return static_cast<int>(history_.size()); }
  bool done() const { return done_; }
  int max_steps() const { return max_steps_; }

  double progress() const;
  std::string initial_observation() const { return script_->initial_state; }

 private:
  friend EnvState init(const Script&, int);
  friend std::pair<EnvState, StepOutcome> step(const EnvState&, std::string_view);

  std::shared_ptr<const Script> script_;
  std::shared_ptr<const InitDiagnostics> diagnostics_;
  std::set<int> satisfied_;
  std::vector<std::pair<std::string, MatchResult>> history_;
  bool done_ = false;
  int max_steps_ = 30;
};

/// Builds the initial state. The script must validate cleanly. Completion
/// conditions are bound to canonical action instantiations by matching the
/// condition text against the action templates; conditions with no
/// derivable action are reported as manual and excluded from progress.
EnvState init(const Script& script, int max_steps = 30);

/// Executes one action. Unmatched or parameter-invalid actions set the
/// outcome flags and change nothing. Examine-style actions on a known node
/// reveal its information string. Throws EpisodeOver / StepBudgetExhausted.
std::pair<EnvState, StepOutcome> step(const EnvState& state,
                                      std::string_view action_text);

struct ReplayEntry {
  int turn = 0;          // player turn index
  bool matched = false;
  bool params_valid = false;
  bool dm_flag = false;  // any error flag on the following DM turn
  bool consistent = true;
};

struct ReplayReport {
  std::vector<ReplayEntry> entries;

  int inconsistency_count() const;
};

ojson replay_report_to_json(const ReplayReport& report);

/// Parameter-level audit of a trajectory against the runtime's own
/// judgement. A mismatch the DM left entirely unflagged, or an invalid
/// parameter without a parameter_error flag, is inconsistent; place/logic
/// flags are never adjudicated.
ReplayReport replay(const Script& script, const Trajectory& traj);

}  // namespace refinery
