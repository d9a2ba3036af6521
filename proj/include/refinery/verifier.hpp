#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/script.hpp"
#include "refinery/trajectory.hpp"

namespace refinery {

/// Literal marker the final DM observation must contain for acceptance.
inline constexpr std::string_view kCompletionMarker = "Task Succeed";

/// Raised when a script's verification codes cannot be compiled.
class InvalidScript : public Error {
 public:
  using Error::Error;
};

/// Outcome of matching an action string against the script's grammar.
struct MatchResult {
  bool matched = false;
  std::optional<std::string> action_name;
  std::map<std::string, std::string> captures;  // placeholder -> captured text
  bool params_valid = false;
};

/// Tests specs in declaration order; the first verification code that
/// matches the whole action text wins. Captures map to placeholders
/// positionally by capture-group order. For a matched non-verifiable
/// action, params_valid is unconditionally true.
MatchResult match_action(std::string_view action_text,
                         const std::vector<ActionSpec>& specs);

enum class SignalKind { Accept, TruncateAndContinue, Regenerate };

enum class SignalReason {
  JsonFormat,
  KeySchema,
  UnmatchedAction,
  UnfinishedTask,
  FinalTurnHasError,
  TooFewErrorRefineTurns,
};

std::string_view signal_kind_name(SignalKind kind);
std::string_view signal_reason_name(SignalReason reason);

/// Verdict on one verification round: accept the whole trajectory, keep a
/// prefix and ask for a continuation from `at_turn`, or start over.
struct VerificationSignal {
  SignalKind kind = SignalKind::Accept;
  std::optional<int> at_turn;           // TruncateAndContinue only, >= 1
  std::optional<SignalReason> reason;   // absent for Accept

  bool operator==(const VerificationSignal&) const = default;
};

ojson signal_to_json(const VerificationSignal& signal);

struct VerifyResult {
  std::vector<Turn> verified_prefix;
  VerificationSignal signal;
};

/// Number of DM turns carrying any error flag.
int count_error_turns(const Trajectory& traj);

/// Runs the trajectory verification state machine over one generation
/// round. `outcome` carries the turns parsed so far plus any parse defect;
/// `prior_prefix` is the verified prefix of an earlier round (empty on the
/// first round) and is trusted: checks fully inside it are not repeated,
/// though its error turns still count toward the refine-turn minimum.
///
/// Rules, in order of precedence along the turn sequence:
///   - a parse defect at turn t truncates to turns [0, t-1];
///   - a player action that fails to match when the following DM turn
///     flags no error truncates at the player turn; a regex-level mismatch
///     is excused by any flag, an invalid parameter only by
///     parameter_error;
///   - at the final DM turn: an error flag, a missing finished flag, or a
///     missing completion marker truncates at that turn; fewer than two
///     error-refine turns regenerates from scratch; otherwise accept.
///
/// A truncation point of 0 degrades to Regenerate (there is nothing to
/// keep). Throws InvalidScript when a verification code does not compile.
VerifyResult verify_trajectory(const Script& script,
                               const TrajectoryParseResult& outcome,
                               const std::vector<Turn>& prior_prefix);

}  // namespace refinery
