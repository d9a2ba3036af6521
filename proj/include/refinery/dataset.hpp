#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/role.hpp"
#include "refinery/verifier.hpp"

namespace refinery {

class NotAccepted : public Error {
 public:
  using Error::Error;
};

class ModeUnavailable : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class JsonlError : public Error {
 public:
  JsonlError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// One chat message with its loss flag. System and user messages never
/// carry loss.
struct MaskedMessage {
  Role role = Role::user;
  std::string content;
  bool loss = false;

  bool operator==(const MaskedMessage&) const = default;
};

/// Which turns contribute to the training objective.
///   standard:        error turns masked out
///   learn_all:       every assistant turn kept
///   mask_refinement: error turns and the refine step after each error run
///                    masked out
///   no_refinement:   a separate generation corpus, not a compile mode
enum class MaskMode { standard, no_refinement, mask_refinement, learn_all };

std::string_view mask_mode_name(MaskMode mode);
MaskMode mask_mode_from_name(std::string_view name);

struct DatasetRecord {
  std::string id;
  std::string persona_id;
  std::vector<MaskedMessage> messages;
  std::vector<int> error_turn_indices;  // assistant positions the DM flagged
  MaskMode source = MaskMode::standard;

  bool operator==(const DatasetRecord&) const = default;

  std::vector<bool> assistant_mask() const;  // loss flags in assistant order
};

/// Converts an accepted (script, trajectory) pair into a chat record:
/// leading system message with goal and action summary, user turns from DM
/// observations, assistant turns from player thought/action pairs. The
/// trajectory is re-verified; rejects raise NotAccepted.
DatasetRecord compile_record(const Script& script, const Trajectory& traj,
                             MaskMode mode, std::string id,
                             std::string persona_id);

/// Reference masked objective: the sum of per-message losses over assistant
/// messages whose loss flag is set. Masked positions cannot influence the
/// result. `per_message_losses` must have one entry per assistant message.
double masked_loss(const DatasetRecord& record,
                   const std::vector<double>& per_message_losses);

/// Tallies maximal runs of consecutive masked-out assistant messages by
/// run length over the whole corpus.
std::map<int, long> error_run_histogram(const std::vector<DatasetRecord>& records);

std::string export_jsonl(const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> import_jsonl(std::string_view stream);

ojson record_to_json(const DatasetRecord& record);
DatasetRecord record_from_json(const ojson& doc, std::size_t line_for_errors = 0);

}  // namespace refinery
