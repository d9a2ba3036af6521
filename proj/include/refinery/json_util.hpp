#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "refinery/error.hpp"

namespace refinery {

using ojson = nlohmann::ordered_json;

/// Parses JSON text, rejecting objects that contain duplicate keys.
/// Throws nlohmann's parse_error on syntax errors and Error on duplicates.
ojson parse_json_strict(std::string_view text);

/// Removes Markdown code-fence marker lines (``` or ```lang) from text.
std::string strip_code_fences(std::string_view text);

/// Outcome of extracting one JSON payload from free-form model output.
struct Extracted {
  enum class Status { Ok, NotFound, Ambiguous, Syntax };
  Status status = Status::NotFound;
  ojson value;              // Ok only
  std::size_t error_pos = 0;  // Syntax only, byte offset within the candidate
  std::string error;        // Syntax/Ambiguous diagnostic
};

/// Finds the first balanced, parseable JSON object in `text` after fence
/// stripping. A second parseable object after it is reported as Ambiguous.
Extracted extract_json_object(std::string_view text);

/// Array counterpart of extract_json_object.
Extracted extract_json_array(std::string_view text);

/// Incremental scan of the first plausible JSON array of objects. Elements
/// are parsed one by one so that a malformed element yields its index
/// instead of poisoning the whole document.
struct ArrayScan {
  bool found = false;                    // a candidate array was located
  bool ambiguous = false;                // a second complete array follows
  std::vector<ojson> elements;           // elements parsed before any defect
  std::optional<std::size_t> bad_element;  // index of first malformed element
  std::string error;                     // defect diagnostic
};

ArrayScan scan_json_object_array(std::string_view text);

/// Writes `payload` to `path` atomically (temp file in the same directory,
/// then rename).
void write_file_atomic(const std::string& path, std::string_view payload);

std::string read_file(const std::string& path);

}  // namespace refinery
