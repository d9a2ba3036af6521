#pragma once

#include <bitset>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/error.hpp"

namespace refinery::re {

/// Raised when a pattern does not compile in the supported dialect.
class RegexError : public Error {
 public:
  RegexError(std::size_t position, const std::string& message)
      : Error(message + " (at offset " + std::to_string(position) + ")"),
        position_(position),
        message_(message) {}

  std::size_t position() const { return position_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t position_;
  std::string message_;
};

/// Half-open byte range of a capture group within the matched text.
struct Capture {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// A compiled pattern in a deliberately small dialect: literals, character
/// classes, alternation, greedy/lazy repetition, grouping, and the ^/$
/// anchors. Backreferences and lookaround are rejected at compile time, so
/// matching runs in O(text x program) via a Thompson/Pike VM and stays
/// bounded on adversarial input.
///
/// Matching is byte-oriented; multibyte UTF-8 literals work as byte
/// sequences, character classes range over single bytes.
class Regex {
 public:
  /// Compiles `pattern` or throws RegexError.
  static Regex compile(std::string_view pattern);

  const std::string& pattern() const { return pattern_; }

  /// Number of capturing groups (group 0, the whole match, excluded).
  std::size_t group_count() const { return group_count_; }

  /// Matches the entire text. Index 0 of the result is the whole match;
  /// groups that did not participate are nullopt.
  std::optional<std::vector<std::optional<Capture>>> full_match(
      std::string_view text) const;

  bool matches(std::string_view text) const { return full_match(text).has_value(); }

 private:
  Regex() = default;

  enum class Op : std::uint8_t {
    Char,      // consume one byte equal to `ch`
    Klass,     // consume one byte contained in classes_[arg_x]
    Any,       // consume one byte other than '\n'
    Split,     // fork to arg_x (preferred) and arg_y
    Jump,      // continue at arg_x
    Save,      // store current position in capture slot arg_x
    AtStart,   // assert position == 0
    AtEnd,     // assert position == text size
    Accept,    // match complete
  };

  struct Inst {
    Op op;
    unsigned char ch = 0;
    std::uint32_t arg_x = 0;
    std::uint32_t arg_y = 0;
  };

  std::string pattern_;
  std::vector<Inst> program_;
  std::vector<std::bitset<256>> classes_;
  std::size_t group_count_ = 0;

  friend class Compiler;
};

/// Escapes `text` so it matches itself when embedded in a pattern.
std::string escape_literal(std::string_view text);

}  // namespace refinery::re
