#include "refinery/json_util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace refinery {

namespace {

// Half-open byte range within a scanned text.
struct Region {
  std::size_t begin = 0;
  std::size_t end = 0;
};

bool is_fence_line(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  return line.compare(i, 3, "```") == 0;
}

// Scans from the `open` delimiter at `from` to its balanced close, skipping
// string literals. Returns nullopt when the text ends first.
std::optional<Region> find_balanced(std::string_view text, std::size_t from,
                                    char open, char close) {
  if (from >= text.size() || text[from] != open) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = from; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == open) {
      ++depth;
    } else if (c == close) {
      if (--depth == 0) return Region{from, i + 1};
    }
  }
  return std::nullopt;
}

Extracted extract_value(std::string_view raw, char open, char close) {
  std::string text = strip_code_fences(raw);
  Extracted out;
  std::optional<std::pair<Region, ojson>> first;
  std::optional<std::pair<std::size_t, std::string>> first_failure;

  std::size_t scan_from = 0;
  while (true) {
    std::size_t pos = text.find(open, scan_from);
    if (pos == std::string::npos) break;
    std::optional<Region> region = find_balanced(text, pos, open, close);
    if (!region) {
      scan_from = pos + 1;
      continue;
    }
    std::string_view candidate(text.data() + region->begin,
                               region->end - region->begin);
    try {
      ojson value = parse_json_strict(candidate);
      if (first) {
        out.status = Extracted::Status::Ambiguous;
        out.error = "multiple top-level JSON payloads found";
        return out;
      }
      first = {*region, std::move(value)};
      scan_from = region->end;
    } catch (const ojson::parse_error& e) {
      if (!first_failure) first_failure = {static_cast<std::size_t>(e.byte), e.what()};
      scan_from = pos + 1;
    } catch (const Error& e) {
      if (!first_failure) first_failure = {std::size_t{0}, e.what()};
      scan_from = pos + 1;
    }
  }

  if (first) {
    out.status = Extracted::Status::Ok;
    out.value = std::move(first->second);
    return out;
  }
  if (first_failure) {
    out.status = Extracted::Status::Syntax;
    out.error_pos = first_failure->first;
    out.error = first_failure->second;
    return out;
  }
  out.status = Extracted::Status::NotFound;
  return out;
}

}  // namespace

ojson parse_json_strict(std::string_view text) {
  std::vector<std::set<std::string>> scopes;
  auto callback = [&scopes](int /*depth*/, ojson::parse_event_t event,
                            ojson& parsed) -> bool {
    switch (event) {
      case ojson::parse_event_t::object_start:
        scopes.emplace_back();
        break;
      case ojson::parse_event_t::object_end:
        scopes.pop_back();
        break;
      case ojson::parse_event_t::key: {
        const auto key = parsed.get<std::string>();
        if (!scopes.back().insert(key).second) {
          throw Error("duplicate key \"" + key + "\"");
        }
        break;
      }
      default:
        break;
    }
    return true;
  };
  return ojson::parse(text.begin(), text.end(), callback, true);
}

std::string strip_code_fences(std::string_view text) {
  if (text.find("```") == std::string_view::npos) return std::string(text);
  std::string out;
  out.reserve(text.size());
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(
        start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!is_fence_line(line)) {
      out.append(line);
      out.push_back('\n');
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (!out.empty()) out.pop_back();  // drop the trailing newline we added
  return out;
}

Extracted extract_json_object(std::string_view text) {
  return extract_value(text, '{', '}');
}

Extracted extract_json_array(std::string_view text) {
  return extract_value(text, '[', ']');
}

ArrayScan scan_json_object_array(std::string_view raw) {
  std::string text = strip_code_fences(raw);
  ArrayScan scan;

  std::size_t pos = 0;
  bool complete = false;
  while (!scan.found) {
    pos = text.find('[', pos);
    if (pos == std::string::npos) return scan;

    std::size_t i = pos + 1;
    auto skip_ws = [&] {
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t' ||
                                 text[i] == '\n' || text[i] == '\r')) {
        ++i;
      }
    };
    skip_ws();
    if (i < text.size() && text[i] == ']') {
      scan.found = true;  // complete empty array
      complete = true;
      ++i;
      pos = i;
      break;
    }
    if (i >= text.size() || text[i] != '{') {
      // Not an array of objects; likely prose. Try the next bracket.
      pos = pos + 1;
      continue;
    }

    while (true) {
      skip_ws();
      if (i >= text.size() || text[i] != '{') {
        scan.bad_element = scan.elements.size();
        scan.error = "expected an object";
        break;
      }
      std::optional<Region> region = find_balanced(text, i, '{', '}');
      if (!region) {
        scan.bad_element = scan.elements.size();
        scan.error = "unterminated object";
        break;
      }
      std::string_view element(text.data() + region->begin,
                               region->end - region->begin);
      try {
        scan.elements.push_back(parse_json_strict(element));
      } catch (const std::exception& e) {
        scan.bad_element = scan.elements.size();
        scan.error = e.what();
        break;
      }
      i = region->end;
      skip_ws();
      if (i < text.size() && text[i] == ',') {
        ++i;
        continue;
      }
      if (i < text.size() && text[i] == ']') {
        complete = true;
        ++i;
        break;
      }
      scan.bad_element = scan.elements.size();
      scan.error = "expected ',' or ']' after element";
      break;
    }
    scan.found = true;
    pos = i;
  }

  // A second complete array after a complete first one is ambiguous.
  if (complete && !scan.bad_element) {
    std::size_t next = text.find('[', pos);
    while (next != std::string::npos) {
      std::optional<Region> region = find_balanced(text, next, '[', ']');
      if (region) {
        try {
          ojson value = parse_json_strict(std::string_view(
              text.data() + region->begin, region->end - region->begin));
          if (value.is_array()) {
            scan.ambiguous = true;
            scan.error = "multiple top-level JSON arrays found";
          }
        } catch (const std::exception&) {
          // Not parseable; ignore.
        }
        break;
      }
      next = text.find('[', next + 1);
    }
  }
  return scan;
}

void write_file_atomic(const std::string& path, std::string_view payload) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace refinery
