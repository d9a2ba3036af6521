#include "refinery/regex.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <utility>

namespace refinery::re {

namespace {

constexpr int kUnbounded = -1;
constexpr int kMaxRepeat = 1000;
constexpr std::size_t kMaxProgram = 50000;

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
  enum class Kind {
    Empty,
    Literal,
    Klass,
    Any,
    Seq,
    Alt,
    Repeat,
    Group,
    AtStart,
    AtEnd,
  };

  Kind kind = Kind::Empty;
  unsigned char ch = 0;
  std::bitset<256> set;             // Klass, negation already applied
  std::vector<NodePtr> kids;        // Seq, Alt
  NodePtr child;                    // Repeat, Group
  int min = 0;                      // Repeat
  int max = 0;                      // Repeat, kUnbounded for open-ended
  bool greedy = true;               // Repeat
  int group_index = -1;             // Group, -1 means non-capturing
};

NodePtr make_node(Node::Kind kind) {
  auto n = std::make_unique<Node>();
  n->kind = kind;
  return n;
}

std::bitset<256> char_set(std::string_view chars) {
  std::bitset<256> s;
  for (unsigned char c : chars) s.set(c);
  return s;
}

std::bitset<256> range_set(unsigned char lo, unsigned char hi) {
  std::bitset<256> s;
  for (int c = lo; c <= hi; ++c) s.set(static_cast<std::size_t>(c));
  return s;
}

std::bitset<256> digit_set() { return range_set('0', '9'); }

std::bitset<256> word_set() {
  auto s = range_set('a', 'z') | range_set('A', 'Z') | digit_set();
  s.set('_');
  return s;
}

std::bitset<256> space_set() { return char_set(" \t\r\n\f\v"); }

class Parser {
 public:
  explicit Parser(std::string_view pattern) : pat_(pattern) {}

  NodePtr parse(std::size_t* group_count) {
    NodePtr root = parse_alternation();
    if (pos_ != pat_.size()) {
      // The only way parse_alternation stops early is an unbalanced ')'.
      throw RegexError(pos_, "unmatched ')'");
    }
    *group_count = static_cast<std::size_t>(next_group_ - 1);
    return root;
  }

 private:
  std::string_view pat_;
  std::size_t pos_ = 0;
  int next_group_ = 1;
  int group_depth_ = 0;

  bool eof() const { return pos_ >= pat_.size(); }
  char peek() const { return pat_[pos_]; }
  char take() { return pat_[pos_++]; }

  [[noreturn]] void fail(const std::string& message) const {
    throw RegexError(pos_, message);
  }

  NodePtr parse_alternation() {
    std::vector<NodePtr> branches;
    branches.push_back(parse_sequence());
    while (!eof() && peek() == '|') {
      take();
      branches.push_back(parse_sequence());
    }
    if (branches.size() == 1) return std::move(branches.front());
    auto alt = make_node(Node::Kind::Alt);
    alt->kids = std::move(branches);
    return alt;
  }

  NodePtr parse_sequence() {
    auto seq = make_node(Node::Kind::Seq);
    while (!eof() && peek() != '|' && peek() != ')') {
      seq->kids.push_back(parse_repeat());
    }
    if (seq->kids.empty()) return make_node(Node::Kind::Empty);
    if (seq->kids.size() == 1) return std::move(seq->kids.front());
    return seq;
  }

  NodePtr parse_repeat() {
    std::size_t atom_at = pos_;
    NodePtr atom = parse_atom();
    int min = 0;
    int max = 0;
    if (!read_quantifier(&min, &max)) return atom;
    if (atom->kind == Node::Kind::AtStart || atom->kind == Node::Kind::AtEnd ||
        atom->kind == Node::Kind::Empty) {
      throw RegexError(atom_at, "nothing to repeat");
    }
    auto rep = make_node(Node::Kind::Repeat);
    rep->min = min;
    rep->max = max;
    rep->greedy = true;
    if (!eof() && peek() == '?') {
      take();
      rep->greedy = false;
    }
    rep->child = std::move(atom);
    if (!eof() && (peek() == '*' || peek() == '+' || peek() == '?')) {
      fail("multiple quantifiers");
    }
    return rep;
  }

  // Returns false when the next characters are not a quantifier. A '{'
  // that does not introduce a valid {m}, {m,} or {m,n} bound is left in
  // place to be read as a literal.
  bool read_quantifier(int* min, int* max) {
    if (eof()) return false;
    char c = peek();
    if (c == '*') {
      take();
      *min = 0;
      *max = kUnbounded;
      return true;
    }
    if (c == '+') {
      take();
      *min = 1;
      *max = kUnbounded;
      return true;
    }
    if (c == '?') {
      take();
      *min = 0;
      *max = 1;
      return true;
    }
    if (c != '{') return false;

    std::size_t start = pos_;
    take();  // '{'
    auto digits = [&]() -> std::optional<int> {
      if (eof() || !std::isdigit(static_cast<unsigned char>(peek()))) return std::nullopt;
      long v = 0;
      while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + (take() - '0');
        if (v > kMaxRepeat) throw RegexError(start, "repetition bound too large");
      }
      return static_cast<int>(v);
    };
    std::optional<int> lo = digits();
    if (!lo) {
      pos_ = start;
      return false;
    }
    int hi = *lo;
    if (!eof() && peek() == ',') {
      take();
      if (!eof() && peek() == '}') {
        hi = kUnbounded;
      } else {
        std::optional<int> parsed = digits();
        if (!parsed) {
          pos_ = start;
          return false;
        }
        hi = *parsed;
      }
    }
    if (eof() || peek() != '}') {
      pos_ = start;
      return false;
    }
    take();  // '}'
    if (hi != kUnbounded && hi < *lo) throw RegexError(start, "invalid repetition range");
    *min = *lo;
    *max = hi;
    return true;
  }

  NodePtr parse_atom() {
    char c = take();
    switch (c) {
      case '(':
        return parse_group();
      case '[':
        return parse_class();
      case '.':
        return make_node(Node::Kind::Any);
      case '^':
        return make_node(Node::Kind::AtStart);
      case '$':
        return make_node(Node::Kind::AtEnd);
      case '\\':
        return parse_escape(false);
      case '*':
      case '+':
      case '?':
        pos_--;
        fail("nothing to repeat");
      case ')':
        pos_--;
        fail("unmatched ')'");
      default: {
        auto lit = make_node(Node::Kind::Literal);
        lit->ch = static_cast<unsigned char>(c);
        return lit;
      }
    }
  }

  NodePtr parse_group() {
    bool capturing = true;
    if (!eof() && peek() == '?') {
      take();
      if (eof()) fail("dangling '(?'");
      char c = take();
      if (c == ':') {
        capturing = false;
      } else if (c == '=' || c == '!') {
        fail("lookahead is not supported");
      } else if (c == '<') {
        fail("lookbehind and named groups are not supported");
      } else {
        fail("unsupported group modifier");
      }
    }
    if (++group_depth_ > 200) fail("groups nested too deeply");
    auto group = make_node(Node::Kind::Group);
    group->group_index = capturing ? next_group_++ : -1;
    group->child = parse_alternation();
    if (eof() || peek() != ')') fail("missing ')'");
    take();
    --group_depth_;
    return group;
  }

  NodePtr parse_class() {
    std::size_t open_at = pos_ - 1;
    auto node = make_node(Node::Kind::Klass);
    bool negate = false;
    if (!eof() && peek() == '^') {
      take();
      negate = true;
    }
    std::bitset<256> set;
    bool first = true;
    while (true) {
      if (eof()) throw RegexError(open_at, "missing ']'");
      char c = peek();
      if (c == ']' && !first) {
        take();
        break;
      }
      first = false;
      std::bitset<256> item;
      bool single = false;
      unsigned char single_ch = 0;
      if (c == '\\') {
        take();
        item = parse_class_escape(&single, &single_ch);
      } else {
        take();
        single = true;
        single_ch = static_cast<unsigned char>(c);
      }
      // Range?
      if (single && !eof() && peek() == '-' && pos_ + 1 < pat_.size() &&
          pat_[pos_ + 1] != ']') {
        take();  // '-'
        char hc = take();
        unsigned char hi;
        if (hc == '\\') {
          bool hs = false;
          unsigned char hch = 0;
          std::bitset<256> hset = parse_class_escape(&hs, &hch);
          if (!hs) fail("class escape cannot bound a range");
          (void)hset;
          hi = hch;
        } else {
          hi = static_cast<unsigned char>(hc);
        }
        if (hi < single_ch) fail("invalid character range");
        set |= range_set(single_ch, hi);
      } else if (single) {
        set.set(single_ch);
      } else {
        set |= item;
      }
    }
    node->set = negate ? ~set : set;
    return node;
  }

  // Escapes valid inside a character class. Sets *single when the escape
  // denotes one concrete byte (usable as a range endpoint).
  std::bitset<256> parse_class_escape(bool* single, unsigned char* ch) {
    if (eof()) fail("dangling escape");
    char c = take();
    *single = false;
    switch (c) {
      case 'd': return digit_set();
      case 'D': return ~digit_set();
      case 'w': return word_set();
      case 'W': return ~word_set();
      case 's': return space_set();
      case 'S': return ~space_set();
      case 'n': *single = true; *ch = '\n'; return char_set("\n");
      case 't': *single = true; *ch = '\t'; return char_set("\t");
      case 'r': *single = true; *ch = '\r'; return char_set("\r");
      case 'f': *single = true; *ch = '\f'; return char_set("\f");
      case 'v': *single = true; *ch = '\v'; return char_set("\v");
      case '0': *single = true; *ch = '\0'; return std::bitset<256>().set(0);
      default:
        if (std::isalnum(static_cast<unsigned char>(c))) {
          pos_--;
          fail(std::string("unsupported escape '\\") + c + "'");
        }
        *single = true;
        *ch = static_cast<unsigned char>(c);
        return char_set(std::string_view(&c, 1));
    }
  }

  NodePtr parse_escape(bool) {
    if (eof()) fail("dangling escape");
    char c = peek();
    if (c >= '1' && c <= '9') fail("backreferences are not supported");
    if (c == 'b' || c == 'B') fail("word-boundary assertions are not supported");
    take();
    auto klass = [&](std::bitset<256> s) {
      auto n = make_node(Node::Kind::Klass);
      n->set = s;
      return n;
    };
    auto lit = [&](unsigned char b) {
      auto n = make_node(Node::Kind::Literal);
      n->ch = b;
      return n;
    };
    switch (c) {
      case 'd': return klass(digit_set());
      case 'D': return klass(~digit_set());
      case 'w': return klass(word_set());
      case 'W': return klass(~word_set());
      case 's': return klass(space_set());
      case 'S': return klass(~space_set());
      case 'n': return lit('\n');
      case 't': return lit('\t');
      case 'r': return lit('\r');
      case 'f': return lit('\f');
      case 'v': return lit('\v');
      case '0': return lit('\0');
      default:
        if (std::isalnum(static_cast<unsigned char>(c))) {
          pos_--;
          fail(std::string("unsupported escape '\\") + c + "'");
        }
        return lit(static_cast<unsigned char>(c));
    }
  }
};

}  // namespace

class Compiler {
 public:
  explicit Compiler(Regex* out) : out_(out) {}

  void run(const Node& root) {
    emit_node(root);
    emit(Regex::Op::Accept);
  }

 private:
  Regex* out_;

  std::uint32_t emit(Regex::Op op, unsigned char ch = 0, std::uint32_t x = 0,
                     std::uint32_t y = 0) {
    if (out_->program_.size() >= kMaxProgram) {
      throw RegexError(0, "pattern compiles to too many instructions");
    }
    out_->program_.push_back({op, ch, x, y});
    return static_cast<std::uint32_t>(out_->program_.size() - 1);
  }

  std::uint32_t here() const {
    return static_cast<std::uint32_t>(out_->program_.size());
  }

  std::uint16_t intern_class(const std::bitset<256>& set) {
    auto& classes = out_->classes_;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (classes[i] == set) return static_cast<std::uint16_t>(i);
    }
    classes.push_back(set);
    return static_cast<std::uint16_t>(classes.size() - 1);
  }

  void emit_node(const Node& node) {
    switch (node.kind) {
      case Node::Kind::Empty:
        break;
      case Node::Kind::Literal:
        emit(Regex::Op::Char, node.ch);
        break;
      case Node::Kind::Klass:
        emit(Regex::Op::Klass, 0, intern_class(node.set));
        break;
      case Node::Kind::Any:
        emit(Regex::Op::Any);
        break;
      case Node::Kind::AtStart:
        emit(Regex::Op::AtStart);
        break;
      case Node::Kind::AtEnd:
        emit(Regex::Op::AtEnd);
        break;
      case Node::Kind::Seq:
        for (const auto& kid : node.kids) emit_node(*kid);
        break;
      case Node::Kind::Group:
        if (node.group_index >= 0) {
          emit(Regex::Op::Save, 0, static_cast<std::uint32_t>(2 * node.group_index));
          emit_node(*node.child);
          emit(Regex::Op::Save, 0,
               static_cast<std::uint32_t>(2 * node.group_index + 1));
        } else {
          emit_node(*node.child);
        }
        break;
      case Node::Kind::Alt:
        emit_alt(node);
        break;
      case Node::Kind::Repeat:
        emit_repeat(node);
        break;
    }
  }

  void emit_alt(const Node& node) {
    std::vector<std::uint32_t> jumps;
    for (std::size_t i = 0; i < node.kids.size(); ++i) {
      if (i + 1 < node.kids.size()) {
        std::uint32_t split = emit(Regex::Op::Split);
        out_->program_[split].arg_x = here();
        emit_node(*node.kids[i]);
        jumps.push_back(emit(Regex::Op::Jump));
        out_->program_[split].arg_y = here();
      } else {
        emit_node(*node.kids[i]);
      }
    }
    for (std::uint32_t j : jumps) out_->program_[j].arg_x = here();
  }

  void emit_repeat(const Node& node) {
    const Node& child = *node.child;
    for (int i = 0; i < node.min; ++i) emit_node(child);
    if (node.max == kUnbounded) {
      // L1: Split L2, L3  (greedy prefers L2)
      // L2: child; Jump L1
      // L3:
      std::uint32_t l1 = emit(Regex::Op::Split);
      std::uint32_t l2 = here();
      emit_node(child);
      emit(Regex::Op::Jump, 0, l1);
      std::uint32_t l3 = here();
      out_->program_[l1].arg_x = node.greedy ? l2 : l3;
      out_->program_[l1].arg_y = node.greedy ? l3 : l2;
    } else {
      std::vector<std::uint32_t> splits;
      for (int i = node.min; i < node.max; ++i) {
        splits.push_back(emit(Regex::Op::Split));
        std::uint32_t body = here();
        out_->program_[splits.back()].arg_x = body;  // fixed up below
        emit_node(child);
      }
      std::uint32_t end = here();
      for (std::uint32_t s : splits) {
        std::uint32_t body = s + 1;
        out_->program_[s].arg_x = node.greedy ? body : end;
        out_->program_[s].arg_y = node.greedy ? end : body;
      }
    }
  }
};

Regex Regex::compile(std::string_view pattern) {
  Regex rx;
  rx.pattern_ = std::string(pattern);
  Parser parser(pattern);
  NodePtr root = parser.parse(&rx.group_count_);
  Compiler compiler(&rx);
  compiler.run(*root);
  return rx;
}

namespace {

struct Thread {
  std::uint32_t pc;
  std::vector<int> caps;
};

}  // namespace

std::optional<std::vector<std::optional<Capture>>> Regex::full_match(
    std::string_view text) const {
  const std::size_t n = text.size();
  const std::size_t nslots = 2 * (group_count_ + 1);

  std::vector<Thread> current, next;
  std::vector<bool> visited(program_.size(), false);
  std::optional<std::vector<int>> accepted;

  // Adds `pc` and everything epsilon-reachable from it, in priority order.
  // The first thread to claim a pc wins; Accept only fires at end of input.
  auto add_thread = [&](std::vector<Thread>& list, std::uint32_t pc,
                        std::vector<int> caps, std::size_t pos) {
    std::vector<std::pair<std::uint32_t, std::vector<int>>> stack;
    stack.emplace_back(pc, std::move(caps));
    while (!stack.empty()) {
      auto [p, c] = std::move(stack.back());
      stack.pop_back();
      if (visited[p]) continue;
      visited[p] = true;
      const Inst& inst = program_[p];
      switch (inst.op) {
        case Op::Jump:
          if (!visited[inst.arg_x]) {
            visited[p] = true;
            stack.emplace_back(inst.arg_x, std::move(c));
          }
          break;
        case Op::Split:
          // Push the alternative first so the preferred branch is popped
          // (and therefore visited) first.
          stack.emplace_back(inst.arg_y, c);
          stack.emplace_back(inst.arg_x, std::move(c));
          break;
        case Op::Save: {
          c[inst.arg_x] = static_cast<int>(pos);
          stack.emplace_back(p + 1, std::move(c));
          break;
        }
        case Op::AtStart:
          if (pos == 0) stack.emplace_back(p + 1, std::move(c));
          break;
        case Op::AtEnd:
          if (pos == n) stack.emplace_back(p + 1, std::move(c));
          break;
        case Op::Accept:
          if (pos == n && !accepted) accepted = std::move(c);
          break;
        default:
          list.push_back({p, std::move(c)});
          break;
      }
    }
  };

  std::vector<int> init(nslots, -1);
  init[0] = 0;
  add_thread(current, 0, std::move(init), 0);

  for (std::size_t pos = 0; pos < n && !current.empty(); ++pos) {
    if (accepted) accepted.reset();  // accepted mid-input is stale for pos < n
    next.clear();
    std::fill(visited.begin(), visited.end(), false);
    unsigned char byte = static_cast<unsigned char>(text[pos]);
    for (auto& t : current) {
      const Inst& inst = program_[t.pc];
      bool ok = false;
      switch (inst.op) {
        case Op::Char: ok = inst.ch == byte; break;
        case Op::Klass: ok = classes_[inst.arg_x].test(byte); break;
        case Op::Any: ok = byte != '\n'; break;
        default: break;
      }
      if (ok) add_thread(next, t.pc + 1, std::move(t.caps), pos + 1);
    }
    current.swap(next);
  }

  if (!accepted) return std::nullopt;
  std::vector<int>& caps = *accepted;
  caps[1] = static_cast<int>(n);
  std::vector<std::optional<Capture>> result(group_count_ + 1);
  for (std::size_t g = 0; g <= group_count_; ++g) {
    int b = caps[2 * g];
    int e = caps[2 * g + 1];
    if (b >= 0 && e >= 0 && e >= b) {
      result[g] = Capture{static_cast<std::size_t>(b), static_cast<std::size_t>(e)};
    }
  }
  return result;
}

std::string escape_literal(std::string_view text) {
  static constexpr std::string_view kSpecial = "\\^$.|?*+()[]{}";
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (kSpecial.find(c) != std::string_view::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace refinery::re
