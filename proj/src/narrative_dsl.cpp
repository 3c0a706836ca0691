#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "darkspec/narrative.hpp"

namespace darkspec {

NarrativeParseError::NarrativeParseError(Kind kind, int line, int column,
                                         const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + what),
      kind_(kind),
      line_(line),
      column_(column) {}

std::string_view NarrativeParseError::label() const {
  switch (kind_) {
    case Kind::Syntax: return "syntax";
    case Kind::DanglingReference: return "dangling-reference";
    case Kind::DuplicateId: return "duplicate-id";
  }
  return "syntax";
}

namespace {

using Kind = NarrativeParseError::Kind;

struct Token {
  enum Type { Word, Quoted, Arrow } type;
  std::string text;
  int column;
};

bool id_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '-' || c == '.' || c == '~' || c == ':';
}

std::vector<Token> tokenize(std::string_view line, int lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      break;
    } else if (c == '"') {
      const int col = static_cast<int>(i) + 1;
      std::string s;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        const char d = line[i++];
        if (d == '"') {
          closed = true;
          break;
        }
        if (d == '\\') {
          if (i >= line.size())
            throw NarrativeParseError(Kind::Syntax, lineno, static_cast<int>(i), "dangling escape");
          const char e = line[i++];
          if (e == 'n')
            s += '\n';
          else if (e == '"' || e == '\\')
            s += e;
          else
            throw NarrativeParseError(Kind::Syntax, lineno, static_cast<int>(i) - 1,
                                      std::string("unknown escape \\") + e);
        } else {
          s += d;
        }
      }
      if (!closed) throw NarrativeParseError(Kind::Syntax, lineno, col, "unterminated string");
      out.push_back({Token::Quoted, std::move(s), col});
    } else if (c == '-' && i + 1 < line.size() && line[i + 1] == '>') {
      out.push_back({Token::Arrow, "->", static_cast<int>(i) + 1});
      i += 2;
    } else {
      const int col = static_cast<int>(i) + 1;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '"' &&
             line[j] != '#' && line[j] != '\r')
        ++j;
      out.push_back({Token::Word, std::string(line.substr(i, j - i)), col});
      i = j;
    }
  }
  return out;
}

struct Ref {
  std::string id;
  int line;
  int column;
};

class Parser {
 public:
  Narrative run(std::string_view text) {
    std::size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
      const std::size_t nl = text.find('\n', pos);
      const std::string_view line =
          text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      ++lineno;
      line_ = lineno;
      toks_ = tokenize(line, lineno);
      at_ = 0;
      if (!toks_.empty()) record();
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
    if (!header_) throw NarrativeParseError(Kind::Syntax, 1, 1, "missing NARRATIVE header");
    resolve();
    return n_.canonical();
  }

 private:
  [[noreturn]] void fail(int column, const std::string& msg) {
    throw NarrativeParseError(Kind::Syntax, line_, column, msg);
  }

  int end_column() const {
    return toks_.empty() ? 1
                         : toks_.back().column + static_cast<int>(toks_.back().text.size()) + 1;
  }

  const Token& next(const char* what) {
    if (at_ >= toks_.size()) fail(end_column(), std::string("expected ") + what);
    return toks_[at_++];
  }

  Ref id(const char* what) {
    const Token& t = next(what);
    if (t.type != Token::Word || t.text.empty() || t.text.find('=') != std::string::npos)
      fail(t.column, std::string("expected ") + what);
    for (char c : t.text)
      if (!id_char(c)) fail(t.column, "invalid character in id '" + t.text + "'");
    return {t.text, line_, t.column};
  }

  std::string quoted(const char* what) {
    const Token& t = next(what);
    if (t.type != Token::Quoted) fail(t.column, std::string("expected quoted ") + what);
    return t.text;
  }

  // key=value word; returns the value and records the value's column.
  std::string keyed(const char* key, int* column = nullptr) {
    const Token& t = next(key);
    const std::string prefix = std::string(key) + "=";
    if (t.type != Token::Word || t.text.rfind(prefix, 0) != 0 || t.text.size() == prefix.size())
      fail(t.column, "expected " + prefix + "<value>");
    if (column) *column = t.column + static_cast<int>(prefix.size());
    return t.text.substr(prefix.size());
  }

  Ref keyed_id(const char* key) {
    int col = 0;
    std::string v = keyed(key, &col);
    for (char c : v)
      if (!id_char(c)) fail(col, "invalid character in id '" + v + "'");
    return {std::move(v), line_, col};
  }

  int integer(const char* key) {
    int col = 0;
    const std::string v = keyed(key, &col);
    int out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
      fail(col, std::string(key) + " must be an integer");
    return out;
  }

  void done() {
    if (at_ < toks_.size()) fail(toks_[at_].column, "unexpected '" + toks_[at_].text + "'");
  }

  void declare(const Ref& r) {
    auto [it, fresh] = declared_.emplace(r.id, r);
    if (!fresh)
      throw NarrativeParseError(Kind::DuplicateId, r.line, r.column,
                                "id '" + r.id + "' already declared on line " +
                                    std::to_string(it->second.line));
  }

  void record() {
    const Token& head = next("record");
    if (head.type != Token::Word) fail(head.column, "expected a record keyword");
    const std::string& kw = head.text;
    if (kw == "NARRATIVE") {
      if (header_) fail(head.column, "second NARRATIVE header");
      header_ = true;
      n_.round = integer("round");
      n_.risk = keyed_id("risk").id;
    } else if (kw == "ACTOR") {
      const Ref r = id("actor id");
      int col = 0;
      const std::string k = keyed("kind", &col);
      Actor a{r.id, ActorKind::Human};
      if (k == "human") a.kind = ActorKind::Human;
      else if (k == "machine") a.kind = ActorKind::Machine;
      else if (k == "nature") a.kind = ActorKind::Nature;
      else fail(col, "actor kind must be human, machine or nature");
      declare(r);
      n_.actors.push_back(a);
      actors_.insert(r.id);
    } else if (kw == "ACTION") {
      const Ref r = id("action id");
      int col = 0;
      const std::string k = keyed("kind", &col);
      Action a{r.id, ActionKind::Human};
      if (k == "human") a.kind = ActionKind::Human;
      else if (k == "machine") a.kind = ActionKind::Machine;
      else if (k == "joint") a.kind = ActionKind::Joint;
      else if (k == "force-majeure") a.kind = ActionKind::ForceMajeure;
      else fail(col, "action kind must be human, machine, joint or force-majeure");
      declare(r);
      n_.actions.push_back(a);
      actions_.insert(r.id);
    } else if (kw == "HAPPENING") {
      const Ref r = id("happening id");
      Happening h;
      h.id = r.id;
      h.stage = integer("stage");
      if (at_ < toks_.size() && toks_[at_].type == Token::Word && toks_[at_].text == "actualized") {
        h.actualized = true;
        ++at_;
      }
      h.description = quoted("description");
      declare(r);
      n_.happenings.push_back(std::move(h));
      happenings_.insert(r.id);
    } else if (kw == "CONTEXT") {
      const Ref h = id("happening id");
      context_.push_back({h, quoted("detail")});
    } else if (kw == "ACTOR-AT") {
      const Ref a = id("actor id");
      const Ref h = id("happening id");
      refs_.push_back({a, &actors_, "actor"});
      refs_.push_back({h, &happenings_, "happening"});
      n_.presence.push_back({a.id, h.id});
    } else if (kw == "EDGE") {
      const Ref from = id("source happening");
      const Token& arrow = next("'->'");
      if (arrow.type != Token::Arrow) fail(arrow.column, "expected '->'");
      const Ref to = id("target happening");
      const Ref actor = keyed_id("actor");
      const Ref action = keyed_id("action");
      refs_.push_back({from, &happenings_, "happening"});
      refs_.push_back({to, &happenings_, "happening"});
      refs_.push_back({actor, &actors_, "actor"});
      refs_.push_back({action, &actions_, "action"});
      n_.edges.push_back({from.id, to.id, actor.id, action.id});
    } else if (kw == "PIVOT") {
      const Ref h = id("happening id");
      const Ref en = keyed_id("enables");
      const Ref de = keyed_id("defeat");
      refs_.push_back({h, &happenings_, "happening"});
      refs_.push_back({en, &actions_, "action"});
      refs_.push_back({de, &actions_, "action"});
      n_.pivots.push_back({h.id, en.id, de.id});
    } else {
      fail(head.column, "unknown record '" + kw + "'");
    }
    done();
  }

  void resolve() {
    for (auto& [h, detail] : context_)
      refs_.push_back({h, &happenings_, "happening"});
    for (const auto& r : refs_)
      if (!r.pool->count(r.ref.id))
        throw NarrativeParseError(Kind::DanglingReference, r.ref.line, r.ref.column,
                                  std::string("undeclared ") + r.what + " '" + r.ref.id + "'");
    for (auto& [h, detail] : context_)
      for (auto& hp : n_.happenings)
        if (hp.id == h.id) hp.context.push_back(detail);
  }

  struct PendingRef {
    Ref ref;
    const std::set<std::string>* pool;
    const char* what;
  };

  Narrative n_;
  bool header_ = false;
  int line_ = 0;
  std::vector<Token> toks_;
  std::size_t at_ = 0;
  std::map<std::string, Ref> declared_;
  std::set<std::string> actors_, actions_, happenings_;
  std::vector<PendingRef> refs_;
  std::vector<std::pair<Ref, std::string>> context_;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace

Narrative parse_narrative(std::string_view text) { return Parser().run(text); }

std::string serialize_narrative(const Narrative& narrative) {
  const Narrative n = narrative.canonical();
  std::ostringstream out;
  out << "NARRATIVE round=" << n.round << " risk=" << n.risk << '\n';
  for (const auto& a : n.actors) out << "ACTOR " << a.id << " kind=" << to_string(a.kind) << '\n';
  for (const auto& a : n.actions) out << "ACTION " << a.id << " kind=" << to_string(a.kind) << '\n';
  for (const auto& h : n.happenings)
    out << "HAPPENING " << h.id << " stage=" << h.stage << (h.actualized ? " actualized " : " ")
        << quote(h.description) << '\n';
  for (const auto& h : n.happenings)
    for (const auto& c : h.context) out << "CONTEXT " << h.id << ' ' << quote(c) << '\n';
  for (const auto& p : n.presence) out << "ACTOR-AT " << p.actor << ' ' << p.happening << '\n';
  for (const auto& e : n.edges)
    out << "EDGE " << e.from << " -> " << e.to << " actor=" << e.actor << " action=" << e.action
        << '\n';
  for (const auto& p : n.pivots)
    out << "PIVOT " << p.happening << " enables=" << p.enables << " defeat=" << p.defeat << '\n';
  return out.str();
}

}  // namespace darkspec
