#pragma once

// Abstract syntax of TDL programs: thread definitions with locations, local
// name variables and five rule forms (internal move, name generation, thread
// creation, send, receive).

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tdlmc::tdl {

/// Source positions are kept for diagnostics only and never take part in
/// structural equality.
struct SourcePos {
  int line = 0;
  int column = 0;
  friend bool operator==(const SourcePos&, const SourcePos&) { return true; }
};

struct Expr {
  enum class Kind { Var, Const, Bottom };
  Kind kind = Kind::Bottom;
  std::string name; // empty for Bottom

  static Expr var(std::string n) { return {Kind::Var, std::move(n)}; }
  static Expr constant(std::string n) { return {Kind::Const, std::move(n)}; }
  static Expr bottom() { return {Kind::Bottom, {}}; }
  friend bool operator==(const Expr&, const Expr&) = default;
};

struct GuardAtom {
  enum class Kind { True, Eq, Neq };
  Kind kind = Kind::True;
  std::string left;
  Expr right;
  friend bool operator==(const GuardAtom&, const GuardAtom&) = default;
};

struct Guard {
  std::vector<GuardAtom> conjuncts;
  bool is_trivial() const;
  friend bool operator==(const Guard&, const Guard&) = default;
};

struct Binding {
  std::string target;
  Expr source;
  friend bool operator==(const Binding&, const Binding&) = default;
};

struct Assignment {
  std::vector<Binding> bindings;
  const Binding* find(std::string_view target) const;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

enum class RuleKind { Internal, NameGen, Create, Send, Receive };

struct Rule {
  std::string from;
  std::string to;
  RuleKind kind = RuleKind::Internal;
  std::string label;                 // internal action label, decoration only
  Guard guard;                       // Internal, Send, Receive
  Assignment assign;                 // Internal, Create (to child locals), Send, Receive
  std::string fresh_target;          // NameGen
  std::string created;               // Create
  Expr channel;                      // Send, Receive
  std::vector<std::string> message;  // Send: locals; Receive: fresh template variables
  SourcePos pos;

  bool is_communication() const { return kind == RuleKind::Send || kind == RuleKind::Receive; }
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct ThreadDef {
  std::string name;
  std::vector<std::string> locals;
  std::string initial;
  std::vector<std::string> locations; // initial first, then in order of appearance
  std::vector<Rule> rules;
  SourcePos pos;

  std::optional<std::size_t> local_index(std::string_view var) const;
  friend bool operator==(const ThreadDef&, const ThreadDef&) = default;
};

struct InitEntry {
  std::string thread;
  std::size_t count = 1;
  SourcePos pos;
  friend bool operator==(const InitEntry&, const InitEntry&) = default;
};

struct Program {
  std::vector<std::string> constants;
  std::vector<ThreadDef> threads;
  std::vector<InitEntry> init;

  const ThreadDef* find_thread(std::string_view name) const;
  std::optional<std::size_t> thread_index(std::string_view name) const;
  /// 1-based index of a constant (its name image), if declared.
  std::optional<std::size_t> constant_index(std::string_view name) const;
  friend bool operator==(const Program&, const Program&) = default;
};

/// Display name of a rule: `Thread.from->to`.
std::string rule_name(const ThreadDef& thread, const Rule& rule);

class ParseError : public std::runtime_error {
public:
  ParseError(SourcePos pos, const std::string& message)
      : std::runtime_error(message), pos_(pos)
  {
  }
  SourcePos pos() const { return pos_; }

private:
  SourcePos pos_;
};

/// Throws ParseError on syntax errors, unknown identifiers and arity misuse.
Program parse_program(std::string_view text);

struct Diagnostic {
  enum class Severity { Error, Warning };
  SourcePos pos;
  Severity severity = Severity::Error;
  std::string message;
};

/// Well-formedness side conditions; empty iff the program is well formed.
std::vector<Diagnostic> validate(const Program& program);

std::string format_diagnostic(std::string_view file, const Diagnostic& d);

std::string pretty_print(const Program& program);

/// A program is monadic when each thread has at most one local and every
/// message template has at most one variable.
bool is_monadic(const Program& program);

} // namespace tdlmc::tdl
