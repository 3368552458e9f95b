#include <cctype>
#include <map>
#include <sstream>

#include "tdlmc/msr.hpp"

namespace tdlmc::msr {

namespace {

template <class Seq, class F>
void join(std::ostream& os, const Seq& seq, const char* sep, F f)
{
  bool first = true;
  for (const auto& x : seq) {
    if (!first)
      os << sep;
    first = false;
    f(x);
  }
}

void print_template(std::ostream& os, const Spec& spec, const AtomTemplate& a, const VarNamer& namer)
{
  os << spec.pred(a.pred).name;
  if (a.args.empty())
    return;
  os << '(';
  join(os, a.args, ",", [&](Var v) { os << namer(v); });
  os << ')';
}

} // namespace

std::string to_string(const Spec& spec, const GroundAtom& a)
{
  std::ostringstream os;
  os << spec.pred(a.pred).name;
  if (!a.args.empty()) {
    os << '(';
    join(os, a.args, ",", [&](const Rational& r) { os << tdlmc::to_string(r); });
    os << ')';
  }
  return os.str();
}

std::string to_string(const Spec& spec, const Configuration& m)
{
  std::ostringstream os;
  join(os, m, " | ", [&](const GroundAtom& a) { os << to_string(spec, a); });
  return os.str();
}

std::string to_string(const Spec& spec, const Rule& r)
{
  std::ostringstream os;
  VarNamer namer = [&](Var v) { return r.var_name(v); };
  os << r.name << ": ";
  join(os, r.head, " | ", [&](const AtomTemplate& a) { print_template(os, spec, a, namer); });
  os << (r.head.empty() ? "-> " : " -> ");
  join(os, r.body, " | ", [&](const AtomTemplate& a) { print_template(os, spec, a, namer); });
  os << (r.body.empty() ? ": " : " : ") << r.constraint.to_string(namer);
  return os.str();
}

std::string to_string(const Spec& spec, const ConstrainedConfiguration& cc)
{
  std::ostringstream os;
  VarNamer namer = default_var_name;
  join(os, cc.atoms, " | ", [&](const AtomTemplate& a) { print_template(os, spec, a, namer); });
  os << " : " << cc.constraint.to_string(namer);
  return os.str();
}

std::string to_text(const Spec& spec)
{
  std::ostringstream os;
  for (const auto& m : spec.initial)
    os << "init " << to_string(spec, m) << '\n';
  for (const auto& r : spec.rules)
    os << to_string(spec, r) << '\n';
  return os.str();
}

namespace {

class Reader {
public:
  Reader(std::string_view text, int line) : s_(text), line_(line) {}

  void skip()
  {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_])))
      ++i_;
  }
  bool done()
  {
    skip();
    return i_ >= s_.size();
  }
  bool peek(char c)
  {
    skip();
    return i_ < s_.size() && s_[i_] == c;
  }
  bool accept(char c)
  {
    if (!peek(c))
      return false;
    ++i_;
    return true;
  }
  void expect(char c)
  {
    if (!accept(c))
      fail(std::string("expected '") + c + "'");
  }
  bool at_ident()
  {
    skip();
    return i_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_');
  }
  std::string ident()
  {
    if (!at_ident())
      fail("expected an identifier");
    std::size_t start = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '\''))
      ++i_;
    return std::string(s_.substr(start, i_ - start));
  }
  bool at_number()
  {
    skip();
    return i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '-');
  }
  Rational number()
  {
    skip();
    std::size_t start = i_;
    if (i_ < s_.size() && s_[i_] == '-')
      ++i_;
    while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '/'))
      ++i_;
    try {
      return parse_rational(s_.substr(start, i_ - start));
    } catch (const std::invalid_argument&) {
      fail("malformed number");
    }
  }
  [[noreturn]] void fail(const std::string& msg) const
  {
    throw SyntaxError(line_, "line " + std::to_string(line_) + ": " + msg + " near '" +
                                 std::string(s_.substr(i_, 20)) + "'");
  }
  int line() const { return line_; }

private:
  std::string_view s_;
  std::size_t i_ = 0;
  int line_;
};

// Variable scope of one rule or pattern. A repeated variable gets a fresh
// copy constrained equal to the first occurrence.
struct Scope {
  std::map<std::string, Var> vars;
  std::vector<std::string> names;
  std::vector<AtomicConstraint> equalities;

  Var occurrence(const std::string& name)
  {
    Var v{static_cast<std::uint32_t>(names.size())};
    auto it = vars.find(name);
    if (it != vars.end()) {
      names.push_back(name + "'" + std::to_string(v.id));
      equalities.push_back(AtomicConstraint::eq(Term::var(v), Term::var(it->second)));
    } else {
      names.push_back(name);
      vars.emplace(name, v);
    }
    return v;
  }
};

template <class Pred>
std::vector<AtomTemplate> read_templates(Reader& r, Pred&& pred, Scope& scope, char stop)
{
  std::vector<AtomTemplate> out;
  if (r.peek(stop) || r.done())
    return out;
  do {
    std::string name = r.ident();
    std::vector<std::string> args;
    if (r.accept('(')) {
      if (!r.peek(')')) {
        do {
          args.push_back(r.ident());
        } while (r.accept(','));
      }
      r.expect(')');
    }
    AtomTemplate a{pred(name, args.size()), {}};
    for (const auto& arg : args)
      a.args.push_back(scope.occurrence(arg));
    out.push_back(std::move(a));
  } while (r.accept('|'));
  return out;
}

NCConstraint read_constraint(Reader& r, Scope& scope, char stop)
{
  NCConstraint c = NCConstraint::of(scope.equalities);
  auto term = [&]() {
    if (r.at_number())
      return Term::constant(r.number());
    std::string name = r.ident();
    auto it = scope.vars.find(name);
    if (it == scope.vars.end())
      r.fail("variable '" + name + "' does not occur in an atom");
    return Term::var(it->second);
  };
  if (r.peek(stop) || r.done())
    return c;
  do {
    if (r.at_ident()) {
      // `true` is the empty conjunction unless it names a variable.
      Reader probe = r;
      if (probe.ident() == "true" && !scope.vars.count("true")) {
        r = probe;
        continue;
      }
    }
    Term left = term();
    char op = 0;
    for (char o : {'=', '>', '<'})
      if (r.accept(o)) {
        op = o;
        break;
      }
    if (!op)
      r.fail("expected '=', '>' or '<'");
    Term right = term();
    if (op == '=')
      c.add_eq(left, right);
    else if (op == '>')
      c.add_gt(left, right);
    else
      c.add_gt(right, left);
  } while (r.accept(','));
  for (std::size_t i = 0; i < scope.names.size(); ++i)
    c.declare(Var{static_cast<std::uint32_t>(i)});
  return c;
}

Configuration read_ground(Reader& r, Spec& spec)
{
  std::vector<GroundAtom> atoms;
  if (r.done())
    return {};
  do {
    std::string name = r.ident();
    std::vector<Rational> args;
    if (r.accept('(')) {
      if (!r.peek(')')) {
        do {
          args.push_back(r.number());
        } while (r.accept(','));
      }
      r.expect(')');
    }
    PredId p = 0;
    try {
      p = spec.predicate(name, args.size());
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
    atoms.push_back({p, std::move(args)});
  } while (r.accept('|'));
  return make_configuration(std::move(atoms));
}

std::string strip_comment(std::string_view line)
{
  auto pos = line.find('#');
  // '#' also appears in rule names; only a '#' at line start or after
  // whitespace opens a comment.
  while (pos != std::string_view::npos && pos > 0 && !std::isspace(static_cast<unsigned char>(line[pos - 1])))
    pos = line.find('#', pos + 1);
  return std::string(line.substr(0, pos));
}

} // namespace

Configuration parse_configuration(Spec& spec, std::string_view text)
{
  Reader r(text, 1);
  Configuration m = read_ground(r, spec);
  if (!r.done())
    r.fail("trailing input");
  return m;
}

Spec parse_spec(std::string_view text)
{
  Spec spec;
  int lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    std::string line = strip_comment(text.substr(start, end - start));
    start = end + 1;
    ++lineno;
    std::string_view body = line;
    while (!body.empty() && std::isspace(static_cast<unsigned char>(body.front())))
      body.remove_prefix(1);
    if (body.empty())
      continue;
    auto colon = body.find(':');
    // `init <configuration>` unless the line is a rule named init.
    bool is_init_line = body.size() > 4 && body.substr(0, 4) == "init" && std::isspace(static_cast<unsigned char>(body[4]));
    if (is_init_line) {
      std::string_view rest = body.substr(4);
      auto first = rest.find_first_not_of(" \t");
      if (first != std::string_view::npos && rest[first] == ':')
        is_init_line = false;
    }
    if (is_init_line) {
      Reader r(body.substr(4), lineno);
      spec.initial.push_back(read_ground(r, spec));
      if (!r.done())
        r.fail("trailing input");
      continue;
    }
    if (colon == std::string_view::npos)
      throw SyntaxError(lineno, "line " + std::to_string(lineno) + ": expected 'name: head -> body : constraint'");
    Rule rule;
    rule.name = std::string(body.substr(0, colon));
    while (!rule.name.empty() && std::isspace(static_cast<unsigned char>(rule.name.back())))
      rule.name.pop_back();
    std::string_view rest = body.substr(colon + 1);
    auto arrow = rest.find("->");
    if (arrow == std::string_view::npos)
      throw SyntaxError(lineno, "line " + std::to_string(lineno) + ": missing '->'");
    Scope scope;
    auto pred = [&](const std::string& name, std::size_t arity) {
      try {
        return spec.predicate(name, arity);
      } catch (const std::invalid_argument& e) {
        throw SyntaxError(lineno, "line " + std::to_string(lineno) + ": " + e.what());
      }
    };
    Reader hr(rest.substr(0, arrow), lineno);
    rule.head = read_templates(hr, pred, scope, ':');
    if (!hr.done())
      hr.fail("trailing input in head");
    Reader br(rest.substr(arrow + 2), lineno);
    rule.body = read_templates(br, pred, scope, ':');
    br.expect(':');
    rule.constraint = read_constraint(br, scope, ';');
    if (!br.done())
      br.fail("trailing input");
    rule.var_names = scope.names;
    spec.rules.push_back(std::move(rule));
  }
  return spec;
}

std::vector<ConstrainedConfiguration> parse_unsafe(const Spec& spec, std::string_view text)
{
  std::string cleaned;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    std::string line = strip_comment(text.substr(start, end - start));
    cleaned += line + '\n';
    start = end + 1;
  }
  Reader r(cleaned, 1);
  if (r.ident() != "unsafe")
    r.fail("expected 'unsafe'");
  r.expect('{');
  std::vector<ConstrainedConfiguration> out;
  auto pred = [&](const std::string& name, std::size_t arity) -> PredId {
    auto id = spec.find_predicate(name);
    if (!id)
      r.fail("unknown predicate '" + name + "'");
    if (spec.pred(*id).arity != arity)
      r.fail("predicate '" + name + "' has arity " + std::to_string(spec.pred(*id).arity));
    return *id;
  };
  while (!r.accept('}')) {
    if (r.done())
      r.fail("unterminated unsafe block");
    Scope scope;
    ConstrainedConfiguration cc;
    cc.atoms = read_templates(r, pred, scope, ':');
    if (r.accept(':'))
      cc.constraint = read_constraint(r, scope, ';');
    else
      cc.constraint = NCConstraint::of(scope.equalities);
    for (std::size_t i = 0; i < scope.names.size(); ++i)
      cc.constraint.declare(Var{static_cast<std::uint32_t>(i)});
    out.push_back(std::move(cc));
    if (!r.accept(';') && !r.peek('}'))
      r.fail("expected ';' or '}'");
  }
  if (!r.done())
    r.fail("trailing input after unsafe block");
  return out;
}

} // namespace tdlmc::msr
