#include <sstream>

#include "tdlmc/tdl.hpp"

namespace tdlmc::tdl {

namespace {

std::string expr_text(const Expr& e)
{
  return e.kind == Expr::Kind::Bottom ? "bot" : e.name;
}

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

void print_bindings(std::ostream& os, const Assignment& a)
{
  join(os, a.bindings, ", ", [&](const Binding& b) { os << b.target << " := " << expr_text(b.source); });
}

void print_rule(std::ostream& os, const Rule& r)
{
  os << "  " << r.from << " -";
  if (r.is_communication()) {
    os << (r.kind == RuleKind::Send ? "send " : "recv ") << expr_text(r.channel)
       << (r.kind == RuleKind::Send ? "!(" : "?(");
    join(os, r.message, ", ", [&](const std::string& m) { os << m; });
    os << ')';
  } else {
    os << r.label;
  }
  os << "-> " << r.to;
  if (r.kind != RuleKind::NameGen && r.kind != RuleKind::Create && r.guard.conjuncts.empty() &&
      r.assign.bindings.empty()) {
    os << ";\n";
    return;
  }
  os << " [";
  switch (r.kind) {
  case RuleKind::NameGen:
    os << r.fresh_target << " := new";
    break;
  case RuleKind::Create:
    os << "run " << r.created;
    if (!r.assign.bindings.empty()) {
      os << " with ";
      print_bindings(os, r.assign);
    }
    break;
  default: {
    bool guard = !r.guard.conjuncts.empty();
    bool assign = !r.assign.bindings.empty();
    if (guard) {
      join(os, r.guard.conjuncts, ", ", [&](const GuardAtom& g) {
        if (g.kind == GuardAtom::Kind::True)
          os << "true";
        else
          os << g.left << (g.kind == GuardAtom::Kind::Eq ? " = " : " != ") << expr_text(g.right);
      });
    }
    if (guard && assign)
      os << " / ";
    if (assign)
      print_bindings(os, r.assign);
    break;
  }
  }
  os << "];\n";
}

} // namespace

std::string pretty_print(const Program& p)
{
  std::ostringstream os;
  bool need_gap = false;
  if (!p.constants.empty()) {
    os << "const ";
    join(os, p.constants, ", ", [&](const std::string& c) { os << c; });
    os << ";\n";
    need_gap = true;
  }
  for (const auto& th : p.threads) {
    if (need_gap)
      os << '\n';
    need_gap = true;
    os << "thread " << th.name << '(';
    join(os, th.locals, ", ", [&](const std::string& v) { os << v; });
    os << ") {\n";
    if (th.rules.empty() || th.rules.front().from != th.initial)
      os << "  initial " << th.initial << ";\n";
    for (const auto& r : th.rules)
      print_rule(os, r);
    os << "}\n";
  }
  if (!p.init.empty()) {
    if (need_gap)
      os << '\n';
    os << "init { ";
    join(os, p.init, ", ", [&](const InitEntry& e) {
      os << e.thread << '(';
      const ThreadDef* th = p.find_thread(e.thread);
      std::size_t n = th ? th->locals.size() : 0;
      for (std::size_t i = 0; i < n; ++i)
        os << (i ? ", bot" : "bot");
      os << ')';
      if (e.count != 1)
        os << " * " << e.count;
    });
    os << " }\n";
  }
  return os.str();
}

} // namespace tdlmc::tdl
