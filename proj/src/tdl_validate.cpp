#include <map>
#include <set>
#include <sstream>

#include "tdlmc/tdl.hpp"

namespace tdlmc::tdl {

namespace {

class Checker {
public:
  explicit Checker(const Program& p) : prog_(p) {}

  std::vector<Diagnostic> run()
  {
    std::set<std::string> consts;
    for (const auto& c : prog_.constants)
      if (!consts.insert(c).second)
        error({}, "constant '" + c + "' declared twice");

    std::map<std::string, std::string> local_owner;
    std::map<std::string, std::string> location_owner;
    std::set<std::string> thread_names;
    for (const auto& th : prog_.threads) {
      if (!thread_names.insert(th.name).second)
        error(th.pos, "thread '" + th.name + "' defined twice");
      for (const auto& v : th.locals) {
        if (consts.count(v))
          error(th.pos, "local '" + v + "' of thread '" + th.name + "' clashes with a constant");
        auto [it, fresh] = local_owner.emplace(v, th.name);
        if (!fresh)
          error(th.pos, "local '" + v + "' of thread '" + th.name + "' is already a local of thread '" +
                            it->second + "'");
      }
      for (const auto& l : th.locations) {
        auto [it, fresh] = location_owner.emplace(l, th.name);
        if (!fresh)
          error(th.pos, "location '" + l + "' of thread '" + th.name + "' is already used by thread '" +
                            it->second + "'");
      }
    }
    for (const auto& th : prog_.threads)
      for (const auto& r : th.rules)
        check_rule(th, r, consts);
    return std::move(diags_);
  }

private:
  void error(SourcePos pos, std::string msg) { diags_.push_back({pos, Diagnostic::Severity::Error, std::move(msg)}); }

  void check_rule(const ThreadDef& th, const Rule& r, const std::set<std::string>& consts)
  {
    std::string where = " in rule " + rule_name(th, r);
    std::set<std::string> targets;
    for (const auto& b : r.assign.bindings)
      if (!targets.insert(b.target).second)
        error(r.pos, "variable '" + b.target + "' assigned twice" + where);

    switch (r.kind) {
    case RuleKind::Internal:
    case RuleKind::NameGen:
      break;
    case RuleKind::Create: {
      const ThreadDef* child = prog_.find_thread(r.created);
      if (!child) {
        error(r.pos, "unknown thread '" + r.created + "'" + where);
        break;
      }
      for (const auto& b : r.assign.bindings)
        if (!child->local_index(b.target))
          error(r.pos, "'" + b.target + "' is not a local of thread '" + child->name + "'" + where);
      break;
    }
    case RuleKind::Send:
    case RuleKind::Receive: {
      if (r.channel.kind == Expr::Kind::Bottom)
        error(r.pos, "channel must not be bot" + where);
      if (r.kind == RuleKind::Send)
        break;
      std::set<std::string> seen;
      for (const auto& v : r.message) {
        if (!seen.insert(v).second)
          error(r.pos, "template variable '" + v + "' repeated" + where);
        if (th.local_index(v) || consts.count(v))
          error(r.pos, "template variable '" + v + "' is not fresh" + where);
      }
      for (const auto& b : r.assign.bindings)
        if (!th.local_index(b.target))
          error(r.pos, "assignment target '" + b.target + "' is not a local" + where);
      break;
    }
    }
  }

  const Program& prog_;
  std::vector<Diagnostic> diags_;
};

} // namespace

std::vector<Diagnostic> validate(const Program& program)
{
  return Checker(program).run();
}

std::string format_diagnostic(std::string_view file, const Diagnostic& d)
{
  std::ostringstream os;
  os << file << ':' << d.pos.line << ':' << d.pos.column << ": "
     << (d.severity == Diagnostic::Severity::Error ? "error" : "warning") << ": " << d.message;
  return os.str();
}

} // namespace tdlmc::tdl
