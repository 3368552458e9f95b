#include <algorithm>
#include <random>
#include <sstream>

#include "tdlmc/simulator.hpp"

namespace tdlmc::sim {

using tdl::Expr;
using tdl::GuardAtom;
using tdl::RuleKind;

bool same_configuration(const GlobalConfig& a, const GlobalConfig& b)
{
  if (a.used != b.used || a.locals.size() != b.locals.size())
    return false;
  auto x = a.locals;
  auto y = b.locals;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return x == y;
}

std::string rule_id(const tdl::ThreadDef& thread, std::size_t rule)
{
  const auto& r = thread.rules[rule];
  std::size_t same = 0;
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i < thread.rules.size(); ++i) {
    if (thread.rules[i].from == r.from && thread.rules[i].to == r.to) {
      if (i < rule)
        ++ordinal;
      ++same;
    }
  }
  std::string base = tdl::rule_name(thread, r);
  return same > 1 ? base + "#" + std::to_string(ordinal) : base;
}

Simulator::Simulator(const tdl::Program& program) : prog_(program) {}

std::size_t Simulator::location_index(std::size_t thread, const std::string& loc) const
{
  const auto& locs = prog_.threads[thread].locations;
  return static_cast<std::size_t>(std::find(locs.begin(), locs.end(), loc) - locs.begin());
}

GlobalConfig Simulator::initial() const
{
  GlobalConfig g;
  g.used.insert(bottom);
  for (std::size_t i = 1; i <= prog_.constants.size(); ++i)
    g.used.insert(i);
  for (const auto& e : prog_.init) {
    std::size_t t = *prog_.thread_index(e.thread);
    const auto& th = prog_.threads[t];
    for (std::size_t k = 0; k < e.count; ++k)
      g.locals.push_back({t, location_index(t, th.initial), std::vector<Name>(th.locals.size(), bottom)});
  }
  return g;
}

Name Simulator::eval(const Expr& e, const LocalConfig& p,
                     const std::vector<std::pair<std::string, Name>>& extra) const
{
  switch (e.kind) {
  case Expr::Kind::Bottom:
    return bottom;
  case Expr::Kind::Const:
    return *prog_.constant_index(e.name);
  case Expr::Kind::Var:
    for (const auto& [n, v] : extra)
      if (n == e.name)
        return v;
    return p.values.at(*prog_.threads[p.thread].local_index(e.name));
  }
  return bottom;
}

bool Simulator::guard_holds(const tdl::Guard& g, const LocalConfig& p,
                            const std::vector<std::pair<std::string, Name>>& extra) const
{
  for (const auto& c : g.conjuncts) {
    if (c.kind == GuardAtom::Kind::True)
      continue;
    bool eq = eval(Expr::var(c.left), p, extra) == eval(c.right, p, extra);
    if (eq != (c.kind == GuardAtom::Kind::Eq))
      return false;
  }
  return true;
}

std::vector<Name> Simulator::assign(const tdl::Assignment& a, const LocalConfig& p,
                                    const std::vector<std::pair<std::string, Name>>& extra) const
{
  std::vector<Name> out = p.values;
  const auto& th = prog_.threads[p.thread];
  for (const auto& b : a.bindings)
    out[*th.local_index(b.target)] = eval(b.source, p, extra);
  return out;
}

bool Simulator::rendezvous_enabled(const GlobalConfig& g, const Step& s) const
{
  if (s.actor == s.partner || s.actor >= g.locals.size() || s.partner >= g.locals.size())
    return false;
  const LocalConfig& p = g.locals[s.actor];
  const LocalConfig& q = g.locals[s.partner];
  const auto& tp = prog_.threads[p.thread];
  const auto& tq = prog_.threads[q.thread];
  if (s.rule >= tp.rules.size() || s.partner_rule >= tq.rules.size())
    return false;
  const auto& snd = tp.rules[s.rule];
  const auto& rcv = tq.rules[s.partner_rule];
  if (snd.kind != RuleKind::Send || rcv.kind != RuleKind::Receive)
    return false;
  if (tp.locations[p.location] != snd.from || tq.locations[q.location] != rcv.from)
    return false;
  if (snd.message.size() != rcv.message.size())
    return false;
  if (eval(snd.channel, p, {}) != eval(rcv.channel, q, {}))
    return false;
  if (!guard_holds(snd.guard, p, {}))
    return false;
  std::vector<std::pair<std::string, Name>> sigma;
  for (std::size_t i = 0; i < snd.message.size(); ++i)
    sigma.emplace_back(rcv.message[i], eval(Expr::var(snd.message[i]), p, {}));
  return guard_holds(rcv.guard, q, sigma);
}

std::vector<Step> Simulator::enabled_steps(const GlobalConfig& g) const
{
  std::vector<Step> out;
  for (std::size_t i = 0; i < g.locals.size(); ++i) {
    const LocalConfig& p = g.locals[i];
    const auto& th = prog_.threads[p.thread];
    for (std::size_t r = 0; r < th.rules.size(); ++r) {
      const auto& rule = th.rules[r];
      if (rule.from != th.locations[p.location])
        continue;
      switch (rule.kind) {
      case RuleKind::Internal:
        if (guard_holds(rule.guard, p, {}))
          out.push_back({StepKind::Internal, i, r, 0, 0, std::nullopt});
        break;
      case RuleKind::NameGen:
        out.push_back({StepKind::NameGen, i, r, 0, 0, *g.used.rbegin() + 1});
        break;
      case RuleKind::Create:
        out.push_back({StepKind::Create, i, r, 0, 0, std::nullopt});
        break;
      case RuleKind::Send:
        for (std::size_t j = 0; j < g.locals.size(); ++j) {
          if (j == i)
            continue;
          const auto& tq = prog_.threads[g.locals[j].thread];
          for (std::size_t rr = 0; rr < tq.rules.size(); ++rr) {
            Step s{StepKind::Rendezvous, i, r, j, rr, std::nullopt};
            if (rendezvous_enabled(g, s))
              out.push_back(s);
          }
        }
        break;
      case RuleKind::Receive:
        break; // enumerated from the sender side
      }
    }
  }
  return out;
}

GlobalConfig Simulator::apply(const GlobalConfig& g, const Step& s) const
{
  if (s.actor >= g.locals.size())
    throw StepError("no thread instance " + std::to_string(s.actor));
  const LocalConfig& p = g.locals[s.actor];
  const auto& th = prog_.threads[p.thread];
  if (s.rule >= th.rules.size())
    throw StepError("no such rule");
  const auto& rule = th.rules[s.rule];
  if (rule.from != th.locations[p.location])
    throw StepError("rule " + rule_id(th, s.rule) + " is not enabled: instance " + std::to_string(s.actor) +
                    " is at " + th.locations[p.location]);
  GlobalConfig out = g;
  LocalConfig& np = out.locals[s.actor];
  np.location = location_index(p.thread, rule.to);
  switch (rule.kind) {
  case RuleKind::Internal:
    if (s.kind != StepKind::Internal || !guard_holds(rule.guard, p, {}))
      throw StepError("rule " + rule_id(th, s.rule) + " is not enabled");
    np.values = assign(rule.assign, p, {});
    break;
  case RuleKind::NameGen: {
    if (s.kind != StepKind::NameGen)
      throw StepError("step kind does not match rule " + rule_id(th, s.rule));
    Name n = s.fresh ? *s.fresh : *g.used.rbegin() + 1;
    if (g.used.count(n))
      throw StepError("name " + std::to_string(n) + " is not fresh");
    out.used.insert(n);
    np.values[*th.local_index(rule.fresh_target)] = n;
    break;
  }
  case RuleKind::Create: {
    if (s.kind != StepKind::Create)
      throw StepError("step kind does not match rule " + rule_id(th, s.rule));
    std::size_t t = *prog_.thread_index(rule.created);
    const auto& child = prog_.threads[t];
    LocalConfig q{t, location_index(t, child.initial), std::vector<Name>(child.locals.size(), bottom)};
    for (const auto& b : rule.assign.bindings)
      q.values[*child.local_index(b.target)] = eval(b.source, p, {});
    out.locals.push_back(std::move(q));
    break;
  }
  case RuleKind::Send: {
    if (s.kind != StepKind::Rendezvous || !rendezvous_enabled(g, s))
      throw StepError("rendez-vous " + rule_id(th, s.rule) + " is not enabled");
    const LocalConfig& q = g.locals[s.partner];
    const auto& tq = prog_.threads[q.thread];
    const auto& rcv = tq.rules[s.partner_rule];
    std::vector<std::pair<std::string, Name>> sigma;
    for (std::size_t i = 0; i < rule.message.size(); ++i)
      sigma.emplace_back(rcv.message[i], eval(Expr::var(rule.message[i]), p, {}));
    np.values = assign(rule.assign, p, {});
    LocalConfig& nq = out.locals[s.partner];
    nq.location = location_index(q.thread, rcv.to);
    nq.values = assign(rcv.assign, q, sigma);
    break;
  }
  case RuleKind::Receive:
    throw StepError("a receive rule only fires together with a sender");
  }
  return out;
}

std::string Simulator::describe(const GlobalConfig& g, const Step& s) const
{
  const auto& th = prog_.threads[g.locals.at(s.actor).thread];
  std::ostringstream os;
  os << rule_id(th, s.rule);
  if (s.kind == StepKind::Rendezvous) {
    const auto& tq = prog_.threads[g.locals.at(s.partner).thread];
    os << '|' << rule_id(tq, s.partner_rule) << " @ " << s.actor << ", " << s.partner;
  } else {
    os << " @ " << s.actor;
  }
  return os.str();
}

std::string Simulator::to_string(const GlobalConfig& g) const
{
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (Name n : g.used) {
    os << (first ? "" : ",") << n;
    first = false;
  }
  os << "}";
  for (const auto& p : g.locals) {
    const auto& th = prog_.threads[p.thread];
    os << " <" << th.locations[p.location];
    for (Name v : p.values)
      os << ',' << v;
    os << '>';
  }
  return os.str();
}

Step Simulator::resolve_script_line(const GlobalConfig& g, const std::string& line) const
{
  auto at = line.find('@');
  if (at == std::string::npos)
    throw StepError("script line without '@': " + line);
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
  };
  std::string name = trim(line.substr(0, at));
  std::string rest = line.substr(at + 1);
  std::size_t i = 0;
  std::optional<std::size_t> j;
  try {
    auto comma = rest.find(',');
    i = std::stoul(trim(rest.substr(0, comma)));
    if (comma != std::string::npos)
      j = std::stoul(trim(rest.substr(comma + 1)));
  } catch (const std::exception&) {
    throw StepError("malformed instance index in script line: " + line);
  }
  std::string sender = name;
  std::optional<std::string> receiver;
  if (auto bar = name.find('|'); bar != std::string::npos) {
    sender = trim(name.substr(0, bar));
    receiver = trim(name.substr(bar + 1));
  }
  for (const auto& s : enabled_steps(g)) {
    if (s.actor != i)
      continue;
    const auto& th = prog_.threads[g.locals[i].thread];
    if (rule_id(th, s.rule) != sender)
      continue;
    if (s.kind == StepKind::Rendezvous) {
      if (!j || s.partner != *j)
        continue;
      if (receiver && rule_id(prog_.threads[g.locals[*j].thread], s.partner_rule) != *receiver)
        continue;
    } else if (j) {
      continue;
    }
    return s;
  }
  throw StepError("script step not enabled: " + line);
}

msr::Configuration Simulator::as_atoms(const GlobalConfig& g, msr::Spec& spec) const
{
  std::vector<msr::GroundAtom> atoms;
  for (const auto& p : g.locals) {
    const auto& th = prog_.threads[p.thread];
    msr::GroundAtom a{spec.predicate(th.locations[p.location], th.locals.size()), {}};
    for (Name v : p.values)
      a.args.emplace_back(static_cast<std::int64_t>(v));
    atoms.push_back(std::move(a));
  }
  return msr::make_configuration(std::move(atoms));
}

bool Simulator::matches(const GlobalConfig& g, const msr::Spec& spec,
                        const std::vector<msr::ConstrainedConfiguration>& unsafe) const
{
  msr::Spec copy = spec;
  msr::Configuration m = as_atoms(g, copy);
  for (const auto& cc : unsafe)
    if (msr::member(cc, m))
      return true;
  return false;
}

Run run_random(const Simulator& sim, const GlobalConfig& g0, std::size_t steps, std::uint64_t seed)
{
  Run run;
  run.configs.push_back(g0);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < steps; ++k) {
    auto enabled = sim.enabled_steps(run.configs.back());
    if (enabled.empty()) {
      run.stop_reason = "no enabled steps";
      return run;
    }
    std::uniform_int_distribution<std::size_t> pick(0, enabled.size() - 1);
    const Step& s = enabled[pick(rng)];
    run.configs.push_back(sim.apply(run.configs.back(), s));
    run.steps.push_back(s);
  }
  run.stop_reason = "steps exhausted";
  return run;
}

} // namespace tdlmc::sim
