#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include "tdlmc/msr.hpp"

namespace tdlmc::msr {

Configuration make_configuration(std::vector<GroundAtom> atoms)
{
  std::sort(atoms.begin(), atoms.end());
  return atoms;
}

bool includes(const Configuration& m, const Configuration& sub)
{
  return std::includes(m.begin(), m.end(), sub.begin(), sub.end());
}

Configuration multiset_union(const Configuration& a, const Configuration& b)
{
  Configuration out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Configuration multiset_difference(const Configuration& m, const Configuration& sub)
{
  if (!includes(m, sub))
    throw std::invalid_argument("multiset difference of a non-included multiset");
  Configuration out;
  std::set_difference(m.begin(), m.end(), sub.begin(), sub.end(), std::back_inserter(out));
  return out;
}

std::uint32_t Rule::num_vars() const
{
  std::uint32_t n = 0;
  for (const auto* side : {&head, &body})
    for (const auto& a : *side)
      for (Var v : a.args)
        n = std::max(n, v.id + 1);
  for (Var v : constraint.variables())
    n = std::max(n, v.id + 1);
  return n;
}

std::string Rule::var_name(Var v) const
{
  if (v.id < var_names.size() && !var_names[v.id].empty())
    return var_names[v.id];
  return default_var_name(v);
}

PredId Spec::predicate(std::string_view name, std::size_t arity)
{
  if (auto id = find_predicate(name)) {
    if (preds_[*id].arity != arity)
      throw std::invalid_argument("predicate '" + std::string(name) + "' used with arity " + std::to_string(arity) +
                                  " and " + std::to_string(preds_[*id].arity));
    return *id;
  }
  preds_.push_back({std::string(name), arity});
  return static_cast<PredId>(preds_.size() - 1);
}

std::optional<PredId> Spec::find_predicate(std::string_view name) const
{
  for (std::size_t i = 0; i < preds_.size(); ++i)
    if (preds_[i].name == name)
      return static_cast<PredId>(i);
  return std::nullopt;
}

const Rule* Spec::find_rule(std::string_view name) const
{
  for (const auto& r : rules)
    if (r.name == name)
      return &r;
  return nullptr;
}

std::optional<std::string> check_rule(const Spec& spec, const Rule& rule)
{
  std::set<Var> seen;
  for (const auto* side : {&rule.head, &rule.body}) {
    for (const auto& a : *side) {
      if (a.pred >= spec.num_predicates())
        return "unknown predicate id " + std::to_string(a.pred);
      if (a.args.size() != spec.pred(a.pred).arity)
        return "arity mismatch for " + spec.pred(a.pred).name;
      for (Var v : a.args)
        if (!seen.insert(v).second)
          return "variable " + rule.var_name(v) + " occurs twice";
    }
  }
  for (Var v : rule.constraint.variables())
    if (!seen.count(v))
      return "constraint variable " + rule.var_name(v) + " does not occur in an atom";
  return std::nullopt;
}

namespace {

Configuration instantiate(const std::vector<AtomTemplate>& atoms, const Valuation& sigma)
{
  std::vector<GroundAtom> out;
  out.reserve(atoms.size());
  for (const auto& a : atoms) {
    GroundAtom g{a.pred, {}};
    for (Var v : a.args) {
      auto it = sigma.find(v);
      if (it == sigma.end())
        throw FireError("no value for variable " + default_var_name(v));
      g.args.push_back(it->second);
    }
    out.push_back(std::move(g));
  }
  return make_configuration(std::move(out));
}

// Enumerates injective, predicate-respecting placements of `atoms` into `m`.
template <class Atom, class F>
void for_each_placement(const std::vector<Atom>& atoms, const Configuration& m, F&& f)
{
  std::vector<std::size_t> chosen(atoms.size());
  std::vector<char> used(m.size(), 0);
  std::function<bool(std::size_t)> rec = [&](std::size_t k) -> bool {
    if (k == atoms.size())
      return f(chosen);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (used[i] || m[i].pred != atoms[k].pred || m[i].args.size() != atoms[k].args.size())
        continue;
      used[i] = 1;
      chosen[k] = i;
      bool go_on = rec(k + 1);
      used[i] = 0;
      if (!go_on)
        return false;
    }
    return true;
  };
  rec(0);
}

} // namespace

Configuration fire(const Rule& rule, const Configuration& m, const Valuation& sigma)
{
  bool ok = false;
  try {
    ok = rule.constraint.evaluate(sigma);
  } catch (const std::out_of_range&) {
    throw FireError("rule " + rule.name + ": valuation misses a constraint variable");
  }
  if (!ok)
    throw FireError("rule " + rule.name + ": valuation violates the constraint");
  Configuration h = instantiate(rule.head, sigma);
  if (!includes(m, h))
    throw FireError("rule " + rule.name + ": instantiated head is not included in the configuration");
  return multiset_union(instantiate(rule.body, sigma), multiset_difference(m, h));
}

std::vector<Instance> enabled_instances(const Rule& rule, const Configuration& m)
{
  std::vector<Instance> out;
  std::set<Configuration> seen_heads;
  for_each_placement(rule.head, m, [&](const std::vector<std::size_t>& chosen) {
    Valuation partial;
    std::vector<GroundAtom> head;
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      const auto& a = rule.head[k];
      for (std::size_t j = 0; j < a.args.size(); ++j)
        partial[a.args[j]] = m[chosen[k]].args[j];
      head.push_back(m[chosen[k]]);
    }
    if (!seen_heads.insert(make_configuration(head)).second)
      return true;
    auto w = rule.constraint.witness(partial);
    if (!w)
      return true;
    for (const auto& a : rule.body)
      for (Var v : a.args)
        w->emplace(v, Rational(0)); // unconstrained body variable
    out.push_back({chosen, std::move(*w)});
    return true;
  });
  return out;
}

std::vector<Successor> successors(const Spec& spec, const Configuration& m)
{
  std::vector<Successor> out;
  for (std::size_t r = 0; r < spec.rules.size(); ++r) {
    const Rule& rule = spec.rules[r];
    for (auto& inst : enabled_instances(rule, m)) {
      Configuration next = fire(rule, m, inst.sigma);
      out.push_back({r, std::move(inst), std::move(next)});
    }
  }
  return out;
}

std::set<Configuration> post(const Spec& spec, const Configuration& m)
{
  std::set<Configuration> out;
  for (auto& s : successors(spec, m))
    out.insert(std::move(s.result));
  return out;
}

namespace {

bool within(const Configuration& m, const Bounds& b)
{
  if (m.size() > b.max_atoms)
    return false;
  for (const auto& a : m)
    for (const auto& v : a.args)
      if (v > b.value_cap)
        return false;
  return true;
}

} // namespace

Exploration explore_bounded(const Spec& spec, const Bounds& bounds,
                            const std::function<bool(const Configuration&)>& goal)
{
  Exploration ex;
  std::map<Configuration, std::pair<const Configuration*, std::size_t>> parent;
  std::deque<const Configuration*> queue;
  auto finish = [&](const Configuration* c) {
    std::vector<Configuration> path;
    std::vector<std::string> rules;
    for (const Configuration* cur = c; cur;) {
      path.push_back(*cur);
      auto [p, r] = parent.at(*cur);
      if (p)
        rules.push_back(spec.rules[r].name);
      cur = p;
    }
    std::reverse(path.begin(), path.end());
    std::reverse(rules.begin(), rules.end());
    ex.goal_path = std::move(path);
    ex.goal_rules = std::move(rules);
  };
  auto visit = [&](const Configuration& c, const Configuration* from, std::size_t rule) -> bool {
    if (!within(c, bounds))
      return false;
    if (parent.size() >= bounds.max_configs) {
      ex.truncated = true;
      return false;
    }
    auto [it, fresh] = parent.emplace(c, std::make_pair(from, rule));
    if (!fresh)
      return false;
    ex.reached.insert(c);
    queue.push_back(&it->first);
    if (goal && goal(c)) {
      finish(&it->first);
      return true;
    }
    return false;
  };
  for (const auto& init : spec.initial)
    if (visit(init, nullptr, 0))
      return ex;
  while (!queue.empty()) {
    const Configuration* cur = queue.front();
    queue.pop_front();
    for (auto& s : successors(spec, *cur))
      if (visit(s.result, cur, s.rule))
        return ex;
  }
  return ex;
}

std::set<Configuration> post_star_bounded(const Spec& spec, const Bounds& bounds, bool* truncated)
{
  Exploration ex = explore_bounded(spec, bounds);
  if (truncated)
    *truncated = ex.truncated;
  return std::move(ex.reached);
}

std::uint32_t ConstrainedConfiguration::num_vars() const
{
  std::uint32_t n = 0;
  for (const auto& a : atoms)
    for (Var v : a.args)
      n = std::max(n, v.id + 1);
  return n;
}

ConstrainedConfiguration ConstrainedConfiguration::normalized() const
{
  ConstrainedConfiguration out;
  out.atoms = atoms;
  std::stable_sort(out.atoms.begin(), out.atoms.end(),
                   [](const AtomTemplate& a, const AtomTemplate& b) { return a.pred < b.pred; });
  VarMap ren;
  std::uint32_t next = 0;
  for (auto& a : out.atoms)
    for (Var& v : a.args) {
      Var nv{next++};
      ren[v] = nv;
      v = nv;
    }
  out.constraint = constraint.rename(ren).canonicalize();
  return out;
}

bool member(const ConstrainedConfiguration& cc, const Configuration& m)
{
  if (!cc.constraint.is_satisfiable())
    return false;
  bool found = false;
  for_each_placement(cc.atoms, m, [&](const std::vector<std::size_t>& chosen) {
    NCConstraint c = cc.constraint;
    for (std::size_t k = 0; k < chosen.size() && c.is_satisfiable(); ++k) {
      const auto& a = cc.atoms[k];
      for (std::size_t j = 0; j < a.args.size(); ++j)
        c.add_eq(Term::var(a.args[j]), Term::constant(m[chosen[k]].args[j]));
    }
    found = c.is_satisfiable();
    return !found;
  });
  return found;
}

} // namespace tdlmc::msr
