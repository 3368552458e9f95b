#include "tdlmc/symbolic.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace tdlmc::sym {

using msr::AtomTemplate;

namespace {

std::vector<AtomTemplate> shifted(const std::vector<AtomTemplate>& atoms, std::uint32_t by)
{
  std::vector<AtomTemplate> out = atoms;
  for (auto& a : out)
    for (Var& v : a.args)
      v.id += by;
  return out;
}

NCConstraint shifted(const NCConstraint& c, std::uint32_t by)
{
  if (by == 0)
    return c;
  VarMap map;
  for (Var v : c.variables())
    map[v] = Var{v.id + by};
  return c.rename(map);
}

/// Text key of a normalized constrained configuration, for deduplication.
std::string key(const ConstrainedConfiguration& cc)
{
  std::string k;
  for (const auto& a : cc.atoms) {
    k += std::to_string(a.pred) + "(";
    for (Var v : a.args)
      k += std::to_string(v.id) + ",";
    k += ")";
  }
  return k + ":" + cc.constraint.to_string();
}

void equate_args(NCConstraint& c, const AtomTemplate& a, const AtomTemplate& b)
{
  for (std::size_t i = 0; i < a.args.size() && c.is_satisfiable(); ++i)
    c.add_eq(Term::var(a.args[i]), Term::var(b.args[i]));
}

bool same_shape(const AtomTemplate& a, const AtomTemplate& b)
{
  return a.pred == b.pred && a.args.size() == b.args.size();
}

} // namespace

std::vector<NCConstraint> match_theta(const std::vector<AtomTemplate>& part, const NCConstraint& phi,
                                      const std::vector<AtomTemplate>& target, const NCConstraint& psi)
{
  if (part.size() != target.size())
    throw std::invalid_argument("match_theta: multisets of different sizes");
  std::vector<NCConstraint> out;
  NCConstraint base = phi.conjoin(psi);
  if (!base.is_satisfiable())
    return out;
  std::vector<char> used(target.size(), 0);
  std::function<void(std::size_t, const NCConstraint&)> rec = [&](std::size_t k, const NCConstraint& theta) {
    if (k == part.size()) {
      out.push_back(theta);
      return;
    }
    for (std::size_t j = 0; j < target.size(); ++j) {
      if (used[j] || !same_shape(part[k], target[j]))
        continue;
      NCConstraint next = theta;
      equate_args(next, part[k], target[j]);
      if (!next.is_satisfiable())
        continue;
      used[j] = 1;
      rec(k + 1, next);
      used[j] = 0;
    }
  };
  rec(0, base);
  return out;
}

std::vector<ConstrainedConfiguration> pre_rule(const msr::Rule& rule, const ConstrainedConfiguration& cc)
{
  std::vector<ConstrainedConfiguration> out;
  const std::uint32_t shift = rule.num_vars();
  const auto m = shifted(cc.atoms, shift);
  NCConstraint base = rule.constraint.conjoin(shifted(cc.constraint, shift));
  if (!base.is_satisfiable())
    return out;
  std::set<std::string> seen;
  std::vector<char> used(rule.body.size(), 0);
  std::vector<std::size_t> rest;
  std::function<void(std::size_t, const NCConstraint&)> rec = [&](std::size_t k, const NCConstraint& theta) {
    if (k == m.size()) {
      ConstrainedConfiguration r;
      r.atoms = rule.head;
      for (std::size_t i : rest)
        r.atoms.push_back(m[i]);
      std::vector<Var> keep;
      for (const auto& a : r.atoms)
        keep.insert(keep.end(), a.args.begin(), a.args.end());
      r.constraint = theta.project(keep);
      r = r.normalized();
      if (seen.insert(key(r)).second)
        out.push_back(std::move(r));
      return;
    }
    rest.push_back(k);
    rec(k + 1, theta);
    rest.pop_back();
    for (std::size_t j = 0; j < rule.body.size(); ++j) {
      if (used[j] || !same_shape(m[k], rule.body[j]))
        continue;
      NCConstraint next = theta;
      equate_args(next, m[k], rule.body[j]);
      if (!next.is_satisfiable())
        continue;
      used[j] = 1;
      rec(k + 1, next);
      used[j] = 0;
    }
  };
  rec(0, base);
  return out;
}

std::vector<ConstrainedConfiguration> sym_pre(const std::vector<msr::Rule>& rules,
                                              const std::vector<ConstrainedConfiguration>& s)
{
  std::vector<ConstrainedConfiguration> out;
  for (const auto& r : rules)
    for (const auto& cc : s)
      for (auto& p : pre_rule(r, cc))
        out.push_back(std::move(p));
  return out;
}

bool entails_cc(const ConstrainedConfiguration& n, const ConstrainedConfiguration& m)
{
  if (!n.constraint.is_satisfiable())
    return true;
  if (!m.constraint.is_satisfiable() || m.atoms.size() > n.atoms.size())
    return false;
  std::map<msr::PredId, int> count;
  for (const auto& a : n.atoms)
    ++count[a.pred];
  for (const auto& a : m.atoms)
    if (--count[a.pred] < 0)
      return false;

  // Entailment holds iff every relation of m's closure between a mapped
  // variable and an earlier mapped variable or a constant is implied by n.
  const NCConstraint& mc = m.constraint;
  const NCConstraint& nc = n.constraint;
  std::map<Var, Var> map;
  std::vector<Var> mapped;
  auto consistent = [&](Var v) {
    int iv = mc.find(Term::var(v));
    if (iv < 0)
      return true;
    Term image = Term::var(map.at(v));
    for (std::size_t j = 0; j < mc.node_count(); ++j) {
      if (static_cast<int>(j) == iv)
        continue;
      Rel r = mc.rel(static_cast<std::size_t>(iv), j);
      if (r == Rel::None)
        continue;
      const Term& other = mc.node(j);
      Term other_image;
      if (other.is_constant()) {
        other_image = other;
      } else {
        auto it = map.find(other.as_var());
        if (it == map.end())
          continue;
        other_image = Term::var(it->second);
      }
      if (nc.relation(image, other_image) != r)
        return false;
    }
    return true;
  };
  std::vector<char> used(n.atoms.size(), 0);
  std::function<bool(std::size_t)> rec = [&](std::size_t k) -> bool {
    if (k == m.atoms.size())
      return true;
    const auto& a = m.atoms[k];
    for (std::size_t i = 0; i < n.atoms.size(); ++i) {
      if (used[i] || !same_shape(a, n.atoms[i]))
        continue;
      bool ok = true;
      std::size_t added = 0;
      for (std::size_t p = 0; p < a.args.size() && ok; ++p) {
        auto [it, fresh] = map.emplace(a.args[p], n.atoms[i].args[p]);
        if (!fresh) {
          ok = it->second == n.atoms[i].args[p];
          continue;
        }
        ++added;
        mapped.push_back(a.args[p]);
        ok = consistent(a.args[p]);
      }
      if (ok) {
        used[i] = 1;
        if (rec(k + 1))
          return true;
        used[i] = 0;
      }
      for (; added > 0; --added) {
        map.erase(mapped.back());
        mapped.pop_back();
      }
    }
    return false;
  };
  return rec(0);
}

std::string to_string(Verdict v)
{
  switch (v) {
  case Verdict::Safe:
    return "SAFE";
  case Verdict::Unsafe:
    return "UNSAFE";
  case Verdict::BoundExceeded:
    return "BOUND_EXCEEDED";
  }
  return "?";
}

namespace {

std::size_t thread_count(std::size_t requested)
{
  if (requested > 0)
    return requested;
  if (const char* env = std::getenv("TDLMC_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0)
      return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs f(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& f)
{
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++)
        f(i);
    });
  for (auto& th : pool)
    th.join();
}

struct Member {
  ConstrainedConfiguration cc;
  std::map<msr::PredId, int> counts;
  std::ptrdiff_t parent = -1;
  std::size_t rule = 0;
  bool dead = false;
};

std::map<msr::PredId, int> pred_counts(const ConstrainedConfiguration& cc)
{
  std::map<msr::PredId, int> out;
  for (const auto& a : cc.atoms)
    ++out[a.pred];
  return out;
}

/// a's atoms could inject into b's.
bool fits(const std::map<msr::PredId, int>& a, const std::map<msr::PredId, int>& b)
{
  for (const auto& [p, k] : a) {
    auto it = b.find(p);
    if (it == b.end() || it->second < k)
      return false;
  }
  return true;
}

class MemberSet {
public:
  const Member& operator[](std::size_t i) const { return all_[i]; }
  std::size_t live() const { return live_; }

  /// Some live member subsumes cc, looking only at the first `limit` members.
  bool subsumed(const ConstrainedConfiguration& cc, const std::map<msr::PredId, int>& counts,
                std::size_t limit) const
  {
    for (std::size_t i = 0; i < limit; ++i) {
      const Member& x = all_[i];
      if (!x.dead && fits(x.counts, counts) && entails_cc(cc, x.cc))
        return true;
    }
    return false;
  }

  /// Index of the new member, or nullopt when it was subsumed.
  std::optional<std::size_t> insert(ConstrainedConfiguration cc, std::ptrdiff_t parent, std::size_t rule,
                                    std::size_t checked_before)
  {
    auto counts = pred_counts(cc);
    // Members below checked_before were already tested by the caller.
    for (std::size_t i = checked_before; i < all_.size(); ++i) {
      const Member& x = all_[i];
      if (!x.dead && fits(x.counts, counts) && entails_cc(cc, x.cc))
        return std::nullopt;
    }
    for (auto& x : all_)
      if (!x.dead && fits(counts, x.counts) && entails_cc(x.cc, cc)) {
        x.dead = true;
        --live_;
      }
    all_.push_back({std::move(cc), std::move(counts), parent, rule, false});
    ++live_;
    return all_.size() - 1;
  }

  std::size_t size() const { return all_.size(); }

private:
  std::vector<Member> all_;
  std::size_t live_ = 0;
};

bool covers_initial(const msr::Spec& spec, const ConstrainedConfiguration& cc)
{
  for (const auto& m : spec.initial)
    if (msr::member(cc, m))
      return true;
  return false;
}

std::vector<TraceStep> trace_from(const msr::Spec& spec, const MemberSet& set, std::size_t i)
{
  std::vector<TraceStep> out;
  std::ptrdiff_t k = static_cast<std::ptrdiff_t>(i);
  while (k >= 0) {
    const Member& x = set[static_cast<std::size_t>(k)];
    out.push_back({x.parent >= 0 ? spec.rules[x.rule].name : "", x.cc});
    k = x.parent;
  }
  return out;
}

} // namespace

SbrReport sbr(const msr::Spec& spec, const std::vector<ConstrainedConfiguration>& unsafe, const Limits& limits)
{
  auto start = std::chrono::steady_clock::now();
  SbrReport report;
  MemberSet set;
  auto finish = [&](Verdict v) {
    report.verdict = v;
    report.generated = set.size();
    report.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return report;
  };
  const std::size_t threads = thread_count(limits.threads);
  std::vector<std::size_t> frontier;
  for (const auto& u : unsafe) {
    if (!u.constraint.is_satisfiable())
      continue;
    auto cc = u.normalized();
    if (auto idx = set.insert(std::move(cc), -1, 0, 0))
      frontier.push_back(*idx);
  }
  auto check_init = [&](std::size_t idx) {
    if (!set[idx].dead && covers_initial(spec, set[idx].cc)) {
      report.trace = trace_from(spec, set, idx);
      return true;
    }
    return false;
  };
  for (std::size_t idx : frontier)
    if (check_init(idx)) {
      report.fixpoint_size = set.live();
      return finish(Verdict::Unsafe);
    }

  struct Candidate {
    ConstrainedConfiguration cc;
    std::size_t parent;
    std::size_t rule;
    bool subsumed_by_old = false;
  };
  while (true) {
    std::erase_if(frontier, [&](std::size_t i) { return set[i].dead; });
    if (frontier.empty()) {
      report.fixpoint_size = set.live();
      return finish(Verdict::Safe);
    }
    if (report.iterations >= limits.max_iterations) {
      report.fixpoint_size = set.live();
      report.bound = "max-iterations";
      return finish(Verdict::BoundExceeded);
    }
    ++report.iterations;
    const std::size_t old_size = set.size();
    // Predecessors of every frontier member, filtered against the set as it
    // stood at the start of the round; insertion below is sequential.
    std::vector<std::vector<Candidate>> found(frontier.size());
    parallel_for(frontier.size(), threads, [&](std::size_t f) {
      const Member& x = set[frontier[f]];
      for (std::size_t r = 0; r < spec.rules.size(); ++r)
        for (auto& p : pre_rule(spec.rules[r], x.cc)) {
          auto counts = pred_counts(p);
          if (!set.subsumed(p, counts, old_size))
            found[f].push_back({std::move(p), frontier[f], r});
        }
    });
    std::vector<std::size_t> next;
    for (auto& group : found)
      for (auto& c : group) {
        auto idx = set.insert(std::move(c.cc), static_cast<std::ptrdiff_t>(c.parent), c.rule, old_size);
        if (!idx)
          continue;
        next.push_back(*idx);
        if (check_init(*idx)) {
          report.fixpoint_size = set.live();
          return finish(Verdict::Unsafe);
        }
        if (set.live() > limits.max_set_size) {
          report.fixpoint_size = set.live();
          report.bound = "max-set-size";
          return finish(Verdict::BoundExceeded);
        }
      }
    frontier = std::move(next);
  }
}

namespace {

/// Fires `rule` from m so that the result is a member of target.
std::optional<std::pair<msr::Configuration, Valuation>> fire_into(const msr::Rule& rule, const msr::Configuration& m,
                                                                  const ConstrainedConfiguration& target)
{
  const std::uint32_t shift = rule.num_vars();
  const auto t = shifted(target.atoms, shift);
  const NCConstraint tc = shifted(target.constraint, shift);
  for (const auto& inst : msr::enabled_instances(rule, m)) {
    NCConstraint base = rule.constraint.conjoin(tc);
    for (std::uint32_t v = 0; v < shift; ++v)
      base.declare(Var{v});
    std::vector<char> matched(m.size(), 0);
    for (std::size_t i : inst.matched)
      matched[i] = 1;
    for (const auto& a : rule.head)
      for (Var v : a.args)
        base.add_eq(Term::var(v), Term::constant(inst.sigma.at(v)));
    if (!base.is_satisfiable())
      continue;
    std::vector<char> used_body(rule.body.size(), 0);
    std::optional<Valuation> result;
    std::function<bool(std::size_t, const NCConstraint&)> rec = [&](std::size_t k, const NCConstraint& c) -> bool {
      if (k == t.size()) {
        result = c.witness();
        return result.has_value();
      }
      const auto& a = t[k];
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (matched[i] || m[i].pred != a.pred || m[i].args.size() != a.args.size())
          continue;
        NCConstraint next = c;
        for (std::size_t p = 0; p < a.args.size(); ++p)
          next.add_eq(Term::var(a.args[p]), Term::constant(m[i].args[p]));
        if (!next.is_satisfiable())
          continue;
        matched[i] = 1;
        bool ok = rec(k + 1, next);
        matched[i] = 0;
        if (ok)
          return true;
      }
      for (std::size_t j = 0; j < rule.body.size(); ++j) {
        if (used_body[j] || !same_shape(a, rule.body[j]))
          continue;
        NCConstraint next = c;
        equate_args(next, a, rule.body[j]);
        if (!next.is_satisfiable())
          continue;
        used_body[j] = 1;
        bool ok = rec(k + 1, next);
        used_body[j] = 0;
        if (ok)
          return true;
      }
      return false;
    };
    if (!rec(0, base))
      continue;
    Valuation sigma;
    for (std::uint32_t v = 0; v < shift; ++v)
      sigma[Var{v}] = result->at(Var{v});
    return std::make_pair(msr::fire(rule, m, sigma), sigma);
  }
  return std::nullopt;
}

} // namespace

Replay replay_trace(const SbrReport& report, const msr::Spec& spec)
{
  if (report.verdict != Verdict::Unsafe || report.trace.empty())
    throw ReplayError("no trace");
  Replay out;
  for (const auto& m : spec.initial)
    if (msr::member(report.trace.front().configuration, m)) {
      out.run.push_back(m);
      break;
    }
  if (out.run.empty())
    throw ReplayError("the first trace configuration covers no initial configuration");
  for (std::size_t k = 0; k + 1 < report.trace.size(); ++k) {
    const auto& step = report.trace[k];
    const msr::Rule* rule = spec.find_rule(step.rule);
    if (!rule)
      throw ReplayError("unknown rule " + step.rule);
    auto fired = fire_into(*rule, out.run.back(), report.trace[k + 1].configuration);
    if (!fired)
      throw ReplayError("step " + std::to_string(k) + ": rule " + step.rule + " cannot reach " +
                        msr::to_string(spec, report.trace[k + 1].configuration) + " from " +
                        msr::to_string(spec, out.run.back()));
    out.run.push_back(std::move(fired->first));
    out.rules.push_back(step.rule);
  }
  if (!msr::member(report.trace.back().configuration, out.run.back()))
    throw ReplayError("the replayed run does not end in the unsafe pattern");
  return out;
}

namespace {

std::string atoms_text(const msr::Spec& spec, const ConstrainedConfiguration& cc)
{
  ConstrainedConfiguration only_atoms{cc.atoms, NCConstraint()};
  std::string s = msr::to_string(spec, only_atoms);
  // to_string prints `atoms : constraint`; keep the atoms.
  auto colon = s.rfind(" : ");
  return colon == std::string::npos ? s : s.substr(0, colon);
}

} // namespace

std::string to_json(const SbrReport& report, const msr::Spec& spec, bool zero_timing)
{
  nlohmann::ordered_json j;
  j["verdict"] = to_string(report.verdict);
  j["iterations"] = report.iterations;
  j["fixpoint_size"] = report.fixpoint_size;
  j["generated"] = report.generated;
  j["elapsed_ms"] = zero_timing ? 0 : report.elapsed.count();
  if (!report.bound.empty())
    j["bound"] = report.bound;
  j["trace"] = nlohmann::ordered_json::array();
  for (const auto& s : report.trace)
    j["trace"].push_back({{"rule", s.rule},
                          {"configuration", atoms_text(spec, s.configuration)},
                          {"constraint", s.configuration.constraint.to_string()}});
  return j.dump(2) + "\n";
}

std::string to_text(const SbrReport& report, const msr::Spec& spec, bool zero_timing)
{
  std::ostringstream out;
  out << "verdict: " << to_string(report.verdict) << "\n";
  out << "iterations: " << report.iterations << "\n";
  out << "fixpoint size: " << report.fixpoint_size << "\n";
  out << "generated: " << report.generated << "\n";
  out << "elapsed: " << (zero_timing ? 0 : report.elapsed.count()) << " ms\n";
  if (!report.bound.empty())
    out << "bound hit: " << report.bound << "\n";
  if (!report.trace.empty()) {
    out << "trace:\n";
    for (const auto& s : report.trace) {
      out << "  " << msr::to_string(spec, s.configuration) << "\n";
      if (!s.rule.empty())
        out << "    --" << s.rule << "-->\n";
    }
  }
  return out.str();
}

} // namespace tdlmc::sym
