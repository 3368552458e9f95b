#include <algorithm>
#include <set>

#include "tdlmc/tdl2msr.hpp"

namespace tdlmc::compile {

using tdl::Expr;
using tdl::GuardAtom;
using tdl::RuleKind;

Term translate_expr(const tdl::Program& p, const Expr& e, const VarLookup& var)
{
  switch (e.kind) {
  case Expr::Kind::Var:
    return Term::var(var(e.name));
  case Expr::Kind::Const:
    return Term::constant(Rational(static_cast<std::int64_t>(*p.constant_index(e.name))));
  case Expr::Kind::Bottom:
    break;
  }
  return Term::constant(Rational(0));
}

std::vector<NCConstraint> translate_guard(const tdl::Program& p, const tdl::Guard& g, const VarLookup& var)
{
  std::vector<NCConstraint> branches{NCConstraint()};
  for (const auto& c : g.conjuncts) {
    if (c.kind == GuardAtom::Kind::True)
      continue;
    Term l = Term::var(var(c.left));
    Term r = translate_expr(p, c.right, var);
    std::vector<NCConstraint> next;
    for (const auto& b : branches) {
      if (c.kind == GuardAtom::Kind::Eq) {
        NCConstraint k = b;
        k.add_eq(l, r);
        next.push_back(std::move(k));
      } else {
        NCConstraint gt = b;
        gt.add_gt(l, r);
        NCConstraint lt = b;
        lt.add_gt(r, l);
        next.push_back(std::move(gt));
        next.push_back(std::move(lt));
      }
    }
    branches.clear();
    for (auto& k : next)
      if (k.is_satisfiable())
        branches.push_back(std::move(k));
  }
  return branches;
}

NCConstraint translate_assignment(const tdl::Program& p, const tdl::Assignment& a,
                                  const std::vector<std::string>& locals, const VarLookup& current,
                                  const VarLookup& primed)
{
  NCConstraint k;
  for (const auto& x : locals) {
    const tdl::Binding* b = a.find(x);
    Term src = b ? translate_expr(p, b->source, current) : Term::var(current(x));
    k.add_eq(Term::var(primed(x)), src);
  }
  return k;
}

namespace {

const char* const reserved_predicates[] = {"init", "fresh", "zero"};

class RuleBuilder {
public:
  explicit RuleBuilder(std::string name) { rule_.name = std::move(name); }

  Var var(const std::string& display)
  {
    std::string name = display;
    for (int k = 2; !taken_.insert(name).second; ++k)
      name = display + "_" + std::to_string(k);
    rule_.var_names.push_back(name);
    return Var{static_cast<std::uint32_t>(rule_.var_names.size() - 1)};
  }

  /// One variable per name, suffixed with `suffix` for display.
  std::map<std::string, Var> vars(const std::vector<std::string>& names, const std::string& suffix)
  {
    std::map<std::string, Var> out;
    for (const auto& n : names)
      out.emplace(n, var(n + suffix));
    return out;
  }

  static std::vector<Var> ordered(const std::map<std::string, Var>& m, const std::vector<std::string>& names)
  {
    std::vector<Var> out;
    for (const auto& n : names)
      out.push_back(m.at(n));
    return out;
  }

  void head(msr::PredId p, std::vector<Var> args) { rule_.head.push_back({p, std::move(args)}); }
  void body(msr::PredId p, std::vector<Var> args) { rule_.body.push_back({p, std::move(args)}); }

  msr::Rule finish(NCConstraint k)
  {
    rule_.constraint = std::move(k);
    return rule_;
  }

private:
  msr::Rule rule_;
  std::set<std::string> taken_;
};

VarLookup lookup(const std::map<std::string, Var>& m, const std::map<std::string, Var>* extra = nullptr)
{
  return [&m, extra](const std::string& n) {
    if (extra) {
      auto it = extra->find(n);
      if (it != extra->end())
        return it->second;
    }
    return m.at(n);
  };
}

class Translator {
public:
  Translator(const tdl::Program& p, const Options& o, Compiled& out) : prog_(p), opts_(o), out_(out) {}

  void run()
  {
    msr::Spec& spec = out_.spec;
    out_.init_pred = spec.predicate("init", 0);
    out_.fresh_pred = spec.predicate("fresh", 1);
    for (std::size_t t = 0; t < prog_.threads.size(); ++t) {
      const auto& th = prog_.threads[t];
      for (std::size_t l = 0; l < th.locations.size(); ++l) {
        for (const char* r : reserved_predicates)
          if (th.locations[l] == r)
            throw CompileError("location name '" + th.locations[l] + "' of thread '" + th.name + "' is reserved");
        msr::PredId id = spec.predicate(th.locations[l], th.locals.size());
        out_.location_pred[{t, l}] = id;
        out_.pred_location[id] = {t, l};
      }
    }
    spec.initial.push_back({msr::GroundAtom{out_.init_pred, {}}});
    init_rule();
    for (std::size_t t = 0; t < prog_.threads.size(); ++t) {
      const auto& th = prog_.threads[t];
      warn_self_sync(th);
      for (std::size_t r = 0; r < th.rules.size(); ++r) {
        switch (th.rules[r].kind) {
        case RuleKind::Internal:
          internal(t, r);
          break;
        case RuleKind::NameGen:
          name_gen(t, r);
          break;
        case RuleKind::Create:
          create(t, r);
          break;
        case RuleKind::Send:
          for (std::size_t t2 = 0; t2 < prog_.threads.size(); ++t2)
            if (t2 != t || opts_.self_sync)
              for (std::size_t r2 = 0; r2 < prog_.threads[t2].rules.size(); ++r2)
                rendezvous(t, r, t2, r2);
          break;
        case RuleKind::Receive:
          break;
        }
      }
    }
  }

private:
  msr::PredId pred(std::size_t t, const std::string& loc) const
  {
    const auto& locs = prog_.threads[t].locations;
    std::size_t l = static_cast<std::size_t>(std::find(locs.begin(), locs.end(), loc) - locs.begin());
    return out_.location_pred.at({t, l});
  }

  void add(msr::Rule r)
  {
    if (auto problem = msr::check_rule(out_.spec, r))
      throw CompileError("internal error in rule " + r.name + ": " + *problem);
    out_.spec.rules.push_back(std::move(r));
  }

  void warn_self_sync(const tdl::ThreadDef& th)
  {
    if (opts_.self_sync)
      return;
    for (const auto& s : th.rules)
      for (const auto& r : th.rules)
        if (s.kind == RuleKind::Send && r.kind == RuleKind::Receive && s.message.size() == r.message.size()) {
          out_.warnings.push_back("thread '" + th.name +
                                  "' has a send and a receive of equal arity; rendez-vous between two of its "
                                  "instances is not translated (use --self-sync)");
          return;
        }
  }

  void init_rule()
  {
    RuleBuilder b("init");
    b.head(out_.init_pred, {});
    Var x = b.var("x");
    b.body(out_.fresh_pred, {x});
    NCConstraint k;
    k.add_gt(Term::var(x), Term::constant(Rational(static_cast<std::int64_t>(prog_.constants.size()))));
    for (const auto& e : prog_.init) {
      std::size_t t = *prog_.thread_index(e.thread);
      const auto& th = prog_.threads[t];
      for (std::size_t n = 0; n < e.count; ++n) {
        std::vector<Var> args;
        for (const auto& l : th.locals) {
          Var v = b.var(l);
          k.add_eq(Term::var(v), Term::constant(Rational(0)));
          args.push_back(v);
        }
        b.body(pred(t, th.initial), std::move(args));
      }
    }
    add(b.finish(std::move(k)));
  }

  void internal(std::size_t t, std::size_t r)
  {
    const auto& th = prog_.threads[t];
    const auto& rule = th.rules[r];
    std::string base = sim::rule_id(th, r);
    RuleBuilder probe(base);
    auto cur = probe.vars(th.locals, "");
    auto nxt = probe.vars(th.locals, "'");
    auto branches = translate_guard(prog_, rule.guard, lookup(cur));
    for (std::size_t k = 0; k < branches.size(); ++k) {
      RuleBuilder b(base + "#" + std::to_string(k));
      auto x = b.vars(th.locals, "");
      auto y = b.vars(th.locals, "'");
      b.head(pred(t, rule.from), RuleBuilder::ordered(x, th.locals));
      b.body(pred(t, rule.to), RuleBuilder::ordered(y, th.locals));
      // Same numbering as the probe, so branch constraints carry over.
      NCConstraint phi = branches[k].conjoin(translate_assignment(prog_, rule.assign, th.locals, lookup(x), lookup(y)));
      if (phi.is_satisfiable())
        add(b.finish(std::move(phi)));
    }
  }

  void name_gen(std::size_t t, std::size_t r)
  {
    const auto& th = prog_.threads[t];
    const auto& rule = th.rules[r];
    RuleBuilder b(sim::rule_id(th, r) + "#0");
    auto x = b.vars(th.locals, "");
    Var u = b.var("u");
    auto y = b.vars(th.locals, "'");
    Var u2 = b.var("u'");
    b.head(pred(t, rule.from), RuleBuilder::ordered(x, th.locals));
    b.head(out_.fresh_pred, {u});
    b.body(pred(t, rule.to), RuleBuilder::ordered(y, th.locals));
    b.body(out_.fresh_pred, {u2});
    NCConstraint k;
    Var target = y.at(rule.fresh_target);
    k.add_gt(Term::var(u2), Term::var(target));
    k.add_gt(Term::var(target), Term::var(u));
    for (const auto& l : th.locals)
      if (l != rule.fresh_target)
        k.add_eq(Term::var(y.at(l)), Term::var(x.at(l)));
    add(b.finish(std::move(k)));
  }

  void create(std::size_t t, std::size_t r)
  {
    const auto& th = prog_.threads[t];
    const auto& rule = th.rules[r];
    std::size_t c = *prog_.thread_index(rule.created);
    const auto& child = prog_.threads[c];
    RuleBuilder b(sim::rule_id(th, r) + "#0");
    auto x = b.vars(th.locals, "");
    auto y = b.vars(th.locals, "'");
    auto z = b.vars(child.locals, c == t ? "'_child" : "'");
    b.head(pred(t, rule.from), RuleBuilder::ordered(x, th.locals));
    b.body(pred(t, rule.to), RuleBuilder::ordered(y, th.locals));
    b.body(pred(c, child.initial), RuleBuilder::ordered(z, child.locals));
    NCConstraint k;
    for (const auto& l : th.locals)
      k.add_eq(Term::var(y.at(l)), Term::var(x.at(l)));
    for (const auto& l : child.locals) {
      const tdl::Binding* bd = rule.assign.find(l);
      Term src = bd ? translate_expr(prog_, bd->source, lookup(x)) : Term::constant(Rational(0));
      k.add_eq(Term::var(z.at(l)), src);
    }
    add(b.finish(std::move(k)));
  }

  void rendezvous(std::size_t t, std::size_t r, std::size_t t2, std::size_t r2)
  {
    const auto& ts = prog_.threads[t];
    const auto& tr = prog_.threads[t2];
    const auto& snd = ts.rules[r];
    const auto& rcv = tr.rules[r2];
    if (rcv.kind != RuleKind::Receive || snd.message.size() != rcv.message.size())
      return;
    std::string base = sim::rule_id(ts, r) + "|" + sim::rule_id(tr, r2);
    std::string sfx = t == t2 ? "_2" : "";
    auto build = [&](RuleBuilder& b, std::map<std::string, Var>& x, std::map<std::string, Var>& y,
                     std::map<std::string, Var>& xs, std::map<std::string, Var>& ys,
                     std::map<std::string, Var>& w) {
      x = b.vars(ts.locals, "");
      xs = b.vars(tr.locals, sfx);
      y = b.vars(ts.locals, "'");
      ys = b.vars(tr.locals, sfx + "'");
      w = b.vars(rcv.message, "");
    };
    RuleBuilder probe(base);
    std::map<std::string, Var> x, y, xs, ys, w;
    build(probe, x, y, xs, ys, w);
    auto sender_guards = translate_guard(prog_, snd.guard, lookup(x));
    auto receiver_guards = translate_guard(prog_, rcv.guard, lookup(xs, &w));
    std::size_t k = 0;
    for (const auto& nu : sender_guards) {
      for (const auto& nu2 : receiver_guards) {
        RuleBuilder b(base + "#" + std::to_string(k));
        build(b, x, y, xs, ys, w);
        b.head(pred(t, snd.from), RuleBuilder::ordered(x, ts.locals));
        b.head(pred(t2, rcv.from), RuleBuilder::ordered(xs, tr.locals));
        b.body(pred(t, snd.to), RuleBuilder::ordered(y, ts.locals));
        b.body(pred(t2, rcv.to), RuleBuilder::ordered(ys, tr.locals));
        NCConstraint phi = nu.conjoin(nu2);
        phi = phi.conjoin(translate_assignment(prog_, snd.assign, ts.locals, lookup(x), lookup(y)));
        phi = phi.conjoin(translate_assignment(prog_, rcv.assign, tr.locals, lookup(xs, &w), lookup(ys)));
        phi.add_eq(translate_expr(prog_, snd.channel, lookup(x)), translate_expr(prog_, rcv.channel, lookup(xs)));
        for (std::size_t i = 0; i < snd.message.size(); ++i)
          phi.add_eq(Term::var(x.at(snd.message[i])), Term::var(w.at(rcv.message[i])));
        if (!phi.is_satisfiable())
          continue;
        std::vector<Var> drop;
        for (const auto& m : rcv.message)
          drop.push_back(w.at(m));
        msr::Rule rule = b.finish(phi.eliminate(drop));
        // Template variables were eliminated; drop their display names.
        rule.var_names.resize(rule.var_names.size() - rcv.message.size());
        add(std::move(rule));
        ++k;
      }
    }
  }

  const tdl::Program& prog_;
  const Options& opts_;
  Compiled& out_;
};

} // namespace

Compiled translate_program(const tdl::Program& p, const Options& opts)
{
  Compiled out;
  Translator(p, opts, out).run();
  return out;
}

msr::Configuration encode_global(const Compiled& c, const tdl::Program& p, const sim::GlobalConfig& g,
                                 const NameMap& h)
{
  auto it0 = h.find(sim::bottom);
  if (it0 == h.end() || it0->second != Rational(0))
    throw std::invalid_argument("the name mapping must send bot to 0");
  for (std::size_t i = 1; i <= p.constants.size(); ++i) {
    auto it = h.find(i);
    if (it == h.end() || it->second != Rational(static_cast<std::int64_t>(i)))
      throw std::invalid_argument("the name mapping must send constant " + p.constants[i - 1] + " to " +
                                  std::to_string(i));
  }
  std::set<Rational> range;
  Rational top(0);
  for (const auto& [n, v] : h) {
    if (!range.insert(v).second)
      throw std::invalid_argument("the name mapping is not injective");
    top = std::max(top, v);
  }
  std::vector<msr::GroundAtom> atoms;
  for (const auto& l : g.locals) {
    msr::GroundAtom a{c.location_pred.at({l.thread, l.location}), {}};
    for (sim::Name n : l.values) {
      auto it = h.find(n);
      if (it == h.end())
        throw std::invalid_argument("name " + std::to_string(n) + " has no image");
      a.args.push_back(it->second);
    }
    atoms.push_back(std::move(a));
  }
  atoms.push_back({c.fresh_pred, {floor_of(top) + 1}});
  return msr::make_configuration(std::move(atoms));
}

sim::GlobalConfig decode_config(const Compiled& c, const tdl::Program& p, const msr::Configuration& m,
                                const std::map<Rational, sim::Name>& f)
{
  sim::GlobalConfig g;
  g.used.insert(sim::bottom);
  for (std::size_t i = 1; i <= p.constants.size(); ++i)
    g.used.insert(i);
  std::size_t fresh = 0;
  for (const auto& a : m) {
    if (a.pred == c.fresh_pred) {
      ++fresh;
      continue;
    }
    auto it = c.pred_location.find(a.pred);
    if (it == c.pred_location.end())
      throw std::invalid_argument("predicate " + c.spec.pred(a.pred).name + " is not a thread location");
    sim::LocalConfig l{it->second.first, it->second.second, {}};
    for (const auto& v : a.args) {
      auto fv = f.find(v);
      if (fv == f.end())
        throw std::invalid_argument("value " + to_string(v) + " has no name");
      l.values.push_back(fv->second);
      g.used.insert(fv->second);
    }
    g.locals.push_back(std::move(l));
  }
  if (fresh != 1)
    throw std::invalid_argument("expected exactly one fresh atom, found " + std::to_string(fresh));
  return g;
}

namespace {

NCConstraint replace_zero(const NCConstraint& k, Var z)
{
  NCConstraint out;
  auto map = [&](const Term& t) {
    if (t.is_var())
      return t;
    if (t.value() != Rational(0))
      throw CompileError("constant " + to_string(t.value()) + " cannot be expressed in the monadic fragment");
    return Term::var(z);
  };
  for (const auto& a : k.closure_atoms())
    out.add({a.kind, map(a.left), map(a.right)});
  for (Var v : k.variables())
    out.declare(v);
  out.declare(z);
  return out;
}

bool mentions_constants(const NCConstraint& k)
{
  return !k.constants().empty();
}

} // namespace

msr::Spec monadize(const msr::Spec& s)
{
  std::vector<std::string> offending;
  for (std::size_t i = 0; i < s.num_predicates(); ++i)
    if (s.pred(static_cast<msr::PredId>(i)).arity > 1)
      offending.push_back(s.pred(static_cast<msr::PredId>(i)).name + "/" +
                          std::to_string(s.pred(static_cast<msr::PredId>(i)).arity));
  if (!offending.empty()) {
    std::string msg = "not monadic: ";
    for (std::size_t i = 0; i < offending.size(); ++i)
      msg += (i ? ", " : "") + offending[i];
    throw CompileError(msg);
  }
  msr::Spec out = s;
  msr::PredId zero = out.predicate("zero", 1);
  auto init = out.find_predicate("init");
  for (auto& r : out.rules) {
    if (!mentions_constants(r.constraint))
      continue;
    Var z{r.num_vars()};
    bool is_init = r.head.size() == 1 && init && r.head[0].pred == *init;
    NCConstraint k = r.constraint;
    if (is_init) {
      r.var_names.resize(z.id, "");
      r.var_names.push_back("z");
      r.body.push_back({zero, {z}});
      r.constraint = replace_zero(k, z);
    } else {
      Var z2{z.id + 1};
      r.var_names.resize(z.id, "");
      r.var_names.push_back("z");
      r.var_names.push_back("z'");
      r.head.push_back({zero, {z}});
      r.body.push_back({zero, {z2}});
      NCConstraint rk = replace_zero(k, z);
      rk.add_eq(Term::var(z2), Term::var(z));
      r.constraint = rk;
    }
  }
  return out;
}

std::vector<msr::ConstrainedConfiguration> monadize_patterns(const msr::Spec& monadic,
                                                             const std::vector<msr::ConstrainedConfiguration>& u)
{
  auto zero = monadic.find_predicate("zero");
  std::vector<msr::ConstrainedConfiguration> out;
  for (const auto& cc : u) {
    if (!mentions_constants(cc.constraint)) {
      out.push_back(cc);
      continue;
    }
    if (!zero)
      throw CompileError("unsafe pattern mentions a constant but the spec has no zero atom");
    msr::ConstrainedConfiguration m = cc;
    Var z{cc.num_vars()};
    for (Var v : cc.constraint.variables())
      z.id = std::max(z.id, v.id + 1);
    m.atoms.push_back({*zero, {z}});
    m.constraint = replace_zero(cc.constraint, z);
    out.push_back(std::move(m));
  }
  return out;
}

} // namespace tdlmc::compile
