#include "tdlmc/nc_constraint.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tdlmc {

namespace {

Rel compose(Rel a, Rel b)
{
  if (a == Rel::None || b == Rel::None)
    return Rel::None;
  if (a == Rel::Eq)
    return b;
  if (b == Rel::Eq)
    return a;
  return a == b ? a : Rel::None;
}

Rel compare(const Rational& a, const Rational& b)
{
  if (a == b)
    return Rel::Eq;
  return a > b ? Rel::Gt : Rel::Lt;
}

} // namespace

Rel inverse(Rel r)
{
  switch (r) {
  case Rel::Gt:
    return Rel::Lt;
  case Rel::Lt:
    return Rel::Gt;
  default:
    return r;
  }
}

std::string to_string(const Rational& r)
{
  if (r.denominator() == 1)
    return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rational parse_rational(std::string_view text)
{
  auto parse_int = [&](std::string_view s) -> std::int64_t {
    if (s.empty())
      throw std::invalid_argument("malformed number '" + std::string(text) + "'");
    std::size_t i = 0;
    bool neg = false;
    if (s[0] == '-' || s[0] == '+') {
      neg = s[0] == '-';
      i = 1;
    }
    if (i == s.size())
      throw std::invalid_argument("malformed number '" + std::string(text) + "'");
    std::int64_t v = 0;
    for (; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9')
        throw std::invalid_argument("malformed number '" + std::string(text) + "'");
      v = v * 10 + (s[i] - '0');
    }
    return neg ? -v : v;
  };
  auto slash = text.find('/');
  if (slash == std::string_view::npos)
    return Rational(parse_int(text));
  std::int64_t den = parse_int(text.substr(slash + 1));
  if (den == 0)
    throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
  return Rational(parse_int(text.substr(0, slash)), den);
}

std::string default_var_name(Var v) { return "v" + std::to_string(v.id); }

std::string to_string(const Term& t, const VarNamer& namer)
{
  return t.is_var() ? namer(t.as_var()) : to_string(t.value());
}

std::string to_string(const AtomicConstraint& a, const VarNamer& namer)
{
  return to_string(a.left, namer) + (a.kind == AtomicConstraint::Kind::Eq ? "=" : ">") + to_string(a.right, namer);
}

NCConstraint NCConstraint::unsat()
{
  NCConstraint c;
  c.sat_ = false;
  return c;
}

NCConstraint NCConstraint::of(std::initializer_list<AtomicConstraint> atoms)
{
  return of(std::span<const AtomicConstraint>(atoms.begin(), atoms.size()));
}

NCConstraint NCConstraint::of(std::span<const AtomicConstraint> atoms)
{
  NCConstraint c;
  for (const auto& a : atoms)
    c.add(a);
  return c;
}

int NCConstraint::find(const Term& t) const
{
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i] == t)
      return static_cast<int>(i);
  return -1;
}

void NCConstraint::mark_unsat()
{
  sat_ = false;
  nodes_.clear();
  rel_.clear();
}

std::size_t NCConstraint::ensure_node(const Term& t)
{
  int found = find(t);
  if (found >= 0)
    return static_cast<std::size_t>(found);
  std::size_t n = nodes_.size();
  std::vector<Rel> grown((n + 1) * (n + 1), Rel::None);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      grown[i * (n + 1) + j] = rel_[i * n + j];
  rel_ = std::move(grown);
  nodes_.push_back(t);
  if (t.is_constant()) {
    for (std::size_t i = 0; i < n && sat_; ++i) {
      if (!nodes_[i].is_constant())
        continue;
      if (compare(t.value(), nodes_[i].value()) == Rel::Gt)
        link(n, Rel::Gt, i);
      else
        link(i, Rel::Gt, n);
    }
  }
  return n;
}

void NCConstraint::declare(Var v)
{
  if (sat_)
    ensure_node(Term::var(v));
}

void NCConstraint::close_pass(std::size_t a, Rel r, std::size_t b)
{
  const std::size_t n = nodes_.size();
  for (std::size_t i = 0; i < n && sat_; ++i) {
    Rel ri = i == a ? Rel::Eq : rel(i, a);
    if (ri == Rel::None)
      continue;
    Rel left = compose(ri, r);
    if (left == Rel::None)
      continue;
    for (std::size_t j = 0; j < n; ++j) {
      Rel rj = j == b ? Rel::Eq : rel(b, j);
      Rel c = compose(left, rj);
      if (c == Rel::None)
        continue;
      if (i == j) {
        if (c != Rel::Eq) {
          mark_unsat();
          return;
        }
        continue;
      }
      Rel existing = rel(i, j);
      if (existing == c)
        continue;
      if (existing != Rel::None) {
        mark_unsat();
        return;
      }
      set_rel(i, j, c);
      set_rel(j, i, inverse(c));
    }
  }
}

void NCConstraint::link(std::size_t a, Rel r, std::size_t b)
{
  if (!sat_)
    return;
  if (a == b) {
    if (r != Rel::Eq)
      mark_unsat();
    return;
  }
  Rel existing = rel(a, b);
  if (existing == r)
    return;
  if (existing != Rel::None) {
    mark_unsat();
    return;
  }
  close_pass(a, r, b);
  if (sat_ && r == Rel::Eq)
    close_pass(b, r, a);
}

void NCConstraint::add(const AtomicConstraint& atom)
{
  if (!sat_)
    return;
  Rel r = atom.kind == AtomicConstraint::Kind::Eq ? Rel::Eq : Rel::Gt;
  if (atom.left.is_constant() && atom.right.is_constant()) {
    if (compare(atom.left.value(), atom.right.value()) != r)
      mark_unsat();
    return;
  }
  std::size_t a = ensure_node(atom.left);
  if (!sat_)
    return;
  std::size_t b = ensure_node(atom.right);
  if (!sat_)
    return;
  link(a, r, b);
}

NCConstraint NCConstraint::conjoin(const NCConstraint& other) const
{
  if (!sat_ || !other.sat_)
    return unsat();
  NCConstraint out = *this;
  for (const auto& t : other.nodes_) {
    if (t.is_var())
      out.ensure_node(t);
  }
  const std::size_t n = other.nodes_.size();
  for (std::size_t i = 0; i < n && out.sat_; ++i) {
    for (std::size_t j = i + 1; j < n && out.sat_; ++j) {
      Rel r = other.rel(i, j);
      if (r == Rel::None)
        continue;
      if (r == Rel::Lt)
        out.add(AtomicConstraint::gt(other.nodes_[j], other.nodes_[i]));
      else
        out.add({r == Rel::Eq ? AtomicConstraint::Kind::Eq : AtomicConstraint::Kind::Gt, other.nodes_[i],
                 other.nodes_[j]});
    }
  }
  return out;
}

NCConstraint NCConstraint::restricted(const std::vector<std::size_t>& keep) const
{
  NCConstraint out;
  const std::size_t m = keep.size();
  out.nodes_.reserve(m);
  for (auto k : keep)
    out.nodes_.push_back(nodes_[k]);
  out.rel_.assign(m * m, Rel::None);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      out.rel_[i * m + j] = rel(keep[i], keep[j]);
  return out;
}

NCConstraint NCConstraint::eliminate(std::span<const Var> drop) const
{
  if (!sat_)
    return unsat();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Term& t = nodes_[i];
    if (t.is_var() && std::find(drop.begin(), drop.end(), t.as_var()) != drop.end())
      continue;
    keep.push_back(i);
  }
  return restricted(keep);
}

NCConstraint NCConstraint::project(std::span<const Var> keep_vars) const
{
  if (!sat_)
    return unsat();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Term& t = nodes_[i];
    if (t.is_var() && std::find(keep_vars.begin(), keep_vars.end(), t.as_var()) == keep_vars.end())
      continue;
    keep.push_back(i);
  }
  return restricted(keep);
}

Rel NCConstraint::relation(const Term& a, const Term& b) const
{
  if (a == b)
    return Rel::Eq;
  if (a.is_constant() && b.is_constant())
    return compare(a.value(), b.value());
  int ia = find(a);
  int ib = find(b);
  if (ia >= 0 && ib >= 0)
    return rel(static_cast<std::size_t>(ia), static_cast<std::size_t>(ib));
  if (a.is_constant())
    return inverse(relation(b, a));
  // a is a variable; b is a constant that is not a node, or b is unknown.
  if (ia < 0 || b.is_var())
    return Rel::None;
  const Rational& c = b.value();
  const auto x = static_cast<std::size_t>(ia);
  for (std::size_t d = 0; d < nodes_.size(); ++d) {
    if (!nodes_[d].is_constant())
      continue;
    const Rational& dv = nodes_[d].value();
    Rel r = rel(x, d);
    if (r == Rel::Eq)
      return compare(dv, c);
    if (r == Rel::Gt && dv >= c)
      return Rel::Gt;
    if (r == Rel::Lt && dv <= c)
      return Rel::Lt;
  }
  return Rel::None;
}

bool NCConstraint::entails(const NCConstraint& other) const
{
  if (!sat_)
    return true;
  if (!other.sat_)
    return false;
  const std::size_t n = other.nodes_.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      Rel r = other.rel(i, j);
      if (r == Rel::None)
        continue;
      if (other.nodes_[i].is_constant() && other.nodes_[j].is_constant())
        continue;
      if (relation(other.nodes_[i], other.nodes_[j]) != r)
        return false;
    }
  }
  return true;
}

NCConstraint NCConstraint::rename(const VarMap& map) const
{
  if (!sat_)
    return unsat();
  NCConstraint out = *this;
  std::set<Var> images;
  for (auto& t : out.nodes_) {
    if (!t.is_var())
      continue;
    auto it = map.find(t.as_var());
    Var image = it == map.end() ? t.as_var() : it->second;
    if (!images.insert(image).second)
      throw std::invalid_argument("variable renaming is not injective on " + default_var_name(image));
    t = Term::var(image);
  }
  return out;
}

bool NCConstraint::evaluate(const Valuation& sigma) const
{
  if (!sat_)
    return false;
  std::vector<Rational> values;
  values.reserve(nodes_.size());
  for (const auto& t : nodes_) {
    if (t.is_constant()) {
      values.push_back(t.value());
      continue;
    }
    auto it = sigma.find(t.as_var());
    if (it == sigma.end())
      throw std::out_of_range("no binding for variable " + default_var_name(t.as_var()));
    values.push_back(it->second);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
      Rel r = rel(i, j);
      if (r != Rel::None && compare(values[i], values[j]) != r)
        return false;
    }
  return true;
}

NCConstraint NCConstraint::canonicalize() const
{
  if (!sat_)
    return unsat();
  const std::size_t n = nodes_.size();
  std::vector<bool> needed(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (nodes_[i].is_var()) {
      needed[i] = true;
      continue;
    }
  }
  // Keep, per variable, only the tightest constant bounds.
  for (std::size_t x = 0; x < n; ++x) {
    if (!nodes_[x].is_var())
      continue;
    int eq = -1;
    int lower = -1;
    int upper = -1;
    for (std::size_t d = 0; d < n; ++d) {
      if (!nodes_[d].is_constant())
        continue;
      Rel r = rel(x, d);
      const Rational& v = nodes_[d].value();
      if (r == Rel::Eq)
        eq = static_cast<int>(d);
      else if (r == Rel::Gt && (lower < 0 || v > nodes_[static_cast<std::size_t>(lower)].value()))
        lower = static_cast<int>(d);
      else if (r == Rel::Lt && (upper < 0 || v < nodes_[static_cast<std::size_t>(upper)].value()))
        upper = static_cast<int>(d);
    }
    if (eq >= 0) {
      needed[static_cast<std::size_t>(eq)] = true;
      continue;
    }
    if (lower >= 0)
      needed[static_cast<std::size_t>(lower)] = true;
    if (upper >= 0)
      needed[static_cast<std::size_t>(upper)] = true;
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (needed[i])
      keep.push_back(i);
  std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) { return nodes_[a] < nodes_[b]; });
  return restricted(keep);
}

std::vector<Var> NCConstraint::variables() const
{
  std::vector<Var> out;
  for (const auto& t : nodes_)
    if (t.is_var())
      out.push_back(t.as_var());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Rational> NCConstraint::constants() const
{
  std::vector<Rational> out;
  for (const auto& t : nodes_)
    if (t.is_constant())
      out.push_back(t.value());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<AtomicConstraint> NCConstraint::closure_atoms() const
{
  std::vector<AtomicConstraint> out;
  if (!sat_)
    return out;
  std::vector<std::size_t> order(nodes_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nodes_[a] < nodes_[b]; });
  for (std::size_t p = 0; p < order.size(); ++p) {
    for (std::size_t q = p + 1; q < order.size(); ++q) {
      std::size_t i = order[p];
      std::size_t j = order[q];
      if (nodes_[i].is_constant() && nodes_[j].is_constant())
        continue;
      switch (rel(i, j)) {
      case Rel::Eq:
        out.push_back(AtomicConstraint::eq(nodes_[i], nodes_[j]));
        break;
      case Rel::Gt:
        out.push_back(AtomicConstraint::gt(nodes_[i], nodes_[j]));
        break;
      case Rel::Lt:
        out.push_back(AtomicConstraint::gt(nodes_[j], nodes_[i]));
        break;
      case Rel::None:
        break;
      }
    }
  }
  return out;
}

std::vector<AtomicConstraint> NCConstraint::reduced_atoms() const
{
  std::vector<AtomicConstraint> out;
  if (!sat_)
    return out;
  const std::size_t n = nodes_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nodes_[a] < nodes_[b]; });

  // Representative of each equality class: its constant if any, else its
  // first variable in term order.
  std::vector<std::size_t> rep(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (rel(i, j) != Rel::Eq)
        continue;
      bool j_better = nodes_[j].is_constant() != nodes_[best].is_constant() ? nodes_[j].is_constant()
                                                                            : nodes_[j] < nodes_[best];
      if (j_better)
        best = j;
    }
    rep[i] = best;
  }
  for (auto i : order)
    if (rep[i] != i)
      out.push_back(AtomicConstraint::eq(nodes_[i], nodes_[rep[i]]));
  for (auto i : order) {
    if (rep[i] != i)
      continue;
    for (auto j : order) {
      if (rep[j] != j || rel(i, j) != Rel::Gt)
        continue;
      if (nodes_[i].is_constant() && nodes_[j].is_constant())
        continue;
      bool covered = false;
      for (std::size_t k = 0; k < n && !covered; ++k)
        covered = rep[k] == k && rel(i, k) == Rel::Gt && rel(k, j) == Rel::Gt;
      if (!covered)
        out.push_back(AtomicConstraint::gt(nodes_[i], nodes_[j]));
    }
  }
  return out;
}

std::optional<Valuation> NCConstraint::witness(const Valuation& partial) const
{
  if (!sat_)
    return std::nullopt;
  NCConstraint bound = *this;
  for (const auto& [v, value] : partial)
    bound.add_eq(Term::var(v), Term::constant(value));
  if (!bound.sat_)
    return std::nullopt;

  const std::size_t n = bound.nodes_.size();
  std::vector<std::optional<Rational>> value(n);
  for (std::size_t i = 0; i < n; ++i)
    if (bound.nodes_[i].is_constant())
      value[i] = bound.nodes_[i].value();
  std::vector<std::size_t> below(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (bound.rel(i, j) == Rel::Gt)
        ++below[i];
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (below[a] != below[b])
      return below[a] < below[b];
    return bound.nodes_[a] < bound.nodes_[b];
  });
  for (auto i : order) {
    if (value[i])
      continue;
    std::optional<Rational> lo;
    std::optional<Rational> hi;
    std::optional<Rational> same;
    for (std::size_t j = 0; j < n; ++j) {
      if (!value[j])
        continue;
      Rel r = bound.rel(i, j);
      if (r == Rel::Eq)
        same = *value[j];
      else if (r == Rel::Gt && (!lo || *value[j] > *lo))
        lo = *value[j];
      else if (r == Rel::Lt && (!hi || *value[j] < *hi))
        hi = *value[j];
    }
    Rational chosen;
    if (same) {
      chosen = *same;
    } else if (!hi) {
      chosen = lo ? floor_of(*lo) + 1 : Rational(0);
    } else if (!lo) {
      chosen = *hi > Rational(0) ? Rational(0) : floor_of(*hi) - 1;
    } else {
      Rational k = floor_of(*lo) + 1;
      chosen = k < *hi ? k : (*lo + *hi) / 2;
    }
    value[i] = chosen;
    for (std::size_t j = 0; j < n; ++j)
      if (bound.rel(i, j) == Rel::Eq)
        value[j] = chosen;
  }
  Valuation out = partial;
  for (std::size_t i = 0; i < n; ++i)
    if (bound.nodes_[i].is_var())
      out[bound.nodes_[i].as_var()] = *value[i];
  return out;
}

std::string NCConstraint::to_string(const VarNamer& namer) const
{
  if (!sat_)
    return "false";
  auto atoms = reduced_atoms();
  if (atoms.empty())
    return "true";
  std::ostringstream os;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i)
      os << ", ";
    os << tdlmc::to_string(atoms[i], namer);
  }
  return os.str();
}

bool operator==(const NCConstraint& a, const NCConstraint& b)
{
  if (a.sat_ != b.sat_)
    return false;
  if (!a.sat_)
    return true;
  NCConstraint ca = a.canonicalize();
  NCConstraint cb = b.canonicalize();
  return ca.nodes_ == cb.nodes_ && ca.rel_ == cb.rel_;
}

} // namespace tdlmc
