#pragma once

// Brute-force decision procedure for NC constraints: enumerates every order
// type of the variables relative to the constants and to each other. Over a
// dense domain each order type is realisable, so this decides satisfiability,
// entailment and projection without sharing code with NCConstraint.

#include <algorithm>
#include <functional>
#include <set>
#include <vector>

#include "tdlmc/nc_constraint.hpp"

namespace oracle {

using tdlmc::AtomicConstraint;
using tdlmc::Rational;
using tdlmc::Term;

struct Problem {
  unsigned num_vars = 0;
  std::vector<AtomicConstraint> atoms;
};

/// Position of a term: slot 2j+1 is constant j, even slots are the open
/// intervals between constants; blocks order variables inside an interval.
struct Pos {
  int slot = 0;
  int block = 0;
  auto operator<=>(const Pos&) const = default;
};

class OrderTypes {
public:
  OrderTypes(unsigned num_vars, std::vector<Rational> constants) : n_(num_vars), consts_(std::move(constants))
  {
    std::sort(consts_.begin(), consts_.end());
    consts_.erase(std::unique(consts_.begin(), consts_.end()), consts_.end());
  }

  /// Calls `visit(positions)` for every order type satisfying `atoms`
  /// (checked as soon as their variables are placed). Stops when visit
  /// returns false.
  void enumerate(const std::vector<AtomicConstraint>& atoms, const std::function<bool(const std::vector<Pos>&)>& visit)
  {
    blocks_.assign(consts_.size() + 1, {});
    where_.assign(n_, {-1, -1});
    stop_ = false;
    atoms_ = &atoms;
    visit_ = &visit;
    dfs(0);
  }

  /// Canonical signature of an order type restricted to `keep`.
  static std::vector<Pos> restrict(const std::vector<Pos>& type, const std::vector<unsigned>& keep)
  {
    std::vector<Pos> out;
    for (unsigned v : keep)
      out.push_back(type[v]);
    // Dense re-ranking of blocks per slot.
    std::vector<Pos> sorted = out;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (auto& p : out) {
      if (p.slot % 2 == 1)
        continue;
      int rank = 0;
      for (const auto& q : sorted)
        if (q.slot == p.slot && q < p)
          ++rank;
      p.block = rank;
    }
    return out;
  }

  Pos position(const Term& t, const std::vector<Pos>& type) const
  {
    if (t.is_var())
      return type[t.as_var().id];
    auto it = std::lower_bound(consts_.begin(), consts_.end(), t.value());
    return {2 * static_cast<int>(it - consts_.begin()) + 1, 0};
  }

  bool holds(const AtomicConstraint& a, const std::vector<Pos>& type) const
  {
    Pos l = position(a.left, type);
    Pos r = position(a.right, type);
    return a.kind == AtomicConstraint::Kind::Eq ? l == r : r < l;
  }

private:
  std::vector<Pos> current() const
  {
    std::vector<Pos> out(n_);
    for (unsigned v = 0; v < n_; ++v)
      out[v] = where_[v].second < 0 ? Pos{2 * where_[v].first + 1, 0} : Pos{2 * where_[v].first, where_[v].second};
    return out;
  }

  bool placed(const Term& t, unsigned upto) const { return t.is_constant() || t.as_var().id < upto; }

  bool consistent(unsigned upto) const
  {
    std::vector<Pos> type = current();
    for (const auto& a : *atoms_) {
      if (!placed(a.left, upto) || !placed(a.right, upto))
        continue;
      bool touches = (a.left.is_var() && a.left.as_var().id + 1 == upto) ||
                     (a.right.is_var() && a.right.as_var().id + 1 == upto);
      if (touches && !holds(a, type))
        return false;
    }
    return true;
  }

  void reindex(int interval)
  {
    for (std::size_t b = 0; b < blocks_[interval].size(); ++b)
      for (unsigned v : blocks_[interval][b])
        where_[v] = {interval, static_cast<int>(b)};
  }

  void dfs(unsigned v)
  {
    if (stop_)
      return;
    if (v == n_) {
      if (!(*visit_)(current()))
        stop_ = true;
      return;
    }
    // Equal to a constant.
    for (std::size_t j = 0; j < consts_.size() && !stop_; ++j) {
      where_[v] = {static_cast<int>(j), -1};
      if (consistent(v + 1))
        dfs(v + 1);
    }
    // Inside an interval: join an existing block or open a new one.
    for (std::size_t i = 0; i <= consts_.size() && !stop_; ++i) {
      auto& bl = blocks_[i];
      for (std::size_t b = 0; b < bl.size() && !stop_; ++b) {
        bl[b].push_back(v);
        where_[v] = {static_cast<int>(i), static_cast<int>(b)};
        if (consistent(v + 1))
          dfs(v + 1);
        bl[b].pop_back();
      }
      for (std::size_t b = 0; b <= bl.size() && !stop_; ++b) {
        bl.insert(bl.begin() + static_cast<long>(b), std::vector<unsigned>{v});
        reindex(static_cast<int>(i));
        if (consistent(v + 1))
          dfs(v + 1);
        bl.erase(bl.begin() + static_cast<long>(b));
        reindex(static_cast<int>(i));
      }
    }
    where_[v] = {-1, -1};
  }

  unsigned n_;
  std::vector<Rational> consts_;
  std::vector<std::vector<std::vector<unsigned>>> blocks_;
  std::vector<std::pair<int, int>> where_; // (interval or constant index, block or -1 for constant)
  const std::vector<AtomicConstraint>* atoms_ = nullptr;
  const std::function<bool(const std::vector<Pos>&)>* visit_ = nullptr;
  bool stop_ = false;
};

inline std::vector<Rational> constants_of(const std::vector<AtomicConstraint>& atoms)
{
  std::vector<Rational> out;
  for (const auto& a : atoms)
    for (const Term* t : {&a.left, &a.right})
      if (t->is_constant())
        out.push_back(t->value());
  return out;
}

inline bool satisfiable(const Problem& p)
{
  OrderTypes ot(p.num_vars, constants_of(p.atoms));
  bool found = false;
  ot.enumerate(p.atoms, [&](const std::vector<Pos>&) {
    found = true;
    return false;
  });
  return found;
}

/// Every order type of `a` satisfies `b` (both over the same variables).
inline bool entails(unsigned num_vars, const std::vector<AtomicConstraint>& a, const std::vector<AtomicConstraint>& b)
{
  auto cs = constants_of(a);
  auto cb = constants_of(b);
  cs.insert(cs.end(), cb.begin(), cb.end());
  OrderTypes ot(num_vars, cs);
  bool ok = true;
  ot.enumerate(a, [&](const std::vector<Pos>& type) {
    for (const auto& atom : b)
      if (!ot.holds(atom, type)) {
        ok = false;
        return false;
      }
    return true;
  });
  return ok;
}

/// `projected` (over the same variable numbering) is exactly the projection
/// of `a` onto `keep`.
inline bool is_projection(unsigned num_vars, const std::vector<AtomicConstraint>& a, const std::vector<unsigned>& keep,
                          const std::vector<AtomicConstraint>& projected)
{
  auto cs = constants_of(a);
  auto cp = constants_of(projected);
  cs.insert(cs.end(), cp.begin(), cp.end());
  OrderTypes ot(num_vars, cs);
  std::set<std::vector<Pos>> reachable;
  ot.enumerate(a, [&](const std::vector<Pos>& type) {
    reachable.insert(OrderTypes::restrict(type, keep));
    return true;
  });
  // Enumerate order types of the kept variables alone (renumbered 0..k-1).
  std::vector<AtomicConstraint> renamed;
  std::vector<int> index(num_vars, -1);
  for (std::size_t i = 0; i < keep.size(); ++i)
    index[keep[i]] = static_cast<int>(i);
  auto ren = [&](const Term& t) {
    return t.is_var() ? Term::var(tdlmc::Var{static_cast<std::uint32_t>(index[t.as_var().id])}) : t;
  };
  for (const auto& atom : projected) {
    for (const Term* t : {&atom.left, &atom.right})
      if (t->is_var() && index[t->as_var().id] < 0)
        return false; // mentions an eliminated variable
    renamed.push_back({atom.kind, ren(atom.left), ren(atom.right)});
  }
  std::vector<unsigned> all(keep.size());
  for (unsigned i = 0; i < keep.size(); ++i)
    all[i] = i;
  OrderTypes small(static_cast<unsigned>(keep.size()), cs);
  bool ok = true;
  small.enumerate({}, [&](const std::vector<Pos>& type) {
    bool in_projection = true;
    for (const auto& atom : renamed)
      if (!small.holds(atom, type)) {
        in_projection = false;
        break;
      }
    bool expected = reachable.count(OrderTypes::restrict(type, all)) > 0;
    if (in_projection != expected) {
      ok = false;
      return false;
    }
    return true;
  });
  return ok;
}

} // namespace oracle
