#pragma once

// Name constraints: conjunctions of `=` and `>` atoms between rational-valued
// variables and constants, kept as a transitively closed order graph.

#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tdlmc/rational.hpp"

namespace tdlmc {

struct Var {
  std::uint32_t id = 0;
  auto operator<=>(const Var&) const = default;
};

/// A variable or a (rational) constant. Variables order before constants.
class Term {
public:
  Term() = default;
  static Term var(Var v) { return Term(true, v.id, Rational(0)); }
  static Term constant(Rational c) { return Term(false, 0, c); }

  bool is_var() const { return is_var_; }
  bool is_constant() const { return !is_var_; }
  Var as_var() const { return Var{var_}; }
  const Rational& value() const { return value_; }

  friend bool operator==(const Term& a, const Term& b)
  {
    if (a.is_var_ != b.is_var_)
      return false;
    return a.is_var_ ? a.var_ == b.var_ : a.value_ == b.value_;
  }
  friend bool operator<(const Term& a, const Term& b)
  {
    if (a.is_var_ != b.is_var_)
      return a.is_var_;
    return a.is_var_ ? a.var_ < b.var_ : a.value_ < b.value_;
  }

private:
  Term(bool is_var, std::uint32_t v, Rational c) : is_var_(is_var), var_(v), value_(c) {}
  bool is_var_ = true;
  std::uint32_t var_ = 0;
  Rational value_{0};
};

/// Relation of a left term to a right term.
enum class Rel : std::uint8_t { None, Eq, Gt, Lt };

Rel inverse(Rel r);

struct AtomicConstraint {
  enum class Kind : std::uint8_t { Eq, Gt };
  Kind kind = Kind::Eq;
  Term left;
  Term right;

  static AtomicConstraint eq(Term l, Term r) { return {Kind::Eq, l, r}; }
  static AtomicConstraint gt(Term l, Term r) { return {Kind::Gt, l, r}; }
  friend bool operator==(const AtomicConstraint&, const AtomicConstraint&) = default;
};

using Valuation = std::map<Var, Rational>;
using VarMap = std::map<Var, Var>;
using VarNamer = std::function<std::string(Var)>;

std::string default_var_name(Var v);
std::string to_string(const Term& t, const VarNamer& namer = default_var_name);

class NCConstraint {
public:
  /// The empty conjunction.
  NCConstraint() = default;
  static NCConstraint unsat();
  static NCConstraint of(std::initializer_list<AtomicConstraint> atoms);
  static NCConstraint of(std::span<const AtomicConstraint> atoms);

  /// Conjoins one atom in place, keeping the graph closed.
  void add(const AtomicConstraint& atom);
  void add_eq(const Term& l, const Term& r) { add(AtomicConstraint::eq(l, r)); }
  void add_gt(const Term& l, const Term& r) { add(AtomicConstraint::gt(l, r)); }
  /// Registers a variable without constraining it.
  void declare(Var v);

  NCConstraint conjoin(const NCConstraint& other) const;
  bool is_satisfiable() const { return sat_; }

  /// Existential projection: the result mentions no variable of `drop`.
  NCConstraint eliminate(std::span<const Var> drop) const;
  /// Existential projection onto `keep` (constants are always kept).
  NCConstraint project(std::span<const Var> keep) const;

  /// Sol(*this) is a subset of Sol(other).
  bool entails(const NCConstraint& other) const;

  /// Throws std::invalid_argument when the map is not injective on vars().
  /// Variables absent from the map keep their identity.
  NCConstraint rename(const VarMap& map) const;

  /// Throws std::out_of_range when a variable has no binding.
  bool evaluate(const Valuation& sigma) const;

  /// Sorted nodes, redundant constant nodes dropped. Two constraints with the
  /// same solutions over the same variables have equal canonical forms.
  NCConstraint canonicalize() const;

  /// The relation between two terms implied by the constraint (None if both
  /// orders remain possible). Assumes satisfiability.
  Rel relation(const Term& a, const Term& b) const;

  std::vector<Var> variables() const;
  std::vector<Rational> constants() const;
  bool mentions(Var v) const { return find(Term::var(v)) >= 0; }

  /// Every implied atom between nodes (constant/constant pairs omitted).
  std::vector<AtomicConstraint> closure_atoms() const;
  /// A transitive reduction of the closure, used for printing.
  std::vector<AtomicConstraint> reduced_atoms() const;

  /// Extends `partial` to a full solution with integer or midpoint values:
  /// unbounded-above variables get floor(max lower bound) + 1.
  std::optional<Valuation> witness(const Valuation& partial = {}) const;

  std::string to_string(const VarNamer& namer = default_var_name) const;

  /// Structural equality of the canonical forms.
  friend bool operator==(const NCConstraint& a, const NCConstraint& b);

  std::size_t node_count() const { return nodes_.size(); }
  const Term& node(std::size_t i) const { return nodes_[i]; }
  Rel rel(std::size_t i, std::size_t j) const { return rel_[i * nodes_.size() + j]; }
  int find(const Term& t) const;

private:
  std::size_t ensure_node(const Term& t);
  void set_rel(std::size_t i, std::size_t j, Rel r) { rel_[i * nodes_.size() + j] = r; }
  void link(std::size_t a, Rel r, std::size_t b);
  void close_pass(std::size_t a, Rel r, std::size_t b);
  void mark_unsat();
  NCConstraint restricted(const std::vector<std::size_t>& keep) const;

  bool sat_ = true;
  std::vector<Term> nodes_;
  std::vector<Rel> rel_;
};

std::string to_string(const AtomicConstraint& a, const VarNamer& namer = default_var_name);

} // namespace tdlmc
