#pragma once

// Multiset rewriting with name constraints: ground configurations, rules
// H -> B : phi over atoms with pairwise distinct variables, and constrained
// configurations (atom templates plus a constraint) denoting upward-closed
// sets of ground configurations.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdlmc/nc_constraint.hpp"

namespace tdlmc::msr {

using PredId = std::uint32_t;

struct Predicate {
  std::string name;
  std::size_t arity = 0;
};

struct GroundAtom {
  PredId pred = 0;
  std::vector<Rational> args;
  friend bool operator==(const GroundAtom&, const GroundAtom&) = default;
  friend bool operator<(const GroundAtom& a, const GroundAtom& b)
  {
    if (a.pred != b.pred)
      return a.pred < b.pred;
    return a.args < b.args;
  }
};

/// A multiset of ground atoms, kept sorted.
using Configuration = std::vector<GroundAtom>;

Configuration make_configuration(std::vector<GroundAtom> atoms);
/// sub is a sub-multiset of m.
bool includes(const Configuration& m, const Configuration& sub);
Configuration multiset_union(const Configuration& a, const Configuration& b);
/// Throws std::invalid_argument when sub is not included in m.
Configuration multiset_difference(const Configuration& m, const Configuration& sub);

struct AtomTemplate {
  PredId pred = 0;
  std::vector<Var> args;
  friend bool operator==(const AtomTemplate&, const AtomTemplate&) = default;
};

struct Rule {
  std::string name;
  std::vector<AtomTemplate> head;
  std::vector<AtomTemplate> body;
  NCConstraint constraint;
  /// Display names indexed by variable id; missing entries print as v<id>.
  std::vector<std::string> var_names;

  std::uint32_t num_vars() const;
  std::string var_name(Var v) const;
};

class FireError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class Spec {
public:
  /// Returns the id of `name`, declaring it if needed. Throws
  /// std::invalid_argument on an arity clash.
  PredId predicate(std::string_view name, std::size_t arity);
  std::optional<PredId> find_predicate(std::string_view name) const;
  const Predicate& pred(PredId id) const { return preds_.at(id); }
  std::size_t num_predicates() const { return preds_.size(); }

  std::vector<Configuration> initial;
  std::vector<Rule> rules;

  const Rule* find_rule(std::string_view name) const;

private:
  std::vector<Predicate> preds_;
};

/// Checks the structural invariants (distinct variables, arities, constraint
/// variables occurring in atoms). Returns a description of the first problem.
std::optional<std::string> check_rule(const Spec& spec, const Rule& rule);

// Ground semantics.

/// sigma(body) + (m - sigma(head)). Throws FireError naming the failed precondition.
Configuration fire(const Rule& rule, const Configuration& m, const Valuation& sigma);

struct Instance {
  std::vector<std::size_t> matched; // positions in m, one per head atom
  Valuation sigma;                  // head bindings plus canonical body witnesses
};

std::vector<Instance> enabled_instances(const Rule& rule, const Configuration& m);

struct Successor {
  std::size_t rule = 0;
  Instance instance;
  Configuration result;
};

std::vector<Successor> successors(const Spec& spec, const Configuration& m);
std::set<Configuration> post(const Spec& spec, const Configuration& m);

struct Bounds {
  std::size_t max_atoms = 6;
  Rational value_cap{10};
  std::size_t max_configs = 200000;
};

struct Exploration {
  std::set<Configuration> reached;
  bool truncated = false;
  /// Set when the goal predicate matched: the path from an initial configuration.
  std::optional<std::vector<Configuration>> goal_path;
  std::vector<std::string> goal_rules;
};

/// Breadth-first exploration from spec.initial inside the bounds, stopping at
/// the first configuration satisfying `goal` (if given).
Exploration explore_bounded(const Spec& spec, const Bounds& bounds,
                            const std::function<bool(const Configuration&)>& goal = {});

std::set<Configuration> post_star_bounded(const Spec& spec, const Bounds& bounds, bool* truncated = nullptr);

// Constrained configurations.

struct ConstrainedConfiguration {
  std::vector<AtomTemplate> atoms;
  NCConstraint constraint;

  /// Sorts atoms by predicate (stable), renumbers variables by position and
  /// canonicalises the constraint.
  ConstrainedConfiguration normalized() const;
  std::uint32_t num_vars() const;
  friend bool operator==(const ConstrainedConfiguration&, const ConstrainedConfiguration&) = default;
};

/// Some injective predicate-respecting placement of cc.atoms into m induces
/// a valuation extending to a solution of cc.constraint.
bool member(const ConstrainedConfiguration& cc, const Configuration& m);

// Text format.

std::string to_string(const Spec& spec, const GroundAtom& a);
std::string to_string(const Spec& spec, const Configuration& m);
std::string to_string(const Spec& spec, const Rule& r);
std::string to_string(const Spec& spec, const ConstrainedConfiguration& cc);
/// One rule per line, preceded by `init <configuration>` lines.
std::string to_text(const Spec& spec);

class SyntaxError : public std::runtime_error {
public:
  SyntaxError(int line, const std::string& msg) : std::runtime_error(msg), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

Spec parse_spec(std::string_view text);
Configuration parse_configuration(Spec& spec, std::string_view text);
/// `unsafe { atoms : constraint ; ... }`; predicates must exist in `spec`
/// with matching arity.
std::vector<ConstrainedConfiguration> parse_unsafe(const Spec& spec, std::string_view text);

} // namespace tdlmc::msr
