#pragma once

// Translation of TDL programs into MSR specifications: thread atoms
// `location(locals...)`, a `fresh(n)` atom holding a value above every name
// in use, and one rule per TDL rule (per guard branch, per rendez-vous pair).

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdlmc/msr.hpp"
#include "tdlmc/simulator.hpp"
#include "tdlmc/tdl.hpp"

namespace tdlmc::compile {

class CompileError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Options {
  /// Also pair send and receive rules of the same thread definition.
  bool self_sync = false;
};

struct Compiled {
  msr::Spec spec;
  std::vector<std::string> warnings;
  /// Predicate of each (thread, location), and the inverse table.
  std::map<std::pair<std::size_t, std::size_t>, msr::PredId> location_pred;
  std::map<msr::PredId, std::pair<std::size_t, std::size_t>> pred_location;
  msr::PredId init_pred = 0;
  msr::PredId fresh_pred = 0;
};

/// Maps TDL variable names of the rule being translated to MSR variables.
using VarLookup = std::function<Var(const std::string&)>;

/// The guard as a set of constraints: each `!=` conjunct splits into `<`
/// and `>`. Unsatisfiable members are dropped.
std::vector<NCConstraint> translate_guard(const tdl::Program& p, const tdl::Guard& g, const VarLookup& var);

/// x_i' = [[e_i]] for every local; untargeted locals keep their value.
NCConstraint translate_assignment(const tdl::Program& p, const tdl::Assignment& a,
                                  const std::vector<std::string>& locals, const VarLookup& current,
                                  const VarLookup& primed);

/// Image of an expression: a variable, bot as 0, constant c_i as i.
Term translate_expr(const tdl::Program& p, const tdl::Expr& e, const VarLookup& var);

Compiled translate_program(const tdl::Program& p, const Options& opts = {});

/// Name mapping for configuration encodings.
using NameMap = std::map<sim::Name, Rational>;

/// One atom per local with h-images plus fresh(floor(max range h) + 1).
/// Throws std::invalid_argument when h is not injective, does not fix bot
/// and the constants, or misses a name held by a local.
msr::Configuration encode_global(const Compiled& c, const tdl::Program& p, const sim::GlobalConfig& g,
                                 const NameMap& h);

/// Inverse encoding; the used set is bot, the constants and every decoded
/// value. Throws std::invalid_argument on unknown predicates, a fresh-atom
/// count other than one, or a value missing from f.
sim::GlobalConfig decode_config(const Compiled& c, const tdl::Program& p, const msr::Configuration& m,
                                const std::map<Rational, sim::Name>& f);

/// Replaces constant 0 by a variable bound through a `zero(z)` atom. Throws
/// CompileError when a thread predicate has arity above one or another
/// constant remains.
msr::Spec monadize(const msr::Spec& s);

/// Rewrites unsafe patterns for a monadized spec (0 becomes a zero atom).
std::vector<msr::ConstrainedConfiguration> monadize_patterns(const msr::Spec& monadic,
                                                             const std::vector<msr::ConstrainedConfiguration>& u);

} // namespace tdlmc::compile
