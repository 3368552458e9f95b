#pragma once

// Symbolic backward reachability over constrained configurations: the
// predecessor operator, a sound entailment test, the fixpoint loop with
// subsumption, and concretisation of counterexample traces.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "tdlmc/msr.hpp"

namespace tdlmc::sym {

using msr::ConstrainedConfiguration;

/// One constraint per predicate-respecting bijection between `part` and
/// `target`: phi, psi and the argument equalities. Unsatisfiable ones are
/// dropped. Throws std::invalid_argument when the sizes differ.
std::vector<NCConstraint> match_theta(const std::vector<msr::AtomTemplate>& part, const NCConstraint& phi,
                                      const std::vector<msr::AtomTemplate>& target, const NCConstraint& psi);

/// Predecessors of one member through one rule, over every partial matching
/// of member atoms with body atoms (the empty one included). Results are
/// normalized and deduplicated.
std::vector<ConstrainedConfiguration> pre_rule(const msr::Rule& rule, const ConstrainedConfiguration& cc);

std::vector<ConstrainedConfiguration> sym_pre(const std::vector<msr::Rule>& rules,
                                              const std::vector<ConstrainedConfiguration>& s);

/// Sound: true implies [[n]] is a subset of [[m]]. Looks for an injection of
/// m's atoms into n's under which n's constraint entails m's.
bool entails_cc(const ConstrainedConfiguration& n, const ConstrainedConfiguration& m);

enum class Verdict { Safe, Unsafe, BoundExceeded };
std::string to_string(Verdict v);

struct Limits {
  std::size_t max_iterations = 200;
  std::size_t max_set_size = 100000;
  /// Worker threads for the predecessor computation; 0 reads TDLMC_THREADS
  /// and falls back to the hardware concurrency.
  std::size_t threads = 0;
};

struct TraceStep {
  std::string rule; // rule applied forward from this configuration; empty on the last step
  ConstrainedConfiguration configuration;
};

struct SbrReport {
  Verdict verdict = Verdict::Safe;
  std::size_t iterations = 0;
  std::size_t fixpoint_size = 0;
  /// Members ever inserted, including those later subsumed.
  std::size_t generated = 0;
  /// From a member covering an initial configuration down to an unsafe pattern.
  std::vector<TraceStep> trace;
  std::chrono::milliseconds elapsed{0};
  std::string bound; // which limit was hit, for BoundExceeded
};

SbrReport sbr(const msr::Spec& spec, const std::vector<ConstrainedConfiguration>& unsafe, const Limits& limits = {});

struct Replay {
  std::vector<msr::Configuration> run;
  std::vector<std::string> rules;
};

class ReplayError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A concrete run from an initial configuration following the trace; the
/// last configuration is a member of the trace's final pattern. Throws
/// ReplayError when there is no trace or a step cannot be instantiated.
Replay replay_trace(const SbrReport& report, const msr::Spec& spec);

/// {verdict, iterations, fixpoint_size, generated, elapsed_ms, trace: [{rule, configuration, constraint}]}.
/// With `zero_timing` elapsed_ms is printed as 0 so outputs can be compared.
std::string to_json(const SbrReport& report, const msr::Spec& spec, bool zero_timing = false);
std::string to_text(const SbrReport& report, const msr::Spec& spec, bool zero_timing = false);

} // namespace tdlmc::sym
