#pragma once

// Concrete semantics of TDL programs. Names are non-negative integers: 0 is
// bot and constant c_i is i, so simulator values coincide with the values
// of the compiled MSR specification under the identity mapping.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tdlmc/msr.hpp"
#include "tdlmc/tdl.hpp"

namespace tdlmc::sim {

using Name = std::uint64_t;
inline constexpr Name bottom = 0;

struct LocalConfig {
  std::size_t thread = 0;
  std::size_t location = 0; // index into ThreadDef::locations
  std::vector<Name> values;
  friend auto operator<=>(const LocalConfig&, const LocalConfig&) = default;
};

struct GlobalConfig {
  std::set<Name> used;
  /// Multiset of locals, in creation order; steps refer to positions.
  std::vector<LocalConfig> locals;
};

/// Equality of the used sets and of the local multisets.
bool same_configuration(const GlobalConfig& a, const GlobalConfig& b);

enum class StepKind { Internal, NameGen, Create, Rendezvous };

struct Step {
  StepKind kind = StepKind::Internal;
  std::size_t actor = 0;   // index in GlobalConfig::locals (sender for rendez-vous)
  std::size_t rule = 0;    // rule index in the actor's thread
  std::size_t partner = 0; // receiver, rendez-vous only
  std::size_t partner_rule = 0;
  std::optional<Name> fresh; // name chosen by NameGen
  friend bool operator==(const Step&, const Step&) = default;
};

class StepError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Unique name of a rule: `Thread.from->to`, with `#k` appended when several
/// rules of the thread share source and target.
std::string rule_id(const tdl::ThreadDef& thread, std::size_t rule);

class Simulator {
public:
  /// The program must outlive the simulator.
  explicit Simulator(const tdl::Program& program);

  const tdl::Program& program() const { return prog_; }

  GlobalConfig initial() const;

  std::vector<Step> enabled_steps(const GlobalConfig& g) const;

  /// Throws StepError when the step is not enabled. A NameGen step may carry
  /// any unused name; without one the canonical max(used)+1 is chosen.
  GlobalConfig apply(const GlobalConfig& g, const Step& s) const;

  /// Human readable step label, e.g. `Init.init_A->gen_A @ 1`.
  std::string describe(const GlobalConfig& g, const Step& s) const;
  std::string to_string(const GlobalConfig& g) const;

  /// Resolves a script line `rule-name @ i [, j]`; the rule name of a
  /// rendez-vous may be `sender|receiver` or just the sender.
  Step resolve_script_line(const GlobalConfig& g, const std::string& line) const;

  /// Some unsafe pattern (over location-named predicates of `spec`) is a
  /// member of the configuration's atoms.
  bool matches(const GlobalConfig& g, const msr::Spec& spec,
               const std::vector<msr::ConstrainedConfiguration>& unsafe) const;
  /// The local configurations as ground MSR atoms (predicate = location name).
  msr::Configuration as_atoms(const GlobalConfig& g, msr::Spec& spec) const;

  const tdl::ThreadDef& thread(std::size_t i) const { return prog_.threads[i]; }

private:
  Name eval(const tdl::Expr& e, const LocalConfig& p, const std::vector<std::pair<std::string, Name>>& extra) const;
  bool guard_holds(const tdl::Guard& g, const LocalConfig& p,
                   const std::vector<std::pair<std::string, Name>>& extra) const;
  std::vector<Name> assign(const tdl::Assignment& a, const LocalConfig& p,
                           const std::vector<std::pair<std::string, Name>>& extra) const;
  std::size_t location_index(std::size_t thread, const std::string& loc) const;
  bool rendezvous_enabled(const GlobalConfig& g, const Step& s) const;

  const tdl::Program& prog_;
};

struct Run {
  std::vector<GlobalConfig> configs;
  std::vector<Step> steps;
  std::string stop_reason; // "steps exhausted", "no enabled steps"
};

Run run_random(const Simulator& sim, const GlobalConfig& g0, std::size_t steps, std::uint64_t seed);

} // namespace tdlmc::sim
