// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oracle/correspondence.hpp"
#include "oracle/ground_pre.hpp"
#include "oracle/msr_step.hpp"
#include "oracle/order_types.hpp"
#include "oracle/random_nc.hpp"
#include "oracle/rule_equiv.hpp"
#include "oracle/two_counter.hpp"
#include "tdlmc/cli.hpp"
#include "tdlmc/symbolic.hpp"
#include "tdlmc/tdl2msr.hpp"

using namespace tdlmc;
using Clock = std::chrono::steady_clock;

namespace {

std::string corpus_path(const std::string& name) { return std::string(TDLMC_SOURCE_DIR) + "/corpus/" + name; }

std::string read_corpus(const std::string& name)
{
  std::ifstream in(corpus_path(name));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

void report(int n, bool ok, const std::string& detail)
{
  std::cout << (ok ? "PASS" : "FAIL") << " " << n << ": " << detail << std::endl;
  if (!ok)
    ++failures;
}

struct Loaded {
  tdl::Program program;
  compile::Compiled compiled;
  std::vector<msr::ConstrainedConfiguration> unsafe;
};

Loaded load(const std::string& program)
{
  Loaded l;
  l.program = tdl::parse_program(read_corpus(program));
  l.compiled = compile::translate_program(l.program);
  l.unsafe = msr::parse_unsafe(l.compiled.spec, read_corpus("s_u.spec"));
  return l;
}

void challenge_response_safe()
{
  auto start = Clock::now();
  auto l = load("challenge_response.tdl");
  auto a = sym::sbr(l.compiled.spec, l.unsafe, {.threads = 1});
  auto b = sym::sbr(l.compiled.spec, l.unsafe, {.threads = 4});
  auto c = sym::sbr(l.compiled.spec, l.unsafe);
  const double elapsed = seconds_since(start);
  const bool stable = sym::to_json(a, l.compiled.spec, true) == sym::to_json(b, l.compiled.spec, true) &&
                      sym::to_json(a, l.compiled.spec, true) == sym::to_json(c, l.compiled.spec, true);
  std::ostringstream out, err;
  int code = cli::run({"check", corpus_path("challenge_response.tdl"), corpus_path("s_u.spec")}, out, err);
  std::ostringstream d;
  d << "challenge-response " << sym::to_string(a.verdict) << " (check exit " << code << "), iterations "
    << a.iterations << ", fixpoint size " << a.fixpoint_size << " live / " << a.generated
    << " generated (reference run: 18 iterations / 2590 configurations), stable over 3 runs with 1/4/default threads: " << (stable ? "yes" : "no")
    << ", " << elapsed << " s";
  report(1, a.verdict == sym::Verdict::Safe && code == 0 && stable && elapsed < 600, d.str());
}

void worked_pre_example()
{
  auto spec = msr::parse_spec("rv: s(u,m) | r(t,v) -> p(u2,m2) | r(t2,v2) : u=t, m2=v, v2=v, u2=u, t2=t\n"
                              "pad: f(y) -> f(y2) : y2=y\n");
  auto cc = [&](const std::string& text) { return msr::parse_unsafe(spec, "unsafe { " + text + " }").at(0); };
  auto m = cc("p(x,z) | f(y) : z>y");
  auto pre = sym::pre_rule(spec.rules[0], m);
  // The published second result reads u=t, x>y. x is unconstrained in M
  // and in the rule, so the pre-image carries M's own z>y.
  std::vector<msr::ConstrainedConfiguration> expected = {
      cc("s(u,m) | r(t,v) | f(y) : u=t, v>y").normalized(),
      cc("s(u,m) | r(t,v) | p(x,z) | f(y) : u=t, z>y").normalized(),
  };
  bool ok = pre.size() == expected.size();
  for (const auto& e : expected)
    ok = ok && std::find(pre.begin(), pre.end(), e) != pre.end();
  auto printed = cc("s(u,m) | r(t,v) | p(x,z) | f(y) : u=t, x>y").normalized();
  const bool printed_differs = std::find(pre.begin(), pre.end(), printed) == pre.end();
  std::ostringstream d;
  d << "worked Pre example returns " << pre.size() << " configurations:";
  for (const auto& p : pre)
    d << " [" << msr::to_string(spec, p) << "]";
  d << "; equal to the published pair with the second constraint read as z>y (published x>y"
    << (printed_differs ? " is not a pre-image" : "") << ")";
  report(2, ok, d.str());
}

void duality()
{
  auto start = Clock::now();
  std::size_t mismatches = 0, predecessors = 0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::size_t n = 0;
    auto e = oracle::duality_case(seed, [](const auto& r, const auto& s) { return sym::sym_pre(r, s); }, &n);
    predecessors += n;
    if (!e.empty()) {
      ++mismatches;
      if (first.empty())
        first = "seed " + std::to_string(seed) + ": " + e;
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << "Pre/Post duality: 100 cases, " << mismatches << " mismatches, " << predecessors
    << " ground predecessors checked, " << elapsed << " s";
  if (!first.empty())
    d << "; " << first;
  report(3, mismatches == 0 && elapsed < 300, d.str());
}

void correspondence()
{
  auto l = load("challenge_response.tdl");
  auto hand = msr::parse_spec(read_corpus("challenge_response.expected.msr"));
  const std::string same = oracle::compare_specs(l.compiled.spec, hand);
  std::size_t fwd = 0, bwd = 0;
  std::string first;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    if (auto e = oracle::forward_correspondence(l.program, l.compiled, 20, seed); !e.empty()) {
      ++fwd;
      if (first.empty())
        first = "forward seed " + std::to_string(seed) + ": " + e;
    }
    if (auto e = oracle::backward_correspondence(l.program, l.compiled, 20, seed); !e.empty()) {
      ++bwd;
      if (first.empty())
        first = "backward seed " + std::to_string(seed) + ": " + e;
    }
  }
  std::ostringstream d;
  d << "run correspondence: translation equals the hand translation up to renaming: " << (same.empty() ? "yes" : same)
    << "; 200 forward runs, " << fwd << " failures; 200 backward runs, " << bwd << " failures";
  if (!first.empty())
    d << "; " << first;
  report(4, same.empty() && fwd == 0 && bwd == 0, d.str());
}

void two_counter()
{
  auto p = tdl::parse_program(read_corpus("two_counter_machine.tdl"));
  std::mt19937_64 rng(2024);
  std::size_t mismatches = 0, ops = 0;
  std::string first;
  for (int k = 0; k < 50; ++k) {
    auto script = oracle::random_ops(rng, 15);
    ops += script.size();
    if (auto e = oracle::two_counter_case(p, script); !e.empty()) {
      ++mismatches;
      if (first.empty())
        first = e;
    }
  }
  std::ostringstream d;
  d << "two counter machine: 50 scripts, " << ops << " instructions, " << mismatches << " mismatches";
  if (!first.empty())
    d << "; " << first;
  report(5, mismatches == 0, d.str());
}

// Every atom over `n` variables and the constants, excluding constant-only
// and reflexive atoms.
std::vector<AtomicConstraint> atom_universe(unsigned n, const std::vector<int>& consts)
{
  std::vector<Term> terms;
  for (unsigned i = 0; i < n; ++i)
    terms.push_back(Term::var(Var{i}));
  for (int c : consts)
    terms.push_back(Term::constant(Rational(c)));
  std::vector<AtomicConstraint> out;
  for (std::size_t i = 0; i < terms.size(); ++i)
    for (std::size_t j = 0; j < terms.size(); ++j) {
      if (i == j || (terms[i].is_constant() && terms[j].is_constant()))
        continue;
      if (i < j)
        out.push_back(AtomicConstraint::eq(terms[i], terms[j]));
      out.push_back(AtomicConstraint::gt(terms[i], terms[j]));
    }
  return out;
}

// Checks satisfiability, entailment of `other` and projection onto `keep`
// against the order-type oracle; returns "" on agreement.
std::string nc_case(unsigned n, const std::vector<AtomicConstraint>& atoms,
                    const std::vector<AtomicConstraint>& other, const std::vector<unsigned>& keep)
{
  NCConstraint k = NCConstraint::of(atoms);
  for (unsigned i = 0; i < n; ++i)
    k.declare(Var{i});
  if (k.is_satisfiable() != oracle::satisfiable({n, atoms}))
    return "is_satisfiable on " + k.to_string();
  if (k.entails(NCConstraint::of(other)) != oracle::entails(n, atoms, other))
    return "entails on " + k.to_string() + " vs " + NCConstraint::of(other).to_string();
  std::vector<Var> drop;
  for (unsigned i = 0; i < n; ++i)
    if (std::find(keep.begin(), keep.end(), i) == keep.end())
      drop.push_back(Var{i});
  auto e = k.eliminate(drop);
  if (!k.is_satisfiable())
    return e.is_satisfiable() ? "eliminate of unsat " + k.to_string() : "";
  if (!oracle::is_projection(n, atoms, keep, e.closure_atoms()))
    return "eliminate on " + k.to_string() + " gave " + e.to_string();
  return "";
}

void nc_solver()
{
  auto start = Clock::now();
  const std::vector<int> consts{0, 1, 2};
  std::size_t exhaustive = 0, mismatches = 0;
  std::string first;
  auto check = [&](unsigned n, const std::vector<AtomicConstraint>& atoms, const std::vector<AtomicConstraint>& other,
                   const std::vector<unsigned>& keep) {
    if (auto e = nc_case(n, atoms, other, keep); !e.empty()) {
      ++mismatches;
      if (first.empty())
        first = e;
    }
  };
  // Atom sets in order of size, 5000 per variable count.
  for (unsigned n = 1; n <= 4; ++n) {
    auto u = atom_universe(n, consts);
    std::size_t budget = 5000, done = 0;
    for (std::size_t size = 0; size <= u.size() && done < budget; ++size) {
      std::vector<std::size_t> idx(size);
      for (std::size_t i = 0; i < size; ++i)
        idx[i] = i;
      while (done < budget) {
        std::vector<AtomicConstraint> atoms;
        for (auto i : idx)
          atoms.push_back(u[i]);
        std::vector<AtomicConstraint> other{u[done % u.size()], u[(done * 7 + 3) % u.size()]};
        std::vector<unsigned> keep;
        for (unsigned i = 0; i < n; ++i)
          if ((done >> i) & 1)
            keep.push_back(i);
        check(n, atoms, other, keep);
        ++done;
        ++exhaustive;
        // Next combination of `size` indices.
        std::size_t i = size;
        while (i > 0 && idx[i - 1] == u.size() - size + i - 1)
          --i;
        if (i == 0)
          break;
        ++idx[i - 1];
        for (std::size_t j = i; j < size; ++j)
          idx[j] = idx[j - 1] + 1;
      }
    }
  }
  std::mt19937 rng(99);
  const std::vector<int> wide{0, 1, 2, 3};
  for (int iter = 0; iter < 1000; ++iter) {
    unsigned n = 5 + iter % 2;
    auto atoms = oracle::random_atoms(rng, n, 3 + iter % 6, wide);
    auto other = oracle::random_atoms(rng, n, 1 + iter % 2, wide);
    std::vector<unsigned> keep;
    for (unsigned i = 0; i < n; ++i)
      if (rng() % 2)
        keep.push_back(i);
    check(n, atoms, other, keep);
  }
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << "NC solver vs order types: " << exhaustive << " enumerated cases (<=4 vars, constants 0..2) + 1000 random (5-6 vars), "
    << mismatches << " mismatches, " << elapsed << " s";
  if (!first.empty())
    d << "; " << first;
  report(6, mismatches == 0 && exhaustive <= 20000 && elapsed < 120, d.str());
}

void buggy_variant()
{
  auto l = load("challenge_response_buggy.tdl");
  std::ostringstream out, err;
  int code = cli::run({"check", corpus_path("challenge_response_buggy.tdl"), corpus_path("s_u.spec")}, out, err);
  auto report7 = sym::sbr(l.compiled.spec, l.unsafe);
  bool replay_ok = false;
  std::size_t run_length = 0;
  std::string problem;
  try {
    auto replay = sym::replay_trace(report7, l.compiled.spec);
    run_length = replay.run.size();
    replay_ok = !replay.run.empty() && replay.run.front() == l.compiled.spec.initial.at(0);
    for (std::size_t k = 0; replay_ok && k + 1 < replay.run.size(); ++k)
      if (!oracle::find_step(l.compiled.spec, replay.run[k], replay.run[k + 1])) {
        replay_ok = false;
        problem = "step " + std::to_string(k) + " is not an MSR step";
      }
    bool bad = false;
    for (const auto& u : l.unsafe)
      bad = bad || msr::member(u, replay.run.back());
    if (!bad)
      problem = "last configuration is not unsafe";
    replay_ok = replay_ok && bad;
  } catch (const sym::ReplayError& e) {
    problem = e.what();
  }
  std::ostringstream oout, oerr;
  int oracle_code = cli::run({"--max-atoms", "6", "--value-cap", "10", "oracle",
                              corpus_path("challenge_response_buggy.tdl"), corpus_path("s_u.spec")},
                             oout, oerr);
  std::ostringstream cout_, cerr_;
  int clean_code = cli::run({"--max-atoms", "6", "--value-cap", "10", "oracle", "--verdict", "SAFE",
                             corpus_path("challenge_response.tdl"), corpus_path("s_u.spec")},
                            cout_, cerr_);
  std::ostringstream d;
  d << "buggy responder: check exit " << code << " (" << sym::to_string(report7.verdict) << "), replayed run of "
    << run_length << " configurations " << (replay_ok ? "is legal and ends unsafe" : "FAILED " + problem)
    << ", oracle A=6 V=10 exit " << oracle_code << " (bad configuration "
    << (oracle_code == 1 ? "found" : "not found") << "); original program: oracle exit " << clean_code;
  report(7, code == 1 && report7.verdict == sym::Verdict::Unsafe && replay_ok && oracle_code == 1 && clean_code == 0,
         d.str());
}

void monadic()
{
  std::ostringstream d;
  bool ok = true;
  d << "monadic corpus with --monadic:";
  for (const char* name : {"lock_mutex", "ping_pong"}) {
    std::string base = std::string("monadic/") + name;
    std::ostringstream out, err;
    int code = cli::run({"--monadic", "--format", "json", "check", corpus_path(base + ".tdl"),
                         corpus_path(base + ".spec")},
                        out, err);
    auto j = nlohmann::json::parse(out.str(), nullptr, false);
    d << " " << name << " exit " << code;
    if (!j.is_discarded())
      d << " (" << j.value("verdict", "?") << ", " << j.value("iterations", 0) << " iterations)";
    ok = ok && (code == 0 || code == 1);
  }
  report(8, ok, d.str());
}

} // namespace

int main()
{
  challenge_response_safe();
  worked_pre_example();
  duality();
  correspondence();
  two_counter();
  nc_solver();
  buggy_variant();
  monadic();
  return failures == 0 ? 0 : 1;
}
