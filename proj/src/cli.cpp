#include "tdlmc/cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdlmc/simulator.hpp"
#include "tdlmc/symbolic.hpp"
#include "tdlmc/tdl2msr.hpp"

namespace tdlmc::cli {

namespace {

struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string program_path;
  std::string unsafe_path;
  std::string script_path;
  std::string format = "text";
  std::uint64_t seed = 0;
  std::size_t steps = 1000;
  std::size_t max_iterations = 200;
  std::size_t max_set_size = 100000;
  std::size_t max_atoms = 6;
  std::int64_t value_cap = 10;
  bool monadic = false;
  bool self_sync = false;
  bool no_timing = false;
  std::string verdict; // prior verdict for `oracle`
};

std::string read_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw BadInput("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Loaded {
  tdl::Program program;
  compile::Compiled compiled;
  std::vector<msr::ConstrainedConfiguration> unsafe;
};

tdl::Program load_program(const RunConfig& cfg, std::ostream& err)
{
  auto text = read_file(cfg.program_path);
  tdl::Program p;
  try {
    p = tdl::parse_program(text);
  } catch (const tdl::ParseError& e) {
    throw BadInput(cfg.program_path + ":" + std::to_string(e.pos().line) + ":" + std::to_string(e.pos().column) +
                     ": error: " + e.what());
  }
  bool failed = false;
  for (const auto& d : tdl::validate(p)) {
    err << tdl::format_diagnostic(cfg.program_path, d) << "\n";
    failed = failed || d.severity == tdl::Diagnostic::Severity::Error;
  }
  if (failed)
    throw BadInput("invalid program");
  return p;
}

// Translation, monadization when asked, and the unsafe patterns if a path
// is configured.
Loaded load(const RunConfig& cfg, std::ostream& err)
{
  Loaded l;
  l.program = load_program(cfg, err);
  if (cfg.monadic && !tdl::is_monadic(l.program))
    throw BadInput("not monadic: a thread has more than one local or a message template more than one variable");
  try {
    l.compiled = compile::translate_program(l.program, {.self_sync = cfg.self_sync});
  } catch (const compile::CompileError& e) {
    throw BadInput(e.what());
  }
  for (const auto& w : l.compiled.warnings)
    err << "warning: " << w << "\n";
  msr::Spec plain = l.compiled.spec;
  if (cfg.monadic) {
    try {
      l.compiled.spec = compile::monadize(plain);
    } catch (const compile::CompileError& e) {
      throw BadInput(e.what());
    }
  }
  if (!cfg.unsafe_path.empty()) {
    auto text = read_file(cfg.unsafe_path);
    try {
      l.unsafe = msr::parse_unsafe(plain, text);
      if (cfg.monadic)
        l.unsafe = compile::monadize_patterns(l.compiled.spec, l.unsafe);
    } catch (const msr::SyntaxError& e) {
      throw BadInput(cfg.unsafe_path + ":" + std::to_string(e.line()) + ": error: " + e.what());
    } catch (const compile::CompileError& e) {
      throw BadInput(e.what());
    }
  }
  return l;
}

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  auto l = load(cfg, err);
  auto report = sym::sbr(l.compiled.spec, l.unsafe,
                         {.max_iterations = cfg.max_iterations, .max_set_size = cfg.max_set_size});
  if (cfg.format == "json") {
    out << sym::to_json(report, l.compiled.spec, cfg.no_timing) << "\n";
  } else {
    out << sym::to_text(report, l.compiled.spec, cfg.no_timing);
    if (report.verdict == sym::Verdict::Unsafe) {
      try {
        auto replay = sym::replay_trace(report, l.compiled.spec);
        out << "concrete run:\n";
        for (std::size_t k = 0; k < replay.run.size(); ++k) {
          out << "  " << k << ": " << msr::to_string(l.compiled.spec, replay.run[k]) << "\n";
          if (k < replay.rules.size())
            out << "     -- " << replay.rules[k] << "\n";
        }
      } catch (const sym::ReplayError& e) {
        err << "replay failed: " << e.what() << "\n";
      }
    }
  }
  switch (report.verdict) {
  case sym::Verdict::Safe:
    return Safe;
  case sym::Verdict::Unsafe:
    return Unsafe;
  case sym::Verdict::BoundExceeded:
    return BoundExceeded;
  }
  return InputError;
}

int cmd_compile(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  auto l = load(cfg, err);
  out << msr::to_text(l.compiled.spec);
  return 0;
}

std::vector<std::string> script_lines(const std::string& path)
{
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find("//"); hash != std::string::npos)
      line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      lines.push_back(line);
  }
  return lines;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  auto l = load(cfg, err);
  sim::Simulator s(l.program);
  std::vector<sim::GlobalConfig> configs{s.initial()};
  std::vector<std::string> labels;
  bool hit = !l.unsafe.empty() && s.matches(configs[0], l.compiled.spec, l.unsafe);
  auto step = [&](const sim::Step& st) {
    labels.push_back(s.describe(configs.back(), st));
    configs.push_back(s.apply(configs.back(), st));
    hit = hit || (!l.unsafe.empty() && s.matches(configs.back(), l.compiled.spec, l.unsafe));
  };
  std::string stop;
  if (!cfg.script_path.empty()) {
    std::size_t n = 0;
    for (const auto& line : script_lines(cfg.script_path)) {
      ++n;
      try {
        step(s.resolve_script_line(configs.back(), line));
      } catch (const sim::StepError& e) {
        throw BadInput(cfg.script_path + ":" + std::to_string(n) + ": " + e.what());
      }
    }
    stop = "script finished";
  } else {
    auto run = sim::run_random(s, configs[0], cfg.steps, cfg.seed);
    for (const auto& st : run.steps)
      step(st);
    stop = run.stop_reason;
  }
  if (cfg.format == "json") {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < configs.size(); ++k) {
      nlohmann::ordered_json j;
      j["step"] = k;
      j["rule"] = k == 0 ? std::string() : labels[k - 1];
      j["configuration"] = s.to_string(configs[k]);
      arr.push_back(std::move(j));
    }
    out << arr.dump(2) << "\n";
  } else {
    out << "0: " << s.to_string(configs[0]) << "\n";
    for (std::size_t k = 1; k < configs.size(); ++k)
      out << k << ": " << labels[k - 1] << " : " << s.to_string(configs[k]) << "\n";
    out << "stopped: " << stop << "\n";
    if (!l.unsafe.empty())
      out << (hit ? "unsafe configuration visited" : "no unsafe configuration visited") << "\n";
  }
  return hit ? Unsafe : Safe;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  auto l = load(cfg, err);
  msr::Bounds bounds{.max_atoms = cfg.max_atoms, .value_cap = Rational(cfg.value_cap)};
  auto ex = msr::explore_bounded(l.compiled.spec, bounds, [&](const msr::Configuration& m) {
    return std::any_of(l.unsafe.begin(), l.unsafe.end(), [&](const auto& u) { return msr::member(u, m); });
  });
  const bool found = ex.goal_path.has_value();
  if (cfg.format == "json") {
    nlohmann::ordered_json j;
    j["bad_found"] = found;
    j["explored"] = ex.reached.size();
    j["truncated"] = ex.truncated;
    if (found) {
      j["path"] = nlohmann::ordered_json::array();
      for (const auto& m : *ex.goal_path)
        j["path"].push_back(msr::to_string(l.compiled.spec, m));
      j["rules"] = ex.goal_rules;
    }
    if (!cfg.verdict.empty())
      j["consistent"] = !(found && cfg.verdict == "SAFE");
    out << j.dump(2) << "\n";
  } else {
    out << "explored: " << ex.reached.size() << (ex.truncated ? " (truncated)" : "") << "\n";
    if (found) {
      out << "bad configuration found:\n";
      const auto& path = *ex.goal_path;
      for (std::size_t k = 0; k < path.size(); ++k) {
        out << "  " << k << ": " << msr::to_string(l.compiled.spec, path[k]) << "\n";
        if (k < ex.goal_rules.size())
          out << "     -- " << ex.goal_rules[k] << "\n";
      }
    } else {
      out << "no bad configuration within bounds\n";
    }
    if (!cfg.verdict.empty()) {
      bool consistent = !(found && cfg.verdict == "SAFE");
      out << (consistent ? "consistent with " : "contradicts ") << cfg.verdict << "\n";
    }
  }
  return found ? Unsafe : Safe;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  RunConfig cfg;
  CLI::App app{"Safety verification of thread definitions by symbolic backward reachability"};
  app.require_subcommand(1);
  app.add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--seed", cfg.seed, "Seed for random simulation");
  app.add_option("--steps", cfg.steps, "Simulation steps")->check(CLI::NonNegativeNumber);
  app.add_option("--max-iterations", cfg.max_iterations, "Backward reachability iterations")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-set-size", cfg.max_set_size, "Live constrained configurations")->check(CLI::PositiveNumber);
  app.add_option("--max-atoms", cfg.max_atoms, "Oracle: atoms per configuration")->check(CLI::NonNegativeNumber);
  app.add_option("--value-cap", cfg.value_cap, "Oracle: largest value")->check(CLI::NonNegativeNumber);
  app.add_flag("--monadic", cfg.monadic, "Encode constant 0 with a zero atom (monadic programs only)");
  app.add_flag("--self-sync", cfg.self_sync, "Pair send and receive rules of the same thread definition");
  app.add_flag("--no-timing", cfg.no_timing, "Print elapsed_ms as 0");

  auto* check = app.add_subcommand("check", "Decide safety of a program against unsafe patterns");
  check->add_option("program", cfg.program_path)->required();
  check->add_option("unsafe", cfg.unsafe_path)->required();
  auto* comp = app.add_subcommand("compile", "Print the MSR translation");
  comp->add_option("program", cfg.program_path)->required();
  auto* simulate = app.add_subcommand("simulate", "Run the program");
  simulate->add_option("program", cfg.program_path)->required();
  simulate->add_option("--script", cfg.script_path, "One step per line: rule @ i [, j]");
  simulate->add_option("--unsafe", cfg.unsafe_path, "Report whether a visited configuration is unsafe");
  auto* oracle = app.add_subcommand("oracle", "Bounded forward search for an unsafe configuration");
  oracle->add_option("program", cfg.program_path)->required();
  oracle->add_option("unsafe", cfg.unsafe_path)->required();
  oracle->add_option("--verdict", cfg.verdict, "Verdict of a prior check to compare with")
      ->check(CLI::IsMember({"SAFE", "UNSAFE", "BOUND_EXCEEDED"}));
  for (auto* sub : {check, comp, simulate, oracle})
    sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return InputError;
  }

  try {
    if (*check)
      return cmd_check(cfg, out, err);
    if (*comp)
      return cmd_compile(cfg, out, err);
    if (*simulate)
      return cmd_simulate(cfg, out, err);
    return cmd_oracle(cfg, out, err);
  } catch (const BadInput& e) {
    err << "error: " << e.what() << "\n";
    return InputError;
  }
}

} // namespace tdlmc::cli
