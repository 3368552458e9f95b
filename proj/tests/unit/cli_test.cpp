#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "tdlmc/cli.hpp"

namespace {

std::string corpus(const std::string& name) { return std::string(TDLMC_SOURCE_DIR) + "/corpus/" + name; }

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args)
{
  std::ostringstream out, err;
  int code = tdlmc::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& text)
{
  std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << text;
  return path;
}

std::size_t count(const std::string& s, const std::string& needle)
{
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1))
    ++n;
  return n;
}

} // namespace

TEST(Cli, CheckExitCodes)
{
  auto safe = run({"check", corpus("challenge_response.tdl"), corpus("s_u.spec")});
  EXPECT_EQ(safe.code, 0);
  EXPECT_NE(safe.out.find("verdict: SAFE"), std::string::npos);
  auto bug = run({"check", corpus("challenge_response_buggy.tdl"), corpus("s_u.spec")});
  EXPECT_EQ(bug.code, 1);
  EXPECT_NE(bug.out.find("concrete run:"), std::string::npos);
  auto bound = run({"--max-iterations", "1", "check", corpus("challenge_response.tdl"), corpus("s_u.spec")});
  EXPECT_EQ(bound.code, 2);
  EXPECT_EQ(run({"check", corpus("missing.tdl"), corpus("s_u.spec")}).code, 3);
}

TEST(Cli, JsonIsStable)
{
  std::vector<std::string> args{"--format", "json", "--no-timing", "check", corpus("challenge_response_buggy.tdl"),
                                corpus("s_u.spec")};
  auto a = run(args);
  auto b = run(args);
  EXPECT_EQ(a.code, 1);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("\"verdict\": \"UNSAFE\""), std::string::npos);
  EXPECT_NE(a.out.find("\"elapsed_ms\": 0"), std::string::npos);
}

TEST(Cli, BadArguments)
{
  EXPECT_EQ(run({"--format", "xml", "compile", corpus("challenge_response.tdl")}).code, 3);
  EXPECT_EQ(run({"check", corpus("challenge_response.tdl")}).code, 3);
  EXPECT_EQ(run({}).code, 3);
  EXPECT_EQ(run({"--max-set-size", "0", "check", corpus("challenge_response.tdl"), corpus("s_u.spec")}).code, 3);
}

TEST(Cli, Compile)
{
  auto r = run({"compile", corpus("challenge_response.tdl")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(count(r.out, "\n"), 11u); // the init line and ten rules
  auto m = run({"--monadic", "compile", corpus("challenge_response.tdl")});
  EXPECT_EQ(m.code, 3);
  EXPECT_NE(m.err.find("not monadic"), std::string::npos);
  auto empty = run({"compile", temp_file("empty.tdl", "")});
  EXPECT_EQ(empty.code, 0);
  EXPECT_EQ(empty.out, "init init\ninit: init -> fresh(x) : x>0\n");
}

TEST(Cli, CompileReportsInvalidPrograms)
{
  auto r = run({"compile", temp_file("bad.tdl", "thread T(a) { s -go-> t [b := a]; }\n")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("bad.tdl:1:"), std::string::npos);
}

TEST(Cli, SimulateStepsZero)
{
  auto r = run({"simulate", "--steps", "0", corpus("challenge_response.tdl")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0: {0,1} <init_M,0>\nstopped: steps exhausted\n");
}

TEST(Cli, SimulateIsReproducible)
{
  std::vector<std::string> args{"--seed", "9", "--steps", "50", "--format", "json", "simulate",
                                corpus("challenge_response.tdl")};
  EXPECT_EQ(run(args).out, run(args).out);
}

TEST(Cli, SimulateTwoCounterScript)
{
  auto r = run({"simulate", "--script", corpus("two_counter_machine.script"), corpus("two_counter_machine.tdl")});
  EXPECT_EQ(r.code, 0) << r.err;
  // The final zero test is answered No.
  EXPECT_NE(r.out.find("Last.AckNZ->Idle|CM.zw1->ctl#1"), std::string::npos);
  EXPECT_EQ(r.out.find("Last.AckZ->Idle"), std::string::npos);
}

TEST(Cli, SimulateScriptErrors)
{
  auto script = temp_file("bad.script", "Main.create->init_M#0 @ 0\n");
  auto r = run({"simulate", "--script", script, corpus("challenge_response.tdl")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("bad.script:1"), std::string::npos);
}

TEST(Cli, SimulateUnsafe)
{
  auto script = temp_file("mutex.script", "Main.m0->m1 @ 0\n"
                                          "Main.m1->m2 @ 0\n"
                                          "Main.m2->m2#0 @ 0\n"
                                          "Main.m2->m2#1 @ 0\n"
                                          "Main.m2->m2#0 @ 0\n"
                                          "Proc.idle->crit|Lock.free->taken @ 2, 1\n"
                                          "Proc.idle->crit|Lock.free->taken @ 4, 3\n");
  auto r = run({"simulate", "--script", script, "--unsafe", corpus("monadic/lock_mutex.spec"),
                corpus("monadic/lock_mutex_buggy.tdl")});
  EXPECT_EQ(r.code, 1) << r.err << r.out;
  auto fine = run({"simulate", "--steps", "200", "--unsafe", corpus("monadic/lock_mutex.spec"),
                   corpus("monadic/lock_mutex.tdl")});
  EXPECT_EQ(fine.code, 0);
  EXPECT_NE(fine.out.find("no unsafe configuration visited"), std::string::npos);
}

TEST(Cli, Oracle)
{
  auto safe = run({"oracle", "--verdict", "SAFE", corpus("challenge_response.tdl"), corpus("s_u.spec")});
  EXPECT_EQ(safe.code, 0);
  EXPECT_NE(safe.out.find("consistent with SAFE"), std::string::npos);
  auto bug = run({"--max-atoms", "6", "--value-cap", "10", "oracle", corpus("challenge_response_buggy.tdl"),
                  corpus("s_u.spec")});
  EXPECT_EQ(bug.code, 1);
  EXPECT_NE(bug.out.find("bad configuration found"), std::string::npos);
  auto none = run({"--max-atoms", "0", "oracle", corpus("challenge_response_buggy.tdl"), corpus("s_u.spec")});
  EXPECT_EQ(none.code, 0);
}

TEST(Cli, MonadicCorpus)
{
  for (const char* name : {"lock_mutex", "ping_pong"}) {
    auto r = run({"--monadic", "check", corpus(std::string("monadic/") + name + ".tdl"),
                  corpus(std::string("monadic/") + name + ".spec")});
    EXPECT_EQ(r.code, 0) << name << r.err;
  }
  auto bug = run({"--monadic", "check", corpus("monadic/lock_mutex_buggy.tdl"), corpus("monadic/lock_mutex.spec")});
  EXPECT_EQ(bug.code, 1);
}
