#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oracle/two_counter.hpp"
#include "tdlmc/tdl2msr.hpp"

using namespace tdlmc;

namespace {

std::string read_corpus(const std::string& name)
{
  std::ifstream in(std::string(TDLMC_SOURCE_DIR) + "/corpus/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST(TwoCounter, InterpreterBasics)
{
  using K = oracle::CounterOp;
  auto t = oracle::interpret({{K::Inc, 0}, {K::Inc, 0}, {K::Dec, 0}, {K::Zero, 0}, {K::Dec, 1}});
  EXPECT_EQ(t.values.back(), (std::array<long, 2>{1, 0}));
  EXPECT_EQ(t.zero_answers[3], false);
  EXPECT_EQ(t.zero_answers[4], true);
  EXPECT_EQ(t.zero_answers[0], std::nullopt);
}

TEST(TwoCounter, IncIncDecZeroAnswersNo)
{
  auto p = tdl::parse_program(read_corpus("two_counter_machine.tdl"));
  using K = oracle::CounterOp;
  oracle::TwoCounterDriver d(p);
  std::optional<bool> answer;
  for (auto op : {K{K::Inc, 0}, K{K::Inc, 0}, K{K::Dec, 0}})
    ASSERT_EQ(d.apply(op, answer), "");
  ASSERT_EQ(d.apply({K::Zero, 0}, answer), "");
  EXPECT_EQ(answer, false);
  EXPECT_EQ(d.observed(), (std::array<long, 2>{1, 0}));
}

TEST(TwoCounter, ScriptFileReplaysTheDriver)
{
  auto p = tdl::parse_program(read_corpus("two_counter_machine.tdl"));
  using K = oracle::CounterOp;
  oracle::TwoCounterDriver d(p);
  std::optional<bool> answer;
  for (auto op : {K{K::Inc, 0}, K{K::Inc, 0}, K{K::Dec, 0}, K{K::Zero, 0}})
    ASSERT_EQ(d.apply(op, answer), "");
  std::istringstream in(read_corpus("two_counter_machine.script"));
  sim::Simulator s(p);
  auto g = s.initial();
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '/')
      continue;
    ASSERT_LT(n, d.script().size());
    EXPECT_EQ(line, d.script()[n]);
    g = s.apply(g, s.resolve_script_line(g, line));
    ++n;
  }
  EXPECT_EQ(n, d.script().size());
  EXPECT_TRUE(sim::same_configuration(g, d.config()));
}

TEST(TwoCounter, RandomScriptsMatchTheInterpreter)
{
  auto p = tdl::parse_program(read_corpus("two_counter_machine.tdl"));
  std::mt19937_64 rng(21);
  for (int iter = 0; iter < 20; ++iter) {
    auto ops = oracle::random_ops(rng, 15);
    EXPECT_EQ(oracle::two_counter_case(p, ops), "");
  }
}

TEST(TwoCounter, CompilesAndCorresponds)
{
  auto p = tdl::parse_program(read_corpus("two_counter_machine.tdl"));
  auto c = compile::translate_program(p);
  EXPECT_FALSE(tdl::is_monadic(p));
  EXPECT_EQ(msr::check_rule(c.spec, c.spec.rules.back()), std::nullopt);
}
