#include <algorithm>
#include <cctype>

#include "tdlmc/tdl.hpp"

namespace tdlmc::tdl {

bool Guard::is_trivial() const
{
  return std::all_of(conjuncts.begin(), conjuncts.end(),
                     [](const GuardAtom& g) { return g.kind == GuardAtom::Kind::True; });
}

const Binding* Assignment::find(std::string_view target) const
{
  for (const auto& b : bindings)
    if (b.target == target)
      return &b;
  return nullptr;
}

std::optional<std::size_t> ThreadDef::local_index(std::string_view var) const
{
  for (std::size_t i = 0; i < locals.size(); ++i)
    if (locals[i] == var)
      return i;
  return std::nullopt;
}

const ThreadDef* Program::find_thread(std::string_view name) const
{
  for (const auto& t : threads)
    if (t.name == name)
      return &t;
  return nullptr;
}

std::optional<std::size_t> Program::thread_index(std::string_view name) const
{
  for (std::size_t i = 0; i < threads.size(); ++i)
    if (threads[i].name == name)
      return i;
  return std::nullopt;
}

std::optional<std::size_t> Program::constant_index(std::string_view name) const
{
  for (std::size_t i = 0; i < constants.size(); ++i)
    if (constants[i] == name)
      return i + 1;
  return std::nullopt;
}

std::string rule_name(const ThreadDef& thread, const Rule& rule)
{
  return thread.name + "." + rule.from + "->" + rule.to;
}

namespace {

struct Token {
  enum class Kind { Ident, Number, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  SourcePos pos;
};

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run()
  {
    std::vector<Token> out;
    while (true) {
      skip_space();
      SourcePos pos{line_, col_};
      if (i_ >= text_.size()) {
        out.push_back({Token::Kind::End, "", pos});
        return out;
      }
      char c = text_[i_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = i_;
        while (i_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[i_])) || text_[i_] == '_'))
          advance();
        out.push_back({Token::Kind::Ident, std::string(text_.substr(start, i_ - start)), pos});
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t start = i_;
        while (i_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i_])))
          advance();
        out.push_back({Token::Kind::Number, std::string(text_.substr(start, i_ - start)), pos});
        continue;
      }
      static const char* const two[] = {"->", ":=", "!="};
      bool matched = false;
      for (const char* p : two) {
        if (text_.substr(i_, 2) == p) {
          advance();
          advance();
          out.push_back({Token::Kind::Punct, p, pos});
          matched = true;
          break;
        }
      }
      if (matched)
        continue;
      if (std::string_view("{}()[];,/=-!?*").find(c) != std::string_view::npos) {
        advance();
        out.push_back({Token::Kind::Punct, std::string(1, c), pos});
        continue;
      }
      throw ParseError(pos, std::string("unexpected character '") + c + "'");
    }
  }

private:
  void advance()
  {
    if (text_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_space()
  {
    while (i_ < text_.size()) {
      char c = text_[i_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#' || (c == '/' && i_ + 1 < text_.size() && text_[i_ + 1] == '/')) {
        while (i_ < text_.size() && text_[i_] != '\n')
          advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Program run()
  {
    bool seen_init = false;
    while (!at_end()) {
      const Token& t = peek();
      if (is_ident("const")) {
        next();
        do {
          const Token& c = expect_ident("constant name");
          if (c.text == "bot" || c.text == "new")
            throw ParseError(c.pos, "'" + c.text + "' is reserved");
          prog_.constants.push_back(c.text);
        } while (accept(","));
        expect(";");
      } else if (is_ident("thread")) {
        prog_.threads.push_back(parse_thread());
      } else if (is_ident("init")) {
        if (seen_init)
          throw ParseError(t.pos, "duplicate init block");
        seen_init = true;
        parse_init();
      } else {
        throw ParseError(t.pos, "expected 'const', 'thread' or 'init', found '" + describe(t) + "'");
      }
    }
    check_init();
    return std::move(prog_);
  }

private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is_punct(std::string_view p, std::size_t k = 0) const
  {
    return peek(k).kind == Token::Kind::Punct && peek(k).text == p;
  }
  bool is_ident(std::string_view s, std::size_t k = 0) const
  {
    return peek(k).kind == Token::Kind::Ident && peek(k).text == s;
  }
  bool accept(std::string_view p)
  {
    if (!is_punct(p))
      return false;
    next();
    return true;
  }
  const Token& expect(std::string_view p)
  {
    if (!is_punct(p))
      throw ParseError(peek().pos, "expected '" + std::string(p) + "', found '" + describe(peek()) + "'");
    return next();
  }
  const Token& expect_ident(std::string_view what)
  {
    if (peek().kind != Token::Kind::Ident)
      throw ParseError(peek().pos, "expected " + std::string(what) + ", found '" + describe(peek()) + "'");
    return next();
  }
  static std::string describe(const Token& t) { return t.kind == Token::Kind::End ? "end of input" : t.text; }

  ThreadDef parse_thread()
  {
    ThreadDef th;
    th.pos = next().pos;
    th.name = expect_ident("thread name").text;
    expect("(");
    if (!is_punct(")")) {
      do {
        th.locals.push_back(expect_ident("local variable").text);
      } while (accept(","));
    }
    expect(")");
    expect("{");
    std::optional<std::string> explicit_initial;
    while (!accept("}")) {
      if (is_ident("initial")) {
        next();
        explicit_initial = expect_ident("location").text;
        expect(";");
        continue;
      }
      th.rules.push_back(parse_rule(th));
    }
    if (explicit_initial)
      th.initial = *explicit_initial;
    else if (!th.rules.empty())
      th.initial = th.rules.front().from;
    else
      throw ParseError(th.pos, "thread '" + th.name + "' has no rules and no 'initial' location");
    auto add_loc = [&](const std::string& l) {
      if (std::find(th.locations.begin(), th.locations.end(), l) == th.locations.end())
        th.locations.push_back(l);
    };
    add_loc(th.initial);
    for (const auto& r : th.rules) {
      add_loc(r.from);
      add_loc(r.to);
    }
    return th;
  }

  // Identifiers in scope: thread locals, the receive template, declared constants.
  Expr resolve(const ThreadDef& th, const Rule& r, const Token& t, bool allow_template) const
  {
    if (t.text == "bot")
      return Expr::bottom();
    if (is_variable(th, r, t.text, allow_template))
      return Expr::var(t.text);
    if (prog_.constant_index(t.text))
      return Expr::constant(t.text);
    throw unknown(th, r, t);
  }

  static bool is_variable(const ThreadDef& th, const Rule& r, const std::string& name, bool allow_template)
  {
    if (allow_template && std::find(r.message.begin(), r.message.end(), name) != r.message.end())
      return true;
    return th.local_index(name).has_value();
  }

  static ParseError unknown(const ThreadDef& th, const Rule& r, const Token& t)
  {
    return ParseError(t.pos, "unknown identifier '" + t.text + "' in rule " + th.name + "." + r.from +
                                 "->" + (r.to.empty() ? "?" : r.to));
  }

  void require_variable(const ThreadDef& th, const Rule& r, const Token& t, bool allow_template) const
  {
    if (is_variable(th, r, t.text, allow_template))
      return;
    if (prog_.constant_index(t.text) || t.text == "bot")
      throw ParseError(t.pos, "'" + t.text + "' is not a variable");
    throw unknown(th, r, t);
  }

  Rule parse_rule(const ThreadDef& th)
  {
    Rule r;
    r.pos = peek().pos;
    r.from = expect_ident("source location").text;
    expect("-");
    bool comm = false;
    if ((is_ident("send") || is_ident("recv")) && peek(1).kind == Token::Kind::Ident) {
      r.kind = next().text == "send" ? RuleKind::Send : RuleKind::Receive;
      comm = true;
    } else if (peek().kind == Token::Kind::Ident && (is_punct("!", 1) || is_punct("?", 1))) {
      r.kind = is_punct("!", 1) ? RuleKind::Send : RuleKind::Receive;
      comm = true;
    }
    std::optional<Token> channel;
    std::vector<Token> message;
    if (comm) {
      channel = expect_ident("channel expression");
      expect(r.kind == RuleKind::Send ? "!" : "?");
      expect("(");
      if (!is_punct(")")) {
        do {
          message.push_back(expect_ident("message variable"));
          r.message.push_back(message.back().text);
        } while (accept(","));
      }
      expect(")");
      r.label = channel->text + (r.kind == RuleKind::Send ? "!" : "?");
    } else {
      r.label = expect_ident("action label").text;
    }
    expect("->");
    r.to = expect_ident("target location").text;
    if (comm) {
      r.channel = resolve(th, r, *channel, false);
      if (r.kind == RuleKind::Send)
        for (const auto& m : message)
          require_variable(th, r, m, false);
    }
    if (accept("["))
      parse_body(th, r, comm);
    expect(";");
    return r;
  }

  void parse_body(const ThreadDef& th, Rule& r, bool comm)
  {
    bool templ = r.kind == RuleKind::Receive;
    if (is_ident("run")) {
      if (comm)
        throw ParseError(peek().pos, "thread creation cannot be attached to a communication");
      next();
      r.kind = RuleKind::Create;
      r.created = expect_ident("thread name").text;
      if (is_ident("with")) {
        next();
        do {
          const Token& target = expect_ident("child local variable");
          expect(":=");
          Expr src = resolve(th, r, expect_ident("expression"), false);
          r.assign.bindings.push_back({target.text, src});
        } while (accept(","));
      }
      expect("]");
      return;
    }
    bool saw_guard = false;
    bool saw_assign = false;
    bool after_slash = false;
    while (true) {
      if (is_ident("true") && !is_punct(":=", 1) && !is_punct("=", 1) && !is_punct("!=", 1)) {
        if (after_slash)
          throw ParseError(peek().pos, "guard after '/' in rule body");
        next();
        r.guard.conjuncts.push_back({GuardAtom::Kind::True, {}, Expr::bottom()});
        saw_guard = true;
      } else {
        const Token& left = expect_ident("guard or assignment");
        if (is_punct("=") || is_punct("!=")) {
          if (after_slash)
            throw ParseError(left.pos, "guard after '/' in rule body");
          bool neq = next().text == "!=";
          require_variable(th, r, left, templ);
          Expr rhs = resolve(th, r, expect_ident("expression"), templ);
          r.guard.conjuncts.push_back({neq ? GuardAtom::Kind::Neq : GuardAtom::Kind::Eq, left.text, rhs});
          saw_guard = true;
        } else if (accept(":=")) {
          require_variable(th, r, left, templ);
          if (is_ident("new")) {
            const Token& nt = next();
            if (comm || saw_guard || saw_assign || after_slash || !is_punct("]"))
              throw ParseError(nt.pos, "name generation must be the whole body of an internal rule");
            r.kind = RuleKind::NameGen;
            r.fresh_target = left.text;
            next();
            return;
          }
          if (saw_guard && !after_slash)
            throw ParseError(left.pos, "separate guard and assignment with '/'");
          Expr rhs = resolve(th, r, expect_ident("expression"), templ);
          r.assign.bindings.push_back({left.text, rhs});
          saw_assign = true;
        } else {
          throw ParseError(peek().pos, "expected '=', '!=' or ':=' after '" + left.text + "'");
        }
      }
      if (accept(","))
        continue;
      if (is_punct("/")) {
        if (after_slash || saw_assign)
          throw ParseError(peek().pos, "unexpected '/' in rule body");
        next();
        after_slash = true;
        continue;
      }
      expect("]");
      return;
    }
  }

  void parse_init()
  {
    next();
    expect("{");
    if (accept("}"))
      return;
    do {
      InitEntry e;
      e.pos = peek().pos;
      if (peek().kind == Token::Kind::Number) {
        e.count = std::stoul(next().text);
        expect("*");
      }
      e.thread = expect_ident("thread name").text;
      std::vector<Token> args;
      expect("(");
      if (!is_punct(")")) {
        do {
          args.push_back(expect_ident("initial value"));
        } while (accept(","));
      }
      expect(")");
      if (accept("*")) {
        if (peek().kind != Token::Kind::Number)
          throw ParseError(peek().pos, "expected multiplicity after '*'");
        e.count = std::stoul(next().text);
      }
      for (const auto& a : args)
        if (a.text != "bot")
          throw ParseError(a.pos, "initial local values must be 'bot'");
      init_arity_.push_back(args.size());
      prog_.init.push_back(e);
    } while (accept(","));
    expect("}");
  }

  void check_init() const
  {
    for (std::size_t i = 0; i < prog_.init.size(); ++i) {
      const auto& e = prog_.init[i];
      const ThreadDef* th = prog_.find_thread(e.thread);
      if (!th)
        throw ParseError(e.pos, "unknown thread '" + e.thread + "' in init block");
      if (init_arity_[i] != th->locals.size())
        throw ParseError(e.pos, "thread '" + e.thread + "' expects " + std::to_string(th->locals.size()) +
                                    " initial values, got " + std::to_string(init_arity_[i]));
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Program prog_;
  std::vector<std::size_t> init_arity_;
};

} // namespace

Program parse_program(std::string_view text)
{
  Lexer lexer(text);
  Parser parser(lexer.run());
  return parser.run();
}

bool is_monadic(const Program& program)
{
  for (const auto& th : program.threads) {
    if (th.locals.size() > 1)
      return false;
    for (const auto& r : th.rules)
      if (r.message.size() > 1)
        return false;
  }
  return true;
}

} // namespace tdlmc::tdl
