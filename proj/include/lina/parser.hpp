#pragma once

// Parser for the surface syntax. Parenthesized, line-break insensitive;
// `;;` starts a line comment. The grammar keeps every operand a bare
// variable name, so A-normal form is enforced by construction and a
// compound operand is reported as an ANF violation.
//
//   program := def*
//   def     := (def NAME (param* ; param*) (ty* ; ty*) expr)
//   param   := (NAME ty)
//   ty      := R | (tup ty*)
//   expr    := (ret (NAME* ; NAME*)) | (let (param* ; param*) expr expr)
//            | (untup (param* ;) NAME expr) | (untup (; param*) NAME expr)
//            | (call NAME (NAME* ; NAME*))
//            | NAME | NUMBER | (tup NAME*) | (ltup NAME*)
//            | (sin NAME) | (cos NAME) | (exp NAME) | (add NAME NAME) | (mul NAME NAME)
//            | (lzero ty) | (ladd NAME NAME) | (lscale NAME NAME)
//            | (dup NAME) | (drop expr)
//
// A bare NAME in expression position resolves to a non-linear or linear
// variable reference according to the side it was bound on. Rebinding a
// name visible in an enclosing scope is rejected (no shadowing).

#include <cctype>
#include <charconv>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lina/ir.hpp"

namespace lina {

// Byte offsets into the input text.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, SourceSpan span)
      : std::runtime_error(msg), span_(span) {}
  const SourceSpan& span() const { return span_; }

 private:
  SourceSpan span_;
};

namespace detail {

enum class TokKind { LParen, RParen, Semi, Atom, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  SourceSpan span;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace((unsigned char)c)) {
        ++pos_;
      } else if (c == ';' && pos_ + 1 < src_.size() && src_[pos_ + 1] == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
    std::size_t begin = pos_;
    if (pos_ >= src_.size()) {
      tok_ = {TokKind::End, "", {begin, begin}};
      return;
    }
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      tok_ = {TokKind::LParen, "(", {begin, pos_}};
    } else if (c == ')') {
      ++pos_;
      tok_ = {TokKind::RParen, ")", {begin, pos_}};
    } else if (c == ';') {
      ++pos_;
      tok_ = {TokKind::Semi, ";", {begin, pos_}};
    } else {
      while (pos_ < src_.size() && !std::isspace((unsigned char)src_[pos_]) &&
             src_[pos_] != '(' && src_[pos_] != ')' && src_[pos_] != ';')
        ++pos_;
      tok_ = {TokKind::Atom, std::string(src_.substr(begin, pos_ - begin)), {begin, pos_}};
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

// Binding side of a name in scope.
enum class Side { Nl, Lin };

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  Program parse() {
    Program p;
    while (lex_.peek().kind != TokKind::End) {
      FuncDef d = parse_def(p);
      if (p.has(d.name))
        throw ParseError("duplicate function name '" + d.name + "'", def_name_span_);
      p.defs.push_back(std::move(d));
    }
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, const Token& at) {
    throw ParseError(msg, at.span);
  }

  Token expect(TokKind kind, const char* what) {
    Token t = lex_.take();
    if (t.kind != kind) fail(std::string("expected ") + what, t);
    return t;
  }

  bool is_number_text(const std::string& s, double& out) {
    std::string_view v = s;
    if (!v.empty() && v[0] == '+') v.remove_prefix(1);
    const char* first = v.data();
    const char* last = v.data() + v.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && !v.empty();
  }

  bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    char c = s[0];
    if (std::isdigit((unsigned char)c)) return true;
    if ((c == '+' || c == '-' || c == '.') && s.size() > 1 &&
        std::isdigit((unsigned char)s[1]))
      return true;
    return false;
  }

  // An atom that must be a variable or function name.
  Token expect_name(const char* what) {
    Token t = lex_.take();
    if (t.kind == TokKind::LParen)
      fail(std::string("ANF violation: compound expression where a ") + what +
               " is required",
           t);
    if (t.kind != TokKind::Atom) fail(std::string("expected ") + what, t);
    double ignore;
    if (looks_numeric(t.text) || is_number_text(t.text, ignore))
      fail(std::string("expected ") + what + ", found a number", t);
    return t;
  }

  Ty parse_ty() {
    Token t = lex_.take();
    if (t.kind == TokKind::Atom && t.text == "R") return Ty::real();
    if (t.kind == TokKind::LParen) {
      Token head = expect(TokKind::Atom, "'tup'");
      if (head.text != "tup") fail("expected a type", head);
      std::vector<Ty> elems;
      while (lex_.peek().kind != TokKind::RParen) elems.push_back(parse_ty());
      lex_.take();
      return Ty::tup(std::move(elems));
    }
    fail("expected a type", t);
  }

  Binding parse_param() {
    expect(TokKind::LParen, "'(' starting a parameter");
    Token name = expect_name("parameter name");
    Ty ty = parse_ty();
    expect(TokKind::RParen, "')' closing a parameter");
    return Binding{name.text, std::move(ty)};
  }

  // `( param* ; param* )`
  void parse_param_group(std::vector<Binding>& nl, std::vector<Binding>& lin) {
    expect(TokKind::LParen, "'(' starting a parameter list");
    while (lex_.peek().kind == TokKind::LParen) nl.push_back(parse_param());
    expect(TokKind::Semi, "';' separating parameter lists");
    while (lex_.peek().kind == TokKind::LParen) lin.push_back(parse_param());
    expect(TokKind::RParen, "')' closing a parameter list");
  }

  // `( NAME* ; NAME* )`
  void parse_name_group(std::vector<VarName>& nl, std::vector<VarName>& lin) {
    expect(TokKind::LParen, "'(' starting an argument list");
    while (lex_.peek().kind != TokKind::Semi)
      nl.push_back(expect_name("variable name").text);
    lex_.take();
    while (lex_.peek().kind != TokKind::RParen)
      lin.push_back(expect_name("variable name").text);
    lex_.take();
  }

  void bind(const Binding& b, Side side, const Token& at) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (it->count(b.name))
        fail("shadowing: '" + b.name + "' is already bound in an enclosing scope", at);
    scopes_.back().emplace(b.name, side);
  }

  Side lookup(const Token& name) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto found = it->find(name.text);
      if (found != it->end()) return found->second;
    }
    fail("unknown variable '" + name.text + "'", name);
  }

  ExprPtr parse_expr(const Program& p) {
    Token t = lex_.peek();
    if (t.kind == TokKind::Atom) {
      lex_.take();
      double num;
      if (is_number_text(t.text, num)) return ex::lit(num);
      if (looks_numeric(t.text)) fail("malformed number literal", t);
      return lookup(t) == Side::Nl ? ex::nl_var(t.text) : ex::lin_var(t.text);
    }
    if (t.kind != TokKind::LParen) fail("expected an expression", t);
    lex_.take();
    Token head = expect(TokKind::Atom, "expression head");
    const std::string& h = head.text;

    auto close = [&] { expect(TokKind::RParen, "')'"); };

    if (h == "ret") {
      std::vector<VarName> nl, lin;
      parse_name_group(nl, lin);
      close();
      return ex::ret(std::move(nl), std::move(lin));
    }
    if (h == "let") {
      std::vector<Binding> nl, lin;
      parse_param_group(nl, lin);
      ExprPtr bound = parse_expr(p);
      scopes_.emplace_back();
      for (const Binding& b : nl) bind(b, Side::Nl, head);
      for (const Binding& b : lin) bind(b, Side::Lin, head);
      ExprPtr body = parse_expr(p);
      scopes_.pop_back();
      close();
      return ex::mlet(std::move(nl), std::move(lin), std::move(bound), std::move(body));
    }
    if (h == "untup") {
      std::vector<Binding> nl, lin;
      parse_param_group(nl, lin);
      Token src = expect_name("tuple variable name");
      Side side = lookup(src);
      if (side == Side::Nl && !lin.empty())
        fail("untup of a non-linear tuple cannot bind linear names", src);
      if (side == Side::Lin && !nl.empty())
        fail("untup of a linear tuple cannot bind non-linear names", src);
      scopes_.emplace_back();
      const std::vector<Binding>& binds = side == Side::Nl ? nl : lin;
      for (const Binding& b : binds)
        bind(b, side == Side::Nl ? Side::Nl : Side::Lin, src);
      ExprPtr body = parse_expr(p);
      scopes_.pop_back();
      close();
      if (side == Side::Nl) return ex::unpack_nl(nl, src.text, std::move(body));
      return ex::unpack_lin(lin, src.text, std::move(body));
    }
    if (h == "call") {
      Token callee = expect_name("function name");
      if (!p.has(callee.text))
        fail("call to undefined function '" + callee.text +
                 "' (functions may only call earlier definitions)",
             callee);
      std::vector<VarName> nl, lin;
      parse_name_group(nl, lin);
      close();
      return ex::call(callee.text, std::move(nl), std::move(lin));
    }
    if (h == "tup" || h == "ltup") {
      std::vector<VarName> vars;
      while (lex_.peek().kind != TokKind::RParen)
        vars.push_back(expect_name("variable name").text);
      lex_.take();
      return h == "tup" ? ex::nl_tuple(std::move(vars)) : ex::lin_tuple(std::move(vars));
    }
    if (auto op = prim_from_name(h)) {
      std::vector<VarName> args;
      for (int i = 0; i < prim_arg_count(*op); ++i)
        args.push_back(expect_name("variable name").text);
      close();
      return ex::prim(*op, std::move(args));
    }
    if (h == "lzero") {
      Ty ty = parse_ty();
      close();
      return ex::lin_zero(std::move(ty));
    }
    if (h == "ladd") {
      VarName a = expect_name("variable name").text;
      VarName b = expect_name("variable name").text;
      close();
      return ex::lin_add(std::move(a), std::move(b));
    }
    if (h == "lscale") {
      VarName c = expect_name("variable name").text;
      VarName v = expect_name("variable name").text;
      close();
      return ex::lin_scale(std::move(c), std::move(v));
    }
    if (h == "dup") {
      VarName v = expect_name("variable name").text;
      close();
      return ex::dup(std::move(v));
    }
    if (h == "drop") {
      ExprPtr inner = parse_expr(p);
      close();
      return ex::drop(std::move(inner));
    }
    fail("unknown expression form '" + h + "'", head);
  }

  FuncDef parse_def(const Program& p) {
    expect(TokKind::LParen, "'(' starting a definition");
    Token kw = expect(TokKind::Atom, "'def'");
    if (kw.text != "def") fail("expected 'def'", kw);
    Token name = expect_name("function name");
    def_name_span_ = name.span;

    FuncDef d;
    d.name = name.text;
    parse_param_group(d.nl_params, d.lin_params);

    expect(TokKind::LParen, "'(' starting the result types");
    while (lex_.peek().kind != TokKind::Semi) d.nl_results.push_back(parse_ty());
    lex_.take();
    while (lex_.peek().kind != TokKind::RParen) d.lin_results.push_back(parse_ty());
    lex_.take();

    scopes_.clear();
    scopes_.emplace_back();
    for (const Binding& b : d.nl_params) bind(b, Side::Nl, name);
    for (const Binding& b : d.lin_params) bind(b, Side::Lin, name);
    d.body = parse_expr(p);
    scopes_.pop_back();

    expect(TokKind::RParen, "')' closing the definition");
    return d;
  }

  Lexer lex_;
  std::vector<std::map<std::string, Side, std::less<>>> scopes_;
  SourceSpan def_name_span_;
};

}  // namespace detail

// Parses a whole program, or throws ParseError at the earliest offending
// span. Never returns a partial program.
inline Program parse_program(std::string_view text) {
  return detail::Parser(text).parse();
}

}  // namespace lina
