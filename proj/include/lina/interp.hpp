#pragma once

// Call-by-value evaluator with exact integer work metering.
//
// Work charges:
//   - each non-linear primitive application: 1
//   - linear addition / scaling: 1 per real scalar in the result
//   - drop: the inner expression's work, plus 1 per real scalar (linear or
//     non-linear) in the inner expression's results
//   - calls cost their body, lets cost bound plus body, everything else is 0
//
// Arithmetic is binary64. Linear inputs may be supplied extra-linguistically
// through `lin_args`, which is how every duality and linearity harness feeds
// non-zero values into linear parameters.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lina/ir.hpp"
#include "lina/pretty.hpp"

namespace lina {

class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime value: scalar or nested tuple, mirroring Ty.
class Value {
 public:
  Value() = default;  // scalar 0.0
  static Value scalar(double x) {
    Value v;
    v.num_ = x;
    return v;
  }
  static Value tuple(std::vector<Value> elems) {
    Value v;
    v.tuple_ = true;
    v.elems_ = std::move(elems);
    return v;
  }

  bool is_scalar() const { return !tuple_; }
  bool is_tuple() const { return tuple_; }
  double num() const { return num_; }
  const std::vector<Value>& elems() const { return elems_; }

  friend bool operator==(const Value& a, const Value& b) {
    return a.tuple_ == b.tuple_ && a.num_ == b.num_ && a.elems_ == b.elems_;
  }

 private:
  bool tuple_ = false;
  double num_ = 0.0;
  std::vector<Value> elems_;
};

inline int scalar_count(const Value& v) {
  if (v.is_scalar()) return 1;
  int n = 0;
  for (const Value& e : v.elems()) n += scalar_count(e);
  return n;
}

inline bool matches_type(const Value& v, const Ty& t) {
  if (t.is_real()) return v.is_scalar();
  if (!v.is_tuple() || v.elems().size() != t.elems().size()) return false;
  for (std::size_t i = 0; i < t.elems().size(); ++i)
    if (!matches_type(v.elems()[i], t.elems()[i])) return false;
  return true;
}

inline bool all_finite(const Value& v) {
  if (v.is_scalar()) return std::isfinite(v.num());
  for (const Value& e : v.elems())
    if (!all_finite(e)) return false;
  return true;
}

inline Value zero_value(const Ty& t) {
  if (t.is_real()) return Value::scalar(0.0);
  std::vector<Value> elems;
  elems.reserve(t.elems().size());
  for (const Ty& e : t.elems()) elems.push_back(zero_value(e));
  return Value::tuple(std::move(elems));
}

inline Value add_values(const Value& a, const Value& b) {
  if (a.is_scalar()) return Value::scalar(a.num() + b.num());
  std::vector<Value> elems;
  elems.reserve(a.elems().size());
  for (std::size_t i = 0; i < a.elems().size(); ++i)
    elems.push_back(add_values(a.elems()[i], b.elems()[i]));
  return Value::tuple(std::move(elems));
}

inline Value scale_value(double c, const Value& v) {
  if (v.is_scalar()) return Value::scalar(c * v.num());
  std::vector<Value> elems;
  elems.reserve(v.elems().size());
  for (const Value& e : v.elems()) elems.push_back(scale_value(c, e));
  return Value::tuple(std::move(elems));
}

inline void flatten(const Value& v, std::vector<double>& out) {
  if (v.is_scalar()) {
    out.push_back(v.num());
    return;
  }
  for (const Value& e : v.elems()) flatten(e, out);
}

inline Value unflatten(const Ty& t, const double*& it) {
  if (t.is_real()) return Value::scalar(*it++);
  std::vector<Value> elems;
  elems.reserve(t.elems().size());
  for (const Ty& e : t.elems()) elems.push_back(unflatten(e, it));
  return Value::tuple(std::move(elems));
}

struct EvalResult {
  std::vector<Value> nl;
  std::vector<Value> lin;
  std::uint64_t work = 0;
};

namespace detail {

struct EvalCtx {
  const Program& prog;
  std::uint64_t work = 0;
};

using Env = std::map<VarName, Value, std::less<>>;

struct Results {
  std::vector<Value> nl;
  std::vector<Value> lin;
};

inline Results eval_def(const FuncDef& d, std::vector<Value> nl_args,
                        std::vector<Value> lin_args, EvalCtx& ctx);

inline const Value& env_get(const Env& env, const VarName& v) {
  auto it = env.find(v);
  if (it == env.end()) throw EvalError("unbound variable '" + v + "'");
  return it->second;
}

inline Results eval_expr(const Expr& e, Env& env, EvalCtx& ctx) {
  using lina::detail::overloaded;
  return std::visit(
      overloaded{
          [&](const Ret& r) {
            Results out;
            for (const VarName& v : r.nl) out.nl.push_back(env_get(env, v));
            for (const VarName& v : r.lin) out.lin.push_back(env_get(env, v));
            return out;
          },
          [&](const MLet& m) {
            Results bound = eval_expr(*m.bound, env, ctx);
            if (bound.nl.size() != m.nl_binds.size() ||
                bound.lin.size() != m.lin_binds.size())
              throw EvalError("let binding arity mismatch");
            for (std::size_t i = 0; i < m.nl_binds.size(); ++i)
              env[m.nl_binds[i].name] = std::move(bound.nl[i]);
            for (std::size_t i = 0; i < m.lin_binds.size(); ++i)
              env[m.lin_binds[i].name] = std::move(bound.lin[i]);
            return eval_expr(*m.body, env, ctx);
          },
          [&](const UnpackNl& u) {
            const Value& src = env_get(env, u.source);
            for (std::size_t i = 0; i < u.binds.size(); ++i)
              env[u.binds[i].name] = src.elems()[i];
            return eval_expr(*u.body, env, ctx);
          },
          [&](const UnpackLin& u) {
            const Value& src = env_get(env, u.source);
            for (std::size_t i = 0; i < u.binds.size(); ++i)
              env[u.binds[i].name] = src.elems()[i];
            return eval_expr(*u.body, env, ctx);
          },
          [&](const Call& c) {
            const FuncDef* callee = ctx.prog.find(c.callee);
            if (!callee) throw EvalError("unknown function '" + c.callee + "'");
            std::vector<Value> nl_args, lin_args;
            for (const VarName& v : c.nl_args) nl_args.push_back(env_get(env, v));
            for (const VarName& v : c.lin_args) lin_args.push_back(env_get(env, v));
            return eval_def(*callee, std::move(nl_args), std::move(lin_args), ctx);
          },
          [&](const NlVar& v) {
            return Results{{env_get(env, v.name)}, {}};
          },
          [&](const Lit& l) {
            return Results{{Value::scalar(l.value)}, {}};
          },
          [&](const NlTuple& t) {
            std::vector<Value> elems;
            for (const VarName& v : t.vars) elems.push_back(env_get(env, v));
            return Results{{Value::tuple(std::move(elems))}, {}};
          },
          [&](const Prim& p) {
            ctx.work += 1;
            double a = env_get(env, p.args[0]).num();
            double out = 0;
            switch (p.op) {
              case PrimOp::Sin: out = std::sin(a); break;
              case PrimOp::Cos: out = std::cos(a); break;
              case PrimOp::Exp: out = std::exp(a); break;
              case PrimOp::Add: out = a + env_get(env, p.args[1]).num(); break;
              case PrimOp::Mul: out = a * env_get(env, p.args[1]).num(); break;
            }
            return Results{{Value::scalar(out)}, {}};
          },
          [&](const LinVar& v) {
            return Results{{}, {env_get(env, v.name)}};
          },
          [&](const LinZero& z) {
            return Results{{}, {zero_value(z.ty)}};
          },
          [&](const LinTuple& t) {
            std::vector<Value> elems;
            for (const VarName& v : t.vars) elems.push_back(env_get(env, v));
            return Results{{}, {Value::tuple(std::move(elems))}};
          },
          [&](const LinAdd& a) {
            Value out = add_values(env_get(env, a.lhs), env_get(env, a.rhs));
            ctx.work += scalar_count(out);
            return Results{{}, {std::move(out)}};
          },
          [&](const LinScale& s) {
            Value out = scale_value(env_get(env, s.coeff).num(), env_get(env, s.arg));
            ctx.work += scalar_count(out);
            return Results{{}, {std::move(out)}};
          },
          [&](const Dup& d) {
            const Value& v = env_get(env, d.var);
            return Results{{}, {v, v}};
          },
          [&](const Drop& d) {
            Results inner = eval_expr(*d.inner, env, ctx);
            for (const Value& v : inner.nl) ctx.work += scalar_count(v);
            for (const Value& v : inner.lin) ctx.work += scalar_count(v);
            return Results{};
          },
      },
      e.node);
}

inline Results eval_def(const FuncDef& d, std::vector<Value> nl_args,
                        std::vector<Value> lin_args, EvalCtx& ctx) {
  if (nl_args.size() != d.nl_params.size() || lin_args.size() != d.lin_params.size())
    throw EvalError("'" + d.name + "' expects (" + std::to_string(d.nl_params.size()) +
                    "; " + std::to_string(d.lin_params.size()) + ") arguments, got (" +
                    std::to_string(nl_args.size()) + "; " +
                    std::to_string(lin_args.size()) + ")");
  Env env;
  for (std::size_t i = 0; i < nl_args.size(); ++i) {
    if (!matches_type(nl_args[i], d.nl_params[i].ty))
      throw EvalError("argument for '" + d.nl_params[i].name + "' does not match type " +
                      to_string(d.nl_params[i].ty));
    env[d.nl_params[i].name] = std::move(nl_args[i]);
  }
  for (std::size_t i = 0; i < lin_args.size(); ++i) {
    if (!matches_type(lin_args[i], d.lin_params[i].ty))
      throw EvalError("argument for '" + d.lin_params[i].name + "' does not match type " +
                      to_string(d.lin_params[i].ty));
    env[d.lin_params[i].name] = std::move(lin_args[i]);
  }
  return eval_expr(*d.body, env, ctx);
}

}  // namespace detail

// Evaluates `func` on the given argument values. Requires the program to
// typecheck; argument shapes are validated here.
inline EvalResult evaluate(const Program& p, const std::string& func,
                           std::vector<Value> nl_args, std::vector<Value> lin_args) {
  const FuncDef* d = p.find(func);
  if (!d) throw EvalError("unknown function '" + func + "'");
  detail::EvalCtx ctx{p};
  detail::Results out =
      detail::eval_def(*d, std::move(nl_args), std::move(lin_args), ctx);
  return EvalResult{std::move(out.nl), std::move(out.lin), ctx.work};
}

// ---------------------------------------------------------------------------
// Value literal syntax (CLI): scalars as decimals, tuples parenthesized,
// e.g. `3 (1 2)` is a scalar followed by a pair.

inline std::string to_string(const Value& v) {
  if (v.is_scalar()) return format_number(v.num());
  std::string s = "(";
  for (std::size_t i = 0; i < v.elems().size(); ++i) {
    if (i) s += ' ';
    s += to_string(v.elems()[i]);
  }
  return s + ")";
}

namespace detail {

inline void skip_ws(std::string_view s, std::size_t& i) {
  while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
}

inline Value parse_value(std::string_view s, std::size_t& i) {
  skip_ws(s, i);
  if (i >= s.size()) throw EvalError("expected a value");
  if (s[i] == '(') {
    ++i;
    std::vector<Value> elems;
    skip_ws(s, i);
    while (i < s.size() && s[i] != ')') {
      elems.push_back(parse_value(s, i));
      skip_ws(s, i);
    }
    if (i >= s.size()) throw EvalError("unterminated tuple value");
    ++i;
    return Value::tuple(std::move(elems));
  }
  std::size_t begin = i;
  while (i < s.size() && !std::isspace((unsigned char)s[i]) && s[i] != '(' && s[i] != ')')
    ++i;
  std::string tok(s.substr(begin, i - begin));
  std::string_view body = tok;
  if (!body.empty() && body[0] == '+') body.remove_prefix(1);
  double x = 0;
  auto res = std::from_chars(body.data(), body.data() + body.size(), x);
  if (res.ec != std::errc() || res.ptr != body.data() + body.size() || body.empty())
    throw EvalError("malformed scalar value '" + tok + "'");
  if (!std::isfinite(x)) throw EvalError("value '" + tok + "' is not finite");
  return Value::scalar(x);
}

}  // namespace detail

// Parses a whitespace-separated list of value literals.
inline std::vector<Value> parse_value_list(std::string_view s) {
  std::vector<Value> out;
  std::size_t i = 0;
  detail::skip_ws(s, i);
  while (i < s.size()) {
    out.push_back(detail::parse_value(s, i));
    detail::skip_ws(s, i);
  }
  return out;
}

}  // namespace lina
