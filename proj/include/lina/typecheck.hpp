#pragma once

// Type checker. Linear variables must be consumed exactly once (dup and
// drop are the only multiplicity adjusters); non-linear variables at least
// once. Environment splitting is computed bottom-up: every expression
// reports the variables it consumed, and binding forms enforce the
// disjointness and coverage conditions. Errors carry the name of the typing
// rule that failed.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lina/ir.hpp"

namespace lina {

class TypeError : public std::runtime_error {
 public:
  TypeError(std::string rule, std::string in_def, const std::string& msg)
      : std::runtime_error(rule + ": " + msg +
                           (in_def.empty() ? "" : " (in '" + in_def + "')")),
        rule_(std::move(rule)),
        def_name_(std::move(in_def)) {}

  const std::string& rule() const { return rule_; }
  const std::string& def_name() const { return def_name_; }

 private:
  std::string rule_;
  std::string def_name_;
};

// Γ; Γ̇ — the visible variables of each fragment. Key sets stay disjoint.
struct TypeEnv {
  std::map<VarName, Ty, std::less<>> nl;
  std::map<VarName, Ty, std::less<>> lin;
};

// What an expression returns and which variables it consumed.
struct TypeReport {
  std::vector<Ty> nl_results;
  std::vector<Ty> lin_results;
  std::set<VarName, std::less<>> consumed_nl;
  std::set<VarName, std::less<>> consumed_lin;

  Arity arity() const {
    return {(int)nl_results.size(), (int)lin_results.size()};
  }
};

namespace detail {

class Checker {
 public:
  Checker(const SigTable& sigs, std::string def_name)
      : sigs_(sigs), def_(std::move(def_name)) {}

  TypeReport check(const Expr& e, const TypeEnv& env) {
    return std::visit([&](const auto& node) { return check_node(node, env); }, e.node);
  }

 private:
  [[noreturn]] void fail(const char* rule, const std::string& msg) const {
    throw TypeError(rule, def_, msg);
  }

  const Ty& lookup_nl(const TypeEnv& env, const VarName& v, const char* rule) const {
    auto it = env.nl.find(v);
    if (it != env.nl.end()) return it->second;
    if (env.lin.count(v))
      fail(rule, "'" + v + "' is a linear variable where a non-linear one is required");
    fail(rule, "unknown variable '" + v + "'");
  }

  const Ty& lookup_lin(const TypeEnv& env, const VarName& v, const char* rule) const {
    auto it = env.lin.find(v);
    if (it != env.lin.end()) return it->second;
    if (env.nl.count(v))
      fail(rule, "'" + v + "' is a non-linear variable where a linear one is required");
    fail(rule, "unknown variable '" + v + "'");
  }

  void consume_lin(TypeReport& r, const VarName& v, const char* rule) const {
    if (!r.consumed_lin.insert(v).second)
      fail(rule, "linear variable '" + v + "' used more than once");
  }

  static std::set<VarName, std::less<>> minus_binds(
      std::set<VarName, std::less<>> s, const std::vector<Binding>& binds) {
    for (const Binding& b : binds) s.erase(b.name);
    return s;
  }

  void merge_consumed(TypeReport& into, const TypeReport& from,
                      const std::vector<Binding>& strip_nl,
                      const std::vector<Binding>& strip_lin, const char* rule) const {
    auto nl = minus_binds(from.consumed_nl, strip_nl);
    into.consumed_nl.insert(nl.begin(), nl.end());
    for (const VarName& v : minus_binds(from.consumed_lin, strip_lin)) {
      if (!into.consumed_lin.insert(v).second)
        fail(rule, "linear variable '" + v + "' used more than once");
    }
  }

  TypeEnv extend(const TypeEnv& env, const std::vector<Binding>& nl,
                 const std::vector<Binding>& lin, const char* rule) const {
    TypeEnv out = env;
    for (const Binding& b : nl) {
      if (out.nl.count(b.name) || out.lin.count(b.name))
        fail(rule, "'" + b.name + "' rebinds a name already in scope");
      out.nl.emplace(b.name, b.ty);
    }
    for (const Binding& b : lin) {
      if (out.nl.count(b.name) || out.lin.count(b.name))
        fail(rule, "'" + b.name + "' rebinds a name already in scope");
      out.lin.emplace(b.name, b.ty);
    }
    return out;
  }

  void require_used(const TypeReport& body, const std::vector<Binding>& nl,
                    const std::vector<Binding>& lin, const char* rule) const {
    for (const Binding& b : nl)
      if (!body.consumed_nl.count(b.name))
        fail(rule, "non-linear variable '" + b.name + "' unused");
    for (const Binding& b : lin)
      if (!body.consumed_lin.count(b.name))
        fail(rule, "linear variable '" + b.name + "' unused");
  }

  void match_binds(const std::vector<Ty>& results, const std::vector<Binding>& binds,
                   const char* what, const char* rule) const {
    if (results.size() != binds.size())
      fail(rule, std::string("arity mismatch: bound expression returns ") +
                     std::to_string(results.size()) + " " + what + " result(s), " +
                     std::to_string(binds.size()) + " bound");
    for (std::size_t i = 0; i < binds.size(); ++i)
      if (!(results[i] == binds[i].ty))
        fail(rule, "type mismatch: '" + binds[i].name + "' declared " +
                       to_string(binds[i].ty) + " but bound to " + to_string(results[i]));
  }

  // --- per-node rules ---

  TypeReport check_node(const Ret& n, const TypeEnv& env) {
    TypeReport r;
    for (const VarName& v : n.nl) {
      r.nl_results.push_back(lookup_nl(env, v, "TypeRet"));
      r.consumed_nl.insert(v);
    }
    for (const VarName& v : n.lin) {
      r.lin_results.push_back(lookup_lin(env, v, "TypeRet"));
      consume_lin(r, v, "TypeRet");
    }
    return r;
  }

  TypeReport check_node(const MLet& n, const TypeEnv& env) {
    TypeReport bound = check(*n.bound, env);
    match_binds(bound.nl_results, n.nl_binds, "non-linear", "TypeLet");
    match_binds(bound.lin_results, n.lin_binds, "linear", "TypeLet");
    TypeEnv inner = extend(env, n.nl_binds, n.lin_binds, "TypeLet");
    TypeReport body = check(*n.body, inner);
    require_used(body, n.nl_binds, n.lin_binds, "TypeLet");

    TypeReport r;
    r.nl_results = std::move(body.nl_results);
    r.lin_results = std::move(body.lin_results);
    r.consumed_nl = bound.consumed_nl;
    r.consumed_lin = bound.consumed_lin;
    merge_consumed(r, body, n.nl_binds, n.lin_binds, "TypeLet");
    return r;
  }

  TypeReport check_node(const UnpackNl& n, const TypeEnv& env) {
    const Ty& src = lookup_nl(env, n.source, "TypeUnpack");
    if (!src.is_tuple())
      fail("TypeUnpack", "'" + n.source + "' has type " + to_string(src) +
                             ", expected a tuple");
    if (src.elems().size() != n.binds.size())
      fail("TypeUnpack", "tuple '" + n.source + "' has " +
                             std::to_string(src.elems().size()) + " element(s), " +
                             std::to_string(n.binds.size()) + " bound");
    for (std::size_t i = 0; i < n.binds.size(); ++i)
      if (!(src.elems()[i] == n.binds[i].ty))
        fail("TypeUnpack", "type mismatch: '" + n.binds[i].name + "' declared " +
                               to_string(n.binds[i].ty) + " but element has type " +
                               to_string(src.elems()[i]));
    TypeEnv inner = extend(env, n.binds, {}, "TypeUnpack");
    TypeReport body = check(*n.body, inner);
    require_used(body, n.binds, {}, "TypeUnpack");

    TypeReport r;
    r.nl_results = std::move(body.nl_results);
    r.lin_results = std::move(body.lin_results);
    r.consumed_nl.insert(n.source);
    merge_consumed(r, body, n.binds, {}, "TypeUnpack");
    return r;
  }

  TypeReport check_node(const UnpackLin& n, const TypeEnv& env) {
    const Ty& src = lookup_lin(env, n.source, "TypeLinUnpack");
    if (!src.is_tuple())
      fail("TypeLinUnpack", "'" + n.source + "' has type " + to_string(src) +
                                ", expected a tuple");
    if (src.elems().size() != n.binds.size())
      fail("TypeLinUnpack", "tuple '" + n.source + "' has " +
                                std::to_string(src.elems().size()) + " element(s), " +
                                std::to_string(n.binds.size()) + " bound");
    for (std::size_t i = 0; i < n.binds.size(); ++i)
      if (!(src.elems()[i] == n.binds[i].ty))
        fail("TypeLinUnpack", "type mismatch: '" + n.binds[i].name + "' declared " +
                                  to_string(n.binds[i].ty) + " but element has type " +
                                  to_string(src.elems()[i]));
    TypeEnv inner = extend(env, {}, n.binds, "TypeLinUnpack");
    TypeReport body = check(*n.body, inner);
    require_used(body, {}, n.binds, "TypeLinUnpack");
    if (body.consumed_lin.count(n.source))
      fail("TypeLinUnpack", "linear variable '" + n.source + "' used more than once");

    TypeReport r;
    r.nl_results = std::move(body.nl_results);
    r.lin_results = std::move(body.lin_results);
    r.consumed_lin.insert(n.source);
    merge_consumed(r, body, {}, n.binds, "TypeLinUnpack");
    return r;
  }

  TypeReport check_node(const Call& n, const TypeEnv& env) {
    auto it = sigs_.find(n.callee);
    if (it == sigs_.end())
      fail("TypeApp", "unknown function '" + n.callee +
                          "' (calls may only target earlier definitions)");
    const FuncSig& sig = it->second;
    if (n.nl_args.size() != sig.nl_params.size() ||
        n.lin_args.size() != sig.lin_params.size())
      fail("TypeApp", "arity mismatch calling '" + n.callee + "': expected (" +
                          std::to_string(sig.nl_params.size()) + "; " +
                          std::to_string(sig.lin_params.size()) + ") arguments, got (" +
                          std::to_string(n.nl_args.size()) + "; " +
                          std::to_string(n.lin_args.size()) + ")");
    TypeReport r;
    for (std::size_t i = 0; i < n.nl_args.size(); ++i) {
      const Ty& t = lookup_nl(env, n.nl_args[i], "TypeApp");
      if (!(t == sig.nl_params[i]))
        fail("TypeApp", "type mismatch: argument '" + n.nl_args[i] + "' has type " +
                            to_string(t) + ", parameter expects " +
                            to_string(sig.nl_params[i]));
      r.consumed_nl.insert(n.nl_args[i]);
    }
    for (std::size_t i = 0; i < n.lin_args.size(); ++i) {
      const Ty& t = lookup_lin(env, n.lin_args[i], "TypeApp");
      if (!(t == sig.lin_params[i]))
        fail("TypeApp", "type mismatch: argument '" + n.lin_args[i] + "' has type " +
                            to_string(t) + ", parameter expects " +
                            to_string(sig.lin_params[i]));
      consume_lin(r, n.lin_args[i], "TypeApp");
    }
    r.nl_results = sig.nl_results;
    r.lin_results = sig.lin_results;
    return r;
  }

  TypeReport check_node(const NlVar& n, const TypeEnv& env) {
    TypeReport r;
    r.nl_results.push_back(lookup_nl(env, n.name, "TypeVar"));
    r.consumed_nl.insert(n.name);
    return r;
  }

  TypeReport check_node(const Lit&, const TypeEnv&) {
    TypeReport r;
    r.nl_results.push_back(Ty::real());
    return r;
  }

  TypeReport check_node(const NlTuple& n, const TypeEnv& env) {
    TypeReport r;
    std::vector<Ty> elems;
    for (const VarName& v : n.vars) {
      elems.push_back(lookup_nl(env, v, "TypeTup"));
      r.consumed_nl.insert(v);
    }
    r.nl_results.push_back(Ty::tup(std::move(elems)));
    return r;
  }

  TypeReport check_node(const Prim& n, const TypeEnv& env) {
    const char* rule = prim_arg_count(n.op) == 1 ? "TypePrim1" : "TypePrim2";
    if ((int)n.args.size() != prim_arg_count(n.op))
      fail(rule, std::string(prim_name(n.op)) + " expects " +
                     std::to_string(prim_arg_count(n.op)) + " argument(s)");
    TypeReport r;
    for (const VarName& v : n.args) {
      const Ty& t = lookup_nl(env, v, rule);
      if (!t.is_real())
        fail(rule, "'" + v + "' has type " + to_string(t) +
                       ", primitives consume real scalars");
      r.consumed_nl.insert(v);
    }
    r.nl_results.push_back(Ty::real());
    return r;
  }

  TypeReport check_node(const LinVar& n, const TypeEnv& env) {
    TypeReport r;
    r.lin_results.push_back(lookup_lin(env, n.name, "TypeLinVar"));
    consume_lin(r, n.name, "TypeLinVar");
    return r;
  }

  TypeReport check_node(const LinZero& n, const TypeEnv&) {
    TypeReport r;
    r.lin_results.push_back(n.ty);
    return r;
  }

  TypeReport check_node(const LinTuple& n, const TypeEnv& env) {
    TypeReport r;
    std::vector<Ty> elems;
    for (const VarName& v : n.vars) {
      elems.push_back(lookup_lin(env, v, "TypeLinTup"));
      consume_lin(r, v, "TypeLinTup");
    }
    r.lin_results.push_back(Ty::tup(std::move(elems)));
    return r;
  }

  TypeReport check_node(const LinAdd& n, const TypeEnv& env) {
    const Ty& a = lookup_lin(env, n.lhs, "TypeLinPlus");
    const Ty& b = lookup_lin(env, n.rhs, "TypeLinPlus");
    if (!(a == b))
      fail("TypeLinPlus", "operand types differ: " + to_string(a) + " vs " + to_string(b));
    TypeReport r;
    consume_lin(r, n.lhs, "TypeLinPlus");
    consume_lin(r, n.rhs, "TypeLinPlus");
    r.lin_results.push_back(a);
    return r;
  }

  TypeReport check_node(const LinScale& n, const TypeEnv& env) {
    const Ty& c = lookup_nl(env, n.coeff, "TypeLinMul");
    if (!c.is_real())
      fail("TypeLinMul", "coefficient '" + n.coeff + "' has type " + to_string(c) +
                             ", expected R");
    const Ty& arg = lookup_lin(env, n.arg, "TypeLinMul");
    TypeReport r;
    r.consumed_nl.insert(n.coeff);
    consume_lin(r, n.arg, "TypeLinMul");
    r.lin_results.push_back(arg);
    return r;
  }

  TypeReport check_node(const Dup& n, const TypeEnv& env) {
    const Ty& t = lookup_lin(env, n.var, "TypeDup");
    TypeReport r;
    consume_lin(r, n.var, "TypeDup");
    r.lin_results.push_back(t);
    r.lin_results.push_back(t);
    return r;
  }

  TypeReport check_node(const Drop& n, const TypeEnv& env) {
    // Checked in the enclosing environment; consumption propagates outward.
    TypeReport inner = check(*n.inner, env);
    TypeReport r;
    r.consumed_nl = std::move(inner.consumed_nl);
    r.consumed_lin = std::move(inner.consumed_lin);
    return r;
  }

  const SigTable& sigs_;
  std::string def_;
};

}  // namespace detail

// Checks one expression in the given environment; throws TypeError.
inline TypeReport typecheck_expr(const Expr& e, const TypeEnv& env,
                                 const SigTable& sigs,
                                 const std::string& in_def = "") {
  return detail::Checker(sigs, in_def).check(e, env);
}

// Checks one definition against the signatures of the definitions before it.
inline void typecheck_def(const FuncDef& d, const SigTable& earlier) {
  TypeEnv env;
  for (const Binding& b : d.nl_params) {
    if (env.nl.count(b.name))
      throw TypeError("TypeDef", d.name, "duplicate parameter '" + b.name + "'");
    env.nl.emplace(b.name, b.ty);
  }
  for (const Binding& b : d.lin_params) {
    if (env.nl.count(b.name) || env.lin.count(b.name))
      throw TypeError("TypeDef", d.name, "duplicate parameter '" + b.name + "'");
    env.lin.emplace(b.name, b.ty);
  }
  TypeReport body = typecheck_expr(*d.body, env, earlier, d.name);

  auto match_results = [&](const std::vector<Ty>& got, const std::vector<Ty>& decl,
                           const char* what) {
    if (got.size() != decl.size())
      throw TypeError("TypeDef", d.name,
                      std::string("body returns ") + std::to_string(got.size()) + " " +
                          what + " result(s), declared " + std::to_string(decl.size()));
    for (std::size_t i = 0; i < decl.size(); ++i)
      if (!(got[i] == decl[i]))
        throw TypeError("TypeDef", d.name,
                        std::string(what) + " result " + std::to_string(i) + " has type " +
                            to_string(got[i]) + ", declared " + to_string(decl[i]));
  };
  match_results(body.nl_results, d.nl_results, "non-linear");
  match_results(body.lin_results, d.lin_results, "linear");

  for (const Binding& b : d.nl_params)
    if (!body.consumed_nl.count(b.name))
      throw TypeError("TypeDef", d.name, "non-linear variable '" + b.name + "' unused");
  for (const Binding& b : d.lin_params)
    if (!body.consumed_lin.count(b.name))
      throw TypeError("TypeDef", d.name, "linear variable '" + b.name + "' unused");
}

// Checks a whole program; returns the signature table on success, throws
// TypeError on the first failure. Function names must be unique and calls
// may only target earlier definitions.
inline SigTable typecheck_program(const Program& p) {
  SigTable sigs;
  for (const FuncDef& d : p.defs) {
    if (sigs.count(d.name))
      throw TypeError("TypeDef", d.name, "duplicate function name");
    typecheck_def(d, sigs);
    sigs[d.name] = sig_of(d);
  }
  return sigs;
}

// ---------------------------------------------------------------------------
// Linear B membership

// Linear B restricts Linear A in two ways: every expression (and definition)
// returns only linear or only non-linear results, and an expression producing
// non-linear results must not read linear variables, not even to drop them.
struct LinearBReport {
  std::map<std::string, std::optional<std::string>> violations;

  bool ok(const std::string& def_name) const {
    auto it = violations.find(def_name);
    return it != violations.end() && !it->second.has_value();
  }
  bool all_ok() const {
    for (const auto& [_, v] : violations)
      if (v.has_value()) return false;
    return true;
  }
  std::optional<std::string> first_violation() const {
    for (const auto& [name, v] : violations)
      if (v.has_value()) return "'" + name + "': " + *v;
    return std::nullopt;
  }
};

namespace detail {

inline void linear_b_walk(const Expr& e, const SigTable& sigs,
                          std::optional<std::string>& violation) {
  if (violation) return;
  Arity a = arity_of(e, sigs);
  if (a.nl > 0 && a.lin > 0) {
    violation = "expression returns both non-linear and linear results";
    return;
  }
  if (a.nl > 0 && a.lin == 0 && reads_linear(e)) {
    violation = "expression producing non-linear results reads linear variable(s)";
    return;
  }
  std::visit(detail::overloaded{
                 [&](const MLet& m) {
                   linear_b_walk(*m.bound, sigs, violation);
                   linear_b_walk(*m.body, sigs, violation);
                 },
                 [&](const UnpackNl& u) { linear_b_walk(*u.body, sigs, violation); },
                 [&](const UnpackLin& u) { linear_b_walk(*u.body, sigs, violation); },
                 [&](const Drop& d) { linear_b_walk(*d.inner, sigs, violation); },
                 [](const auto&) {},
             },
             e.node);
}

}  // namespace detail

inline LinearBReport is_linear_b(const Program& p) {
  SigTable sigs = signatures(p);
  LinearBReport report;
  for (const FuncDef& d : p.defs) {
    std::optional<std::string> v;
    if (!d.nl_results.empty() && !d.lin_results.empty())
      v = "definition returns both non-linear and linear results";
    else
      detail::linear_b_walk(*d.body, sigs, v);
    report.violations[d.name] = std::move(v);
  }
  return report;
}

// A def eligible for transposition: only linear results, and in Linear B.
inline bool is_linear_def(const FuncDef& d) { return d.nl_results.empty(); }

}  // namespace lina
