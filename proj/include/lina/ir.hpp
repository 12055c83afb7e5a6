#pragma once

// Core IR for Linear A: a first-order, total language whose expressions
// return two classes of results, non-linear and linear. Linearity of a
// variable is determined by the side of the semicolon it is bound on, not
// by its name. Expression trees are immutable and share subterms through
// shared_ptr<const Expr>, so any value here may be used concurrently once
// built.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lina {

using VarName = std::string;

// Raised when a code transformation is applied to an ineligible definition
// (for example, differentiating a definition that uses linear syntax).
class TransformError : public std::runtime_error {
 public:
  explicit TransformError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace detail

// ---------------------------------------------------------------------------
// Types

// Real scalar or nested tuple. Tuple arity is part of the type; there is no
// size polymorphism.
class Ty {
 public:
  Ty() = default;  // R
  static Ty real() { return Ty(); }
  static Ty tup(std::vector<Ty> elems) {
    Ty t;
    t.tuple_ = true;
    t.elems_ = std::move(elems);
    return t;
  }

  bool is_real() const { return !tuple_; }
  bool is_tuple() const { return tuple_; }
  const std::vector<Ty>& elems() const { return elems_; }

  // Number of real-scalar leaves. Shared by the cost model (drop / linear
  // add / scale charges) and the L_in/L_out work corrections.
  int scalar_count() const {
    if (!tuple_) return 1;
    int n = 0;
    for (const Ty& e : elems_) n += e.scalar_count();
    return n;
  }

  // Grammar nodes in this type, one per node.
  int size_nodes() const {
    if (!tuple_) return 1;
    int n = 1;
    for (const Ty& e : elems_) n += e.size_nodes();
    return n;
  }

  friend bool operator==(const Ty& a, const Ty& b) {
    return a.tuple_ == b.tuple_ && a.elems_ == b.elems_;
  }
  friend bool operator!=(const Ty& a, const Ty& b) { return !(a == b); }

 private:
  bool tuple_ = false;
  std::vector<Ty> elems_;
};

inline std::string to_string(const Ty& ty) {
  if (ty.is_real()) return "R";
  std::string s = "(tup";
  for (const Ty& e : ty.elems()) {
    s += ' ';
    s += to_string(e);
  }
  s += ')';
  return s;
}

// A named, typed binder.
struct Binding {
  VarName name;
  Ty ty;
  friend bool operator==(const Binding&, const Binding&) = default;
};

// ---------------------------------------------------------------------------
// Expressions

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;
bool operator==(const Expr& a, const Expr& b);

enum class PrimOp { Sin, Cos, Exp, Add, Mul };

inline int prim_arg_count(PrimOp op) {
  switch (op) {
    case PrimOp::Sin:
    case PrimOp::Cos:
    case PrimOp::Exp:
      return 1;
    case PrimOp::Add:
    case PrimOp::Mul:
      return 2;
  }
  return 0;
}

inline std::string_view prim_name(PrimOp op) {
  switch (op) {
    case PrimOp::Sin: return "sin";
    case PrimOp::Cos: return "cos";
    case PrimOp::Exp: return "exp";
    case PrimOp::Add: return "add";
    case PrimOp::Mul: return "mul";
  }
  return "?";
}

inline std::optional<PrimOp> prim_from_name(std::string_view s) {
  if (s == "sin") return PrimOp::Sin;
  if (s == "cos") return PrimOp::Cos;
  if (s == "exp") return PrimOp::Exp;
  if (s == "add") return PrimOp::Add;
  if (s == "mul") return PrimOp::Mul;
  return std::nullopt;
}

// Multi-value return; the only form that may mention both fragments.
struct Ret {
  std::vector<VarName> nl;
  std::vector<VarName> lin;
  friend bool operator==(const Ret&, const Ret&) = default;
};

// Multi-value let binding both non-linear and linear results of `bound`.
struct MLet {
  std::vector<Binding> nl_binds;
  std::vector<Binding> lin_binds;
  ExprPtr bound;
  ExprPtr body;
};

// Destructuring let for a non-linear tuple variable.
struct UnpackNl {
  std::vector<Binding> binds;
  VarName source;
  ExprPtr body;
};

// Destructuring let for a linear tuple variable (consumes it).
struct UnpackLin {
  std::vector<Binding> binds;
  VarName source;
  ExprPtr body;
};

struct Call {
  std::string callee;
  std::vector<VarName> nl_args;
  std::vector<VarName> lin_args;
  friend bool operator==(const Call&, const Call&) = default;
};

struct NlVar {
  VarName name;
  friend bool operator==(const NlVar&, const NlVar&) = default;
};

struct Lit {
  double value = 0.0;
  friend bool operator==(const Lit&, const Lit&) = default;
};

struct NlTuple {
  std::vector<VarName> vars;
  friend bool operator==(const NlTuple&, const NlTuple&) = default;
};

struct Prim {
  PrimOp op = PrimOp::Sin;
  std::vector<VarName> args;  // 1 or 2, per prim_arg_count
  friend bool operator==(const Prim&, const Prim&) = default;
};

struct LinVar {
  VarName name;
  friend bool operator==(const LinVar&, const LinVar&) = default;
};

struct LinZero {
  Ty ty;
  friend bool operator==(const LinZero&, const LinZero&) = default;
};

struct LinTuple {
  std::vector<VarName> vars;
  friend bool operator==(const LinTuple&, const LinTuple&) = default;
};

struct LinAdd {
  VarName lhs;
  VarName rhs;
  friend bool operator==(const LinAdd&, const LinAdd&) = default;
};

// Scaling of a linear value by a non-linear scalar coefficient; linear in
// the right-hand argument only.
struct LinScale {
  VarName coeff;
  VarName arg;
  friend bool operator==(const LinScale&, const LinScale&) = default;
};

// Explicit fan-out for a linear value: arity (0,2).
struct Dup {
  VarName var;
  friend bool operator==(const Dup&, const Dup&) = default;
};

// Explicit discard: arity (0,0). The inner expression is a full expression,
// not just a variable.
struct Drop {
  ExprPtr inner;
};

bool operator==(const MLet&, const MLet&);
bool operator==(const UnpackNl&, const UnpackNl&);
bool operator==(const UnpackLin&, const UnpackLin&);
bool operator==(const Drop&, const Drop&);

struct Expr {
  std::variant<Ret, MLet, UnpackNl, UnpackLin, Call, NlVar, Lit, NlTuple, Prim,
               LinVar, LinZero, LinTuple, LinAdd, LinScale, Dup, Drop>
      node;
};

inline bool operator==(const Expr& a, const Expr& b) { return a.node == b.node; }
inline bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

inline bool operator==(const MLet& a, const MLet& b) {
  return a.nl_binds == b.nl_binds && a.lin_binds == b.lin_binds &&
         *a.bound == *b.bound && *a.body == *b.body;
}
inline bool operator==(const UnpackNl& a, const UnpackNl& b) {
  return a.binds == b.binds && a.source == b.source && *a.body == *b.body;
}
inline bool operator==(const UnpackLin& a, const UnpackLin& b) {
  return a.binds == b.binds && a.source == b.source && *a.body == *b.body;
}
inline bool operator==(const Drop& a, const Drop& b) { return *a.inner == *b.inner; }

// Expression factories.
namespace ex {

template <class Node>
ExprPtr make(Node n) {
  return std::make_shared<const Expr>(Expr{std::move(n)});
}

inline ExprPtr ret(std::vector<VarName> nl, std::vector<VarName> lin) {
  return make(Ret{std::move(nl), std::move(lin)});
}
inline ExprPtr ret_nothing() { return ret({}, {}); }
inline ExprPtr mlet(std::vector<Binding> nl_binds, std::vector<Binding> lin_binds,
                    ExprPtr bound, ExprPtr body) {
  return make(MLet{std::move(nl_binds), std::move(lin_binds), std::move(bound),
                   std::move(body)});
}
inline ExprPtr unpack_nl(std::vector<Binding> binds, VarName source, ExprPtr body) {
  return make(UnpackNl{std::move(binds), std::move(source), std::move(body)});
}
inline ExprPtr unpack_lin(std::vector<Binding> binds, VarName source, ExprPtr body) {
  return make(UnpackLin{std::move(binds), std::move(source), std::move(body)});
}
inline ExprPtr call(std::string callee, std::vector<VarName> nl_args,
                    std::vector<VarName> lin_args) {
  return make(Call{std::move(callee), std::move(nl_args), std::move(lin_args)});
}
inline ExprPtr nl_var(VarName v) { return make(NlVar{std::move(v)}); }
inline ExprPtr lit(double x) { return make(Lit{x}); }
inline ExprPtr nl_tuple(std::vector<VarName> vars) {
  return make(NlTuple{std::move(vars)});
}
inline ExprPtr prim(PrimOp op, std::vector<VarName> args) {
  return make(Prim{op, std::move(args)});
}
inline ExprPtr lin_var(VarName v) { return make(LinVar{std::move(v)}); }
inline ExprPtr lin_zero(Ty ty) { return make(LinZero{std::move(ty)}); }
inline ExprPtr lin_tuple(std::vector<VarName> vars) {
  return make(LinTuple{std::move(vars)});
}
inline ExprPtr lin_add(VarName a, VarName b) {
  return make(LinAdd{std::move(a), std::move(b)});
}
inline ExprPtr lin_scale(VarName coeff, VarName arg) {
  return make(LinScale{std::move(coeff), std::move(arg)});
}
inline ExprPtr dup(VarName v) { return make(Dup{std::move(v)}); }
inline ExprPtr drop(ExprPtr inner) { return make(Drop{std::move(inner)}); }

}  // namespace ex

// True for `(ret (;))`, the empty multi-value return.
inline bool is_trivial_ret(const Expr& e) {
  const Ret* r = std::get_if<Ret>(&e.node);
  return r && r->nl.empty() && r->lin.empty();
}

// ---------------------------------------------------------------------------
// Definitions and programs

struct FuncDef {
  std::string name;
  std::vector<Binding> nl_params;
  std::vector<Binding> lin_params;
  std::vector<Ty> nl_results;
  std::vector<Ty> lin_results;
  ExprPtr body;
};

inline bool operator==(const FuncDef& a, const FuncDef& b) {
  return a.name == b.name && a.nl_params == b.nl_params &&
         a.lin_params == b.lin_params && a.nl_results == b.nl_results &&
         a.lin_results == b.lin_results && *a.body == *b.body;
}

struct Program {
  std::vector<FuncDef> defs;

  const FuncDef* find(std::string_view name) const {
    for (const FuncDef& d : defs)
      if (d.name == name) return &d;
    return nullptr;
  }
  bool has(std::string_view name) const { return find(name) != nullptr; }
};

inline bool operator==(const Program& a, const Program& b) {
  return a.defs == b.defs;
}

struct FuncSig {
  std::vector<Ty> nl_params;
  std::vector<Ty> lin_params;
  std::vector<Ty> nl_results;
  std::vector<Ty> lin_results;
};

using SigTable = std::map<std::string, FuncSig, std::less<>>;

inline FuncSig sig_of(const FuncDef& d) {
  FuncSig s;
  for (const Binding& b : d.nl_params) s.nl_params.push_back(b.ty);
  for (const Binding& b : d.lin_params) s.lin_params.push_back(b.ty);
  s.nl_results = d.nl_results;
  s.lin_results = d.lin_results;
  return s;
}

inline SigTable signatures(const Program& p) {
  SigTable t;
  for (const FuncDef& d : p.defs) t[d.name] = sig_of(d);
  return t;
}

// ---------------------------------------------------------------------------
// Arity

// (number of non-linear results, number of linear results)
struct Arity {
  int nl = 0;
  int lin = 0;
  friend bool operator==(const Arity&, const Arity&) = default;
};

// Derives the arity of an expression. Total on well-formed trees; Call needs
// the signature table for the callee's result arity.
inline Arity arity_of(const Expr& e, const SigTable& sigs) {
  return std::visit(
      detail::overloaded{
          [](const Ret& r) {
            return Arity{(int)r.nl.size(), (int)r.lin.size()};
          },
          [&](const MLet& m) { return arity_of(*m.body, sigs); },
          [&](const UnpackNl& u) { return arity_of(*u.body, sigs); },
          [&](const UnpackLin& u) { return arity_of(*u.body, sigs); },
          [&](const Call& c) {
            auto it = sigs.find(c.callee);
            if (it == sigs.end())
              throw std::runtime_error("arity_of: unknown function '" + c.callee + "'");
            return Arity{(int)it->second.nl_results.size(),
                         (int)it->second.lin_results.size()};
          },
          [](const NlVar&) { return Arity{1, 0}; },
          [](const Lit&) { return Arity{1, 0}; },
          [](const NlTuple&) { return Arity{1, 0}; },
          [](const Prim&) { return Arity{1, 0}; },
          [](const LinVar&) { return Arity{0, 1}; },
          [](const LinZero&) { return Arity{0, 1}; },
          [](const LinTuple&) { return Arity{0, 1}; },
          [](const LinAdd&) { return Arity{0, 1}; },
          [](const LinScale&) { return Arity{0, 1}; },
          [](const Dup&) { return Arity{0, 2}; },
          [](const Drop&) { return Arity{0, 0}; },
      },
      e.node);
}

// ---------------------------------------------------------------------------
// Size metric

// Every grammar node has size 1: production nodes, variable references,
// binders, and type nodes all count.
inline int expr_size(const Expr& e) {
  auto binds_size = [](const std::vector<Binding>& bs) {
    int n = 0;
    for (const Binding& b : bs) n += 1 + b.ty.size_nodes();
    return n;
  };
  return std::visit(
      detail::overloaded{
          [](const Ret& r) { return 1 + (int)r.nl.size() + (int)r.lin.size(); },
          [&](const MLet& m) {
            return 1 + binds_size(m.nl_binds) + binds_size(m.lin_binds) +
                   expr_size(*m.bound) + expr_size(*m.body);
          },
          [&](const UnpackNl& u) {
            return 1 + binds_size(u.binds) + 1 + expr_size(*u.body);
          },
          [&](const UnpackLin& u) {
            return 1 + binds_size(u.binds) + 1 + expr_size(*u.body);
          },
          [](const Call& c) {
            return 1 + (int)c.nl_args.size() + (int)c.lin_args.size();
          },
          [](const NlVar&) { return 1; },
          [](const Lit&) { return 1; },
          [](const NlTuple& t) { return 1 + (int)t.vars.size(); },
          [](const Prim& p) { return 1 + (int)p.args.size(); },
          [](const LinVar&) { return 1; },
          [](const LinZero& z) { return 1 + z.ty.size_nodes(); },
          [](const LinTuple& t) { return 1 + (int)t.vars.size(); },
          [](const LinAdd&) { return 1 + 2; },
          [](const LinScale&) { return 1 + 2; },
          [](const Dup&) { return 1 + 1; },
          [&](const Drop& d) { return 1 + expr_size(*d.inner); },
      },
      e.node);
}

inline int def_size(const FuncDef& d) {
  int n = 1;  // the def node
  for (const Binding& b : d.nl_params) n += 1 + b.ty.size_nodes();
  for (const Binding& b : d.lin_params) n += 1 + b.ty.size_nodes();
  for (const Ty& t : d.nl_results) n += t.size_nodes();
  for (const Ty& t : d.lin_results) n += t.size_nodes();
  return n + expr_size(*d.body);
}

inline int program_size(const Program& p) {
  int n = 0;
  for (const FuncDef& d : p.defs) n += def_size(d);
  return n;
}

// ---------------------------------------------------------------------------
// Free variables

namespace detail {

struct FreeVarAcc {
  std::vector<VarName> order;
  std::set<VarName, std::less<>> seen;
  void add(const VarName& v, const std::set<VarName, std::less<>>& bound) {
    if (bound.count(v) || seen.count(v)) return;
    seen.insert(v);
    order.push_back(v);
  }
};

inline void free_vars_rec(const Expr& e, bool want_linear,
                          std::set<VarName, std::less<>>& bound, FreeVarAcc& acc) {
  auto add_all = [&](const std::vector<VarName>& vs) {
    for (const VarName& v : vs) acc.add(v, bound);
  };
  auto with_binds = [&](const std::vector<Binding>& bs, const ExprPtr& body) {
    std::vector<VarName> added;
    for (const Binding& b : bs)
      if (bound.insert(b.name).second) added.push_back(b.name);
    free_vars_rec(*body, want_linear, bound, acc);
    for (const VarName& v : added) bound.erase(v);
  };
  std::visit(
      detail::overloaded{
          [&](const Ret& r) { add_all(want_linear ? r.lin : r.nl); },
          [&](const MLet& m) {
            free_vars_rec(*m.bound, want_linear, bound, acc);
            std::vector<VarName> added;
            for (const Binding& b : m.nl_binds)
              if (bound.insert(b.name).second) added.push_back(b.name);
            for (const Binding& b : m.lin_binds)
              if (bound.insert(b.name).second) added.push_back(b.name);
            free_vars_rec(*m.body, want_linear, bound, acc);
            for (const VarName& v : added) bound.erase(v);
          },
          [&](const UnpackNl& u) {
            if (!want_linear) acc.add(u.source, bound);
            with_binds(u.binds, u.body);
          },
          [&](const UnpackLin& u) {
            if (want_linear) acc.add(u.source, bound);
            with_binds(u.binds, u.body);
          },
          [&](const Call& c) { add_all(want_linear ? c.lin_args : c.nl_args); },
          [&](const NlVar& v) {
            if (!want_linear) acc.add(v.name, bound);
          },
          [&](const Lit&) {},
          [&](const NlTuple& t) {
            if (!want_linear) add_all(t.vars);
          },
          [&](const Prim& p) {
            if (!want_linear) add_all(p.args);
          },
          [&](const LinVar& v) {
            if (want_linear) acc.add(v.name, bound);
          },
          [&](const LinZero&) {},
          [&](const LinTuple& t) {
            if (want_linear) add_all(t.vars);
          },
          [&](const LinAdd& a) {
            if (want_linear) {
              acc.add(a.lhs, bound);
              acc.add(a.rhs, bound);
            }
          },
          [&](const LinScale& s) {
            if (want_linear)
              acc.add(s.arg, bound);
            else
              acc.add(s.coeff, bound);
          },
          [&](const Dup& d) {
            if (want_linear) acc.add(d.var, bound);
          },
          [&](const Drop& d) { free_vars_rec(*d.inner, want_linear, bound, acc); },
      },
      e.node);
}

}  // namespace detail

// Distinct free non-linear variable reads, in first-read order.
inline std::vector<VarName> free_nl_vars(const Expr& e) {
  detail::FreeVarAcc acc;
  std::set<VarName, std::less<>> bound;
  detail::free_vars_rec(e, /*want_linear=*/false, bound, acc);
  return std::move(acc.order);
}

// Distinct free linear variable reads, in first-read order. Well-typed
// expressions read each linear variable exactly once.
inline std::vector<VarName> free_lin_vars(const Expr& e) {
  detail::FreeVarAcc acc;
  std::set<VarName, std::less<>> bound;
  detail::free_vars_rec(e, /*want_linear=*/true, bound, acc);
  return std::move(acc.order);
}

inline bool reads_linear(const Expr& e) { return !free_lin_vars(e).empty(); }

// ---------------------------------------------------------------------------
// Variable substitution

// Renames free variable reads according to `map`. Binders are untouched and
// shadow map entries in their scope.
inline ExprPtr substitute_reads(const ExprPtr& e,
                                const std::map<VarName, VarName>& map);

namespace detail {

inline VarName subst(const VarName& v, const std::map<VarName, VarName>& m) {
  auto it = m.find(v);
  return it == m.end() ? v : it->second;
}

inline std::vector<VarName> subst_all(const std::vector<VarName>& vs,
                                      const std::map<VarName, VarName>& m) {
  std::vector<VarName> out;
  out.reserve(vs.size());
  for (const VarName& v : vs) out.push_back(subst(v, m));
  return out;
}

inline std::map<VarName, VarName> without_binds(std::map<VarName, VarName> m,
                                                const std::vector<Binding>& bs) {
  for (const Binding& b : bs) m.erase(b.name);
  return m;
}

}  // namespace detail

inline ExprPtr substitute_reads(const ExprPtr& e,
                                const std::map<VarName, VarName>& map) {
  using namespace detail;
  if (map.empty()) return e;
  return std::visit(
      detail::overloaded{
          [&](const Ret& r) { return ex::ret(subst_all(r.nl, map), subst_all(r.lin, map)); },
          [&](const MLet& m) {
            auto inner = without_binds(map, m.nl_binds);
            inner = without_binds(std::move(inner), m.lin_binds);
            return ex::mlet(m.nl_binds, m.lin_binds, substitute_reads(m.bound, map),
                            substitute_reads(m.body, inner));
          },
          [&](const UnpackNl& u) {
            return ex::unpack_nl(u.binds, subst(u.source, map),
                                 substitute_reads(u.body, without_binds(map, u.binds)));
          },
          [&](const UnpackLin& u) {
            return ex::unpack_lin(u.binds, subst(u.source, map),
                                  substitute_reads(u.body, without_binds(map, u.binds)));
          },
          [&](const Call& c) {
            return ex::call(c.callee, subst_all(c.nl_args, map), subst_all(c.lin_args, map));
          },
          [&](const NlVar& v) { return ex::nl_var(subst(v.name, map)); },
          [&](const Lit& l) { return ex::lit(l.value); },
          [&](const NlTuple& t) { return ex::nl_tuple(subst_all(t.vars, map)); },
          [&](const Prim& p) { return ex::prim(p.op, subst_all(p.args, map)); },
          [&](const LinVar& v) { return ex::lin_var(subst(v.name, map)); },
          [&](const LinZero& z) { return ex::lin_zero(z.ty); },
          [&](const LinTuple& t) { return ex::lin_tuple(subst_all(t.vars, map)); },
          [&](const LinAdd& a) { return ex::lin_add(subst(a.lhs, map), subst(a.rhs, map)); },
          [&](const LinScale& s) {
            return ex::lin_scale(subst(s.coeff, map), subst(s.arg, map));
          },
          [&](const Dup& d) { return ex::dup(subst(d.var, map)); },
          [&](const Drop& d) { return ex::drop(substitute_reads(d.inner, map)); },
      },
      e->node);
}

// ---------------------------------------------------------------------------
// Fresh names

namespace detail {

inline void collect_names_rec(const Expr& e, std::set<VarName, std::less<>>& out) {
  auto add = [&](const VarName& v) { out.insert(v); };
  auto add_all = [&](const std::vector<VarName>& vs) {
    for (const VarName& v : vs) out.insert(v);
  };
  auto add_binds = [&](const std::vector<Binding>& bs) {
    for (const Binding& b : bs) out.insert(b.name);
  };
  std::visit(detail::overloaded{
                 [&](const Ret& r) {
                   add_all(r.nl);
                   add_all(r.lin);
                 },
                 [&](const MLet& m) {
                   add_binds(m.nl_binds);
                   add_binds(m.lin_binds);
                   collect_names_rec(*m.bound, out);
                   collect_names_rec(*m.body, out);
                 },
                 [&](const UnpackNl& u) {
                   add_binds(u.binds);
                   add(u.source);
                   collect_names_rec(*u.body, out);
                 },
                 [&](const UnpackLin& u) {
                   add_binds(u.binds);
                   add(u.source);
                   collect_names_rec(*u.body, out);
                 },
                 [&](const Call& c) {
                   add_all(c.nl_args);
                   add_all(c.lin_args);
                 },
                 [&](const NlVar& v) { add(v.name); },
                 [&](const Lit&) {},
                 [&](const NlTuple& t) { add_all(t.vars); },
                 [&](const Prim& p) { add_all(p.args); },
                 [&](const LinVar& v) { add(v.name); },
                 [&](const LinZero&) {},
                 [&](const LinTuple& t) { add_all(t.vars); },
                 [&](const LinAdd& a) {
                   add(a.lhs);
                   add(a.rhs);
                 },
                 [&](const LinScale& s) {
                   add(s.coeff);
                   add(s.arg);
                 },
                 [&](const Dup& d) { add(d.var); },
                 [&](const Drop& d) { collect_names_rec(*d.inner, out); },
             },
             e.node);
}

}  // namespace detail

inline std::set<VarName, std::less<>> collect_var_names(const Program& p) {
  std::set<VarName, std::less<>> out;
  for (const FuncDef& d : p.defs) {
    for (const Binding& b : d.nl_params) out.insert(b.name);
    for (const Binding& b : d.lin_params) out.insert(b.name);
    detail::collect_names_rec(*d.body, out);
  }
  return out;
}

// Deterministic supply of fresh variable names. Drawn names use the reserved
// '%' sigil and a strictly increasing numeric suffix, so successive draws are
// distinct. Seeding the counter above every numeric suffix of '%'-names
// already present in a program keeps draws fresh even when the input itself
// came out of an earlier transformation.
class NameSupply {
 public:
  NameSupply() = default;
  explicit NameSupply(std::uint64_t counter) : counter_(counter) {}

  static NameSupply for_program(const Program& p) {
    std::uint64_t counter = 0;
    for (const VarName& v : collect_var_names(p)) {
      if (v.empty() || v[0] != '%') continue;
      std::size_t end = v.size();
      std::size_t begin = end;
      while (begin > 0 && std::isdigit((unsigned char)v[begin - 1])) --begin;
      if (begin == end || end - begin > 18) continue;
      std::uint64_t n = std::stoull(v.substr(begin, end - begin));
      counter = std::max(counter, n + 1);
    }
    return NameSupply(counter);
  }

  VarName fresh(std::string_view hint) {
    std::string h(hint);
    while (!h.empty() && h.front() == '%') h.erase(h.begin());
    while (!h.empty() && std::isdigit((unsigned char)h.back())) h.pop_back();
    if (h.empty()) h = "t";
    return "%" + h + std::to_string(counter_++);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t counter_ = 0;
};

// Picks a definition name not present in `p`: `base` itself if free,
// otherwise base2, base3, ...
inline std::string fresh_def_name(const Program& p, const std::string& base) {
  if (!p.has(base)) return base;
  for (int i = 2;; ++i) {
    std::string cand = base + std::to_string(i);
    if (!p.has(cand)) return cand;
  }
}

}  // namespace lina
