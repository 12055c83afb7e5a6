#pragma once

// Forward-mode differentiation. Takes definitions from the purely
// non-linear fragment and produces definitions with doubled parameters and
// results: for `f` with parameters (v_i : t_i ;) and results (s_k ;), the
// derived `f.jvp` has parameters (v_i : t_i ; dv_i : t_i) and results
// (s_k ; s_k). The non-linear results reproduce f exactly; the linear
// results carry the directional derivative in the direction given by the
// tangent arguments. Tangent types reuse the primal types.
//
// Tangent variables are linear, so a primal variable referenced k times
// needs its tangent fanned out through k-1 right-nested dups.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "lina/ir.hpp"
#include "lina/typecheck.hpp"

namespace lina {

// True when the definition touches no linear syntax at all.
namespace detail {

inline bool purely_nonlinear_expr(const Expr& e) {
  return std::visit(
      overloaded{
          [](const Ret& r) { return r.lin.empty(); },
          [](const MLet& m) {
            return m.lin_binds.empty() && purely_nonlinear_expr(*m.bound) &&
                   purely_nonlinear_expr(*m.body);
          },
          [](const UnpackNl& u) { return purely_nonlinear_expr(*u.body); },
          [](const UnpackLin&) { return false; },
          [](const Call& c) { return c.lin_args.empty(); },
          [](const NlVar&) { return true; },
          [](const Lit&) { return true; },
          [](const NlTuple&) { return true; },
          [](const Prim&) { return true; },
          [](const LinVar&) { return false; },
          [](const LinZero&) { return false; },
          [](const LinTuple&) { return false; },
          [](const LinAdd&) { return false; },
          [](const LinScale&) { return false; },
          [](const Dup&) { return false; },
          [](const Drop& d) { return purely_nonlinear_expr(*d.inner); },
      },
      e.node);
}

}  // namespace detail

inline bool is_purely_nonlinear(const FuncDef& d) {
  return d.lin_params.empty() && d.lin_results.empty() &&
         detail::purely_nonlinear_expr(*d.body);
}

struct JvpOutput {
  Program program;
  // primal definition name -> derivative definition name
  std::map<std::string, std::string> names;
};

namespace detail {

struct JvpCtx {
  Program out;
  NameSupply supply;
  std::map<std::string, std::string> names;
};

// Maps in-scope primal variables to their tangent variable and type. At
// every transformation step it covers exactly the free non-linear variables
// of the expression at hand.
struct TanEntry {
  VarName tangent;
  Ty ty;
};
using TangentMap = std::map<VarName, TanEntry, std::less<>>;

struct JvpFrame {
  std::vector<Binding> nl;
  std::vector<Binding> lin;
  ExprPtr bound;
};

inline ExprPtr wrap_frames(const std::vector<JvpFrame>& frames, ExprPtr core) {
  for (auto it = frames.rbegin(); it != frames.rend(); ++it)
    core = ex::mlet(it->nl, it->lin, it->bound, core);
  return core;
}

// Tangent names parallel to `vars`, adding dup frames for repeated
// references.
inline std::vector<VarName> tangents_for(const std::vector<VarName>& vars,
                                         const TangentMap& tm,
                                         std::vector<JvpFrame>& frames,
                                         NameSupply& supply) {
  std::map<VarName, int, std::less<>> remaining;
  for (const VarName& v : vars) remaining[v] += 1;

  std::map<VarName, VarName, std::less<>> current;
  std::vector<VarName> out;
  out.reserve(vars.size());
  for (const VarName& v : vars) {
    const TanEntry& entry = tm.at(v);
    auto cur = current.find(v);
    VarName avail = cur == current.end() ? entry.tangent : cur->second;
    if (remaining[v] == 1) {
      out.push_back(avail);
      current[v] = avail;  // exhausted; no further reference exists
    } else {
      VarName take = supply.fresh("d" + v);
      VarName keep = supply.fresh("d" + v);
      frames.push_back({{}, {{take, entry.ty}, {keep, entry.ty}}, ex::dup(avail)});
      out.push_back(take);
      current[v] = keep;
    }
    remaining[v] -= 1;
  }
  return out;
}

inline TangentMap restrict_to(const TangentMap& tm, const std::vector<VarName>& vars) {
  TangentMap out;
  for (const VarName& v : vars) out.emplace(v, tm.at(v));
  return out;
}

inline ExprPtr jvp_expr(const Expr& e, const TangentMap& tm, JvpCtx& ctx);

inline std::string ensure_jvp_def(const std::string& name, JvpCtx& ctx);

inline ExprPtr jvp_prim(const Prim& p, const TangentMap& tm, JvpCtx& ctx) {
  std::vector<JvpFrame> frames;
  std::vector<VarName> tans = tangents_for(p.args, tm, frames, ctx.supply);
  NameSupply& s = ctx.supply;
  Ty R = Ty::real();

  VarName primal = s.fresh("p");
  VarName tangent = s.fresh("dt");
  ExprPtr core;
  switch (p.op) {
    case PrimOp::Sin: {
      VarName c = s.fresh("c");
      core = ex::mlet({{primal, R}}, {}, ex::prim(PrimOp::Sin, {p.args[0]}),
                      ex::mlet({{c, R}}, {}, ex::prim(PrimOp::Cos, {p.args[0]}),
                               ex::mlet({}, {{tangent, R}}, ex::lin_scale(c, tans[0]),
                                        ex::ret({primal}, {tangent}))));
      break;
    }
    case PrimOp::Cos: {
      VarName sn = s.fresh("s");
      VarName neg = s.fresh("n");
      VarName coeff = s.fresh("c");
      core = ex::mlet(
          {{primal, R}}, {}, ex::prim(PrimOp::Cos, {p.args[0]}),
          ex::mlet({{sn, R}}, {}, ex::prim(PrimOp::Sin, {p.args[0]}),
                   ex::mlet({{neg, R}}, {}, ex::lit(-1.0),
                            ex::mlet({{coeff, R}}, {}, ex::prim(PrimOp::Mul, {neg, sn}),
                                     ex::mlet({}, {{tangent, R}},
                                              ex::lin_scale(coeff, tans[0]),
                                              ex::ret({primal}, {tangent}))))));
      break;
    }
    case PrimOp::Exp: {
      core = ex::mlet({{primal, R}}, {}, ex::prim(PrimOp::Exp, {p.args[0]}),
                      ex::mlet({}, {{tangent, R}}, ex::lin_scale(primal, tans[0]),
                               ex::ret({primal}, {tangent})));
      break;
    }
    case PrimOp::Add: {
      core = ex::mlet({{primal, R}}, {}, ex::prim(PrimOp::Add, p.args),
                      ex::mlet({}, {{tangent, R}}, ex::lin_add(tans[0], tans[1]),
                               ex::ret({primal}, {tangent})));
      break;
    }
    case PrimOp::Mul: {
      VarName a = s.fresh("da");
      VarName b = s.fresh("db");
      core = ex::mlet(
          {{primal, R}}, {}, ex::prim(PrimOp::Mul, p.args),
          ex::mlet({}, {{a, R}}, ex::lin_scale(p.args[0], tans[1]),
                   ex::mlet({}, {{b, R}}, ex::lin_scale(p.args[1], tans[0]),
                            ex::mlet({}, {{tangent, R}}, ex::lin_add(a, b),
                                     ex::ret({primal}, {tangent})))));
      break;
    }
  }
  return wrap_frames(frames, core);
}

inline ExprPtr jvp_expr(const Expr& e, const TangentMap& tm, JvpCtx& ctx) {
  using lina::ex::mlet;
  return std::visit(
      overloaded{
          [&](const Ret& r) {
            std::vector<JvpFrame> frames;
            std::vector<VarName> tans = tangents_for(r.nl, tm, frames, ctx.supply);
            return wrap_frames(frames, ex::ret(r.nl, tans));
          },
          [&](const MLet& m) {
            std::vector<VarName> free1 = free_nl_vars(*m.bound);
            std::set<VarName, std::less<>> binds;
            for (const Binding& b : m.nl_binds) binds.insert(b.name);
            std::vector<VarName> free2;
            for (const VarName& v : free_nl_vars(*m.body))
              if (!binds.count(v)) free2.push_back(v);
            std::set<VarName, std::less<>> in2(free2.begin(), free2.end());

            std::vector<JvpFrame> frames;
            TangentMap tm1, tm2;
            for (const VarName& v : free2) tm2.emplace(v, tm.at(v));
            for (const VarName& v : free1) {
              const TanEntry& entry = tm.at(v);
              if (in2.count(v)) {
                VarName for_bound = ctx.supply.fresh("d" + v);
                VarName for_body = ctx.supply.fresh("d" + v);
                frames.push_back({{},
                                  {{for_bound, entry.ty}, {for_body, entry.ty}},
                                  ex::dup(entry.tangent)});
                tm1.emplace(v, TanEntry{for_bound, entry.ty});
                tm2[v] = TanEntry{for_body, entry.ty};
              } else {
                tm1.emplace(v, entry);
              }
            }
            std::vector<Binding> tan_binds;
            for (const Binding& b : m.nl_binds) {
              VarName t = ctx.supply.fresh("d" + b.name);
              tan_binds.push_back({t, b.ty});
              tm2.emplace(b.name, TanEntry{t, b.ty});
            }
            ExprPtr bound = jvp_expr(*m.bound, tm1, ctx);
            ExprPtr body = jvp_expr(*m.body, tm2, ctx);
            return wrap_frames(frames,
                               mlet(m.nl_binds, std::move(tan_binds), bound, body));
          },
          [&](const UnpackNl& u) {
            std::set<VarName, std::less<>> binds;
            for (const Binding& b : u.binds) binds.insert(b.name);
            std::vector<VarName> body_free;
            for (const VarName& v : free_nl_vars(*u.body))
              if (!binds.count(v)) body_free.push_back(v);
            bool source_in_body = false;
            for (const VarName& v : body_free) source_in_body |= v == u.source;

            std::vector<JvpFrame> frames;
            TangentMap tmb;
            for (const VarName& v : body_free)
              if (v != u.source) tmb.emplace(v, tm.at(v));

            const TanEntry& src = tm.at(u.source);
            VarName unpack_from = src.tangent;
            if (source_in_body) {
              VarName for_unpack = ctx.supply.fresh("d" + u.source);
              VarName for_body = ctx.supply.fresh("d" + u.source);
              frames.push_back({{},
                                {{for_unpack, src.ty}, {for_body, src.ty}},
                                ex::dup(src.tangent)});
              unpack_from = for_unpack;
              tmb.emplace(u.source, TanEntry{for_body, src.ty});
            }
            std::vector<Binding> tan_binds;
            for (const Binding& b : u.binds) {
              VarName t = ctx.supply.fresh("d" + b.name);
              tan_binds.push_back({t, b.ty});
              tmb.emplace(b.name, TanEntry{t, b.ty});
            }
            ExprPtr body = jvp_expr(*u.body, tmb, ctx);
            return wrap_frames(
                frames, ex::unpack_nl(u.binds, u.source,
                                      ex::unpack_lin(tan_binds, unpack_from, body)));
          },
          [&](const Call& c) {
            std::vector<JvpFrame> frames;
            std::vector<VarName> tans = tangents_for(c.nl_args, tm, frames, ctx.supply);
            std::string callee = ensure_jvp_def(c.callee, ctx);
            return wrap_frames(frames, ex::call(callee, c.nl_args, tans));
          },
          [&](const NlVar& v) { return ex::ret({v.name}, {tm.at(v.name).tangent}); },
          [&](const Lit& l) {
            VarName c = ctx.supply.fresh("c");
            VarName z = ctx.supply.fresh("dz");
            return mlet({{c, Ty::real()}}, {}, ex::lit(l.value),
                        mlet({}, {{z, Ty::real()}}, ex::lin_zero(Ty::real()),
                             ex::ret({c}, {z})));
          },
          [&](const NlTuple& t) {
            std::vector<JvpFrame> frames;
            std::vector<VarName> tans = tangents_for(t.vars, tm, frames, ctx.supply);
            std::vector<Ty> elem_tys;
            for (const VarName& v : t.vars) elem_tys.push_back(tm.at(v).ty);
            Ty ty = Ty::tup(elem_tys);
            VarName primal = ctx.supply.fresh("t");
            VarName tangent = ctx.supply.fresh("dt");
            return wrap_frames(
                frames, mlet({{primal, ty}}, {}, ex::nl_tuple(t.vars),
                             mlet({}, {{tangent, ty}}, ex::lin_tuple(tans),
                                  ex::ret({primal}, {tangent}))));
          },
          [&](const Prim& p) { return jvp_prim(p, tm, ctx); },
          [&](const Drop& d) { return ex::drop(jvp_expr(*d.inner, tm, ctx)); },
          [&](const auto&) -> ExprPtr {
            throw TransformError("jvp: definition is not purely non-linear");
          },
      },
      e.node);
}

inline std::string ensure_jvp_def(const std::string& name, JvpCtx& ctx) {
  auto done = ctx.names.find(name);
  if (done != ctx.names.end()) return done->second;

  const FuncDef* d = ctx.out.find(name);
  if (!d) throw TransformError("jvp: unknown function '" + name + "'");
  if (!is_purely_nonlinear(*d))
    throw TransformError("jvp: '" + name +
                         "' uses linear syntax; only the purely non-linear "
                         "fragment can be differentiated");

  std::string jname = fresh_def_name(ctx.out, name + ".jvp");
  ctx.names.emplace(name, jname);

  TangentMap tm;
  std::vector<Binding> tan_params;
  for (const Binding& b : d->nl_params) {
    VarName t = ctx.supply.fresh("d" + b.name);
    tan_params.push_back({t, b.ty});
    tm.emplace(b.name, TanEntry{t, b.ty});
  }
  FuncDef out;
  out.name = jname;
  out.nl_params = d->nl_params;
  out.lin_params = std::move(tan_params);
  out.nl_results = d->nl_results;
  out.lin_results = d->nl_results;
  out.body = jvp_expr(*d->body, tm, ctx);
  ctx.out.defs.push_back(std::move(out));
  return jname;
}

}  // namespace detail

// Differentiates every root (and, transitively, every function they call),
// appending the derived definitions to a copy of the program. Originals are
// kept. Requires `p` to typecheck and the roots to be purely non-linear.
inline JvpOutput jvp(const Program& p, const std::vector<std::string>& roots) {
  typecheck_program(p);
  detail::JvpCtx ctx{p, NameSupply::for_program(p), {}};
  for (const std::string& root : roots) detail::ensure_jvp_def(root, ctx);
  return JvpOutput{std::move(ctx.out), std::move(ctx.names)};
}

}  // namespace lina
