#pragma once

// Surface-syntax printer. parse_program(pretty_print(p)) reconstructs p
// exactly (names preserved); see parser.hpp for the grammar.

#include <charconv>
#include <string>

#include "lina/ir.hpp"

namespace lina {

// Shortest decimal form that reads back as the same binary64 value.
inline std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void join_names(std::string& out, const std::vector<VarName>& vs) {
  for (const VarName& v : vs) {
    out += ' ';
    out += v;
  }
}

inline std::string param_list(const std::vector<Binding>& nl,
                              const std::vector<Binding>& lin) {
  std::string out = "(";
  for (const Binding& b : nl) out += "(" + b.name + " " + to_string(b.ty) + ") ";
  out += ";";
  for (const Binding& b : lin) out += " (" + b.name + " " + to_string(b.ty) + ")";
  out += ")";
  return out;
}

// Leaves render inline; binding forms get their own lines.
inline bool inline_form(const Expr& e) {
  return !std::holds_alternative<MLet>(e.node) &&
         !std::holds_alternative<UnpackNl>(e.node) &&
         !std::holds_alternative<UnpackLin>(e.node) &&
         !std::holds_alternative<Drop>(e.node);
}

inline std::string leaf_text(const Expr& e) {
  using detail::overloaded;
  return std::visit(
      overloaded{
          [](const Ret& r) {
            std::string s = "(ret (";
            for (std::size_t i = 0; i < r.nl.size(); ++i)
              s += (i ? " " : "") + r.nl[i];
            s += " ;";
            join_names(s, r.lin);
            s += "))";
            return s;
          },
          [](const Call& c) {
            std::string s = "(call " + c.callee + " (";
            for (std::size_t i = 0; i < c.nl_args.size(); ++i)
              s += (i ? " " : "") + c.nl_args[i];
            s += " ;";
            join_names(s, c.lin_args);
            s += "))";
            return s;
          },
          [](const NlVar& v) { return v.name; },
          [](const Lit& l) { return format_number(l.value); },
          [](const NlTuple& t) {
            std::string s = "(tup";
            join_names(s, t.vars);
            return s + ")";
          },
          [](const Prim& p) {
            std::string s = "(" + std::string(prim_name(p.op));
            join_names(s, p.args);
            return s + ")";
          },
          [](const LinVar& v) { return v.name; },
          [](const LinZero& z) { return "(lzero " + to_string(z.ty) + ")"; },
          [](const LinTuple& t) {
            std::string s = "(ltup";
            join_names(s, t.vars);
            return s + ")";
          },
          [](const LinAdd& a) { return "(ladd " + a.lhs + " " + a.rhs + ")"; },
          [](const LinScale& s) {
            return "(lscale " + s.coeff + " " + s.arg + ")";
          },
          [](const Dup& d) { return "(dup " + d.var + ")"; },
          [](const auto&) { return std::string("<non-leaf>"); },
      },
      e.node);
}

inline void print_expr(std::string& out, const Expr& e, int indent) {
  std::string pad(2 * indent, ' ');
  if (inline_form(e)) {
    out += pad + leaf_text(e);
    return;
  }
  if (const MLet* m = std::get_if<MLet>(&e.node)) {
    out += pad + "(let " + param_list(m->nl_binds, m->lin_binds);
    if (inline_form(*m->bound)) {
      out += " " + leaf_text(*m->bound) + "\n";
    } else {
      out += "\n";
      print_expr(out, *m->bound, indent + 2);
      out += "\n";
    }
    print_expr(out, *m->body, indent + 1);
    out += ")";
    return;
  }
  if (const UnpackNl* u = std::get_if<UnpackNl>(&e.node)) {
    out += pad + "(untup (";
    for (std::size_t i = 0; i < u->binds.size(); ++i)
      out += (i ? " (" : "(") + u->binds[i].name + " " + to_string(u->binds[i].ty) + ")";
    out += " ;) " + u->source + "\n";
    print_expr(out, *u->body, indent + 1);
    out += ")";
    return;
  }
  if (const UnpackLin* u = std::get_if<UnpackLin>(&e.node)) {
    out += pad + "(untup (;";
    for (const Binding& b : u->binds)
      out += " (" + b.name + " " + to_string(b.ty) + ")";
    out += ") " + u->source + "\n";
    print_expr(out, *u->body, indent + 1);
    out += ")";
    return;
  }
  const Drop& d = std::get<Drop>(e.node);
  if (inline_form(*d.inner)) {
    out += pad + "(drop " + leaf_text(*d.inner) + ")";
  } else {
    out += pad + "(drop\n";
    print_expr(out, *d.inner, indent + 1);
    out += ")";
  }
}

}  // namespace detail

inline std::string pretty_print(const FuncDef& d) {
  std::string out = "(def " + d.name + " " + detail::param_list(d.nl_params, d.lin_params);
  out += " (";
  for (std::size_t i = 0; i < d.nl_results.size(); ++i)
    out += (i ? " " : "") + to_string(d.nl_results[i]);
  out += " ;";
  for (const Ty& t : d.lin_results) out += " " + to_string(t);
  out += ")\n";
  detail::print_expr(out, *d.body, 1);
  out += ")\n";
  return out;
}

inline std::string pretty_print(const Program& p) {
  std::string out;
  for (std::size_t i = 0; i < p.defs.size(); ++i) {
    if (i) out += "\n";
    out += pretty_print(p.defs[i]);
  }
  return out;
}

}  // namespace lina
