#pragma once

// Canonical pretty-printer. The output is the interchange format: it
// re-parses to an alpha-equal tree, and golden tests pin it byte for byte.

#include <string>

#include "sigma/ast.hpp"

namespace sigma {

namespace detail {

// Type printing levels: 0 = anywhere (binders, arrows), 1 = arrow operand,
// 2 = atom. Binders extend maximally to the right.
inline void print_type_at(const TypePtr& t, int level, std::string& out);

inline void print_methods(const std::vector<MethodType>& ms, std::string& out) {
  out += '[';
  bool first = true;
  for (const auto& m : ms) {
    if (!first) out += ", ";
    first = false;
    out += m.name;
    out += " : ";
    out += to_string(m.variance);
    out += ' ';
    print_type_at(m.type, 1, out);
  }
  out += ']';
}

inline void print_type_at(const TypePtr& t, int level, std::string& out) {
  if (!t) {
    out += "<null>";
    return;
  }
  auto parens = [&](auto body) {
    out += '(';
    body();
    out += ')';
  };
  switch (t->kind) {
    case TypeKind::Var:
      out += t->name;
      return;
    case TypeKind::Top:
      out += "Top";
      return;
    case TypeKind::Bot:
      out += "Bot";
      return;
    case TypeKind::Arrow: {
      auto body = [&] {
        print_type_at(t->a, 2, out);
        out += " -> ";
        print_type_at(t->b, 1, out);  // right-associative
      };
      if (level >= 2) parens(body); else body();
      return;
    }
    case TypeKind::Obj:
      print_methods(t->methods, out);
      return;
    case TypeKind::ObjSplit: {
      out += '[';
      bool first = true;
      for (const auto& m : t->split_methods) {
        if (!first) out += ", ";
        first = false;
        out += m.name;
        out += " : (";
        print_type_at(m.write, 0, out);
        out += ", ";
        print_type_at(m.read, 0, out);
        out += ')';
      }
      out += ']';
      return;
    }
    case TypeKind::Mu: {
      auto body = [&] {
        out += "mu ";
        out += t->name;
        out += ". ";
        print_type_at(t->a, 0, out);
      };
      if (level >= 1) parens(body); else body();
      return;
    }
    case TypeKind::All:
    case TypeKind::Some: {
      auto body = [&] {
        out += t->kind == TypeKind::All ? "All(" : "Some(";
        out += t->name;
        out += " <: ";
        print_type_at(t->a, 0, out);
        out += ") ";
        print_type_at(t->b, 0, out);
      };
      if (level >= 1) parens(body); else body();
      return;
    }
    case TypeKind::SelfObj:
    case TypeKind::RecObj: {
      auto body = [&] {
        out += t->kind == TypeKind::SelfObj ? "Obj(" : "Rec(";
        out += t->name;
        out += ") ";
        print_methods(t->methods, out);
      };
      if (level >= 1) parens(body); else body();
      return;
    }
    case TypeKind::Approx: {
      auto body = [&] {
        out += "approx[";
        out += std::to_string(t->level);
        out += "] ";
        print_type_at(t->a, 2, out);
      };
      if (level >= 2) parens(body); else body();
      return;
    }
    case TypeKind::RefV: {
      auto body = [&] {
        out += "ref ";
        out += to_string(t->ref_variance);
        out += ' ';
        print_type_at(t->a, 2, out);
      };
      if (level >= 2) parens(body); else body();
      return;
    }
    case TypeKind::RefGen:
      out += "ref(";
      print_type_at(t->a, 0, out);
      out += ", ";
      print_type_at(t->b, 0, out);
      out += ')';
      return;
  }
}

// Term printing levels: 0 = anywhere (lambdas, updates, open), 1 = spine
// (application), 2 = unary operand (fold/unfold argument), 3 = atom.
inline void print_term_at(const TermPtr& t, int level, std::string& out);

inline void print_method_def(const MethodDef& m, const std::string& name, std::string& out) {
  out += name;
  out += " = self(";
  out += m.self_var;
  if (m.self_annot) {
    out += " : ";
    print_type_at(m.self_annot, 0, out);
  }
  out += ") ";
  print_term_at(m.body, 0, out);
}

inline void print_term_at(const TermPtr& t, int level, std::string& out) {
  if (!t) {
    out += "<null>";
    return;
  }
  auto parens = [&](auto body) {
    out += '(';
    body();
    out += ')';
  };
  switch (t->kind) {
    case TermKind::Var:
      out += t->name;
      return;
    case TermKind::Lam: {
      auto body = [&] {
        out += "\\(";
        out += t->name;
        out += " : ";
        print_type_at(t->ann, 0, out);
        out += ") ";
        print_term_at(t->t1, 0, out);
      };
      if (level >= 1) parens(body); else body();
      return;
    }
    case TermKind::TLam: {
      auto body = [&] {
        out += "Fun(";
        out += t->name;
        out += " <: ";
        print_type_at(t->ann, 0, out);
        out += ") ";
        print_term_at(t->t1, 0, out);
      };
      if (level >= 1) parens(body); else body();
      return;
    }
    case TermKind::App: {
      auto body = [&] {
        print_term_at(t->t1, 1, out);
        out += ' ';
        print_term_at(t->t2, 2, out);
      };
      if (level >= 2) parens(body); else body();
      return;
    }
    case TermKind::ObjNew: {
      out += "obj ";
      print_type_at(t->ann, 2, out);
      out += " {";
      bool first = true;
      for (const auto& m : t->methods) {
        if (!first) out += ',';
        out += ' ';
        first = false;
        print_method_def(m, m.name, out);
      }
      out += first ? "}" : " }";
      return;
    }
    case TermKind::Invoke: {
      auto body = [&] {
        print_term_at(t->t1, 3, out);
        out += '.';
        out += t->name;
      };
      if (level > 3) parens(body); else body();
      return;
    }
    case TermKind::Update: {
      auto body = [&] {
        print_term_at(t->t1, 3, out);
        out += '.';
        out += t->name;
        out += " := self(";
        out += t->upd.self_var;
        if (t->upd.self_annot) {
          out += " : ";
          print_type_at(t->upd.self_annot, 0, out);
        }
        out += ") ";
        print_term_at(t->upd.body, 0, out);
      };
      if (level >= 1) parens(body); else body();
      return;
    }
    case TermKind::Clone:
      out += "clone(";
      print_term_at(t->t1, 0, out);
      out += ')';
      return;
    case TermKind::Fold:
    case TermKind::Unfold: {
      auto body = [&] {
        out += t->kind == TermKind::Fold ? "fold[" : "unfold[";
        print_type_at(t->ann, 0, out);
        out += "] ";
        print_term_at(t->t1, 2, out);
      };
      if (level >= 3) parens(body); else body();
      return;
    }
    case TermKind::TApp: {
      auto body = [&] {
        print_term_at(t->t1, 3, out);
        out += '[';
        print_type_at(t->ann2, 0, out);
        out += ']';
      };
      if (level > 3) parens(body); else body();
      return;
    }
    case TermKind::Pack:
      out += "pack<";
      out += t->name;
      out += " <: ";
      print_type_at(t->ann, 0, out);
      out += " = ";
      print_type_at(t->ann2, 0, out);
      out += ", ";
      print_term_at(t->t1, 0, out);
      out += " : ";
      print_type_at(t->ann3, 0, out);
      out += '>';
      return;
    case TermKind::Open: {
      auto body = [&] {
        out += "open ";
        print_term_at(t->t1, 1, out);
        out += " as <";
        out += t->name;
        out += " <: ";
        print_type_at(t->ann, 0, out);
        out += ", ";
        out += t->name2;
        out += " : ";
        print_type_at(t->ann2, 0, out);
        out += "> in ";
        print_term_at(t->t2, 0, out);
        out += " : ";
        print_type_at(t->ann3, 1, out);
      };
      if (level >= 1) parens(body); else body();
      return;
    }
    case TermKind::RuntimeObj: {
      out += '{';
      bool first = true;
      for (const auto& [n, l] : t->slots) {
        if (!first) out += ", ";
        first = false;
        out += n;
        out += " = l";
        out += std::to_string(l);
      }
      out += '}';
      return;
    }
  }
}

}  // namespace detail

inline std::string print_type(const TypePtr& t) {
  std::string out;
  detail::print_type_at(t, 0, out);
  return out;
}

inline std::string print_term(const TermPtr& t) {
  std::string out;
  detail::print_term_at(t, 0, out);
  return out;
}

inline std::string print_loc(Loc l) { return "l" + std::to_string(l); }

}  // namespace sigma
