#pragma once

// Binding-aware structural operations: free variables, capture-avoiding
// substitution, alpha equality, annotation erasure, self-type desugaring and
// alpha-insensitive hashing.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "sigma/ast.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// Free variables

struct FreeVars {
  std::set<std::string> term_vars;
  std::set<std::string> type_vars;
  std::set<Loc> locs;
};

namespace detail {

inline void free_type_vars_into(const TypePtr& t, std::set<std::string>& bound,
                                std::set<std::string>& out) {
  if (!t) return;
  switch (t->kind) {
    case TypeKind::Var:
      if (!bound.count(t->name)) out.insert(t->name);
      return;
    case TypeKind::Top:
    case TypeKind::Bot:
      return;
    case TypeKind::Arrow:
    case TypeKind::RefGen:
      free_type_vars_into(t->a, bound, out);
      free_type_vars_into(t->b, bound, out);
      return;
    case TypeKind::Obj:
      for (const auto& m : t->methods) free_type_vars_into(m.type, bound, out);
      return;
    case TypeKind::ObjSplit:
      for (const auto& m : t->split_methods) {
        free_type_vars_into(m.write, bound, out);
        free_type_vars_into(m.read, bound, out);
      }
      return;
    case TypeKind::Mu: {
      bool fresh = bound.insert(t->name).second;
      free_type_vars_into(t->a, bound, out);
      if (fresh) bound.erase(t->name);
      return;
    }
    case TypeKind::All:
    case TypeKind::Some: {
      free_type_vars_into(t->a, bound, out);
      bool fresh = bound.insert(t->name).second;
      free_type_vars_into(t->b, bound, out);
      if (fresh) bound.erase(t->name);
      return;
    }
    case TypeKind::SelfObj:
    case TypeKind::RecObj: {
      bool fresh = bound.insert(t->name).second;
      for (const auto& m : t->methods) free_type_vars_into(m.type, bound, out);
      if (fresh) bound.erase(t->name);
      return;
    }
    case TypeKind::Approx:
    case TypeKind::RefV:
      free_type_vars_into(t->a, bound, out);
      return;
  }
}

inline void free_vars_into(const TermPtr& t, std::set<std::string>& bound_term,
                           std::set<std::string>& bound_type, FreeVars& out) {
  if (!t) return;
  auto ty = [&](const TypePtr& a) { free_type_vars_into(a, bound_type, out.type_vars); };
  auto with_term_var = [&](const std::string& x, const TermPtr& body) {
    bool fresh = bound_term.insert(x).second;
    free_vars_into(body, bound_term, bound_type, out);
    if (fresh) bound_term.erase(x);
  };
  switch (t->kind) {
    case TermKind::Var:
      if (!bound_term.count(t->name)) out.term_vars.insert(t->name);
      return;
    case TermKind::Lam:
      ty(t->ann);
      with_term_var(t->name, t->t1);
      return;
    case TermKind::App:
      free_vars_into(t->t1, bound_term, bound_type, out);
      free_vars_into(t->t2, bound_term, bound_type, out);
      return;
    case TermKind::ObjNew:
      ty(t->ann);
      for (const auto& m : t->methods) {
        ty(m.self_annot);
        with_term_var(m.self_var, m.body);
      }
      return;
    case TermKind::Invoke:
      free_vars_into(t->t1, bound_term, bound_type, out);
      return;
    case TermKind::Update:
      free_vars_into(t->t1, bound_term, bound_type, out);
      ty(t->upd.self_annot);
      with_term_var(t->upd.self_var, t->upd.body);
      return;
    case TermKind::Clone:
      free_vars_into(t->t1, bound_term, bound_type, out);
      return;
    case TermKind::Fold:
    case TermKind::Unfold:
      ty(t->ann);
      free_vars_into(t->t1, bound_term, bound_type, out);
      return;
    case TermKind::TLam: {
      ty(t->ann);
      bool fresh = bound_type.insert(t->name).second;
      free_vars_into(t->t1, bound_term, bound_type, out);
      if (fresh) bound_type.erase(t->name);
      return;
    }
    case TermKind::TApp:
      free_vars_into(t->t1, bound_term, bound_type, out);
      ty(t->ann2);
      return;
    case TermKind::Pack: {
      ty(t->ann);   // bound: outside the binder
      ty(t->ann2);  // witness: outside the binder
      bool fresh = bound_type.insert(t->name).second;
      ty(t->ann3);
      free_vars_into(t->t1, bound_term, bound_type, out);
      if (fresh) bound_type.erase(t->name);
      return;
    }
    case TermKind::Open: {
      free_vars_into(t->t1, bound_term, bound_type, out);
      ty(t->ann);   // bound: outside
      ty(t->ann3);  // result type: outside (may not mention X)
      bool fresh_ty = bound_type.insert(t->name).second;
      ty(t->ann2);  // value-variable type: X in scope
      bool fresh_tm = bound_term.insert(t->name2).second;
      free_vars_into(t->t2, bound_term, bound_type, out);
      if (fresh_tm) bound_term.erase(t->name2);
      if (fresh_ty) bound_type.erase(t->name);
      return;
    }
    case TermKind::RuntimeObj:
      for (const auto& [n, l] : t->slots) out.locs.insert(l);
      return;
  }
}

}  // namespace detail

inline std::set<std::string> free_type_vars(const TypePtr& t) {
  std::set<std::string> bound, out;
  detail::free_type_vars_into(t, bound, out);
  return out;
}

inline FreeVars free_vars(const TermPtr& t) {
  FreeVars out;
  std::set<std::string> bt, bty;
  detail::free_vars_into(t, bt, bty, out);
  return out;
}

inline bool type_closed(const TypePtr& t) { return free_type_vars(t).empty(); }

// Closed in the operational sense: no free term or type variables.
inline bool term_closed(const TermPtr& t) {
  FreeVars fv = free_vars(t);
  return fv.term_vars.empty() && fv.type_vars.empty();
}

inline std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  if (!avoid.count(base)) return base;
  for (uint32_t i = 1;; ++i) {
    std::string cand = base + std::to_string(i);
    if (!avoid.count(cand)) return cand;
  }
}

// ---------------------------------------------------------------------------
// Type-in-type substitution: A[X := C], capture-avoiding.

inline TypePtr subst_type(const TypePtr& t, const std::string& x, const TypePtr& c);

namespace detail {

// Rebuilds a binder node whose bound variable would capture free variables of
// the substitution image: renames the binder before descending.
template <typename Rebuild>
TypePtr subst_under_type_binder(const TypePtr& t, const std::string& x, const TypePtr& c,
                                const std::string& binder, Rebuild rebuild) {
  if (binder == x) return rebuild(binder, false);  // x shadowed: stop below
  std::set<std::string> img_fv = free_type_vars(c);
  if (!img_fv.count(binder)) return rebuild(binder, true);
  std::set<std::string> avoid = img_fv;
  // Avoid everything free in the original node too, so renaming is injective.
  for (const auto& v : free_type_vars(t)) avoid.insert(v);
  avoid.insert(x);
  return rebuild(fresh_name(binder, avoid), true);
}

}  // namespace detail

inline TypePtr subst_type(const TypePtr& t, const std::string& x, const TypePtr& c) {
  if (!t) return t;
  switch (t->kind) {
    case TypeKind::Var:
      return t->name == x ? c : t;
    case TypeKind::Top:
    case TypeKind::Bot:
      return t;
    case TypeKind::Arrow:
      return Type::arrow(subst_type(t->a, x, c), subst_type(t->b, x, c));
    case TypeKind::RefGen:
      return Type::ref_gen(subst_type(t->a, x, c), subst_type(t->b, x, c));
    case TypeKind::RefV:
      return Type::ref_v(t->ref_variance, subst_type(t->a, x, c));
    case TypeKind::Approx:
      return Type::approx(t->level, subst_type(t->a, x, c));
    case TypeKind::Obj: {
      std::vector<MethodType> ms;
      ms.reserve(t->methods.size());
      for (const auto& m : t->methods) ms.push_back({m.name, m.variance, subst_type(m.type, x, c)});
      return Type::obj(std::move(ms));
    }
    case TypeKind::ObjSplit: {
      std::vector<SplitMethodType> ms;
      ms.reserve(t->split_methods.size());
      for (const auto& m : t->split_methods)
        ms.push_back({m.name, subst_type(m.write, x, c), subst_type(m.read, x, c)});
      return Type::obj_split(std::move(ms));
    }
    case TypeKind::Mu:
      return detail::subst_under_type_binder(
          t, x, c, t->name, [&](const std::string& b, bool go) {
            TypePtr body = t->a;
            if (b != t->name) body = subst_type(body, t->name, Type::var(b));
            return Type::mu(b, go ? subst_type(body, x, c) : body);
          });
    case TypeKind::All:
    case TypeKind::Some: {
      TypePtr bound = subst_type(t->a, x, c);  // bound is outside the binder
      return detail::subst_under_type_binder(
          t, x, c, t->name, [&](const std::string& b, bool go) {
            TypePtr body = t->b;
            if (b != t->name) body = subst_type(body, t->name, Type::var(b));
            if (go) body = subst_type(body, x, c);
            return t->kind == TypeKind::All ? Type::all(b, bound, body)
                                            : Type::some(b, bound, body);
          });
    }
    case TypeKind::SelfObj:
    case TypeKind::RecObj:
      return detail::subst_under_type_binder(
          t, x, c, t->name, [&](const std::string& b, bool go) {
            std::vector<MethodType> ms;
            ms.reserve(t->methods.size());
            for (const auto& m : t->methods) {
              TypePtr mt = m.type;
              if (b != t->name) mt = subst_type(mt, t->name, Type::var(b));
              if (go) mt = subst_type(mt, x, c);
              ms.push_back({m.name, m.variance, mt});
            }
            return t->kind == TypeKind::SelfObj ? Type::self_obj(b, std::move(ms))
                                                : Type::rec_obj(b, std::move(ms));
          });
  }
  return t;
}

// ---------------------------------------------------------------------------
// Alpha equality. Object methods and runtime slots compare order-insensitively.

namespace detail {

struct AlphaEnv {
  // Pairs of bound names, innermost last.
  std::vector<std::pair<std::string, std::string>> pairs;

  bool matches(const std::string& l, const std::string& r) const {
    for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) {
      if (it->first == l || it->second == r) return it->first == l && it->second == r;
    }
    return l == r;  // both free
  }
  void push(const std::string& l, const std::string& r) { pairs.emplace_back(l, r); }
  void pop() { pairs.pop_back(); }
};

inline bool alpha_eq_type_in(const TypePtr& l, const TypePtr& r, AlphaEnv& env) {
  if (l == r && env.pairs.empty()) return true;
  if (!l || !r) return l == r;
  if (l->kind != r->kind) return false;
  switch (l->kind) {
    case TypeKind::Var:
      return env.matches(l->name, r->name);
    case TypeKind::Top:
    case TypeKind::Bot:
      return true;
    case TypeKind::Arrow:
    case TypeKind::RefGen:
      return alpha_eq_type_in(l->a, r->a, env) && alpha_eq_type_in(l->b, r->b, env);
    case TypeKind::RefV:
      return l->ref_variance == r->ref_variance && alpha_eq_type_in(l->a, r->a, env);
    case TypeKind::Approx:
      return l->level == r->level && alpha_eq_type_in(l->a, r->a, env);
    case TypeKind::Obj: {
      if (l->methods.size() != r->methods.size()) return false;
      for (const auto& lm : l->methods) {
        const MethodType* rm = r->find_method(lm.name);
        if (!rm || rm->variance != lm.variance) return false;
        if (!alpha_eq_type_in(lm.type, rm->type, env)) return false;
      }
      return true;
    }
    case TypeKind::ObjSplit: {
      if (l->split_methods.size() != r->split_methods.size()) return false;
      for (const auto& lm : l->split_methods) {
        const SplitMethodType* rm = r->find_split_method(lm.name);
        if (!rm) return false;
        if (!alpha_eq_type_in(lm.write, rm->write, env)) return false;
        if (!alpha_eq_type_in(lm.read, rm->read, env)) return false;
      }
      return true;
    }
    case TypeKind::Mu: {
      env.push(l->name, r->name);
      bool ok = alpha_eq_type_in(l->a, r->a, env);
      env.pop();
      return ok;
    }
    case TypeKind::All:
    case TypeKind::Some: {
      if (!alpha_eq_type_in(l->a, r->a, env)) return false;
      env.push(l->name, r->name);
      bool ok = alpha_eq_type_in(l->b, r->b, env);
      env.pop();
      return ok;
    }
    case TypeKind::SelfObj:
    case TypeKind::RecObj: {
      if (l->methods.size() != r->methods.size()) return false;
      env.push(l->name, r->name);
      bool ok = true;
      for (const auto& lm : l->methods) {
        const MethodType* rm = r->find_method(lm.name);
        if (!rm || rm->variance != lm.variance || !alpha_eq_type_in(lm.type, rm->type, env)) {
          ok = false;
          break;
        }
      }
      env.pop();
      return ok;
    }
  }
  return false;
}

inline bool alpha_eq_term_in(const TermPtr& l, const TermPtr& r, AlphaEnv& tm, AlphaEnv& ty) {
  if (!l || !r) return l == r;
  if (l->kind != r->kind) return false;
  auto types = [&](const TypePtr& a, const TypePtr& b) { return alpha_eq_type_in(a, b, ty); };
  switch (l->kind) {
    case TermKind::Var:
      return tm.matches(l->name, r->name);
    case TermKind::Lam: {
      if (!types(l->ann, r->ann)) return false;
      tm.push(l->name, r->name);
      bool ok = alpha_eq_term_in(l->t1, r->t1, tm, ty);
      tm.pop();
      return ok;
    }
    case TermKind::App:
      return alpha_eq_term_in(l->t1, r->t1, tm, ty) && alpha_eq_term_in(l->t2, r->t2, tm, ty);
    case TermKind::ObjNew: {
      if (!types(l->ann, r->ann)) return false;
      if (l->methods.size() != r->methods.size()) return false;
      for (const auto& lm : l->methods) {
        const MethodDef* rm = nullptr;
        for (const auto& m : r->methods)
          if (m.name == lm.name) { rm = &m; break; }
        if (!rm || !types(lm.self_annot, rm->self_annot)) return false;
        tm.push(lm.self_var, rm->self_var);
        bool ok = alpha_eq_term_in(lm.body, rm->body, tm, ty);
        tm.pop();
        if (!ok) return false;
      }
      return true;
    }
    case TermKind::Invoke:
      return l->name == r->name && alpha_eq_term_in(l->t1, r->t1, tm, ty);
    case TermKind::Update: {
      if (l->name != r->name) return false;
      if (!alpha_eq_term_in(l->t1, r->t1, tm, ty)) return false;
      if (!types(l->upd.self_annot, r->upd.self_annot)) return false;
      tm.push(l->upd.self_var, r->upd.self_var);
      bool ok = alpha_eq_term_in(l->upd.body, r->upd.body, tm, ty);
      tm.pop();
      return ok;
    }
    case TermKind::Clone:
      return alpha_eq_term_in(l->t1, r->t1, tm, ty);
    case TermKind::Fold:
    case TermKind::Unfold:
      return types(l->ann, r->ann) && alpha_eq_term_in(l->t1, r->t1, tm, ty);
    case TermKind::TLam: {
      if (!types(l->ann, r->ann)) return false;
      ty.push(l->name, r->name);
      bool ok = alpha_eq_term_in(l->t1, r->t1, tm, ty);
      ty.pop();
      return ok;
    }
    case TermKind::TApp:
      return alpha_eq_term_in(l->t1, r->t1, tm, ty) && types(l->ann2, r->ann2);
    case TermKind::Pack: {
      if (!types(l->ann, r->ann) || !types(l->ann2, r->ann2)) return false;
      ty.push(l->name, r->name);
      bool ok = types(l->ann3, r->ann3) && alpha_eq_term_in(l->t1, r->t1, tm, ty);
      ty.pop();
      return ok;
    }
    case TermKind::Open: {
      if (!alpha_eq_term_in(l->t1, r->t1, tm, ty)) return false;
      if (!types(l->ann, r->ann) || !types(l->ann3, r->ann3)) return false;
      ty.push(l->name, r->name);
      bool ok = types(l->ann2, r->ann2);
      if (ok) {
        tm.push(l->name2, r->name2);
        ok = alpha_eq_term_in(l->t2, r->t2, tm, ty);
        tm.pop();
      }
      ty.pop();
      return ok;
    }
    case TermKind::RuntimeObj: {
      if (l->slots.size() != r->slots.size()) return false;
      for (const auto& [n, loc] : l->slots) {
        const Loc* rl = r->find_slot(n);
        if (!rl || *rl != loc) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline bool alpha_eq_type(const TypePtr& l, const TypePtr& r) {
  detail::AlphaEnv env;
  return detail::alpha_eq_type_in(l, r, env);
}

inline bool alpha_eq_term(const TermPtr& l, const TermPtr& r) {
  detail::AlphaEnv tm, ty;
  return detail::alpha_eq_term_in(l, r, tm, ty);
}

// ---------------------------------------------------------------------------
// Term substitutions

inline TermPtr subst_term(const TermPtr& t, const std::string& x, const TermPtr& img);

namespace detail {

// Renames a term binder if it would capture a free variable of img.
inline std::string safe_term_binder(const std::string& binder, const TermPtr& body,
                                    const std::string& x, const TermPtr& img,
                                    TermPtr& renamed_body) {
  renamed_body = body;
  if (binder == x) return binder;
  FreeVars img_fv = free_vars(img);
  if (!img_fv.term_vars.count(binder)) return binder;
  std::set<std::string> avoid = img_fv.term_vars;
  for (const auto& v : free_vars(body).term_vars) avoid.insert(v);
  avoid.insert(x);
  std::string b2 = fresh_name(binder, avoid);
  renamed_body = subst_term(body, binder, Term::var(b2));
  return b2;
}

}  // namespace detail

inline TermPtr subst_term(const TermPtr& t, const std::string& x, const TermPtr& img) {
  if (!t) return t;
  switch (t->kind) {
    case TermKind::Var:
      return t->name == x ? img : t;
    case TermKind::Lam: {
      TermPtr body;
      std::string b = detail::safe_term_binder(t->name, t->t1, x, img, body);
      if (b == x) return t;  // x shadowed by the binder
      return Term::lam(b, t->ann, subst_term(body, x, img));
    }
    case TermKind::App:
      return Term::app(subst_term(t->t1, x, img), subst_term(t->t2, x, img));
    case TermKind::ObjNew: {
      std::vector<MethodDef> ms;
      ms.reserve(t->methods.size());
      for (const auto& m : t->methods) {
        TermPtr body;
        std::string b = detail::safe_term_binder(m.self_var, m.body, x, img, body);
        ms.push_back({m.name, b, m.self_annot,
                      b == x ? m.body : subst_term(body, x, img)});
      }
      return Term::obj_new(t->ann, std::move(ms));
    }
    case TermKind::Invoke:
      return Term::invoke(subst_term(t->t1, x, img), t->name);
    case TermKind::Update: {
      TermPtr body;
      std::string b = detail::safe_term_binder(t->upd.self_var, t->upd.body, x, img, body);
      MethodDef m{t->upd.name, b, t->upd.self_annot,
                  b == x ? t->upd.body : subst_term(body, x, img)};
      return Term::update(subst_term(t->t1, x, img), t->name, std::move(m));
    }
    case TermKind::Clone:
      return Term::clone(subst_term(t->t1, x, img));
    case TermKind::Fold:
      return Term::fold(t->ann, subst_term(t->t1, x, img));
    case TermKind::Unfold:
      return Term::unfold(t->ann, subst_term(t->t1, x, img));
    case TermKind::TLam:
      return Term::tlam(t->name, t->ann, subst_term(t->t1, x, img));
    case TermKind::TApp:
      return Term::tapp(subst_term(t->t1, x, img), t->ann2);
    case TermKind::Pack:
      return Term::pack(t->name, t->ann, t->ann2, subst_term(t->t1, x, img), t->ann3);
    case TermKind::Open: {
      TermPtr scrut = subst_term(t->t1, x, img);
      TermPtr body;
      std::string b = detail::safe_term_binder(t->name2, t->t2, x, img, body);
      if (b == x) return Term::open(scrut, t->name, t->ann, t->name2, t->ann2, t->t2, t->ann3);
      return Term::open(scrut, t->name, t->ann, b, t->ann2, subst_term(body, x, img), t->ann3);
    }
    case TermKind::RuntimeObj:
      return t;
  }
  return t;
}

// Substitutes a type for a type variable throughout a term: b[X := C].
inline TermPtr subst_type_in_term(const TermPtr& t, const std::string& x, const TypePtr& c) {
  if (!t) return t;
  auto ty = [&](const TypePtr& a) { return subst_type(a, x, c); };
  auto rec = [&](const TermPtr& a) { return subst_type_in_term(a, x, c); };
  switch (t->kind) {
    case TermKind::Var:
    case TermKind::RuntimeObj:
      return t;
    case TermKind::Lam:
      return Term::lam(t->name, ty(t->ann), rec(t->t1));
    case TermKind::App:
      return Term::app(rec(t->t1), rec(t->t2));
    case TermKind::ObjNew: {
      std::vector<MethodDef> ms;
      ms.reserve(t->methods.size());
      for (const auto& m : t->methods)
        ms.push_back({m.name, m.self_var, ty(m.self_annot), rec(m.body)});
      return Term::obj_new(ty(t->ann), std::move(ms));
    }
    case TermKind::Invoke:
      return Term::invoke(rec(t->t1), t->name);
    case TermKind::Update:
      return Term::update(rec(t->t1), t->name,
                          {t->upd.name, t->upd.self_var, ty(t->upd.self_annot), rec(t->upd.body)});
    case TermKind::Clone:
      return Term::clone(rec(t->t1));
    case TermKind::Fold:
      return Term::fold(ty(t->ann), rec(t->t1));
    case TermKind::Unfold:
      return Term::unfold(ty(t->ann), rec(t->t1));
    case TermKind::TLam: {
      TypePtr bound = ty(t->ann);
      if (t->name == x) return Term::tlam(t->name, bound, t->t1);
      std::set<std::string> img_fv = free_type_vars(c);
      if (img_fv.count(t->name)) {
        std::set<std::string> avoid = img_fv;
        FreeVars fv = free_vars(t->t1);
        for (const auto& v : fv.type_vars) avoid.insert(v);
        avoid.insert(x);
        std::string b2 = fresh_name(t->name, avoid);
        TermPtr body = subst_type_in_term(t->t1, t->name, Type::var(b2));
        return Term::tlam(b2, bound, subst_type_in_term(body, x, c));
      }
      return Term::tlam(t->name, bound, rec(t->t1));
    }
    case TermKind::TApp:
      return Term::tapp(rec(t->t1), ty(t->ann2));
    case TermKind::Pack: {
      TypePtr bound = ty(t->ann);
      TypePtr witness = ty(t->ann2);
      if (t->name == x) return Term::pack(t->name, bound, witness, t->t1, t->ann3);
      std::set<std::string> img_fv = free_type_vars(c);
      if (img_fv.count(t->name)) {
        std::set<std::string> avoid = img_fv;
        FreeVars fv = free_vars(t->t1);
        for (const auto& v : fv.type_vars) avoid.insert(v);
        for (const auto& v : free_type_vars(t->ann3)) avoid.insert(v);
        avoid.insert(x);
        std::string b2 = fresh_name(t->name, avoid);
        TermPtr payload = subst_type_in_term(t->t1, t->name, Type::var(b2));
        TypePtr body_ty = subst_type(t->ann3, t->name, Type::var(b2));
        return Term::pack(b2, bound, witness, subst_type_in_term(payload, x, c),
                          subst_type(body_ty, x, c));
      }
      return Term::pack(t->name, bound, witness, rec(t->t1), ty(t->ann3));
    }
    case TermKind::Open: {
      TermPtr scrut = rec(t->t1);
      TypePtr bound = ty(t->ann);
      TypePtr result = ty(t->ann3);
      if (t->name == x)
        return Term::open(scrut, t->name, bound, t->name2, t->ann2, t->t2, result);
      std::set<std::string> img_fv = free_type_vars(c);
      if (img_fv.count(t->name)) {
        std::set<std::string> avoid = img_fv;
        FreeVars fv = free_vars(t->t2);
        for (const auto& v : fv.type_vars) avoid.insert(v);
        for (const auto& v : free_type_vars(t->ann2)) avoid.insert(v);
        avoid.insert(x);
        std::string b2 = fresh_name(t->name, avoid);
        TypePtr vt = subst_type(t->ann2, t->name, Type::var(b2));
        TermPtr body = subst_type_in_term(t->t2, t->name, Type::var(b2));
        return Term::open(scrut, b2, bound, t->name2, subst_type(vt, x, c),
                          subst_type_in_term(body, x, c), result);
      }
      return Term::open(scrut, t->name, bound, t->name2, ty(t->ann2), rec(t->t2), result);
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Annotation transforms

// Applies fn to every type-annotation position of a term. fn receives the
// whole annotation and is responsible for its own recursion into the type.
inline TermPtr transform_annotations(const TermPtr& t,
                                     const std::function<TypePtr(const TypePtr&)>& fn) {
  if (!t) return t;
  auto rec = [&](const TermPtr& a) { return transform_annotations(a, fn); };
  switch (t->kind) {
    case TermKind::Var:
    case TermKind::RuntimeObj:
      return t;
    case TermKind::Lam:
      return Term::lam(t->name, fn(t->ann), rec(t->t1));
    case TermKind::App:
      return Term::app(rec(t->t1), rec(t->t2));
    case TermKind::ObjNew: {
      std::vector<MethodDef> ms;
      ms.reserve(t->methods.size());
      for (const auto& m : t->methods)
        ms.push_back({m.name, m.self_var, fn(m.self_annot), rec(m.body)});
      return Term::obj_new(fn(t->ann), std::move(ms));
    }
    case TermKind::Invoke:
      return Term::invoke(rec(t->t1), t->name);
    case TermKind::Update:
      return Term::update(rec(t->t1), t->name,
                          {t->upd.name, t->upd.self_var, fn(t->upd.self_annot), rec(t->upd.body)});
    case TermKind::Clone:
      return Term::clone(rec(t->t1));
    case TermKind::Fold:
      return Term::fold(fn(t->ann), rec(t->t1));
    case TermKind::Unfold:
      return Term::unfold(fn(t->ann), rec(t->t1));
    case TermKind::TLam:
      return Term::tlam(t->name, fn(t->ann), rec(t->t1));
    case TermKind::TApp:
      return Term::tapp(rec(t->t1), fn(t->ann2));
    case TermKind::Pack:
      return Term::pack(t->name, fn(t->ann), fn(t->ann2), rec(t->t1), fn(t->ann3));
    case TermKind::Open:
      return Term::open(rec(t->t1), t->name, fn(t->ann), t->name2, fn(t->ann2), rec(t->t2),
                        fn(t->ann3));
  }
  return t;
}

// Replaces every annotation with Top. Reduction never inspects annotations,
// so erased programs step in lockstep with their annotated originals.
inline TermPtr erase_annotations(const TermPtr& t) {
  return transform_annotations(t, [](const TypePtr&) { return Type::top(); });
}

// ---------------------------------------------------------------------------
// Self-type desugaring: Obj(X)[m_d : v_d B_d] becomes
// mu Y. Some(X <: Y) [m_d : v_d B_d], innermost occurrences first.

inline TypePtr desugar_self(const TypePtr& t) {
  if (!t) return t;
  auto rec = [&](const TypePtr& a) { return desugar_self(a); };
  switch (t->kind) {
    case TypeKind::Var:
    case TypeKind::Top:
    case TypeKind::Bot:
      return t;
    case TypeKind::Arrow:
      return Type::arrow(rec(t->a), rec(t->b));
    case TypeKind::RefGen:
      return Type::ref_gen(rec(t->a), rec(t->b));
    case TypeKind::RefV:
      return Type::ref_v(t->ref_variance, rec(t->a));
    case TypeKind::Approx:
      return Type::approx(t->level, rec(t->a));
    case TypeKind::Obj: {
      std::vector<MethodType> ms;
      ms.reserve(t->methods.size());
      for (const auto& m : t->methods) ms.push_back({m.name, m.variance, rec(m.type)});
      return Type::obj(std::move(ms));
    }
    case TypeKind::ObjSplit: {
      std::vector<SplitMethodType> ms;
      ms.reserve(t->split_methods.size());
      for (const auto& m : t->split_methods) ms.push_back({m.name, rec(m.write), rec(m.read)});
      return Type::obj_split(std::move(ms));
    }
    case TypeKind::Mu:
      return Type::mu(t->name, rec(t->a));
    case TypeKind::All:
      return Type::all(t->name, rec(t->a), rec(t->b));
    case TypeKind::Some:
      return Type::some(t->name, rec(t->a), rec(t->b));
    case TypeKind::RecObj: {
      std::vector<MethodType> ms;
      ms.reserve(t->methods.size());
      for (const auto& m : t->methods) ms.push_back({m.name, m.variance, rec(m.type)});
      return Type::rec_obj(t->name, std::move(ms));
    }
    case TypeKind::SelfObj: {
      std::vector<MethodType> ms;
      ms.reserve(t->methods.size());
      std::set<std::string> avoid{t->name};
      for (const auto& m : t->methods) {
        TypePtr mt = rec(m.type);
        for (const auto& v : free_type_vars(mt)) avoid.insert(v);
        ms.push_back({m.name, m.variance, std::move(mt)});
      }
      std::string y = fresh_name("Y", avoid);
      return Type::mu(y, Type::some(t->name, Type::var(y), Type::obj(std::move(ms))));
    }
  }
  return t;
}

inline bool contains_self_obj(const TypePtr& t) {
  if (!t) return false;
  if (t->kind == TypeKind::SelfObj) return true;
  for (const auto& m : t->methods)
    if (contains_self_obj(m.type)) return true;
  for (const auto& m : t->split_methods)
    if (contains_self_obj(m.write) || contains_self_obj(m.read)) return true;
  return contains_self_obj(t->a) || contains_self_obj(t->b);
}

// ---------------------------------------------------------------------------
// Alpha-insensitive structural hashing (bound variables hashed by depth,
// methods folded in name order). Used for memoization keys.

namespace detail {

inline uint64_t mix(uint64_t h, uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

struct HashEnv {
  std::vector<std::string> ty_stack;
  std::vector<std::string> tm_stack;

  uint64_t ty_index(const std::string& n) const {
    for (size_t i = ty_stack.size(); i-- > 0;)
      if (ty_stack[i] == n) return 1 + (ty_stack.size() - 1 - i);
    return 0;
  }
  uint64_t tm_index(const std::string& n) const {
    for (size_t i = tm_stack.size(); i-- > 0;)
      if (tm_stack[i] == n) return 1 + (tm_stack.size() - 1 - i);
    return 0;
  }
};

inline uint64_t hash_string(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return h;
}

inline uint64_t hash_type_in(const TypePtr& t, HashEnv& env) {
  if (!t) return 0;
  uint64_t h = mix(0xabcdULL, static_cast<uint64_t>(t->kind));
  switch (t->kind) {
    case TypeKind::Var: {
      uint64_t ix = env.ty_index(t->name);
      return mix(h, ix ? ix : hash_string(t->name));
    }
    case TypeKind::Top:
    case TypeKind::Bot:
      return h;
    case TypeKind::Arrow:
    case TypeKind::RefGen:
      h = mix(h, hash_type_in(t->a, env));
      return mix(h, hash_type_in(t->b, env));
    case TypeKind::RefV:
      h = mix(h, static_cast<uint64_t>(t->ref_variance));
      return mix(h, hash_type_in(t->a, env));
    case TypeKind::Approx:
      h = mix(h, t->level);
      return mix(h, hash_type_in(t->a, env));
    case TypeKind::Obj: {
      std::vector<const MethodType*> ms;
      for (const auto& m : t->methods) ms.push_back(&m);
      std::sort(ms.begin(), ms.end(),
                [](auto* a, auto* b) { return a->name < b->name; });
      for (auto* m : ms) {
        h = mix(h, hash_string(m->name));
        h = mix(h, static_cast<uint64_t>(m->variance));
        h = mix(h, hash_type_in(m->type, env));
      }
      return h;
    }
    case TypeKind::ObjSplit: {
      std::vector<const SplitMethodType*> ms;
      for (const auto& m : t->split_methods) ms.push_back(&m);
      std::sort(ms.begin(), ms.end(),
                [](auto* a, auto* b) { return a->name < b->name; });
      for (auto* m : ms) {
        h = mix(h, hash_string(m->name));
        h = mix(h, hash_type_in(m->write, env));
        h = mix(h, hash_type_in(m->read, env));
      }
      return h;
    }
    case TypeKind::Mu: {
      env.ty_stack.push_back(t->name);
      h = mix(h, hash_type_in(t->a, env));
      env.ty_stack.pop_back();
      return h;
    }
    case TypeKind::All:
    case TypeKind::Some: {
      h = mix(h, hash_type_in(t->a, env));
      env.ty_stack.push_back(t->name);
      h = mix(h, hash_type_in(t->b, env));
      env.ty_stack.pop_back();
      return h;
    }
    case TypeKind::SelfObj:
    case TypeKind::RecObj: {
      env.ty_stack.push_back(t->name);
      std::vector<const MethodType*> ms;
      for (const auto& m : t->methods) ms.push_back(&m);
      std::sort(ms.begin(), ms.end(),
                [](auto* a, auto* b) { return a->name < b->name; });
      for (auto* m : ms) {
        h = mix(h, hash_string(m->name));
        h = mix(h, static_cast<uint64_t>(m->variance));
        h = mix(h, hash_type_in(m->type, env));
      }
      env.ty_stack.pop_back();
      return h;
    }
  }
  return h;
}

inline uint64_t hash_term_in(const TermPtr& t, HashEnv& env) {
  if (!t) return 0;
  uint64_t h = mix(0x7e57ULL, static_cast<uint64_t>(t->kind));
  auto ty = [&](const TypePtr& a) { return hash_type_in(a, env); };
  switch (t->kind) {
    case TermKind::Var: {
      uint64_t ix = env.tm_index(t->name);
      return mix(h, ix ? ix : hash_string(t->name));
    }
    case TermKind::Lam:
      h = mix(h, ty(t->ann));
      env.tm_stack.push_back(t->name);
      h = mix(h, hash_term_in(t->t1, env));
      env.tm_stack.pop_back();
      return h;
    case TermKind::App:
      h = mix(h, hash_term_in(t->t1, env));
      return mix(h, hash_term_in(t->t2, env));
    case TermKind::ObjNew: {
      h = mix(h, ty(t->ann));
      std::vector<const MethodDef*> ms;
      for (const auto& m : t->methods) ms.push_back(&m);
      std::sort(ms.begin(), ms.end(),
                [](auto* a, auto* b) { return a->name < b->name; });
      for (auto* m : ms) {
        h = mix(h, hash_string(m->name));
        h = mix(h, ty(m->self_annot));
        env.tm_stack.push_back(m->self_var);
        h = mix(h, hash_term_in(m->body, env));
        env.tm_stack.pop_back();
      }
      return h;
    }
    case TermKind::Invoke:
      h = mix(h, hash_string(t->name));
      return mix(h, hash_term_in(t->t1, env));
    case TermKind::Update:
      h = mix(h, hash_string(t->name));
      h = mix(h, hash_term_in(t->t1, env));
      h = mix(h, ty(t->upd.self_annot));
      env.tm_stack.push_back(t->upd.self_var);
      h = mix(h, hash_term_in(t->upd.body, env));
      env.tm_stack.pop_back();
      return h;
    case TermKind::Clone:
      return mix(h, hash_term_in(t->t1, env));
    case TermKind::Fold:
    case TermKind::Unfold:
      h = mix(h, ty(t->ann));
      return mix(h, hash_term_in(t->t1, env));
    case TermKind::TLam:
      h = mix(h, ty(t->ann));
      env.ty_stack.push_back(t->name);
      h = mix(h, hash_term_in(t->t1, env));
      env.ty_stack.pop_back();
      return h;
    case TermKind::TApp:
      h = mix(h, hash_term_in(t->t1, env));
      return mix(h, ty(t->ann2));
    case TermKind::Pack:
      h = mix(h, ty(t->ann));
      h = mix(h, ty(t->ann2));
      env.ty_stack.push_back(t->name);
      h = mix(h, ty(t->ann3));
      h = mix(h, hash_term_in(t->t1, env));
      env.ty_stack.pop_back();
      return h;
    case TermKind::Open:
      h = mix(h, hash_term_in(t->t1, env));
      h = mix(h, ty(t->ann));
      h = mix(h, ty(t->ann3));
      env.ty_stack.push_back(t->name);
      h = mix(h, ty(t->ann2));
      env.tm_stack.push_back(t->name2);
      h = mix(h, hash_term_in(t->t2, env));
      env.tm_stack.pop_back();
      env.ty_stack.pop_back();
      return h;
    case TermKind::RuntimeObj: {
      std::vector<std::pair<std::string, Loc>> slots = t->slots;
      std::sort(slots.begin(), slots.end());
      for (const auto& [n, l] : slots) {
        h = mix(h, hash_string(n));
        h = mix(h, l);
      }
      return h;
    }
  }
  return h;
}

}  // namespace detail

inline uint64_t hash_type(const TypePtr& t) {
  detail::HashEnv env;
  return detail::hash_type_in(t, env);
}

inline uint64_t hash_term(const TermPtr& t) {
  detail::HashEnv env;
  return detail::hash_term_in(t, env);
}

inline size_t type_size(const TypePtr& t) {
  if (!t) return 0;
  size_t n = 1;
  n += type_size(t->a) + type_size(t->b);
  for (const auto& m : t->methods) n += type_size(m.type);
  for (const auto& m : t->split_methods) n += type_size(m.write) + type_size(m.read);
  return n;
}

inline size_t term_size(const TermPtr& t) {
  if (!t) return 0;
  size_t n = 1;
  n += term_size(t->t1) + term_size(t->t2);
  n += type_size(t->ann) + type_size(t->ann2) + type_size(t->ann3);
  for (const auto& m : t->methods) n += term_size(m.body) + type_size(m.self_annot);
  if (t->kind == TermKind::Update) n += term_size(t->upd.body) + type_size(t->upd.self_annot);
  return n;
}

}  // namespace sigma
