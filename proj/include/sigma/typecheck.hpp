#pragma once

// Algorithmic well-formedness, subtyping, and term typing. The declarative
// system has free-standing transitivity and subsumption; here transitivity is
// admissible via bound promotion and subsumption is folded into elimination
// sites, so every term synthesizes a minimal type (Bot-typed receivers
// synthesize Bot at eliminations). Quantifier subtyping keeps the full
// contravariant-bound rule, so termination rests on fuel and exhaustion is a
// visible third verdict, never a silent default.
//
// Two modes share the machinery. Variance mode works on [m : nu A] object
// types directly. Split mode first rewrites every variance-annotated object
// type into its write/read form and then uses the generalized rules only.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sigma/ast.hpp"
#include "sigma/binding.hpp"
#include "sigma/printer.hpp"

namespace sigma {

enum class Mode : uint8_t { Variance, Split };

inline const char* to_string(Mode m) {
  return m == Mode::Variance ? "variance" : "split";
}

// Deliberate rule breakages for the unsoundness-detection harness. Each flag
// disables or flips exactly one side condition; all off means the real system.
struct Mutations {
  bool drop_inv_variance = false;   // Inv: accept con-annotated methods
  bool drop_upd_variance = false;   // Upd: accept cov-annotated methods
  bool cov_upd_body = false;        // Upd: accept bodies at a supertype
  bool width_reverse = false;       // SubObj: target may have extra methods
  bool con_read_payload = false;    // split Inv: return the write component

  bool any() const {
    return drop_inv_variance || drop_upd_variance || cov_upd_body ||
           width_reverse || con_read_payload;
  }

  static std::optional<Mutations> by_name(const std::string& name) {
    Mutations m;
    if (name == "drop-inv-variance") m.drop_inv_variance = true;
    else if (name == "drop-upd-variance") m.drop_upd_variance = true;
    else if (name == "cov-upd-body") m.cov_upd_body = true;
    else if (name == "width-reverse") m.width_reverse = true;
    else if (name == "con-read-payload") m.con_read_payload = true;
    else return std::nullopt;
    return m;
  }

  static const std::vector<std::string>& names() {
    static const std::vector<std::string> all = {
        "drop-inv-variance", "drop-upd-variance", "cov-upd-body",
        "width-reverse", "con-read-payload"};
    return all;
  }
};

struct CheckOptions {
  Mode mode = Mode::Variance;
  size_t fuel = 4096;  // subtype recursion budget
  Mutations mut;
};

// ---------------------------------------------------------------------------
// Typing contexts

struct Context {
  struct Binding {
    bool is_type;
    std::string name;
    TypePtr type;  // term binding's type, or type binding's upper bound
  };
  std::vector<Binding> binds;

  bool has(const std::string& n) const {
    for (const auto& b : binds)
      if (b.name == n) return true;
    return false;
  }
  const TypePtr* term_type(const std::string& n) const {
    for (auto it = binds.rbegin(); it != binds.rend(); ++it)
      if (!it->is_type && it->name == n) return &it->type;
    return nullptr;
  }
  const TypePtr* type_bound(const std::string& n) const {
    for (auto it = binds.rbegin(); it != binds.rend(); ++it)
      if (it->is_type && it->name == n) return &it->type;
    return nullptr;
  }
  std::set<std::string> names() const {
    std::set<std::string> out;
    for (const auto& b : binds) out.insert(b.name);
    return out;
  }
  void push_term(std::string n, TypePtr t) {
    binds.push_back({false, std::move(n), std::move(t)});
  }
  void push_type(std::string n, TypePtr bound) {
    binds.push_back({true, std::move(n), std::move(bound)});
  }
  void pop(size_t count = 1) {
    binds.resize(binds.size() - count);
  }
};

// ---------------------------------------------------------------------------
// Well-formedness: scope check over declared type variables

namespace detail {

inline bool wf_type_in(const TypePtr& t, const Context& ctx,
                       std::set<std::string>& local) {
  if (!t) return false;
  switch (t->kind) {
    case TypeKind::Var:
      return local.count(t->name) > 0 || ctx.type_bound(t->name) != nullptr;
    case TypeKind::Top:
    case TypeKind::Bot:
      return true;
    case TypeKind::Arrow:
      return wf_type_in(t->a, ctx, local) && wf_type_in(t->b, ctx, local);
    case TypeKind::Obj:
      for (const auto& m : t->methods)
        if (!wf_type_in(m.type, ctx, local)) return false;
      return true;
    case TypeKind::ObjSplit:
      for (const auto& m : t->split_methods)
        if (!wf_type_in(m.write, ctx, local) || !wf_type_in(m.read, ctx, local))
          return false;
      return true;
    case TypeKind::Mu: {
      bool added = local.insert(t->name).second;
      bool ok = wf_type_in(t->a, ctx, local);
      if (added) local.erase(t->name);
      return ok;
    }
    case TypeKind::All:
    case TypeKind::Some: {
      if (!wf_type_in(t->a, ctx, local)) return false;
      bool added = local.insert(t->name).second;
      bool ok = wf_type_in(t->b, ctx, local);
      if (added) local.erase(t->name);
      return ok;
    }
    case TypeKind::SelfObj: {
      bool added = local.insert(t->name).second;
      bool ok = true;
      for (const auto& m : t->methods)
        if (!wf_type_in(m.type, ctx, local)) { ok = false; break; }
      if (added) local.erase(t->name);
      return ok;
    }
    case TypeKind::Approx:
    case TypeKind::RefV:
    case TypeKind::RefGen:
    case TypeKind::RecObj:
      return false;  // engine-internal forms, not source types
  }
  return false;
}

}  // namespace detail

inline bool wf_type(const Context& ctx, const TypePtr& t) {
  std::set<std::string> local;
  return detail::wf_type_in(t, ctx, local);
}

inline bool wf_context(const Context& ctx) {
  Context prefix;
  std::set<std::string> seen;
  for (const auto& b : ctx.binds) {
    if (!seen.insert(b.name).second) return false;
    if (!wf_type(prefix, b.type)) return false;
    prefix.binds.push_back(b);
  }
  return true;
}

// ---------------------------------------------------------------------------
// Variance -> split encoding: inv A becomes (A, A), cov A becomes (Bot, A),
// con A becomes (A, Top), applied structurally everywhere.

inline TypePtr encode_to_split(const TypePtr& t) {
  if (!t) return t;
  switch (t->kind) {
    case TypeKind::Var:
    case TypeKind::Top:
    case TypeKind::Bot:
      return t;
    case TypeKind::Arrow:
      return Type::arrow(encode_to_split(t->a), encode_to_split(t->b));
    case TypeKind::Obj: {
      std::vector<SplitMethodType> ms;
      for (const auto& m : t->methods) {
        TypePtr p = encode_to_split(m.type);
        switch (m.variance) {
          case Variance::Inv: ms.push_back({m.name, p, p}); break;
          case Variance::Cov: ms.push_back({m.name, Type::bot(), p}); break;
          case Variance::Con: ms.push_back({m.name, p, Type::top()}); break;
        }
      }
      return Type::obj_split(std::move(ms));
    }
    case TypeKind::ObjSplit: {
      std::vector<SplitMethodType> ms;
      for (const auto& m : t->split_methods)
        ms.push_back({m.name, encode_to_split(m.write), encode_to_split(m.read)});
      return Type::obj_split(std::move(ms));
    }
    case TypeKind::Mu:
      return Type::mu(t->name, encode_to_split(t->a));
    case TypeKind::All:
      return Type::all(t->name, encode_to_split(t->a), encode_to_split(t->b));
    case TypeKind::Some:
      return Type::some(t->name, encode_to_split(t->a), encode_to_split(t->b));
    default:
      return t;  // SelfObj is desugared before encoding; internal kinds pass
  }
}

// ---------------------------------------------------------------------------
// Subtyping

struct SubtypeResult {
  enum class Kind : uint8_t { Yes, No, Unknown };
  Kind kind;
  std::string reason;  // first failing premise (No) or budget note (Unknown)

  bool yes() const { return kind == Kind::Yes; }
  static SubtypeResult pass() { return {Kind::Yes, {}}; }
  static SubtypeResult fail(std::string r) { return {Kind::No, std::move(r)}; }
  static SubtypeResult out_of_fuel() {
    return {Kind::Unknown, "subtyping fuel exhausted"};
  }
};

namespace detail {

class Subtyper {
 public:
  Subtyper(Mode mode, size_t fuel, const Mutations& mut)
      : mode_(mode), fuel_(fuel), mut_(mut) {}

  SubtypeResult sub(Context& ctx, const TypePtr& a, const TypePtr& b) {
    if (fuel_ == 0) return SubtypeResult::out_of_fuel();
    --fuel_;

    if (alpha_eq_type(a, b)) return SubtypeResult::pass();
    if (b->kind == TypeKind::Top) return SubtypeResult::pass();
    if (a->kind == TypeKind::Bot) return SubtypeResult::pass();

    // a variable is below exactly what its bound is below
    if (a->kind == TypeKind::Var) {
      const TypePtr* bound = ctx.type_bound(a->name);
      if (!bound)
        return SubtypeResult::fail("type variable " + a->name + " is unbound");
      SubtypeResult r = sub(ctx, *bound, b);
      if (r.kind == SubtypeResult::Kind::No)
        r.reason = "promoting " + a->name + ": " + r.reason;
      return r;
    }
    if (b->kind == TypeKind::Var)
      return SubtypeResult::fail("no rule yields the type variable " + b->name +
                                 " as a supertype of " + print_type(a));

    if (a->kind == TypeKind::Arrow && b->kind == TypeKind::Arrow) {
      SubtypeResult dom = sub(ctx, b->a, a->a);
      if (!dom.yes()) return wrap(dom, "procedure domain (contravariant)");
      SubtypeResult cod = sub(ctx, a->b, b->b);
      if (!cod.yes()) return wrap(cod, "procedure codomain");
      return SubtypeResult::pass();
    }

    if (a->kind == TypeKind::Obj && b->kind == TypeKind::Obj)
      return sub_obj(ctx, a, b);
    if (a->kind == TypeKind::ObjSplit && b->kind == TypeKind::ObjSplit)
      return sub_obj_split(ctx, a, b);
    if ((a->kind == TypeKind::Obj && b->kind == TypeKind::ObjSplit) ||
        (a->kind == TypeKind::ObjSplit && b->kind == TypeKind::Obj))
      return SubtypeResult::fail(
          "object forms differ (encode variance types before comparing)");

    if (a->kind == TypeKind::Mu && b->kind == TypeKind::Mu)
      return sub_mu(ctx, a, b);

    if (a->kind == TypeKind::All && b->kind == TypeKind::All) {
      SubtypeResult bnd = sub(ctx, b->a, a->a);
      if (!bnd.yes()) return wrap(bnd, "universal bound (contravariant)");
      return sub_binder_bodies(ctx, a, b, b->a, "universal body");
    }
    if (a->kind == TypeKind::Some && b->kind == TypeKind::Some) {
      SubtypeResult bnd = sub(ctx, a->a, b->a);
      if (!bnd.yes()) return wrap(bnd, "existential bound (covariant)");
      return sub_binder_bodies(ctx, a, b, a->a, "existential body");
    }

    return SubtypeResult::fail("no rule relates " + print_type(a) + " and " +
                               print_type(b));
  }

  size_t fuel_left() const { return fuel_; }

 private:
  static SubtypeResult wrap(SubtypeResult r, const std::string& where) {
    if (r.kind == SubtypeResult::Kind::No) r.reason = where + ": " + r.reason;
    return r;
  }

  SubtypeResult sub_obj(Context& ctx, const TypePtr& a, const TypePtr& b) {
    // width: every target method must exist in the source
    const auto& wide = mut_.width_reverse ? b->methods : a->methods;
    const auto& narrow = mut_.width_reverse ? a->methods : b->methods;
    for (const auto& m : narrow) {
      bool found = false;
      for (const auto& w : wide)
        if (w.name == m.name) { found = true; break; }
      if (!found)
        return SubtypeResult::fail("width: method " + m.name +
                                   " is missing from " + print_type(a));
    }
    // depth on the common methods, guided by the target annotation
    for (const auto& mb : b->methods) {
      const MethodType* ma = nullptr;
      for (const auto& m : a->methods)
        if (m.name == mb.name) { ma = &m; break; }
      if (!ma) continue;  // only reachable under width_reverse
      if (ma->variance != mb.variance && ma->variance != Variance::Inv)
        return SubtypeResult::fail(
            "method " + mb.name + ": annotation " + to_string(ma->variance) +
            " cannot weaken to " + to_string(mb.variance));
      if (mb.variance == Variance::Cov || mb.variance == Variance::Inv) {
        SubtypeResult r = sub(ctx, ma->type, mb.type);
        if (!r.yes()) return wrap(r, "method " + mb.name + " (covariant depth)");
      }
      if (mb.variance == Variance::Con || mb.variance == Variance::Inv) {
        SubtypeResult r = sub(ctx, mb.type, ma->type);
        if (!r.yes()) return wrap(r, "method " + mb.name + " (contravariant depth)");
      }
    }
    return SubtypeResult::pass();
  }

  SubtypeResult sub_obj_split(Context& ctx, const TypePtr& a, const TypePtr& b) {
    const auto& wide = mut_.width_reverse ? b->split_methods : a->split_methods;
    const auto& narrow = mut_.width_reverse ? a->split_methods : b->split_methods;
    for (const auto& m : narrow) {
      bool found = false;
      for (const auto& w : wide)
        if (w.name == m.name) { found = true; break; }
      if (!found)
        return SubtypeResult::fail("width: method " + m.name +
                                   " is missing from " + print_type(a));
    }
    for (const auto& mb : b->split_methods) {
      const SplitMethodType* ma = nullptr;
      for (const auto& m : a->split_methods)
        if (m.name == mb.name) { ma = &m; break; }
      if (!ma) continue;
      SubtypeResult w = sub(ctx, mb.write, ma->write);
      if (!w.yes()) return wrap(w, "method " + mb.name + " write (contravariant)");
      SubtypeResult r = sub(ctx, ma->read, mb.read);
      if (!r.yes()) return wrap(r, "method " + mb.name + " read (covariant)");
    }
    return SubtypeResult::pass();
  }

  SubtypeResult sub_mu(Context& ctx, const TypePtr& a, const TypePtr& b) {
    // Amber rule with an assumption set: a pair already under consideration
    // succeeds on revisit, realizing the hypothesis X <: Y.
    for (const auto& [ha, hb] : assumptions_)
      if (alpha_eq_type(ha, a) && alpha_eq_type(hb, b)) return SubtypeResult::pass();
    assumptions_.emplace_back(a, b);

    std::set<std::string> avoid = ctx.names();
    for (const auto& v : free_type_vars(a)) avoid.insert(v);
    for (const auto& v : free_type_vars(b)) avoid.insert(v);
    avoid.insert(a->name);
    avoid.insert(b->name);
    std::string y1 = fresh_name(b->name, avoid);
    avoid.insert(y1);
    std::string x1 = fresh_name(a->name, avoid);

    ctx.push_type(y1, Type::top());
    ctx.push_type(x1, Type::var(y1));
    SubtypeResult r = sub(ctx, subst_type(a->a, a->name, Type::var(x1)),
                          subst_type(b->a, b->name, Type::var(y1)));
    ctx.pop(2);
    assumptions_.pop_back();
    return wrap(r, "recursive bodies under " + x1 + " <: " + y1);
  }

  SubtypeResult sub_binder_bodies(Context& ctx, const TypePtr& a, const TypePtr& b,
                                  const TypePtr& bound, const char* where) {
    std::set<std::string> avoid = ctx.names();
    for (const auto& v : free_type_vars(a)) avoid.insert(v);
    for (const auto& v : free_type_vars(b)) avoid.insert(v);
    std::string z = fresh_name(a->name, avoid);
    ctx.push_type(z, bound);
    SubtypeResult r = sub(ctx, subst_type(a->b, a->name, Type::var(z)),
                          subst_type(b->b, b->name, Type::var(z)));
    ctx.pop();
    return wrap(r, where);
  }

  Mode mode_;
  size_t fuel_;
  Mutations mut_;  // by value: callers may hand in a temporary
  std::vector<std::pair<TypePtr, TypePtr>> assumptions_;
};

}  // namespace detail

// Normalization applied to every annotation before rules consult it.
inline TypePtr norm_type(const TypePtr& t, Mode mode) {
  TypePtr d = desugar_self(t);
  return mode == Mode::Split ? encode_to_split(d) : d;
}

inline SubtypeResult subtype(const Context& ctx, const TypePtr& a, const TypePtr& b,
                             const CheckOptions& opts = {}) {
  Context work = ctx;
  detail::Subtyper s(opts.mode, opts.fuel, opts.mut);
  return s.sub(work, norm_type(a, opts.mode), norm_type(b, opts.mode));
}

// ---------------------------------------------------------------------------
// Term typing

struct TypeError : std::runtime_error {
  std::string rule;     // the typing rule whose premise failed
  std::string detail;   // what went wrong, including any subtype reason
  TermPtr at;           // offending subterm
  bool fuel_exhausted;  // true when the cause was budget, not a refusal

  TypeError(std::string r, std::string d, TermPtr t, bool fuel = false)
      : std::runtime_error(format(r, d, t)),
        rule(std::move(r)),
        detail(std::move(d)),
        at(std::move(t)),
        fuel_exhausted(fuel) {}

  static std::string format(const std::string& r, const std::string& d,
                            const TermPtr& t) {
    std::string out = r + ": " + d;
    if (t) {
      out += "\n  in: " + print_term(t);
      if (t->pos.line > 0)
        out += " (line " + std::to_string(t->pos.line) + ", column " +
               std::to_string(t->pos.col) + ")";
    }
    return out;
  }
};

namespace detail {

class Typechecker {
 public:
  Typechecker(const Context& ctx, CheckOptions opts)
      : ctx_(ctx), opts_(std::move(opts)) {}

  TypePtr synth(const TermPtr& t) {
    switch (t->kind) {
      case TermKind::Var: {
        const TypePtr* ty = ctx_.term_type(t->name);
        if (!ty) throw TypeError("Var", "unbound variable " + t->name, t);
        return *ty;
      }
      case TermKind::Lam: {
        TypePtr a = annot(t->ann, "Lam", t);
        TermPtr body = t->t1;
        std::string x = bind_term(t->name, a, body);
        TypePtr b = synth(body);
        ctx_.pop();
        (void)x;
        return Type::arrow(a, b);
      }
      case TermKind::App: {
        TypePtr f = promote(synth(t->t1));
        if (f->kind == TypeKind::Bot) {
          synth(t->t2);  // the argument must still be typable
          return Type::bot();
        }
        if (f->kind != TypeKind::Arrow)
          throw TypeError("App", "applying a term of non-procedure type " +
                          print_type(f), t);
        check_at(t->t2, f->a, "App");
        return f->b;
      }
      case TermKind::ObjNew:
        return synth_obj(t);
      case TermKind::Invoke:
        return synth_invoke(t);
      case TermKind::Update:
        return synth_update(t);
      case TermKind::Clone: {
        TypePtr s = promote(synth(t->t1));
        if (s->kind == TypeKind::Bot) return s;
        if (s->kind != obj_kind())
          throw TypeError("Clone", "cloning a term of non-object type " +
                          print_type(s), t);
        return s;
      }
      case TermKind::Fold: {
        TypePtr m = annot(t->ann, "Fold", t);
        if (m->kind != TypeKind::Mu)
          throw TypeError("Fold", "annotation " + print_type(m) +
                          " is not a recursive type", t);
        check_at(t->t1, subst_type(m->a, m->name, m), "Fold");
        return m;
      }
      case TermKind::Unfold: {
        TypePtr m = annot(t->ann, "Unfold", t);
        if (m->kind != TypeKind::Mu)
          throw TypeError("Unfold", "annotation " + print_type(m) +
                          " is not a recursive type", t);
        TypePtr s = synth(t->t1);
        if (s->kind == TypeKind::Bot) return s;
        require_sub(s, m, "Unfold", t);
        return subst_type(m->a, m->name, m);
      }
      case TermKind::TLam: {
        TypePtr bound = annot(t->ann, "TAbs", t);
        TermPtr body = t->t1;
        std::string x = bind_type(t->name, bound, body, nullptr);
        TypePtr b = synth(body);
        ctx_.pop();
        return Type::all(x, bound, b);
      }
      case TermKind::TApp: {
        TypePtr f = promote(synth(t->t1));
        TypePtr arg = annot(t->ann2, "TApp", t);
        if (f->kind == TypeKind::Bot) return f;
        if (f->kind != TypeKind::All)
          throw TypeError("TApp", "type-applying a term of non-universal type " +
                          print_type(f), t);
        require_sub(arg, f->a, "TApp", t);
        return subst_type(f->b, f->name, arg);
      }
      case TermKind::Pack: {
        TypePtr bound = annot(t->ann, "Pack", t);
        TypePtr witness = annot(t->ann2, "Pack", t);
        TypePtr body_ty = desugar_self(t->ann3);
        if (opts_.mode == Mode::Split) body_ty = encode_to_split(body_ty);
        {
          Context inner = ctx_;
          inner.push_type(t->name, bound);
          if (!wf_type(inner, body_ty))
            throw TypeError("Pack", "body type " + print_type(body_ty) +
                            " is not well-formed", t);
        }
        require_sub(witness, bound, "Pack", t);
        // the premise re-checks the payload with the witness substituted in
        check_at(subst_type_in_term(t->t1, t->name, witness),
                 subst_type(body_ty, t->name, witness), "Pack");
        return Type::some(t->name, bound, body_ty);
      }
      case TermKind::Open: {
        TypePtr bound = annot(t->ann, "Open", t);
        TypePtr var_ty;
        {
          Context inner = ctx_;
          inner.push_type(t->name, bound);
          var_ty = desugar_self(t->ann2);
          if (opts_.mode == Mode::Split) var_ty = encode_to_split(var_ty);
          if (!wf_type(inner, var_ty))
            throw TypeError("Open", "payload type " + print_type(var_ty) +
                            " is not well-formed", t);
        }
        TypePtr result = annot(t->ann3, "Open", t);  // checked under plain ctx:
        // the hidden variable must not escape into the result type
        TypePtr target = Type::some(t->name, bound, var_ty);
        TypePtr s = synth(t->t1);
        require_sub(s, target, "Open", t);
        TermPtr body = t->t2;
        TypePtr var_ty2 = var_ty;
        std::string x1 = bind_type(t->name, bound, body, &var_ty2);
        std::string x2 = bind_term(t->name2, var_ty2, body);
        check_at(body, result, "Open");
        ctx_.pop(2);
        (void)x1; (void)x2;
        return result;
      }
      case TermKind::RuntimeObj:
        throw TypeError("Loc", "run-time objects have no syntactic type", t);
    }
    throw TypeError("?", "unhandled term form", t);
  }

  void check_at(const TermPtr& t, const TypePtr& expected, const char* rule) {
    TypePtr s = synth(t);
    SubtypeResult r = sub(s, expected);
    if (r.yes()) return;
    if (r.kind == SubtypeResult::Kind::Unknown)
      throw TypeError(rule, "cannot decide " + print_type(s) + " <: " +
                      print_type(expected) + " within fuel", t, true);
    throw TypeError(rule, "term has type " + print_type(s) + ", which is not a subtype of " +
                    print_type(expected) + " (" + r.reason + ")", t);
  }

 private:
  TypeKind obj_kind() const {
    return opts_.mode == Mode::Split ? TypeKind::ObjSplit : TypeKind::Obj;
  }

  // normalizes an annotation and insists it is well-scoped
  TypePtr annot(const TypePtr& raw, const char* rule, const TermPtr& at) {
    if (!raw) throw TypeError(rule, "missing type annotation", at);
    TypePtr n = norm_type(raw, opts_.mode);
    if (!wf_type(ctx_, n))
      throw TypeError(rule, "annotation " + print_type(raw) +
                      " is not well-formed here", at);
    return n;
  }

  // pushes x : ty, renaming x inside body if the context already uses it
  std::string bind_term(const std::string& x, const TypePtr& ty, TermPtr& body) {
    std::string name = x;
    if (ctx_.has(name)) {
      std::set<std::string> avoid = ctx_.names();
      FreeVars fv = free_vars(body);
      avoid.insert(fv.term_vars.begin(), fv.term_vars.end());
      name = fresh_name(x, avoid);
      body = subst_term(body, x, Term::var(name));
    }
    ctx_.push_term(name, ty);
    return name;
  }

  // pushes X <: bound, renaming X in body (and one optional carried type)
  std::string bind_type(const std::string& x, const TypePtr& bound, TermPtr& body,
                        TypePtr* carried) {
    std::string name = x;
    if (ctx_.has(name)) {
      std::set<std::string> avoid = ctx_.names();
      FreeVars fv = free_vars(body);
      avoid.insert(fv.type_vars.begin(), fv.type_vars.end());
      if (carried)
        for (const auto& v : free_type_vars(*carried)) avoid.insert(v);
      name = fresh_name(x, avoid);
      body = subst_type_in_term(body, x, Type::var(name));
      if (carried) *carried = subst_type(*carried, x, Type::var(name));
    }
    ctx_.push_type(name, bound);
    return name;
  }

  // repeatedly replaces a type variable by its declared bound
  TypePtr promote(TypePtr s) {
    size_t guard = ctx_.binds.size() + 1;
    while (s->kind == TypeKind::Var && guard-- > 0) {
      const TypePtr* bound = ctx_.type_bound(s->name);
      if (!bound) break;
      s = *bound;
    }
    return s;
  }

  SubtypeResult sub(const TypePtr& a, const TypePtr& b) {
    detail::Subtyper s(opts_.mode, opts_.fuel, opts_.mut);
    return s.sub(ctx_, a, b);
  }

  void require_sub(const TypePtr& a, const TypePtr& b, const char* rule,
                   const TermPtr& at) {
    SubtypeResult r = sub(a, b);
    if (r.yes()) return;
    if (r.kind == SubtypeResult::Kind::Unknown)
      throw TypeError(rule, "cannot decide " + print_type(a) + " <: " +
                      print_type(b) + " within fuel", at, true);
    throw TypeError(rule, print_type(a) + " is not a subtype of " + print_type(b) +
                    " (" + r.reason + ")", at);
  }

  TypePtr synth_obj(const TermPtr& t) {
    TypePtr a = annot(t->ann, "Obj", t);
    if (a->kind != obj_kind())
      throw TypeError("Obj", "annotation " + print_type(a) +
                      " is not an object type", t);
    // the literal must define exactly the annotated methods
    std::set<std::string> defined;
    for (const auto& m : t->methods) defined.insert(m.name);
    std::set<std::string> declared;
    if (opts_.mode == Mode::Split) {
      for (const auto& m : a->split_methods) {
        declared.insert(m.name);
        if (!alpha_eq_type(m.write, m.read))
          throw TypeError("Obj", "literal creation needs write = read for method " +
                          m.name + ", got (" + print_type(m.write) + ", " +
                          print_type(m.read) + ")", t);
      }
    } else {
      for (const auto& m : a->methods) declared.insert(m.name);
    }
    if (defined != declared)
      throw TypeError("Obj", "literal methods do not match the annotation", t);

    for (const auto& m : t->methods) {
      TypePtr self_ann = m.self_annot ? annot(m.self_annot, "Obj", t) : a;
      if (!alpha_eq_type(self_ann, a))
        throw TypeError("Obj", "self annotation of method " + m.name +
                        " differs from the literal annotation", t);
      TypePtr target;
      if (opts_.mode == Mode::Split) {
        target = a->find_split_method(m.name)->read;
      } else {
        target = a->find_method(m.name)->type;
      }
      TermPtr body = m.body;
      bind_term(m.self_var, a, body);
      check_at(body, target, "Obj");
      ctx_.pop();
    }
    return a;
  }

  TypePtr synth_invoke(const TermPtr& t) {
    TypePtr s = promote(synth(t->t1));
    if (s->kind == TypeKind::Bot) return s;
    if (s->kind != obj_kind())
      throw TypeError("Inv", "invoking a method on non-object type " +
                      print_type(s), t);
    if (opts_.mode == Mode::Split) {
      const SplitMethodType* m = s->find_split_method(t->name);
      if (!m) throw TypeError("Inv", "type " + print_type(s) +
                              " has no method " + t->name, t);
      return opts_.mut.con_read_payload ? m->write : m->read;
    }
    const MethodType* m = s->find_method(t->name);
    if (!m) throw TypeError("Inv", "type " + print_type(s) +
                            " has no method " + t->name, t);
    if (m->variance == Variance::Con && !opts_.mut.drop_inv_variance)
      throw TypeError("Inv", "method " + t->name +
                      " is contravariant (write-only) and cannot be invoked", t);
    return m->type;
  }

  TypePtr synth_update(const TermPtr& t) {
    TypePtr s = synth(t->t1);
    TypePtr a;
    if (t->upd.self_annot) {
      a = annot(t->upd.self_annot, "Upd", t);
      require_sub(s, a, "Upd", t);
    } else {
      a = promote(s);  // no annotation: update at the synthesized type
    }
    if (a->kind == TypeKind::Bot) {
      // unreachable receiver; the body must still be typable on its own
      TermPtr body = t->upd.body;
      bind_term(t->upd.self_var, Type::bot(), body);
      synth(body);
      ctx_.pop();
      return Type::bot();
    }
    if (a->kind != obj_kind())
      throw TypeError("Upd", "updating a method on non-object type " +
                      print_type(a), t);
    TypePtr target;
    if (opts_.mode == Mode::Split) {
      const SplitMethodType* m = a->find_split_method(t->name);
      if (!m) throw TypeError("Upd", "type " + print_type(a) +
                              " has no method " + t->name, t);
      target = m->write;
    } else {
      const MethodType* m = a->find_method(t->name);
      if (!m) throw TypeError("Upd", "type " + print_type(a) +
                              " has no method " + t->name, t);
      if (m->variance == Variance::Cov && !opts_.mut.drop_upd_variance)
        throw TypeError("Upd", "method " + t->name +
                        " is covariant (read-only) and cannot be updated", t);
      target = m->type;
    }
    TermPtr body = t->upd.body;
    bind_term(t->upd.self_var, a, body);
    if (opts_.mut.cov_upd_body) {
      // mutated direction: accept any body whose type sits above the target
      TypePtr bt = synth(body);
      SubtypeResult r = sub(target, bt);
      if (!r.yes())
        throw TypeError("Upd", "mutated body check failed", t,
                        r.kind == SubtypeResult::Kind::Unknown);
    } else {
      check_at(body, target, "Upd");
    }
    ctx_.pop();
    return a;
  }

  Context ctx_;
  CheckOptions opts_;
};

}  // namespace detail

// Synthesizes the minimal type of a term, throwing TypeError on failure.
inline TypePtr type_of(const Context& ctx, const TermPtr& t,
                       const CheckOptions& opts = {}) {
  detail::Typechecker tc(ctx, opts);
  return tc.synth(t);
}

inline TypePtr type_of(const TermPtr& t, const CheckOptions& opts = {}) {
  return type_of(Context{}, t, opts);
}

// Checks a term against an expected type (synthesis plus one subtyping step).
inline void check(const Context& ctx, const TermPtr& t, const TypePtr& expected,
                  const CheckOptions& opts = {}) {
  detail::Typechecker tc(ctx, opts);
  tc.check_at(t, norm_type(expected, opts.mode), "Sub");
}

inline bool checks(const Context& ctx, const TermPtr& t, const TypePtr& expected,
                   const CheckOptions& opts = {}) {
  try {
    check(ctx, t, expected, opts);
    return true;
  } catch (const TypeError&) {
    return false;
  }
}

}  // namespace sigma
