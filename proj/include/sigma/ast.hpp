#pragma once

// Core syntax trees for the imperative object calculus: types, terms and
// runtime objects. Nodes are immutable and shared; all structural operations
// (substitution, comparison, printing) live in binding.hpp / printer.hpp.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sigma {

enum class Variance : uint8_t { Inv, Cov, Con };

inline const char* to_string(Variance v) {
  switch (v) {
    case Variance::Inv: return "inv";
    case Variance::Cov: return "cov";
    case Variance::Con: return "con";
  }
  return "?";
}

struct Type;
struct Term;
using TypePtr = std::shared_ptr<const Type>;
using TermPtr = std::shared_ptr<const Term>;

// Heap locations. Only ever appear inside runtime objects and heap domains.
using Loc = uint32_t;

enum class TypeKind : uint8_t {
  Var,
  Top,
  Bot,
  Arrow,     // A -> B
  Obj,       // [m : inv A, n : cov B, ...]           variance-annotated object
  ObjSplit,  // [m : (W, R), ...]                     split write/read object
  Mu,        // mu X. A                               iso-recursive
  All,       // All(X <: A) B                         bounded universal
  Some,      // Some(X <: A) B                        bounded existential
  SelfObj,   // Obj(X)[m : inv A, ...]                self-quantified object

  // Internal forms for the semantic-membership engine. The surface type
  // checker rejects these; the parser accepts them so counterexample records
  // and replay inputs can round-trip.
  Approx,   // approx[k] A     k-approximation of a code
  RefV,     // ref inv A       reference code, variance-classified
  RefGen,   // ref(W, R)       reference code with split write/read bounds
  RecObj,   // Rec(X)[m : inv A, ...]   recursive record code
};

struct MethodType {
  std::string name;
  Variance variance = Variance::Inv;
  TypePtr type;
};

struct SplitMethodType {
  std::string name;
  TypePtr write;
  TypePtr read;
};

struct Type : std::enable_shared_from_this<Type> {
  TypeKind kind;
  std::string name;  // Var: the variable; binders: the bound variable
  TypePtr a;         // Arrow dom; Mu/Approx body; All/Some bound; RefV content; RefGen write
  TypePtr b;         // Arrow cod; All/Some body; RefGen read
  std::vector<MethodType> methods;            // Obj, SelfObj, RecObj
  std::vector<SplitMethodType> split_methods; // ObjSplit
  uint32_t level = 0;                         // Approx
  Variance ref_variance = Variance::Inv;      // RefV

  explicit Type(TypeKind k) : kind(k) {}

  static TypePtr var(std::string n) {
    auto t = std::make_shared<Type>(TypeKind::Var);
    t->name = std::move(n);
    return t;
  }
  static TypePtr top() {
    static const TypePtr t = std::make_shared<Type>(TypeKind::Top);
    return t;
  }
  static TypePtr bot() {
    static const TypePtr t = std::make_shared<Type>(TypeKind::Bot);
    return t;
  }
  static TypePtr arrow(TypePtr dom, TypePtr cod) {
    auto t = std::make_shared<Type>(TypeKind::Arrow);
    t->a = std::move(dom);
    t->b = std::move(cod);
    return t;
  }
  static TypePtr obj(std::vector<MethodType> ms) {
    auto t = std::make_shared<Type>(TypeKind::Obj);
    t->methods = std::move(ms);
    return t;
  }
  static TypePtr obj_split(std::vector<SplitMethodType> ms) {
    auto t = std::make_shared<Type>(TypeKind::ObjSplit);
    t->split_methods = std::move(ms);
    return t;
  }
  static TypePtr mu(std::string x, TypePtr body) {
    auto t = std::make_shared<Type>(TypeKind::Mu);
    t->name = std::move(x);
    t->a = std::move(body);
    return t;
  }
  static TypePtr all(std::string x, TypePtr bound, TypePtr body) {
    auto t = std::make_shared<Type>(TypeKind::All);
    t->name = std::move(x);
    t->a = std::move(bound);
    t->b = std::move(body);
    return t;
  }
  static TypePtr some(std::string x, TypePtr bound, TypePtr body) {
    auto t = std::make_shared<Type>(TypeKind::Some);
    t->name = std::move(x);
    t->a = std::move(bound);
    t->b = std::move(body);
    return t;
  }
  static TypePtr self_obj(std::string x, std::vector<MethodType> ms) {
    auto t = std::make_shared<Type>(TypeKind::SelfObj);
    t->name = std::move(x);
    t->methods = std::move(ms);
    return t;
  }
  static TypePtr approx(uint32_t level, TypePtr body) {
    auto t = std::make_shared<Type>(TypeKind::Approx);
    t->level = level;
    t->a = std::move(body);
    return t;
  }
  static TypePtr ref_v(Variance v, TypePtr content) {
    auto t = std::make_shared<Type>(TypeKind::RefV);
    t->ref_variance = v;
    t->a = std::move(content);
    return t;
  }
  static TypePtr ref_gen(TypePtr write, TypePtr read) {
    auto t = std::make_shared<Type>(TypeKind::RefGen);
    t->a = std::move(write);
    t->b = std::move(read);
    return t;
  }
  static TypePtr rec_obj(std::string x, std::vector<MethodType> ms) {
    auto t = std::make_shared<Type>(TypeKind::RecObj);
    t->name = std::move(x);
    t->methods = std::move(ms);
    return t;
  }

  const MethodType* find_method(const std::string& m) const {
    for (const auto& mt : methods)
      if (mt.name == m) return &mt;
    return nullptr;
  }
  const SplitMethodType* find_split_method(const std::string& m) const {
    for (const auto& mt : split_methods)
      if (mt.name == m) return &mt;
    return nullptr;
  }
};

enum class TermKind : uint8_t {
  Var,
  Lam,         // \(x:A) b
  App,         // a b
  ObjNew,      // obj A { m = self(x:A) b, ... }
  Invoke,      // a.m
  Update,      // a.m := self(x:A) b
  Clone,       // clone(a)
  Fold,        // fold[A] a
  Unfold,      // unfold[A] a
  TLam,        // Fun(X<:A) b
  TApp,        // a[A]
  Pack,        // pack<X<:A = C, a : B>
  Open,        // open a as <X<:A, x:B> in b : C
  RuntimeObj,  // {m = l0, n = l1}   (runtime only)
};

// One method of an object literal or the right-hand side of an update.
struct MethodDef {
  std::string name;      // empty for Update (the method name lives on the node)
  std::string self_var;
  TypePtr self_annot;    // parser defaults this when omitted
  TermPtr body;
};

struct SourcePos {
  uint32_t line = 0;  // 1-based; 0 means unknown
  uint32_t col = 0;
};

struct Term : std::enable_shared_from_this<Term> {
  TermKind kind;
  std::string name;   // Var; Lam param; Invoke/Update method; TLam/Pack/Open type var
  std::string name2;  // Open: the value variable x
  TypePtr ann;        // Lam param type; ObjNew annotation; Fold/Unfold/TLam/Pack bound
  TypePtr ann2;       // TApp argument; Pack witness; Open value-variable type
  TypePtr ann3;       // Pack body type; Open result type
  TermPtr t1;         // principal subterm
  TermPtr t2;         // App argument; Open body
  std::vector<MethodDef> methods;              // ObjNew
  MethodDef upd;                               // Update
  std::vector<std::pair<std::string, Loc>> slots;  // RuntimeObj
  SourcePos pos;

  explicit Term(TermKind k) : kind(k) {}

  static TermPtr var(std::string x) {
    auto t = std::make_shared<Term>(TermKind::Var);
    t->name = std::move(x);
    return t;
  }
  static TermPtr lam(std::string x, TypePtr a, TermPtr body) {
    auto t = std::make_shared<Term>(TermKind::Lam);
    t->name = std::move(x);
    t->ann = std::move(a);
    t->t1 = std::move(body);
    return t;
  }
  static TermPtr app(TermPtr f, TermPtr arg) {
    auto t = std::make_shared<Term>(TermKind::App);
    t->t1 = std::move(f);
    t->t2 = std::move(arg);
    return t;
  }
  static TermPtr obj_new(TypePtr annot, std::vector<MethodDef> ms) {
    auto t = std::make_shared<Term>(TermKind::ObjNew);
    t->ann = std::move(annot);
    t->methods = std::move(ms);
    return t;
  }
  static TermPtr invoke(TermPtr recv, std::string m) {
    auto t = std::make_shared<Term>(TermKind::Invoke);
    t->t1 = std::move(recv);
    t->name = std::move(m);
    return t;
  }
  static TermPtr update(TermPtr recv, std::string m, MethodDef method) {
    auto t = std::make_shared<Term>(TermKind::Update);
    t->t1 = std::move(recv);
    t->name = std::move(m);
    t->upd = std::move(method);
    return t;
  }
  static TermPtr clone(TermPtr a) {
    auto t = std::make_shared<Term>(TermKind::Clone);
    t->t1 = std::move(a);
    return t;
  }
  static TermPtr fold(TypePtr a, TermPtr body) {
    auto t = std::make_shared<Term>(TermKind::Fold);
    t->ann = std::move(a);
    t->t1 = std::move(body);
    return t;
  }
  static TermPtr unfold(TypePtr a, TermPtr body) {
    auto t = std::make_shared<Term>(TermKind::Unfold);
    t->ann = std::move(a);
    t->t1 = std::move(body);
    return t;
  }
  static TermPtr tlam(std::string x, TypePtr bound, TermPtr body) {
    auto t = std::make_shared<Term>(TermKind::TLam);
    t->name = std::move(x);
    t->ann = std::move(bound);
    t->t1 = std::move(body);
    return t;
  }
  static TermPtr tapp(TermPtr f, TypePtr arg) {
    auto t = std::make_shared<Term>(TermKind::TApp);
    t->t1 = std::move(f);
    t->ann2 = std::move(arg);
    return t;
  }
  static TermPtr pack(std::string x, TypePtr bound, TypePtr witness, TermPtr payload,
                      TypePtr body_type) {
    auto t = std::make_shared<Term>(TermKind::Pack);
    t->name = std::move(x);
    t->ann = std::move(bound);
    t->ann2 = std::move(witness);
    t->t1 = std::move(payload);
    t->ann3 = std::move(body_type);
    return t;
  }
  static TermPtr open(TermPtr scrut, std::string x, TypePtr bound, std::string v,
                      TypePtr v_type, TermPtr body, TypePtr result_type) {
    auto t = std::make_shared<Term>(TermKind::Open);
    t->t1 = std::move(scrut);
    t->name = std::move(x);
    t->ann = std::move(bound);
    t->name2 = std::move(v);
    t->ann2 = std::move(v_type);
    t->t2 = std::move(body);
    t->ann3 = std::move(result_type);
    return t;
  }
  static TermPtr runtime_obj(std::vector<std::pair<std::string, Loc>> slots) {
    auto t = std::make_shared<Term>(TermKind::RuntimeObj);
    t->slots = std::move(slots);
    return t;
  }

  const Loc* find_slot(const std::string& m) const {
    for (const auto& [n, l] : slots)
      if (n == m) return &l;
    return nullptr;
  }
};

// Values: runtime objects, lambdas, folds of values, type lambdas, packs of
// values. Everything else is either a redex or stuck.
inline bool is_value(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::RuntimeObj:
    case TermKind::Lam:
    case TermKind::TLam:
      return true;
    case TermKind::Fold:
    case TermKind::Pack:
      return is_value(t->t1);
    default:
      return false;
  }
}

}  // namespace sigma
