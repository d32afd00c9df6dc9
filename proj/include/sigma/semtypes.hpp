#pragma once

// Budgeted, executable renditions of the step-indexed semantic definitions:
// k-approximation of type codes, state extension, well-typed heaps, value and
// term membership for every type constructor, set-inclusion subtyping on
// interpretations, and self-type exposure.
//
// Semantic types are represented by closed syntactic codes (TypePtr), not by
// sets. An outer `approx[k]` node on a code records a ceiling: the k-th
// approximation of the denoted type. The unbounded quantifiers of the
// definitions ("for all heap typings", "for all values", "there exists a
// type") are finitized by the catalogs in a Budget, which makes every check
// three-valued:
//
//   Holds          no counterexample found within the budget; ground truth
//                  only for the decidable fragments (shape checks, small-index
//                  sweeps), bounded evidence otherwise.
//   Counterexample a definite violation of the defining clauses relative to
//                  the engine's own sub-verdicts; deterministic to replay.
//   Inconclusive   an existential search exhausted its catalog, or a sampled
//                  instance could not be decided either way.
//
// Termination is unconditional: every recursive membership call strictly
// decreases the pair (step index, phase), where the term phase sits above the
// value phase at equal index. A runtime gauge asserts this on every entry.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sigma/ast.hpp"
#include "sigma/binding.hpp"
#include "sigma/eval.hpp"
#include "sigma/parser.hpp"
#include "sigma/printer.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// Type codes and ceilings

// A heap typing, finitely approximated: locations to closed type codes.
using HeapTypingApprox = std::map<Loc, TypePtr>;

constexpr uint32_t kNoCeiling = UINT32_MAX;

struct StrippedCode {
  TypePtr core;      // first non-approx node
  uint32_t ceiling;  // kNoCeiling if the code has no outer approx
};

inline StrippedCode strip_approx(TypePtr t) {
  uint32_t c = kNoCeiling;
  while (t && t->kind == TypeKind::Approx) {
    c = std::min(c, t->level);
    t = t->a;
  }
  return {std::move(t), c};
}

// floor-composition: approx[j] (approx[k] A) and approx[min(j,k)] A denote
// the same set of triples.
inline TypePtr approx_code(const TypePtr& t, uint32_t k) {
  StrippedCode s = strip_approx(t);
  return Type::approx(std::min(s.ceiling, k), s.core);
}

inline uint32_t effective_ceiling(const TypePtr& t, uint32_t k) {
  return std::min(strip_approx(t).ceiling, k);
}

inline HeapTypingApprox approx_heap_typing(const HeapTypingApprox& psi, uint32_t k) {
  HeapTypingApprox out;
  for (const auto& [l, c] : psi) out.emplace(l, approx_code(c, k));
  return out;
}

// Removes approx nodes that are invisible below the given probe bound: a
// membership query at index k only ever probes a code (and its sub-codes) at
// indices strictly below k, so any approx[c] with c >= bound gates nothing.
// Under a kept approx[c] the probe bound tightens to c. The result is
// alpha-comparable across differently-approximated spellings of one code.
inline TypePtr strip_approx_ge(const TypePtr& t, uint32_t bound) {
  if (!t) return t;
  switch (t->kind) {
    case TypeKind::Approx: {
      if (t->level >= bound) return strip_approx_ge(t->a, bound);
      return Type::approx(t->level, strip_approx_ge(t->a, t->level));
    }
    case TypeKind::Var:
    case TypeKind::Top:
    case TypeKind::Bot:
      return t;
    case TypeKind::Arrow:
      return Type::arrow(strip_approx_ge(t->a, bound), strip_approx_ge(t->b, bound));
    case TypeKind::Obj:
    case TypeKind::SelfObj:
    case TypeKind::RecObj: {
      std::vector<MethodType> ms;
      ms.reserve(t->methods.size());
      for (const auto& m : t->methods)
        ms.push_back({m.name, m.variance, strip_approx_ge(m.type, bound)});
      if (t->kind == TypeKind::Obj) return Type::obj(std::move(ms));
      if (t->kind == TypeKind::SelfObj) return Type::self_obj(t->name, std::move(ms));
      return Type::rec_obj(t->name, std::move(ms));
    }
    case TypeKind::ObjSplit: {
      std::vector<SplitMethodType> ms;
      ms.reserve(t->split_methods.size());
      for (const auto& m : t->split_methods)
        ms.push_back({m.name, strip_approx_ge(m.write, bound), strip_approx_ge(m.read, bound)});
      return Type::obj_split(std::move(ms));
    }
    case TypeKind::Mu:
      return Type::mu(t->name, strip_approx_ge(t->a, bound));
    case TypeKind::All:
      return Type::all(t->name, strip_approx_ge(t->a, bound), strip_approx_ge(t->b, bound));
    case TypeKind::Some:
      return Type::some(t->name, strip_approx_ge(t->a, bound), strip_approx_ge(t->b, bound));
    case TypeKind::RefV:
      return Type::ref_v(t->ref_variance, strip_approx_ge(t->a, bound));
    case TypeKind::RefGen:
      return Type::ref_gen(strip_approx_ge(t->a, bound), strip_approx_ge(t->b, bound));
  }
  return t;
}

inline std::string print_heap_typing(const HeapTypingApprox& psi) {
  std::string out = "{";
  bool first = true;
  for (const auto& [l, c] : psi) {
    if (!first) out += ", ";
    first = false;
    out += print_loc(l);
    out += " : ";
    out += print_type(c);
  }
  out += "}";
  return out;
}

// ---------------------------------------------------------------------------
// Interpretation of syntactic types as codes

// Substitutes closed codes for the free type variables of A. Mu, All, Some,
// Obj(X) and Rec(X) binders stay in the code and are unrolled lazily by the
// membership engine; in particular Obj(X) stays a native self-type code
// rather than desugaring to mu/Some.
namespace detail {
inline TypePtr interp_in(const TypePtr& t, const std::map<std::string, TypePtr>& env,
                         std::vector<std::string>& bound) {
  if (!t) return t;
  auto under = [&](const std::string& x, const TypePtr& body) {
    bound.push_back(x);
    TypePtr r = interp_in(body, env, bound);
    bound.pop_back();
    return r;
  };
  switch (t->kind) {
    case TypeKind::Var: {
      if (std::find(bound.rbegin(), bound.rend(), t->name) != bound.rend()) return t;
      auto it = env.find(t->name);
      if (it == env.end())
        throw std::invalid_argument("interp: unbound type variable " + t->name);
      return it->second;
    }
    case TypeKind::Top:
    case TypeKind::Bot:
      return t;
    case TypeKind::Arrow:
      return Type::arrow(interp_in(t->a, env, bound), interp_in(t->b, env, bound));
    case TypeKind::Obj: {
      std::vector<MethodType> ms;
      ms.reserve(t->methods.size());
      for (const auto& m : t->methods)
        ms.push_back({m.name, m.variance, interp_in(m.type, env, bound)});
      return Type::obj(std::move(ms));
    }
    case TypeKind::SelfObj:
    case TypeKind::RecObj: {
      std::vector<MethodType> ms;
      ms.reserve(t->methods.size());
      for (const auto& m : t->methods)
        ms.push_back({m.name, m.variance, under(t->name, m.type)});
      return t->kind == TypeKind::SelfObj ? Type::self_obj(t->name, std::move(ms))
                                          : Type::rec_obj(t->name, std::move(ms));
    }
    case TypeKind::ObjSplit: {
      std::vector<SplitMethodType> ms;
      ms.reserve(t->split_methods.size());
      for (const auto& m : t->split_methods)
        ms.push_back({m.name, interp_in(m.write, env, bound), interp_in(m.read, env, bound)});
      return Type::obj_split(std::move(ms));
    }
    case TypeKind::Mu:
      return Type::mu(t->name, under(t->name, t->a));
    case TypeKind::All:
    case TypeKind::Some: {
      TypePtr b = interp_in(t->a, env, bound);
      TypePtr body = under(t->name, t->b);
      return t->kind == TypeKind::All ? Type::all(t->name, std::move(b), std::move(body))
                                      : Type::some(t->name, std::move(b), std::move(body));
    }
    case TypeKind::Approx:
      return Type::approx(t->level, interp_in(t->a, env, bound));
    case TypeKind::RefV:
      return Type::ref_v(t->ref_variance, interp_in(t->a, env, bound));
    case TypeKind::RefGen:
      return Type::ref_gen(interp_in(t->a, env, bound), interp_in(t->b, env, bound));
  }
  return t;
}
}  // namespace detail

inline TypePtr interp(const TypePtr& t, const std::map<std::string, TypePtr>& env) {
  std::vector<std::string> bound;
  return detail::interp_in(t, env, bound);
}

inline TypePtr interp(const TypePtr& t) { return interp(t, {}); }

// ---------------------------------------------------------------------------
// Budget

// Finite stand-ins for the unbounded quantifiers. All sampling is
// deterministic given the seed; every quantifier site derives its own rng
// stream from (site name, inputs, seed), so verdicts do not depend on call
// order and independent checks can run in parallel.
struct Budget {
  uint32_t k_max = 5;
  std::vector<TermPtr> value_catalog;            // closed values
  std::vector<HeapTypingApprox> extension_catalog;  // deltas at reserved locations
  std::vector<TypePtr> witness_catalog;          // existential witness candidates
  std::vector<Heap> extra_heaps;                 // user-supplied initial heaps
  size_t sample_count = 32;                      // per quantifier site
  uint64_t seed = 0x5eed2026u;

  static Budget standard();
};

namespace detail {
inline TermPtr cat_term(const char* src) { return parse_term(src); }
inline TypePtr cat_type(const char* src) { return parse_type(src); }
}  // namespace detail

inline Budget Budget::standard() {
  Budget b;
  using detail::cat_term;
  using detail::cat_type;
  b.value_catalog = {
      cat_term("\\(x : Top) x"),
      cat_term("\\(x : Top) \\(y : Top) x"),
      cat_term("\\(x : Top) \\(y : Top) y"),
      cat_term("\\(x : Top) x x"),
      cat_term("\\(f : Top) \\(x : Top) f x"),
      cat_term("\\(f : Top) \\(g : Top) \\(x : Top) f (g x)"),
      cat_term("\\(x : Top) x.m"),
      cat_term("\\(x : Top) x.n"),
      cat_term("\\(x : Top) (x.m) x"),
      cat_term("\\(x : Top) clone(x)"),
      cat_term("\\(x : Top) x.m := self(s : Top) s"),
      cat_term("\\(x : Top) fold[Top] x"),
      cat_term("\\(x : Top) unfold[Top] x"),
      cat_term("\\(x : Top) x[Top]"),
      cat_term("\\(x : Top) open x as <X <: Top, y : Top> in y : Top"),
      cat_term("Fun(X <: Top) \\(x : Top) x"),
      cat_term("Fun(X <: Top) Fun(Y <: Top) \\(x : Top) x"),
      cat_term("fold[Top] (\\(x : Top) x)"),
      cat_term("fold[Top] fold[Top] (\\(x : Top) x)"),
      cat_term("pack<X <: Top = Top, \\(x : Top) x : Top>"),
      cat_term("pack<X <: Top = Top, \\(x : Top) \\(y : Top) y : Top>"),
      cat_term("\\(x : Top) obj [m : inv Top] { m = self(s : [m : inv Top]) s.m }"),
  };
  b.witness_catalog = {
      cat_type("Top"),
      cat_type("Bot"),
      cat_type("Top -> Top"),
      cat_type("Bot -> Top"),
      cat_type("Top -> Bot"),
      cat_type("[m : inv Top]"),
      cat_type("[m : cov Top]"),
      cat_type("[m : con Top]"),
      cat_type("[m : inv Top, n : inv Top]"),
      cat_type("[m : inv Top -> Top]"),
      cat_type("mu X. [m : cov X]"),
      cat_type("Obj(X) [m : inv X]"),
      cat_type("All(X <: Top) Top -> Top"),
  };
  // Reserved location bands: 900+ extension deltas, 880+ synthesized object
  // members, 940+ relabeled clones. Program allocation counts up from 0 and
  // never reaches them at these budgets.
  b.extension_catalog = {
      {},
      {{900, cat_type("Top -> Top")}},
      {{900, cat_type("Top -> Top")}, {901, cat_type("Top")}},
      {{902, cat_type("[m : inv Top] -> Top")}},
      {{903, cat_type("Bot -> Top")}},
      {{904, cat_type("Top -> Top -> Top")}},
  };
  return b;
}

// ---------------------------------------------------------------------------
// Verdicts

struct Counterexample {
  std::string site;    // defining clause that failed, e.g. "arrow/body"
  std::string detail;  // one-line account of the violation
  uint32_t k = 0;
  std::string heap_typing;  // printed state at the failure point
  std::string subject;      // printed value or term
  std::string code;         // printed type code
  uint64_t seed = 0;
  std::vector<std::string> trail;  // enclosing quantifier instances, innermost first
};

struct Verdict {
  enum class Kind : uint8_t { Holds, Counterexample, Inconclusive };
  Kind kind = Kind::Holds;
  size_t checked = 0;  // quantifier instances examined
  std::string note;
  std::optional<sigma::Counterexample> ce;

  bool holds() const { return kind == Kind::Holds; }
  bool is_ce() const { return kind == Kind::Counterexample; }
  bool inconclusive() const { return kind == Kind::Inconclusive; }

  static Verdict pass(size_t n, std::string why = "") {
    Verdict v;
    v.kind = Kind::Holds;
    v.checked = n;
    v.note = std::move(why);
    return v;
  }
  static Verdict fail(sigma::Counterexample c) {
    Verdict v;
    v.kind = Kind::Counterexample;
    v.ce = std::move(c);
    return v;
  }
  static Verdict unknown(std::string why, size_t n = 0) {
    Verdict v;
    v.kind = Kind::Inconclusive;
    v.checked = n;
    v.note = std::move(why);
    return v;
  }
};

inline const char* to_string(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::Holds: return "holds";
    case Verdict::Kind::Counterexample: return "counterexample";
    case Verdict::Kind::Inconclusive: return "inconclusive";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Membership engine

class Engine {
 public:
  explicit Engine(Budget b) : budget_(std::move(b)) {
    if (budget_.value_catalog.empty() || budget_.witness_catalog.empty() ||
        budget_.extension_catalog.empty())
      throw std::invalid_argument("Engine: budget catalogs must be nonempty");
  }

  const Budget& budget() const { return budget_; }

  // --- semantic approximation -------------------------------------------

  // Decides floor_k(t1) = floor_k(t2) in three tiers. Tier 1 compares the
  // codes up to alpha-equivalence after erasing approx nodes no probe below k
  // can see. Tier 2 refutes equality between codes whose members have
  // provably disjoint value shapes. Tier 3 samples triples and reports any
  // membership disagreement; agreement within budget is bounded evidence.
  Verdict approx_eq(const TypePtr& t1, const TypePtr& t2, uint32_t k) {
    if (k == 0) return Verdict::pass(0, "zeroth approximations are empty");
    if (alpha_eq_type(approx_code(strip_approx_ge(t1, k), k),
                      approx_code(strip_approx_ge(t2, k), k)))
      return Verdict::pass(1, "codes agree up to invisible approximations");
    StrippedCode a = strip_approx(t1), b = strip_approx(t2);
    if (std::min(a.ceiling, k) >= 1 && std::min(b.ceiling, k) >= 1) {
      ShapeClass ca = shape_class(a.core), cb = shape_class(b.core);
      bool distinct =
          (ca != cb && always_inhabited(ca) && always_inhabited(cb)) ||
          (ca == ShapeClass::Any && is_shaped(cb)) || (cb == ShapeClass::Any && is_shaped(ca)) ||
          (ca == ShapeClass::Empty && (always_inhabited(cb) || cb == ShapeClass::Any)) ||
          (cb == ShapeClass::Empty && (always_inhabited(ca) || ca == ShapeClass::Any)) ||
          ((ca == ShapeClass::Location) != (cb == ShapeClass::Location));
      if (distinct)
        return Verdict::fail(make_ce("approx_eq/shape",
                                     "codes admit provably different value shapes", k, "{}",
                                     print_type(t1), print_type(t2)));
    }
    return sample_agreement(t1, t2, k, /*bidirectional=*/true, "approx_eq");
  }

  // floor_k(t1) included in floor_k(t2), same tiers one-directionally.
  Verdict code_subset_at(const TypePtr& t1, const TypePtr& t2, uint32_t k) {
    if (k == 0) return Verdict::pass(0, "zeroth approximations are empty");
    StrippedCode a = strip_approx(t1), b = strip_approx(t2);
    uint32_t ea = std::min(a.ceiling, k), eb = std::min(b.ceiling, k);
    if (a.core->kind == TypeKind::Bot) return Verdict::pass(1, "source is empty");
    if (b.core->kind == TypeKind::Top && eb >= ea)
      return Verdict::pass(1, "target is everything up to the source ceiling");
    if (eb >= ea && alpha_eq_type(strip_approx_ge(a.core, ea), strip_approx_ge(b.core, ea)))
      return Verdict::pass(1, "reflexive inclusion with a looser ceiling");
    if (ea >= 1 && eb >= 1) {
      ShapeClass ca = shape_class(a.core), cb = shape_class(b.core);
      bool refuted =
          (always_inhabited(ca) && ca != cb && cb != ShapeClass::Any) ||
          (ca == ShapeClass::Any && (is_shaped(cb) || cb == ShapeClass::Empty)) ||
          ((ca == ShapeClass::Location) != (cb == ShapeClass::Location) &&
           (ca == ShapeClass::Location || ca == ShapeClass::Any || always_inhabited(ca)));
      if (refuted)
        return Verdict::fail(make_ce("code_subset/shape",
                                     "the source provably has a member the target rejects", k,
                                     "{}", print_type(t1), print_type(t2)));
    }
    return sample_agreement(t1, t2, k, /*bidirectional=*/false, "code_subset_at");
  }

  // --- state extension ----------------------------------------------------

  Verdict state_extends(uint32_t k, const HeapTypingApprox& psi, uint32_t j,
                        const HeapTypingApprox& psi2) {
    if (j > k)
      return Verdict::fail(make_ce("extension/index", "target index exceeds source index", k,
                                   print_heap_typing(psi2), std::to_string(j), ""));
    size_t checked = 0;
    for (const auto& [l, c] : psi) {
      auto it = psi2.find(l);
      if (it == psi2.end())
        return Verdict::fail(make_ce("extension/domain",
                                     "location dropped from the heap typing", k,
                                     print_heap_typing(psi2), print_loc(l), print_type(c)));
      Verdict eq = approx_eq(it->second, c, j);
      ++checked;
      if (!eq.holds()) {
        if (eq.is_ce()) {
          Counterexample ce = *eq.ce;
          ce.trail.push_back("state extension at " + print_loc(l) + " to index " +
                             std::to_string(j));
          return Verdict::fail(std::move(ce));
        }
        return eq;
      }
    }
    return Verdict::pass(checked);
  }

  // --- well-typed heaps ---------------------------------------------------

  Verdict heap_typed(const Heap& h, uint32_t k, const HeapTypingApprox& psi) {
    size_t checked = 0;
    bool soft = false;
    for (const auto& [l, code] : psi) {
      const TermPtr* stored = h.lookup(l);
      if (!stored)
        return Verdict::fail(make_ce("heap/domain", "typed location missing from the heap", k,
                                     print_heap_typing(psi), print_loc(l), print_type(code)));
      for (uint32_t j = 0; j < k; ++j) {
        Verdict m = mem_value(j, approx_heap_typing(psi, j), *stored, code);
        ++checked;
        if (m.is_ce()) {
          Counterexample ce = *m.ce;
          ce.trail.push_back("stored value at " + print_loc(l) + ", heap check at index " +
                             std::to_string(j));
          return Verdict::fail(std::move(ce));
        }
        if (m.inconclusive()) soft = true;
      }
    }
    if (soft) return Verdict::unknown("a stored-value membership was inconclusive", checked);
    return Verdict::pass(checked);
  }

  // --- location membership in reference codes -----------------------------

  Verdict mem_loc(uint32_t k, const HeapTypingApprox& psi, Loc l, const TypePtr& ref_code) {
    StrippedCode rc = strip_approx(ref_code);
    if (k >= rc.ceiling)
      return Verdict::fail(make_ce("approx/ceiling", "index at or above the code's ceiling", k,
                                   print_heap_typing(psi), print_loc(l), print_type(ref_code)));
    auto it = psi.find(l);
    if (it == psi.end())
      return Verdict::fail(make_ce("ref/domain", "location not covered by the heap typing", k,
                                   print_heap_typing(psi), print_loc(l), print_type(ref_code)));
    const TypePtr& stored = it->second;
    Verdict v;
    const char* clause = nullptr;
    if (rc.core->kind == TypeKind::RefV) {
      switch (rc.core->ref_variance) {
        case Variance::Inv:
          clause = "ref/inv";
          v = approx_eq(stored, rc.core->a, k);
          break;
        case Variance::Cov:
          clause = "ref/cov";
          v = code_subset_at(stored, rc.core->a, k);
          break;
        case Variance::Con:
          clause = "ref/con";
          v = code_subset_at(rc.core->a, stored, k);
          break;
      }
    } else if (rc.core->kind == TypeKind::RefGen) {
      clause = "ref/gen";
      v = code_subset_at(rc.core->a, stored, k);
      if (v.holds()) v = code_subset_at(stored, rc.core->b, k);
    } else {
      throw std::invalid_argument("mem_loc: not a reference code: " + print_type(ref_code));
    }
    if (v.is_ce()) {
      Counterexample ce = *v.ce;
      ce.trail.push_back(std::string(clause) + " at " + print_loc(l) + ", stored code " +
                         print_type(stored));
      return Verdict::fail(std::move(ce));
    }
    return v;
  }

  // --- value membership ----------------------------------------------------

  // Scoped extra witness candidates for object membership. A subset check
  // transferring members of one object code into another knows the source
  // code, which is exactly the self-witness the fixed pools cannot invent;
  // the guard offers it for the duration of the check. Hints are verified
  // like any other candidate, so they extend the search without weakening it.
  class WitnessHintGuard {
   public:
    WitnessHintGuard(Engine& eng, TypePtr hint) : eng_(eng), prior_(eng.hints_digest_) {
      eng_.hints_digest_ = detail::mix(prior_, hash_type(hint));
      eng_.witness_hints_.push_back(std::move(hint));
    }
    ~WitnessHintGuard() {
      eng_.witness_hints_.pop_back();
      eng_.hints_digest_ = prior_;
    }
    WitnessHintGuard(const WitnessHintGuard&) = delete;
    WitnessHintGuard& operator=(const WitnessHintGuard&) = delete;

   private:
    Engine& eng_;
    uint64_t prior_;
  };

  Verdict mem_value(uint32_t k, const HeapTypingApprox& psi, const TermPtr& v,
                    const TypePtr& code) {
    if (!is_value(v))
      throw std::invalid_argument("mem_value: subject is not a value: " + print_term(v));
    GaugeGuard guard(this, k, kPhaseValue);
    uint64_t key = memo_key(kPhaseValue, k, psi, v, code);
    if (auto hit = memo_.find(key); hit != memo_.end()) return hit->second;
    Verdict out = mem_value_raw(k, psi, v, code);
    memo_.emplace(key, out);
    return out;
  }

  // --- term membership ------------------------------------------------------

  Verdict mem_term(uint32_t k, const HeapTypingApprox& psi, const TermPtr& a,
                   const TypePtr& code) {
    GaugeGuard guard(this, k, kPhaseTerm);
    uint64_t key = memo_key(kPhaseTerm, k, psi, a, code);
    if (auto hit = memo_.find(key); hit != memo_.end()) return hit->second;
    Verdict out = mem_term_raw(k, psi, a, code);
    memo_.emplace(key, out);
    return out;
  }

  // --- subtyping as set inclusion -------------------------------------------

  // Samples triples that land in t1 and requires them not to be refuted by
  // t2. Reference codes classify locations rather than values, so for a pair
  // of reference codes the triples range over locations instead.
  Verdict sem_subset(const TypePtr& t1, const TypePtr& t2) {
    StrippedCode a = strip_approx(t1), b = strip_approx(t2);
    bool refs = a.core->kind == TypeKind::RefV || a.core->kind == TypeKind::RefGen;
    bool refs2 = b.core->kind == TypeKind::RefV || b.core->kind == TypeKind::RefGen;
    if (refs != refs2)
      return Verdict::fail(make_ce("subset/shape",
                                   "one code classifies locations, the other values", 0, "{}",
                                   print_type(t1), print_type(t2)));
    // Members of t1 carry stored codes built around t1; when they are checked
    // against t2, t1 is the witness that justifies them there.
    WitnessHintGuard hint(*this, t1);
    size_t checked = 0;
    for (uint32_t k = 1; k <= budget_.k_max; ++k) {
      for (const auto& [psi, vals] : member_candidates(k, t1)) {
        if (refs) {
          for (const auto& [l, unused] : psi) {
            (void)unused;
            Verdict in1 = mem_loc(k, psi, l, t1);
            if (!in1.holds()) continue;
            ++checked;
            Verdict in2 = mem_loc(k, psi, l, t2);
            if (in2.is_ce()) {
              Counterexample ce = *in2.ce;
              ce.trail.push_back("location in the first reference code at index " +
                                 std::to_string(k));
              return Verdict::fail(std::move(ce));
            }
          }
          continue;
        }
        for (const TermPtr& v : vals) {
          Verdict in1 = mem_value(k, psi, v, t1);
          if (!in1.holds()) continue;
          ++checked;
          Verdict in2 = mem_value(k, psi, v, t2);
          if (in2.is_ce()) {
            Counterexample ce = *in2.ce;
            ce.trail.push_back("member of " + print_type(t1) + " at index " + std::to_string(k) +
                               " under " + print_heap_typing(psi));
            return Verdict::fail(std::move(ce));
          }
        }
      }
    }
    return Verdict::pass(checked, checked == 0 ? "no members found within budget" : "");
  }

  // --- self type exposure ----------------------------------------------------

  // candidate <=self obj_code: inclusion, plus conditions (Obj-2-self) and
  // (Obj-3) for every sampled object member of candidate, with candidate
  // itself in the witness position. Vacuously true for empty candidates.
  Verdict tsubself_check(const TypePtr& candidate, const TypePtr& obj_code) {
    StrippedCode oc = strip_approx(obj_code);
    if (oc.core->kind != TypeKind::Obj && oc.core->kind != TypeKind::SelfObj &&
        oc.core->kind != TypeKind::ObjSplit)
      throw std::invalid_argument("tsubself_check: not an object code: " + print_type(obj_code));
    Verdict incl = sem_subset(candidate, obj_code);
    if (incl.is_ce()) {
      Counterexample ce = *incl.ce;
      ce.trail.push_back("self type exposure requires inclusion in the object type");
      return Verdict::fail(std::move(ce));
    }
    size_t checked = incl.checked;
    for (uint32_t k = 1; k <= budget_.k_max; ++k) {
      for (const auto& [psi, vals] : member_candidates(k, candidate)) {
        for (const TermPtr& v : vals) {
          if (v->kind != TermKind::RuntimeObj) continue;
          Verdict in = mem_value(k, psi, v, candidate);
          if (!in.holds()) continue;
          ++checked;
          Verdict c = object_conditions(k, psi, v, oc.core, candidate, candidate,
                                        /*check_obj1=*/false);
          if (c.is_ce()) {
            Counterexample ce = *c.ce;
            ce.trail.push_back("object member of the exposed type at index " + std::to_string(k));
            return Verdict::fail(std::move(ce));
          }
        }
      }
    }
    return Verdict::pass(checked, checked == 0 ? "no object members found within budget" : "");
  }

 private:
  // --- value shape classes -----------------------------------------------------

  // Each non-degenerate code admits members of exactly one value shape, so
  // codes of different classes denote different sets whenever both are
  // inhabited. Arrow, object, and universal codes are inhabited at every
  // positive index regardless of their payloads: a procedure or type
  // abstraction with a diverging body satisfies any result vacuously, and an
  // object can always be paired with a heap typing that stores the required
  // codes. Mu and Some may be empty (their bodies can demand members of the
  // empty type), so they refute only against Top and against each other's
  // shapes, never via their own inhabitants.
  enum class ShapeClass : uint8_t { Any, Empty, Lam, Object, Fold, TAbs, Packed, Location, Open };

  static ShapeClass shape_class(const TypePtr& core) {
    switch (core->kind) {
      case TypeKind::Top: return ShapeClass::Any;
      case TypeKind::Bot: return ShapeClass::Empty;
      case TypeKind::Arrow: return ShapeClass::Lam;
      case TypeKind::Obj:
      case TypeKind::SelfObj:
      case TypeKind::ObjSplit:
      case TypeKind::RecObj: return ShapeClass::Object;
      case TypeKind::Mu: return ShapeClass::Fold;
      case TypeKind::All: return ShapeClass::TAbs;
      case TypeKind::Some: return ShapeClass::Packed;
      case TypeKind::RefV:
      case TypeKind::RefGen: return ShapeClass::Location;
      case TypeKind::Var:
      case TypeKind::Approx: return ShapeClass::Open;
    }
    return ShapeClass::Open;
  }

  static bool always_inhabited(ShapeClass c) {
    return c == ShapeClass::Lam || c == ShapeClass::Object || c == ShapeClass::TAbs ||
           c == ShapeClass::Location;
  }

  static bool is_shaped(ShapeClass c) {
    return c == ShapeClass::Lam || c == ShapeClass::Object || c == ShapeClass::Fold ||
           c == ShapeClass::TAbs || c == ShapeClass::Packed;
  }

  // --- stratification gauge --------------------------------------------------

  static constexpr int kPhaseValue = 0;
  static constexpr int kPhaseTerm = 1;

  struct GaugeGuard {
    Engine* e;
    GaugeGuard(Engine* eng, uint32_t k, int phase) : e(eng) {
      if (!e->gauge_.empty()) {
        auto [pk, pp] = e->gauge_.back();
        if (!(k < pk || (k == pk && phase < pp)))
          throw std::logic_error("stratification gauge violated: (" + std::to_string(k) + "," +
                                 std::to_string(phase) + ") under (" + std::to_string(pk) + "," +
                                 std::to_string(pp) + ")");
      }
      e->gauge_.emplace_back(k, phase);
    }
    ~GaugeGuard() { e->gauge_.pop_back(); }
  };

  // --- memoization -------------------------------------------------------------

  uint64_t memo_key(int phase, uint32_t k, const HeapTypingApprox& psi, const TermPtr& subject,
                    const TypePtr& code) const {
    uint64_t h = detail::mix(0x9e3779b97f4a7c15ull, (uint64_t(phase) << 32) | k);
    for (const auto& [l, c] : psi) {
      h = detail::mix(h, l);
      h = detail::mix(h, hash_type(c));
    }
    h = detail::mix(h, hash_term(subject));
    h = detail::mix(h, hash_type(code));
    h = detail::mix(h, hints_digest_);  // results may depend on the active witness hints
    return h;
  }

  // --- deterministic per-site sampling -----------------------------------------

  std::mt19937_64 rng_at(const char* site, uint64_t digest) const {
    return std::mt19937_64(
        detail::mix(detail::mix(detail::hash_string(site), digest), budget_.seed));
  }

  // Keeps every element when the domain fits the budget, otherwise a seeded
  // sample without replacement.
  std::vector<size_t> sample_indices(size_t n, const char* site, uint64_t digest) const {
    std::vector<size_t> ix(n);
    for (size_t i = 0; i < n; ++i) ix[i] = i;
    if (n <= budget_.sample_count) return ix;
    std::mt19937_64 rng = rng_at(site, digest);
    std::shuffle(ix.begin(), ix.end(), rng);
    ix.resize(budget_.sample_count);
    std::sort(ix.begin(), ix.end());
    return ix;
  }

  Counterexample make_ce(std::string site, std::string detail, uint32_t k, std::string psi,
                         std::string subject, std::string code) const {
    Counterexample ce;
    ce.site = std::move(site);
    ce.detail = std::move(detail);
    ce.k = k;
    ce.heap_typing = std::move(psi);
    ce.subject = std::move(subject);
    ce.code = std::move(code);
    ce.seed = budget_.seed;
    return ce;
  }

  // --- future states -------------------------------------------------------------

  // Extensions of psi reachable at index j: the information-forgetting floor
  // itself, plus catalog deltas grafted at their reserved locations.
  std::vector<HeapTypingApprox> future_states(uint32_t j, const HeapTypingApprox& psi) const {
    HeapTypingApprox base = approx_heap_typing(psi, j);
    std::vector<HeapTypingApprox> out;
    out.push_back(base);
    for (const auto& delta : budget_.extension_catalog) {
      if (delta.empty()) continue;
      HeapTypingApprox ext = base;
      bool clash = false;
      for (const auto& [l, c] : delta) {
        if (ext.count(l)) { clash = true; break; }
        ext.emplace(l, approx_code(c, j));
      }
      if (!clash) out.push_back(std::move(ext));
    }
    return out;
  }

  // A (delta, value) pair realizing one member of an object-shaped code:
  // fresh locations holding procedures whose codes match condition (Obj-2)
  // with the code itself as witness.
  std::optional<std::pair<HeapTypingApprox, TermPtr>> synth_object_member(
      const TypePtr& code, uint32_t j) const {
    StrippedCode s = strip_approx(code);
    Loc next = 880;
    std::vector<std::pair<std::string, Loc>> slots;
    HeapTypingApprox delta;
    if (s.core->kind == TypeKind::Obj || s.core->kind == TypeKind::SelfObj) {
      for (const auto& m : s.core->methods) {
        TypePtr result = s.core->kind == TypeKind::SelfObj
                             ? subst_type(m.type, s.core->name, code)
                             : m.type;
        delta.emplace(next, approx_code(Type::arrow(code, result), j));
        slots.emplace_back(m.name, next++);
      }
    } else if (s.core->kind == TypeKind::ObjSplit) {
      for (const auto& m : s.core->split_methods) {
        delta.emplace(next, approx_code(Type::arrow(code, m.read), j));
        slots.emplace_back(m.name, next++);
      }
    } else if (s.core->kind == TypeKind::RecObj) {
      for (const auto& m : s.core->methods) {
        delta.emplace(next, approx_code(Type::arrow(code, subst_type(m.type, s.core->name, code)), j));
        slots.emplace_back(m.name, next++);
      }
    } else if (s.core->kind == TypeKind::Mu) {
      // A recursive code is inhabited through its unrolling, one fold deep.
      TypePtr unrolled = subst_type(s.core->a, s.core->name, s.core);
      if (strip_approx(unrolled).core->kind == TypeKind::Mu) return std::nullopt;
      if (auto inner = synth_object_member(unrolled, j))
        return std::make_pair(std::move(inner->first), Term::fold(s.core, inner->second));
      return std::nullopt;
    } else {
      return std::nullopt;
    }
    return std::make_pair(std::move(delta), Term::runtime_obj(std::move(slots)));
  }

  // Candidate (state, values) instances used when a quantifier ranges over
  // the members of `code`: catalog values under each future state, plus a
  // synthesized object member when the code is object-shaped.
  std::vector<std::pair<HeapTypingApprox, std::vector<TermPtr>>> member_candidates(
      uint32_t j, const TypePtr& code) const {
    std::vector<std::pair<HeapTypingApprox, std::vector<TermPtr>>> out;
    for (auto& st : future_states(j, {}))
      out.emplace_back(std::move(st), budget_.value_catalog);
    if (auto synth = synth_object_member(code, j)) {
      auto [delta, v] = *synth;
      out.emplace_back(std::move(delta), std::vector<TermPtr>{v});
    }
    return out;
  }

  // =============================================================================
  // Value membership, by constructor
  // =============================================================================

  Verdict mem_value_raw(uint32_t k, const HeapTypingApprox& psi, const TermPtr& v,
                        const TypePtr& code) {
    StrippedCode s = strip_approx(code);
    if (k >= s.ceiling)
      return Verdict::fail(make_ce("approx/ceiling", "index at or above the code's ceiling", k,
                                   print_heap_typing(psi), print_term(v), print_type(code)));
    switch (s.core->kind) {
      case TypeKind::Top:
        return Verdict::pass(1);
      case TypeKind::Bot:
        return Verdict::fail(make_ce("bot/member", "the empty type has no members", k,
                                     print_heap_typing(psi), print_term(v), print_type(code)));
      case TypeKind::Var:
        throw std::invalid_argument("mem_value: open code: " + print_type(code));
      case TypeKind::Arrow:
        return mem_arrow(k, psi, v, s.core, code);
      case TypeKind::Obj:
      case TypeKind::SelfObj:
      case TypeKind::ObjSplit:
        return mem_object(k, psi, v, s.core, code);
      case TypeKind::RecObj:
        return mem_rec_object(k, psi, v, s.core, code);
      case TypeKind::Mu:
        return mem_mu(k, psi, v, s.core, code);
      case TypeKind::All:
        return mem_all(k, psi, v, s.core, code);
      case TypeKind::Some:
        return mem_some(k, psi, v, s.core, code);
      case TypeKind::RefV:
      case TypeKind::RefGen:
        return Verdict::fail(make_ce("ref/shape", "reference codes classify locations, not values",
                                     k, print_heap_typing(psi), print_term(v), print_type(code)));
      case TypeKind::Approx:
        break;  // unreachable: strip_approx peeled them
    }
    throw std::logic_error("mem_value: unhandled code form");
  }

  Verdict mem_arrow(uint32_t k, const HeapTypingApprox& psi, const TermPtr& v,
                    const TypePtr& core, const TypePtr& code) {
    if (v->kind != TermKind::Lam)
      return Verdict::fail(make_ce("arrow/shape", "procedure type member must be a lambda", k,
                                   print_heap_typing(psi), print_term(v), print_type(code)));
    size_t checked = 0;
    bool soft = false;
    uint64_t digest = detail::mix(hash_term(v), hash_type(code));
    size_t instance = 0;
    for (uint32_t j = 0; j < k; ++j) {
      for (const auto& st : future_states(j, psi)) {
        // catalog values plus a synthesized member when the domain is an
        // object code; the synthesized member brings its own fresh cells.
        std::vector<std::pair<HeapTypingApprox, TermPtr>> args;
        for (const TermPtr& w : budget_.value_catalog) args.emplace_back(st, w);
        if (auto synth = synth_object_member(core->a, j)) {
          HeapTypingApprox ext = st;
          bool clash = false;
          for (const auto& [l, c] : synth->first) {
            if (ext.count(l)) { clash = true; break; }
            ext.emplace(l, c);
          }
          if (!clash) args.emplace_back(std::move(ext), synth->second);
        }
        auto picks = sample_indices(args.size(), "arrow/arg", detail::mix(digest, (uint64_t(j) << 8) | instance));
        for (size_t ix : picks) {
          const auto& [state, arg] = args[ix];
          Verdict pre = mem_value(j, state, arg, core->a);
          if (pre.is_ce()) continue;
          if (pre.inconclusive()) { soft = true; continue; }
          ++checked;
          Verdict post = mem_term(j, state, subst_term(v->t1, v->name, arg), core->b);
          if (post.is_ce()) {
            Counterexample ce = *post.ce;
            ce.trail.push_back("applied to " + print_term(arg) + " at index " + std::to_string(j) +
                               " under " + print_heap_typing(state));
            return Verdict::fail(std::move(ce));
          }
          if (post.inconclusive()) soft = true;
        }
        ++instance;
      }
    }
    if (soft) return Verdict::unknown("an application instance was inconclusive", checked);
    return Verdict::pass(checked);
  }

  // Shared by object membership, recursive record codes, and self type
  // exposure: conditions (Obj-1) (optional), (Obj-2)/(Obj-2-self)/(Obj-2-Gen),
  // and (Obj-3), with `witness` in the self position. `shape` carries the
  // method table; `alpha` is the full object code (Obj-1's right-hand side).
  Verdict object_conditions(uint32_t k, const HeapTypingApprox& psi, const TermPtr& v,
                            const TypePtr& shape, const TypePtr& alpha, const TypePtr& witness,
                            bool check_obj1) {
    size_t checked = 0;
    bool soft = false;
    if (check_obj1) {
      Verdict one = code_subset_at(witness, alpha, k);
      if (one.is_ce()) {
        Counterexample ce = *one.ce;
        ce.trail.push_back("(Obj-1): witness included in the object type");
        return Verdict::fail(std::move(ce));
      }
      checked += one.checked;
    }

    // (Obj-2): each required method's location, against a reference code
    // built from the witness.
    auto slot_of = [&](const std::string& name) { return v->find_slot(name); };
    auto check_slot = [&](const std::string& name, const TypePtr& ref_code) -> Verdict {
      const Loc* l = slot_of(name);
      if (!l)
        return Verdict::fail(make_ce("obj/width", "required method " + name + " is missing", k,
                                     print_heap_typing(psi), print_term(v), print_type(alpha)));
      Verdict r = mem_loc(k, psi, *l, ref_code);
      if (r.is_ce()) {
        Counterexample ce = *r.ce;
        ce.trail.push_back("(Obj-2) for method " + name);
        return Verdict::fail(std::move(ce));
      }
      return r;
    };
    if (shape->kind == TypeKind::ObjSplit) {
      for (const auto& m : shape->split_methods) {
        Verdict r = check_slot(m.name, Type::ref_gen(Type::arrow(witness, m.write),
                                                     Type::arrow(witness, m.read)));
        if (r.is_ce()) return r;
        if (r.inconclusive()) soft = true;
        checked += std::max<size_t>(r.checked, 1);
      }
    } else {
      for (const auto& m : shape->methods) {
        TypePtr result = (shape->kind == TypeKind::SelfObj || shape->kind == TypeKind::RecObj)
                             ? subst_type(m.type, shape->name, witness)
                             : m.type;
        Verdict r = check_slot(m.name, Type::ref_v(m.variance, Type::arrow(witness, result)));
        if (r.is_ce()) return r;
        if (r.inconclusive()) soft = true;
        checked += std::max<size_t>(r.checked, 1);
      }
    }

    // (Obj-3): relabelings of the object's locations within future states
    // must land back in the witness. Canonical instances: the identity
    // labeling under each future state, and a fresh copy whose cells carry
    // the same codes (the clone shape).
    uint64_t digest = detail::mix(hash_term(v), hash_type(witness));
    for (uint32_t j = 0; j < k; ++j) {
      for (const auto& st : future_states(j, psi)) {
        std::vector<std::pair<HeapTypingApprox, TermPtr>> relabelings;
        relabelings.emplace_back(st, v);
        {
          Loc next = 940;
          HeapTypingApprox copied = st;
          std::vector<std::pair<std::string, Loc>> slots;
          for (const auto& [name, l] : v->slots) {
            Loc fresh = next++;
            auto it = st.find(l);
            if (it != st.end()) copied.emplace(fresh, it->second);
            slots.emplace_back(name, fresh);
          }
          relabelings.emplace_back(std::move(copied), Term::runtime_obj(std::move(slots)));
        }
        auto picks = sample_indices(relabelings.size(), "obj3/relabel", detail::mix(digest, j));
        for (size_t ix : picks) {
          const auto& [state, relabeled] = relabelings[ix];
          ++checked;
          Verdict r = mem_value(j, approx_heap_typing(state, j), relabeled, witness);
          if (r.is_ce()) {
            Counterexample ce = *r.ce;
            ce.trail.push_back("(Obj-3) relabeling " + print_term(relabeled) + " at index " +
                               std::to_string(j));
            return Verdict::fail(std::move(ce));
          }
          if (r.inconclusive()) soft = true;
        }
      }
    }
    if (soft) return Verdict::unknown("an object condition instance was inconclusive", checked);
    return Verdict::pass(checked);
  }

  // The existential witness is searched deterministically: the object code's
  // own k-th approximation first (the choice the membership conditions are
  // built around), then the catalog. When every candidate fails and the
  // primary failure is definite, that counterexample is reported, flagged as
  // relative to the canonical witness.
  Verdict mem_object(uint32_t k, const HeapTypingApprox& psi, const TermPtr& v,
                     const TypePtr& core, const TypePtr& code) {
    if (v->kind != TermKind::RuntimeObj)
      return Verdict::fail(make_ce("obj/shape", "object type member must be an object value", k,
                                   print_heap_typing(psi), print_term(v), print_type(code)));
    std::vector<std::string> required;
    if (core->kind == TypeKind::ObjSplit)
      for (const auto& m : core->split_methods) required.push_back(m.name);
    else
      for (const auto& m : core->methods) required.push_back(m.name);
    for (const auto& name : required)
      if (!v->find_slot(name))
        return Verdict::fail(make_ce("obj/width", "required method " + name + " is missing", k,
                                     print_heap_typing(psi), print_term(v), print_type(code)));

    std::vector<TypePtr> witnesses;
    witnesses.push_back(approx_code(code, k));
    for (const TypePtr& w : witness_hints_) witnesses.push_back(w);
    for (const TypePtr& w : budget_.witness_catalog) witnesses.push_back(w);

    std::optional<Verdict> primary;
    size_t checked = 0;
    for (const TypePtr& w : witnesses) {
      Verdict c = object_conditions(k, psi, v, core, code, w, /*check_obj1=*/true);
      checked += c.checked;
      if (c.holds()) return Verdict::pass(checked);
      if (!primary) primary = c;
    }
    if (primary && primary->is_ce()) {
      Counterexample ce = *primary->ce;
      ce.trail.push_back("under the canonical witness " + print_type(witnesses.front()) +
                         "; witness catalog exhausted");
      return Verdict::fail(std::move(ce));
    }
    return Verdict::unknown("existential witness search exhausted the catalog", checked);
  }

  // Recursive record codes name their own witness, so there is no search and
  // no (Obj-1); the method set must match exactly.
  Verdict mem_rec_object(uint32_t k, const HeapTypingApprox& psi, const TermPtr& v,
                         const TypePtr& core, const TypePtr& code) {
    if (v->kind != TermKind::RuntimeObj)
      return Verdict::fail(make_ce("rec/shape", "recursive record member must be an object value",
                                   k, print_heap_typing(psi), print_term(v), print_type(code)));
    std::set<std::string> have;
    for (const auto& [name, l] : v->slots) have.insert(name);
    std::set<std::string> want;
    for (const auto& m : core->methods) want.insert(m.name);
    if (have != want)
      return Verdict::fail(make_ce("rec/methods", "method sets differ", k, print_heap_typing(psi),
                                   print_term(v), print_type(code)));
    return object_conditions(k, psi, v, core, code, core_with_ceiling(core, code), false);
  }

  // keeps an outer ceiling on the self-referential witness so the recursion
  // stays below the original code's approximation
  static TypePtr core_with_ceiling(const TypePtr& core, const TypePtr& original) {
    StrippedCode s = strip_approx(original);
    return s.ceiling == kNoCeiling ? core : Type::approx(s.ceiling, core);
  }

  Verdict mem_mu(uint32_t k, const HeapTypingApprox& psi, const TermPtr& v, const TypePtr& core,
                 const TypePtr& code) {
    if (v->kind != TermKind::Fold)
      return Verdict::fail(make_ce("mu/shape", "recursive type member must be a fold", k,
                                   print_heap_typing(psi), print_term(v), print_type(code)));
    TypePtr unrolled = subst_type(core->a, core->name, core);
    size_t checked = 0;
    bool soft = false;
    for (uint32_t j = 0; j < k; ++j) {
      ++checked;
      Verdict r = mem_value(j, approx_heap_typing(psi, j), v->t1, unrolled);
      if (r.is_ce()) {
        Counterexample ce = *r.ce;
        ce.trail.push_back("under the fold at index " + std::to_string(j));
        return Verdict::fail(std::move(ce));
      }
      if (r.inconclusive()) soft = true;
    }
    if (soft) return Verdict::unknown("an unrolled instance was inconclusive", checked);
    return Verdict::pass(checked);
  }

  Verdict mem_all(uint32_t k, const HeapTypingApprox& psi, const TermPtr& v, const TypePtr& core,
                  const TypePtr& code) {
    if (v->kind != TermKind::TLam)
      return Verdict::fail(make_ce("all/shape", "universal type member must be a type abstraction",
                                   k, print_heap_typing(psi), print_term(v), print_type(code)));
    size_t checked = 0;
    bool soft = false;
    uint64_t digest = detail::mix(hash_term(v), hash_type(code));
    for (uint32_t j = 0; j <= k; ++j) {
      for (const auto& st : future_states(j, psi)) {
        std::vector<TypePtr> args;
        args.push_back(approx_code(core->a, j));  // the bound itself
        for (const TypePtr& w : budget_.witness_catalog) args.push_back(w);
        auto picks = sample_indices(args.size(), "all/arg", detail::mix(digest, j));
        for (size_t ix : picks) {
          const TypePtr& tau = args[ix];
          Verdict bound = code_subset_at(tau, core->a, j);
          if (!bound.holds()) continue;
          TypePtr body = subst_type(core->b, core->name, tau);
          for (uint32_t i = 0; i < j; ++i) {
            ++checked;
            Verdict r = mem_term(i, approx_heap_typing(st, i), v->t1, body);
            if (r.is_ce()) {
              Counterexample ce = *r.ce;
              ce.trail.push_back("instantiated at " + print_type(tau) + ", index " +
                                 std::to_string(i));
              return Verdict::fail(std::move(ce));
            }
            if (r.inconclusive()) soft = true;
          }
        }
      }
    }
    if (soft) return Verdict::unknown("an instantiation instance was inconclusive", checked);
    return Verdict::pass(checked);
  }

  Verdict mem_some(uint32_t k, const HeapTypingApprox& psi, const TermPtr& v, const TypePtr& core,
                   const TypePtr& code) {
    if (v->kind != TermKind::Pack)
      return Verdict::fail(make_ce("some/shape", "existential type member must be a pack", k,
                                   print_heap_typing(psi), print_term(v), print_type(code)));
    std::vector<TypePtr> witnesses;
    if (v->ann2 && type_closed(v->ann2)) witnesses.push_back(interp(v->ann2));
    witnesses.push_back(approx_code(core->a, k));  // the bound itself
    for (const TypePtr& w : budget_.witness_catalog) witnesses.push_back(w);

    std::optional<Verdict> primary;
    size_t checked = 0;
    for (const TypePtr& tau : witnesses) {
      Verdict res = [&]() -> Verdict {
        Verdict bound = code_subset_at(tau, core->a, k);
        if (!bound.holds()) return bound;
        TypePtr body = subst_type(core->b, core->name, tau);
        size_t n = 0;
        bool soft = false;
        for (uint32_t j = 0; j < k; ++j) {
          ++n;
          Verdict r = mem_value(j, approx_heap_typing(psi, j), v->t1, body);
          if (r.is_ce()) {
            Counterexample ce = *r.ce;
            ce.trail.push_back("packed payload at witness " + print_type(tau) + ", index " +
                               std::to_string(j));
            return Verdict::fail(std::move(ce));
          }
          if (r.inconclusive()) soft = true;
        }
        if (soft) return Verdict::unknown("a payload instance was inconclusive", n);
        return Verdict::pass(n);
      }();
      checked += res.checked;
      if (res.holds()) return Verdict::pass(checked);
      if (!primary) primary = res;
    }
    if (primary && primary->is_ce()) {
      Counterexample ce = *primary->ce;
      ce.trail.push_back("under the leading witness; witness catalog exhausted");
      return Verdict::fail(std::move(ce));
    }
    return Verdict::unknown("existential witness search exhausted the catalog", checked);
  }

  // =============================================================================
  // Term membership
  // =============================================================================

  Verdict mem_term_raw(uint32_t k, const HeapTypingApprox& psi, const TermPtr& a,
                       const TypePtr& code) {
    if (k == 0) return Verdict::pass(0, "index zero constrains no run");
    size_t checked = 0;
    bool soft = false;
    std::vector<Heap> heaps = candidate_heaps(k, psi, a);
    size_t conforming = 0;
    for (const Heap& h : heaps) {
      Verdict wt = heap_typed(h, k, psi);
      if (wt.is_ce()) continue;
      if (wt.inconclusive()) { soft = true; continue; }
      ++conforming;
      Verdict r = run_and_check(k, psi, h, a, code);
      checked += r.checked + 1;
      if (r.is_ce()) return r;
      if (r.inconclusive()) soft = true;
    }
    if (conforming == 0)
      return Verdict::unknown("no heap conforming to the typing was found within budget", checked);
    if (soft) return Verdict::unknown("a run instance was inconclusive", checked);
    return Verdict::pass(checked);
  }

  Verdict run_and_check(uint32_t k, const HeapTypingApprox& psi, const Heap& h, const TermPtr& a,
                        const TypePtr& code) {
    Allocator alloc = Allocator::canonical();
    Trace tr = run({h, a}, k - 1, alloc);
    if (tr.outcome == Outcome::Stuck) {
      Counterexample ce =
          make_ce("term/stuck",
                  std::string("stuck after ") + std::to_string(tr.steps()) + " steps: " +
                      to_string(tr.stuck_reason ? *tr.stuck_reason : StuckReason::FreeVariable) +
                      " at " + print_term(tr.stuck_at),
                  k, print_heap_typing(psi), print_term(a), print_type(code));
      return Verdict::fail(std::move(ce));
    }
    if (tr.outcome == Outcome::FuelExhausted)
      return Verdict::pass(0, "no irreducible configuration within the index");

    uint32_t j = static_cast<uint32_t>(tr.steps());
    uint32_t kj = k - j;
    HeapTypingApprox psi2 = derived_heap_typing(tr, psi, kj, code);
    const Config& fin = tr.final_config();

    Verdict ext = state_extends(k, psi, kj, psi2);
    if (ext.is_ce()) {
      Counterexample ce = *ext.ce;
      ce.trail.push_back("derived heap typing does not extend the initial state");
      return Verdict::fail(std::move(ce));
    }
    Verdict wt = heap_typed(fin.heap, kj, psi2);
    if (wt.is_ce()) {
      Counterexample ce = *wt.ce;
      ce.trail.push_back("final heap against the derived typing " + print_heap_typing(psi2));
      return Verdict::fail(std::move(ce));
    }
    if (wt.inconclusive()) return wt;
    Verdict mv = mem_value(kj, psi2, fin.term, code);
    if (mv.is_ce()) {
      Counterexample ce = *mv.ce;
      ce.trail.push_back("result value after " + std::to_string(j) + " steps");
      return Verdict::fail(std::move(ce));
    }
    return mv;
  }

  // The existential heap typing of the term-membership definition, witnessed
  // deterministically: the floor of the initial typing, extended at each
  // location the trace allocated. New cells from an object literal get the
  // arrow code derived from the literal's annotation when it is a closed
  // object type, from the membership target otherwise, and from the witness
  // catalog as a last resort. Clones copy the source cell's code; updates
  // leave the typing untouched.
  HeapTypingApprox derived_heap_typing(const Trace& tr, const HeapTypingApprox& psi, uint32_t kj,
                                       const TypePtr& target) {
    HeapTypingApprox out = approx_heap_typing(psi, kj);
    for (size_t i = 0; i < tr.entries.size(); ++i) {
      const Config& before = i == 0 ? tr.initial : tr.entries[i - 1].after;
      const Config& after = tr.entries[i].after;
      std::string_view rule = tr.entries[i].rule;
      if (rule != "Red-Obj" && rule != "Red-Clone") continue;
      std::vector<Loc> fresh;
      for (const auto& [l, cell] : after.heap.cells)
        if (!before.heap.contains(l)) fresh.push_back(l);
      std::sort(fresh.begin(), fresh.end());
      Decomposition d = decompose(before);
      if (d.kind != Decomposition::Kind::Redex) continue;  // cannot happen on a stepped trace
      if (rule == "Red-Obj") {
        std::vector<std::string> names;
        for (const auto& m : d.redex->methods) names.push_back(m.name);
        std::sort(names.begin(), names.end());
        for (size_t ix = 0; ix < names.size() && ix < fresh.size(); ++ix) {
          if (TypePtr c = infer_method_code(d.redex->ann, target, names[ix]))
            out.emplace(fresh[ix], approx_code(c, kj));
        }
      } else {
        std::vector<std::pair<std::string, Loc>> src = d.redex->t1->slots;
        std::sort(src.begin(), src.end());
        for (size_t ix = 0; ix < src.size() && ix < fresh.size(); ++ix) {
          auto it = out.find(src[ix].second);
          if (it != out.end()) out.emplace(fresh[ix], it->second);
        }
      }
    }
    return out;
  }

  TypePtr infer_method_code(const TypePtr& ann, const TypePtr& target, const std::string& name) {
    auto from = [&](const TypePtr& t) -> TypePtr {
      if (!t || !type_closed(t)) return nullptr;
      StrippedCode s = strip_approx(interp(t));
      if (s.core->kind == TypeKind::Obj) {
        if (const MethodType* m = s.core->find_method(name))
          return Type::arrow(s.core, m->type);
      } else if (s.core->kind == TypeKind::SelfObj) {
        if (const MethodType* m = s.core->find_method(name))
          return Type::arrow(s.core, subst_type(m->type, s.core->name, s.core));
      } else if (s.core->kind == TypeKind::ObjSplit) {
        if (const SplitMethodType* m = s.core->find_split_method(name))
          return Type::arrow(s.core, m->read);
      }
      return nullptr;
    };
    if (TypePtr c = from(ann)) return c;
    if (TypePtr c = from(target)) return c;
    for (const TypePtr& w : budget_.witness_catalog)
      if (TypePtr c = from(w)) return c;
    return nullptr;
  }

  // Heaps offered to the generator: stored procedures synthesized from the
  // catalog, varied one location at a time from a canonical assignment, plus
  // any user-supplied heaps that cover the domain. Locations the term
  // mentions beyond the typing get identity cells; the typing does not
  // constrain them.
  std::vector<Heap> candidate_heaps(uint32_t k, const HeapTypingApprox& psi, const TermPtr& a) {
    std::set<Loc> needed;
    for (const auto& [l, c] : psi) needed.insert(l);
    for (Loc l : free_vars(a).locs) needed.insert(l);

    std::map<Loc, std::vector<TermPtr>> cands;
    for (Loc l : needed) {
      std::vector<TermPtr>& cs = cands[l];
      cs.push_back(detail::cat_term("\\(x : Top) x"));
      for (size_t i = 0; i < budget_.value_catalog.size() && i < 3; ++i)
        cs.push_back(Term::lam("x", Type::top(), budget_.value_catalog[i]));
    }

    std::vector<Heap> out;
    Heap canonical;
    for (auto& [l, cs] : cands) canonical.cells[l] = cs.front();
    out.push_back(canonical);
    for (auto& [l, cs] : cands)
      for (size_t i = 1; i < cs.size(); ++i) {
        Heap h = canonical;
        h.cells[l] = cs[i];
        out.push_back(std::move(h));
      }
    // Uniform assignments of each alternative body: a typing whose cells all
    // need the same non-identity procedure is unreachable through
    // single-location variation.
    if (!cands.empty()) {
      size_t width = cands.begin()->second.size();
      for (size_t i = 1; i < width; ++i) {
        Heap h;
        for (auto& [l, cs] : cands) h.cells[l] = cs[i];
        out.push_back(std::move(h));
      }
    }
    for (const Heap& user : budget_.extra_heaps) {
      bool covers = true;
      for (Loc l : needed)
        if (!user.contains(l)) { covers = false; break; }
      if (covers) out.push_back(user);
    }
    uint64_t digest = detail::mix(hash_term(a), k);
    auto picks = sample_indices(out.size(), "term/heap", digest);
    std::vector<Heap> sampled;
    for (size_t ix : picks) sampled.push_back(std::move(out[ix]));
    return sampled;
  }

  // Sampled membership agreement between two codes at indices below k:
  // a disagreement refutes equality (or, one-directionally, inclusion).
  Verdict sample_agreement(const TypePtr& t1, const TypePtr& t2, uint32_t k, bool bidirectional,
                           const char* site) {
    size_t checked = 0;
    uint64_t digest = detail::mix(hash_type(t1), hash_type(t2));
    for (uint32_t j = 0; j < k; ++j) {
      for (const auto& [psi, vals] : member_candidates(j, t1)) {
        auto picks = sample_indices(vals.size(), site, detail::mix(digest, j));
        for (size_t ix : picks) {
          const TermPtr& v = vals[ix];
          Verdict in1 = mem_value(j, psi, v, t1);
          Verdict in2 = mem_value(j, psi, v, t2);
          ++checked;
          if (in1.holds() && in2.is_ce()) {
            Counterexample ce = *in2.ce;
            ce.trail.push_back(std::string(site) + ": member of the left code only, index " +
                               std::to_string(j));
            return Verdict::fail(std::move(ce));
          }
          if (bidirectional && in2.holds() && in1.is_ce()) {
            Counterexample ce = *in1.ce;
            ce.trail.push_back(std::string(site) + ": member of the right code only, index " +
                               std::to_string(j));
            return Verdict::fail(std::move(ce));
          }
        }
      }
      // object members synthesized from the right code, for the reverse
      // direction of an equality
      if (bidirectional) {
        if (auto synth = synth_object_member(t2, j)) {
          Verdict in2 = mem_value(j, synth->first, synth->second, t2);
          Verdict in1 = mem_value(j, synth->first, synth->second, t1);
          ++checked;
          if (in2.holds() && in1.is_ce()) {
            Counterexample ce = *in1.ce;
            ce.trail.push_back(std::string(site) + ": member of the right code only, index " +
                               std::to_string(j));
            return Verdict::fail(std::move(ce));
          }
        }
      }
    }
    return Verdict::pass(checked, "no disagreement within budget");
  }

  Budget budget_;
  std::unordered_map<uint64_t, Verdict> memo_;
  std::vector<std::pair<uint32_t, int>> gauge_;
  std::vector<TypePtr> witness_hints_;
  uint64_t hints_digest_ = 0;
};

// ---------------------------------------------------------------------------
// Free-function entry points; each runs a fresh engine, so verdicts depend
// only on the arguments and the budget.

inline Verdict mem_value(uint32_t k, const HeapTypingApprox& psi, const TermPtr& v,
                         const TypePtr& code, const Budget& b) {
  return Engine(b).mem_value(k, psi, v, code);
}
inline Verdict mem_term(uint32_t k, const HeapTypingApprox& psi, const TermPtr& a,
                        const TypePtr& code, const Budget& b) {
  return Engine(b).mem_term(k, psi, a, code);
}
inline Verdict mem_loc(uint32_t k, const HeapTypingApprox& psi, Loc l, const TypePtr& ref_code,
                       const Budget& b) {
  return Engine(b).mem_loc(k, psi, l, ref_code);
}
inline Verdict heap_typed(const Heap& h, uint32_t k, const HeapTypingApprox& psi,
                          const Budget& b) {
  return Engine(b).heap_typed(h, k, psi);
}
inline Verdict state_extends(uint32_t k, const HeapTypingApprox& psi, uint32_t j,
                             const HeapTypingApprox& psi2, const Budget& b) {
  return Engine(b).state_extends(k, psi, j, psi2);
}
inline Verdict approx_eq(const TypePtr& t1, const TypePtr& t2, uint32_t k, const Budget& b) {
  return Engine(b).approx_eq(t1, t2, k);
}
inline Verdict code_subset_at(const TypePtr& t1, const TypePtr& t2, uint32_t k, const Budget& b) {
  return Engine(b).code_subset_at(t1, t2, k);
}
inline Verdict sem_subset(const TypePtr& t1, const TypePtr& t2, const Budget& b) {
  return Engine(b).sem_subset(t1, t2);
}
inline Verdict tsubself_check(const TypePtr& candidate, const TypePtr& obj_code, const Budget& b) {
  return Engine(b).tsubself_check(candidate, obj_code);
}

}  // namespace sigma
