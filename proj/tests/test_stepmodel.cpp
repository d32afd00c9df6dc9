// Behavior of the budgeted semantic-membership engine: approximation
// plumbing, state extension, well-typed heaps, per-constructor value
// membership, term membership driven by real evaluator traces, set-inclusion
// subtyping, and self type exposure. The stored-procedure false positive that
// motivates step indexing is pinned as a table of verdicts over k.

#include <catch2/catch_amalgamated.hpp>

#include "sigma/parser.hpp"
#include "sigma/printer.hpp"
#include "sigma/semtypes.hpp"
#include "sigma/typecheck.hpp"

using namespace sigma;

namespace {

TermPtr E(const std::string& src) { return parse_term(src); }
TypePtr T(const std::string& src) { return parse_type(src); }

const Budget& B() {
  static Budget b = Budget::standard();
  return b;
}

Verdict val(uint32_t k, const HeapTypingApprox& psi, const std::string& v,
            const std::string& code) {
  return Engine(B()).mem_value(k, psi, E(v), T(code));
}

Verdict term_at(uint32_t k, const HeapTypingApprox& psi, const std::string& a,
                const std::string& code) {
  return Engine(B()).mem_term(k, psi, E(a), T(code));
}

}  // namespace

// ---------------------------------------------------------------------------
// ceilings

TEST_CASE("approximation ceilings compose by minimum", "[stepmodel]") {
  TypePtr t = T("approx[3] (approx[5] (Top -> Top))");
  StrippedCode s = strip_approx(t);
  CHECK(s.ceiling == 3);
  CHECK(print_type(s.core) == "Top -> Top");
  CHECK(print_type(approx_code(t, 7)) == "approx[3] (Top -> Top)");
  CHECK(print_type(approx_code(t, 2)) == "approx[2] (Top -> Top)");
  CHECK(print_type(approx_code(T("Top"), 4)) == "approx[4] Top");
}

TEST_CASE("approx nodes at or above the probe bound are invisible", "[stepmodel]") {
  TypePtr t = T("(approx[4] Top) -> (approx[2] Top)");
  CHECK(print_type(strip_approx_ge(t, 4)) == "Top -> approx[2] Top");
  CHECK(print_type(strip_approx_ge(t, 2)) == "Top -> Top");
  // under a kept ceiling the bound tightens
  TypePtr u = T("approx[2] (Top -> approx[3] Top)");
  CHECK(print_type(strip_approx_ge(u, 5)) == "approx[2] (Top -> Top)");
}

TEST_CASE("the zeroth approximation is empty", "[stepmodel]") {
  CHECK(val(0, {}, "\\(x : Top) x", "approx[0] (Top -> Top)").is_ce());
  CHECK(val(0, {}, "\\(x : Top) x", "approx[1] (Top -> Top)").holds());
  CHECK(val(3, {}, "\\(x : Top) x", "approx[3] (Top -> Top)").is_ce());
  CHECK(val(2, {}, "\\(x : Top) x", "approx[3] (Top -> Top)").holds());
}

// ---------------------------------------------------------------------------
// interpretation

TEST_CASE("interp substitutes codes and keeps binders native", "[stepmodel]") {
  std::map<std::string, TypePtr> env{{"X", T("Top -> Top")}};
  CHECK(print_type(interp(T("X -> X"), env)) == "(Top -> Top) -> Top -> Top");
  CHECK(print_type(interp(T("Obj(X) [m : inv X]"), env)) == "Obj(X) [m : inv X]");
  CHECK(print_type(interp(T("mu Y. Y -> X"), env)) == "mu Y. Y -> Top -> Top");
  CHECK_THROWS_AS(interp(T("Z"), env), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// approximate equality and inclusion of codes

TEST_CASE("approx_eq sees through invisible ceilings", "[stepmodel]") {
  CHECK(approx_eq(T("approx[5] (Top -> Top)"), T("Top -> Top"), 3, B()).holds());
  CHECK(approx_eq(T("Top -> approx[3] Top"), T("Top -> Top"), 3, B()).holds());
  // a ceiling below the bound is visible: the sets differ at index 1
  CHECK(approx_eq(T("approx[1] (Top -> Top)"), T("approx[2] (Top -> Top)"), 3, B()).is_ce());
  // both empty at every probed index
  CHECK(approx_eq(T("approx[0] (Top -> Top)"), T("approx[0] [m : inv Top]"), 3, B()).holds());
}

TEST_CASE("approx_eq refutes shape-disjoint codes", "[stepmodel]") {
  CHECK(approx_eq(T("Top -> Top"), T("[m : inv Top]"), 2, B()).is_ce());
  CHECK(approx_eq(T("Top"), T("Top -> Top"), 2, B()).is_ce());
  CHECK(approx_eq(T("Bot"), T("Top -> Top"), 2, B()).is_ce());
  CHECK(approx_eq(T("ref inv Top"), T("Top"), 2, B()).is_ce());
  CHECK(approx_eq(T("mu X. Top -> Top"), T("All(X <: Top) Top -> Top"), 2, B()).holds() ==
        false);
}

TEST_CASE("approx_eq distinguishes result codes by sampled members", "[stepmodel]") {
  // a constant procedure returning a non-object separates these
  Verdict v = approx_eq(T("[m : inv Top] -> Top"), T("[m : inv Top] -> [m : inv Top]"), 4, B());
  REQUIRE(v.is_ce());
}

TEST_CASE("non-expansiveness: approximating the argument below the bound is invisible",
          "[stepmodel]") {
  TypePtr tau = T("[m : inv Top]");
  for (uint32_t k = 1; k <= 4; ++k) {
    TypePtr whole = Type::approx(k, Type::arrow(tau, tau));
    TypePtr inner =
        Type::approx(k, Type::arrow(Type::approx(k, tau), Type::approx(k, tau)));
    CAPTURE(k);
    CHECK(approx_eq(whole, inner, k, B()).holds());
  }
}

TEST_CASE("code inclusion fast paths and refutations", "[stepmodel]") {
  CHECK(code_subset_at(T("Bot"), T("mu X. X"), 4, B()).holds());
  CHECK(code_subset_at(T("[m : inv Top]"), T("Top"), 4, B()).holds());
  CHECK(code_subset_at(T("Top -> Top"), T("Top -> Top"), 4, B()).holds());
  CHECK(code_subset_at(T("approx[2] (Top -> Top)"), T("Top -> Top"), 4, B()).holds());
  // visible ceiling on the target only
  CHECK(code_subset_at(T("Top -> Top"), T("approx[2] (Top -> Top)"), 4, B()).is_ce());
  // shape-disjoint
  CHECK(code_subset_at(T("Top -> Top"), T("[m : inv Top]"), 2, B()).is_ce());
  CHECK(code_subset_at(T("Top"), T("Top -> Top"), 2, B()).is_ce());
  CHECK(code_subset_at(T("Top -> Top"), T("Bot"), 2, B()).is_ce());
}

TEST_CASE("procedure codes are contravariant in the domain", "[stepmodel]") {
  // Top -> Top is included in Bot -> Top, not the reverse: a procedure that
  // invokes a method on its argument inhabits only the vacuous domain.
  CHECK(code_subset_at(T("Top -> Top"), T("Bot -> Top"), 4, B()).holds());
  CHECK(code_subset_at(T("Bot -> Top"), T("Top -> Top"), 4, B()).is_ce());
}

// ---------------------------------------------------------------------------
// state extension

TEST_CASE("forgetting steps and adding locations extends a state", "[stepmodel]") {
  HeapTypingApprox psi{{0, T("Top -> Top")}};
  HeapTypingApprox grown{{0, T("Top -> Top")}, {1, T("Top")}};
  CHECK(state_extends(5, psi, 3, approx_heap_typing(psi, 3), B()).holds());
  CHECK(state_extends(5, psi, 5, grown, B()).holds());
  CHECK(state_extends(5, psi, 3, grown, B()).holds());
}

TEST_CASE("dropping a location or raising the index is not an extension", "[stepmodel]") {
  HeapTypingApprox psi{{0, T("Top -> Top")}};
  CHECK(state_extends(4, psi, 2, {}, B()).is_ce());
  CHECK(state_extends(3, psi, 4, psi, B()).is_ce());
  HeapTypingApprox changed{{0, T("[m : inv Top]")}};
  CHECK(state_extends(4, psi, 2, changed, B()).is_ce());
}

// ---------------------------------------------------------------------------
// well-typed heaps

TEST_CASE("heap typing judges stored procedures below the index", "[stepmodel]") {
  Heap h;
  h.cells[0] = E("\\(x : Top) x");
  HeapTypingApprox psi{{0, T("[p : inv Top] -> [p : inv Top]")}};
  CHECK(heap_typed(h, 4, psi, B()).holds());

  HeapTypingApprox wrong{{0, T("Top -> [q : inv Top]")}};
  CHECK(heap_typed(h, 4, wrong, B()).is_ce());

  HeapTypingApprox missing{{7, T("Top -> Top")}};
  CHECK(heap_typed(h, 2, missing, B()).is_ce());

  CHECK(heap_typed(h, 0, psi, B()).holds());  // no indices below zero
  CHECK(heap_typed(Heap{}, 3, {}, B()).holds());
}

// ---------------------------------------------------------------------------
// location membership

TEST_CASE("reference codes compare the stored code by variance", "[stepmodel]") {
  HeapTypingApprox psi{{0, T("Top -> Top")}};
  CHECK(mem_loc(3, psi, 0, T("ref inv (Top -> Top)"), B()).holds());
  CHECK(mem_loc(3, psi, 0, T("ref cov (Top -> Top)"), B()).holds());
  CHECK(mem_loc(3, psi, 0, T("ref con (Top -> Top)"), B()).holds());
  CHECK(mem_loc(3, psi, 0, T("ref(Top -> Top, Top -> Top)"), B()).holds());
  // wider read bound: fine covariantly, fatal invariantly
  CHECK(mem_loc(3, psi, 0, T("ref cov Top"), B()).holds());
  CHECK(mem_loc(3, psi, 0, T("ref inv Top"), B()).is_ce());
  // narrower content: fine contravariantly
  CHECK(mem_loc(3, psi, 0, T("ref con Bot"), B()).holds());
  CHECK(mem_loc(3, psi, 0, T("ref cov Bot"), B()).is_ce());
  CHECK(mem_loc(3, psi, 9, T("ref inv Top"), B()).is_ce());
  CHECK_THROWS_AS(mem_loc(3, psi, 0, T("Top"), B()), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// value membership

TEST_CASE("top accepts every value and bot none", "[stepmodel]") {
  CHECK(val(0, {}, "\\(x : Top) x", "Top").holds());
  CHECK(val(5, {}, "fold[Top] (\\(x : Top) x)", "Top").holds());
  CHECK(val(0, {}, "\\(x : Top) x", "Bot").is_ce());
  CHECK(val(4, {}, "\\(x : Top) x", "Bot").is_ce());
}

TEST_CASE("procedure membership demands the lambda shape at every index", "[stepmodel]") {
  CHECK(val(0, {}, "Fun(X <: Top) \\(x : X) x", "Top -> Top").is_ce());
  CHECK(val(2, {}, "fold[Top] (\\(x : Top) x)", "Top -> Top").is_ce());
  CHECK(val(3, {}, "\\(x : Top) x", "Top -> Top").holds());
  // the body must deliver the result type once applied
  CHECK(val(3, {}, "\\(x : Top) \\(y : Top) y", "Top -> [m : inv Top]").is_ce());
}

TEST_CASE("the stored-procedure false positive appears exactly at index four", "[stepmodel]") {
  HeapTypingApprox psi{{0, T("[p : inv Top] -> [p : inv Top]")}};
  const std::string v = "\\(y : Top) {m = l0}.m";
  const std::string code = "Top -> [q : inv Top]";
  // too few steps to surface the wrong result
  CHECK(val(1, psi, v, code).holds());
  CHECK(val(2, psi, v, code).holds());
  CHECK(val(3, psi, v, code).holds());
  // invoke, then beta, then judge the result: the returned object lacks q
  Verdict v4 = val(4, psi, v, code);
  REQUIRE(v4.is_ce());
  CHECK(v4.ce->site == "obj/width");
  CHECK(val(5, psi, v, code).is_ce());
}

TEST_CASE("counterexamples replay identically", "[stepmodel]") {
  HeapTypingApprox psi{{0, T("[p : inv Top] -> [p : inv Top]")}};
  Verdict a = val(4, psi, "\\(y : Top) {m = l0}.m", "Top -> [q : inv Top]");
  Verdict b = val(4, psi, "\\(y : Top) {m = l0}.m", "Top -> [q : inv Top]");
  REQUIRE(a.is_ce());
  REQUIRE(b.is_ce());
  CHECK(a.ce->site == b.ce->site);
  CHECK(a.ce->detail == b.ce->detail);
  CHECK(a.ce->subject == b.ce->subject);
  CHECK(a.ce->trail == b.ce->trail);
}

TEST_CASE("object membership checks width, stored codes, and relabelings", "[stepmodel]") {
  HeapTypingApprox psi{{0, T("[m : inv Top] -> Top")}};
  CHECK(val(3, psi, "{m = l0}", "[m : inv Top]").holds());
  CHECK(val(3, psi, "{m = l0}", "[m : cov Top]").holds());
  CHECK(val(3, psi, "{m = l0}", "[n : inv Top]").is_ce());
  CHECK(val(3, psi, "{m = l0}", "[m : inv Top, n : inv Top]").is_ce());
  CHECK(val(3, psi, "\\(x : Top) x", "[m : inv Top]").is_ce());
  // a stored code of the wrong shape refutes the canonical witness
  HeapTypingApprox bad{{0, T("Top")}};
  CHECK(val(3, bad, "{m = l0}", "[m : inv Top]").is_ce());
}

TEST_CASE("self-type object membership instantiates the result at the witness", "[stepmodel]") {
  // stored code returns the object type itself, as the self payload demands
  HeapTypingApprox psi{{0, T("[m : inv Top] -> [m : inv Top]")}};
  // the canonical witness for Obj(X)[m : inv X] makes the stored code line up
  // only when the payload X is read at that witness
  Verdict v = val(3, psi, "{m = l0}", "Obj(X) [m : inv X]");
  CHECK_FALSE(v.is_ce());
}

TEST_CASE("split object codes use write and read bounds per method", "[stepmodel]") {
  HeapTypingApprox psi{{0, T("[m : inv Top] -> Top")}};
  // write bound Bot: nothing needs to be storable; read bound Top matches
  TypePtr split = T("[m : (Bot, Top)]");
  Verdict v = Engine(B()).mem_value(3, psi, E("{m = l0}"), split);
  CHECK(v.holds());
  // read bound narrower than the stored result is refuted
  TypePtr narrow = T("[m : (Bot, Bot)]");
  CHECK(Engine(B()).mem_value(3, psi, E("{m = l0}"), narrow).is_ce());
}

TEST_CASE("recursive record codes fix the method set and the witness", "[stepmodel]") {
  HeapTypingApprox psi{{0, T("(Rec(X) [m : inv X]) -> (Rec(X) [m : inv X])")}};
  CHECK(val(3, psi, "{m = l0}", "Rec(X) [m : inv X]").holds());
  HeapTypingApprox two{{0, T("(Rec(X) [m : inv X]) -> (Rec(X) [m : inv X])")},
                       {1, T("Top -> Top")}};
  // exact method set: extra methods are not allowed
  CHECK(val(3, two, "{m = l0, n = l1}", "Rec(X) [m : inv X]").is_ce());
}

TEST_CASE("recursive type membership unrolls under the fold", "[stepmodel]") {
  CHECK(val(4, {}, "fold[Top] (\\(x : Top) x)", "mu X. Top -> Top").holds());
  CHECK(val(4, {}, "\\(x : Top) x", "mu X. Top -> Top").is_ce());
  // fixed point: the fold is in mu at k exactly when the payload is in the
  // unrolling at every smaller index
  for (uint32_t k = 1; k <= 4; ++k) {
    bool fold_in = val(k, {}, "fold[Top] (\\(x : Top) \\(y : Top) y)", "mu X. Top -> Bot").holds();
    bool payload_in = true;
    for (uint32_t j = 0; j < k; ++j)
      payload_in = payload_in && val(j, {}, "\\(x : Top) \\(y : Top) y", "Top -> Bot").holds();
    CAPTURE(k);
    CHECK(fold_in == payload_in);
  }
}

TEST_CASE("universal membership instantiates within the bound", "[stepmodel]") {
  CHECK(val(3, {}, "Fun(X <: Top) \\(x : Top) x", "All(X <: Top) Top -> Top").holds());
  CHECK(val(3, {}, "\\(x : Top) x", "All(X <: Top) Top -> Top").is_ce());
  // the body must meet the instantiated code
  CHECK(val(3, {}, "Fun(X <: Top) \\(x : Top) x", "All(X <: Top) Top -> [m : inv Top]").is_ce());
}

TEST_CASE("existential membership finds the declared witness first", "[stepmodel]") {
  CHECK(val(3, {}, "pack<X <: Top = Top, \\(x : Top) x : Top>", "Some(X <: Top) Top").holds());
  CHECK(val(3, {}, "pack<X <: Top = Top, \\(x : Top) x : X -> X>",
            "Some(X <: Top) X -> X").holds());
  CHECK(val(3, {}, "\\(x : Top) x", "Some(X <: Top) Top").is_ce());
  CHECK(val(3, {}, "pack<X <: Top = Top, \\(x : Top) x : Top>",
            "Some(X <: Top) [m : inv X]").is_ce());
}

TEST_CASE("membership rejects misuse rather than guessing", "[stepmodel]") {
  CHECK_THROWS_AS(val(2, {}, "(\\(x : Top) x) (\\(y : Top) y)", "Top"),
                  std::invalid_argument);  // not a value
  CHECK_THROWS_AS(val(2, {}, "\\(x : Top) x", "X"), std::invalid_argument);  // open code
  CHECK(val(2, {}, "\\(x : Top) x", "ref inv Top").is_ce());  // locations only
}

// ---------------------------------------------------------------------------
// term membership

TEST_CASE("index zero constrains no run", "[stepmodel]") {
  Verdict v = term_at(0, {}, "{m = l9}.n", "Bot");
  CHECK(v.holds());
}

TEST_CASE("runs that cannot finish within the index are vacuous", "[stepmodel]") {
  // needs two steps; at k=2 only one is available
  CHECK(term_at(2, {}, "(\\(x : Top) x) ((\\(y : Top) y) (\\(z : Top) z))", "Bot").holds());
  // at k=4 it finishes and the result refutes Bot
  CHECK(term_at(4, {}, "(\\(x : Top) x) ((\\(y : Top) y) (\\(z : Top) z))", "Bot").is_ce());
  // divergence is vacuous at every index
  CHECK(term_at(5, {}, "(\\(x : Top) x x) (\\(x : Top) x x)", "Top").holds());
}

TEST_CASE("stuck configurations refute term membership immediately", "[stepmodel]") {
  HeapTypingApprox psi{{0, T("Top -> Top")}};
  Verdict v = term_at(3, psi, "{m = l0}.n", "Top");
  REQUIRE(v.is_ce());
  CHECK(v.ce->site == "term/stuck");
  CHECK(term_at(3, {}, "(\\(x : Top) x.m) (\\(y : Top) y)", "Top").is_ce());
}

TEST_CASE("object literals land in their annotated type", "[stepmodel]") {
  const std::string lit = "obj [m : inv Top] { m = self(s : [m : inv Top]) s.m }";
  CHECK(term_at(4, {}, lit, "[m : inv Top]").holds());
  CHECK(term_at(4, {}, lit, "[m : cov Top]").holds());
  CHECK(term_at(4, {}, lit, "[n : inv Top]").is_ce());
  CHECK(term_at(5, {}, "clone(" + lit + ")", "[m : inv Top]").holds());
  CHECK(term_at(5, {}, "let o = " + lit + " in o.m := self(s : [m : inv Top]) s",
                "[m : inv Top]").holds());
}

TEST_CASE("an unsatisfiable heap typing is reported inconclusive", "[stepmodel]") {
  HeapTypingApprox psi{{0, T("Bot")}};
  Verdict v = term_at(3, psi, "{m = l0}.m", "Top");
  CHECK(v.inconclusive());
}

TEST_CASE("typed programs are not refuted by the model", "[stepmodel]") {
  const char* programs[] = {
      "\\(x : Top) x",
      "(\\(x : Top -> Top) x (\\(y : Top) y)) (\\(z : Top) z)",
      "obj [m : inv Top, n : cov Top -> Top] {"
      " m = self(s : [m : inv Top, n : cov Top -> Top]) s.m,"
      " n = self(s : [m : inv Top, n : cov Top -> Top]) \\(y : Top) y }",
      "fold[mu X. Top -> Top] (\\(x : Top) x)",
      "let p : Some(X <: Top) X -> X = pack<X <: Top = Top, \\(x : Top) x : X -> X> in"
      " open p as <X <: Top, f : X -> X> in \\(y : Top) y : Top -> Top",
  };
  for (const char* src : programs) {
    TermPtr prog = E(src);
    TypePtr ty = type_of(prog, {});
    CAPTURE(src, print_type(ty));
    for (uint32_t k = 1; k <= 3; ++k) {
      Verdict v = Engine(B()).mem_term(k, {}, prog, interp(ty));
      CHECK_FALSE(v.is_ce());
    }
  }
}

// ---------------------------------------------------------------------------
// inclusion of interpretations

TEST_CASE("set inclusion follows width and variance", "[stepmodel]") {
  CHECK(sem_subset(T("[m : inv Top, n : inv Top]"), T("[m : inv Top]"), B()).holds());
  CHECK(sem_subset(T("[m : inv Top]"), T("[m : inv Top, n : inv Top]"), B()).is_ce());
  CHECK(sem_subset(T("[m : inv Top]"), T("[m : cov Top]"), B()).holds());
  CHECK(sem_subset(T("Bot"), T("[m : inv Top]"), B()).holds());
  CHECK(sem_subset(T("Top -> Top"), T("[m : inv Top]"), B()).is_ce());
}

TEST_CASE("reference inclusion: invariant within both bounds", "[stepmodel]") {
  CHECK(sem_subset(T("ref inv (Top -> Top)"), T("ref cov (Top -> Top)"), B()).holds());
  CHECK(sem_subset(T("ref inv (Top -> Top)"), T("ref con (Top -> Top)"), B()).holds());
  CHECK(sem_subset(T("ref cov (Top -> Top)"), T("ref inv (Top -> Top)"), B()).is_ce());
  // a reference code never includes a value code
  CHECK(sem_subset(T("ref inv Top"), T("Top -> Top"), B()).is_ce());
}

// ---------------------------------------------------------------------------
// self type exposure

TEST_CASE("self exposure is vacuous for empty candidates", "[stepmodel]") {
  CHECK(tsubself_check(T("Bot"), T("Obj(X) [m : inv X]"), B()).holds());
}

TEST_CASE("recursive record codes expose their self type", "[stepmodel]") {
  Verdict v = tsubself_check(T("Rec(X) [m : inv X]"), T("Obj(X) [m : inv X]"), B());
  CHECK_FALSE(v.is_ce());
}

TEST_CASE("a plain object type does not expose the self type", "[stepmodel]") {
  // members may store procedures that return arbitrary payloads rather than
  // the candidate itself
  Verdict v = tsubself_check(T("[m : inv Top]"), T("Obj(X) [m : inv X]"), B());
  CHECK(v.is_ce());
}

TEST_CASE("exposure requires an object code on the right", "[stepmodel]") {
  CHECK_THROWS_AS(tsubself_check(T("Bot"), T("Top -> Top"), B()), std::invalid_argument);
}
