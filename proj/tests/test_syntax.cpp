#include <catch2/catch_amalgamated.hpp>

#include "sigma/ast.hpp"
#include "sigma/binding.hpp"
#include "sigma/parser.hpp"
#include "sigma/printer.hpp"

using namespace sigma;

namespace {

// parse -> print must reproduce the canonical string exactly
void roundtrip_term(const std::string& canonical) {
  TermPtr t = parse_term(canonical);
  CHECK(print_term(t) == canonical);
  CHECK(alpha_eq_term(parse_term(print_term(t)), t));
}

void roundtrip_type(const std::string& canonical) {
  TypePtr t = parse_type(canonical);
  CHECK(print_type(t) == canonical);
  CHECK(alpha_eq_type(parse_type(print_type(t)), t));
}

}  // namespace

TEST_CASE("parsing basic terms") {
  SECTION("clone") {
    TermPtr t = parse_term("clone(x)");
    REQUIRE(t->kind == TermKind::Clone);
    REQUIRE(t->t1->kind == TermKind::Var);
    CHECK(t->t1->name == "x");
  }

  SECTION("object literal with sigma binder alias") {
    TermPtr t = parse_term("obj [m:inv Top] { m = ς(s) s.m }");
    REQUIRE(t->kind == TermKind::ObjNew);
    REQUIRE(t->methods.size() == 1);
    const MethodDef& m = t->methods[0];
    CHECK(m.name == "m");
    CHECK(m.self_var == "s");
    // omitted self annotation defaults to the literal's annotation
    CHECK(alpha_eq_type(m.self_annot, t->ann));
    REQUIRE(m.body->kind == TermKind::Invoke);
    CHECK(m.body->name == "m");
    CHECK(m.body->t1->name == "s");
  }

  SECTION("let desugars to application") {
    TermPtr t = parse_term("let z = clone(x) in x.retrieve := ς(y:A) z");
    REQUIRE(t->kind == TermKind::App);
    REQUIRE(t->t1->kind == TermKind::Lam);
    CHECK(t->t1->name == "z");
    CHECK(t->t1->ann->kind == TypeKind::Top);  // annotation omitted -> Top
    REQUIRE(t->t2->kind == TermKind::Clone);
    const TermPtr& body = t->t1->t1;
    REQUIRE(body->kind == TermKind::Update);
    CHECK(body->name == "retrieve");
    CHECK(body->upd.self_var == "y");
    CHECK(body->upd.self_annot->kind == TypeKind::Var);
    CHECK(body->upd.body->name == "z");
  }

  SECTION("let with annotation") {
    TermPtr t = parse_term("let f : Top -> Top = \\(x : Top) x in f f");
    REQUIRE(t->kind == TermKind::App);
    CHECK(t->t1->ann->kind == TypeKind::Arrow);
  }

  SECTION("application is left associative") {
    TermPtr t = parse_term("f a b");
    REQUIRE(t->kind == TermKind::App);
    REQUIRE(t->t1->kind == TermKind::App);
    CHECK(t->t1->t1->name == "f");
    CHECK(t->t2->name == "b");
  }

  SECTION("invoke chains and postfix type application") {
    TermPtr t = parse_term("a.m.n");
    REQUIRE(t->kind == TermKind::Invoke);
    CHECK(t->name == "n");
    CHECK(t->t1->kind == TermKind::Invoke);

    TermPtr u = parse_term("f[Top] a");
    REQUIRE(u->kind == TermKind::App);
    CHECK(u->t1->kind == TermKind::TApp);
  }

  SECTION("pack and open") {
    TermPtr t = parse_term("pack<X <: Top = Bot, \\(x : X) x : X -> X>");
    REQUIRE(t->kind == TermKind::Pack);
    CHECK(t->name == "X");
    CHECK(t->ann2->kind == TypeKind::Bot);
    CHECK(t->ann3->kind == TypeKind::Arrow);

    TermPtr u = parse_term("open p as <X <: Top, x : X -> X> in x x : Top");
    REQUIRE(u->kind == TermKind::Open);
    CHECK(u->name == "X");
    CHECK(u->name2 == "x");
    CHECK(u->t2->kind == TermKind::App);
    CHECK(u->ann3->kind == TypeKind::Top);
  }

  SECTION("runtime objects parse for trace replay") {
    TermPtr t = parse_term("{m = l0, n = l3}");
    REQUIRE(t->kind == TermKind::RuntimeObj);
    REQUIRE(t->slots.size() == 2);
    CHECK(t->slots[0].second == 0);
    CHECK(t->slots[1].second == 3);
  }

  SECTION("lambda alias") {
    CHECK(alpha_eq_term(parse_term("λ(x:Top) x"), parse_term("\\(y : Top) y")));
  }
}

TEST_CASE("parse errors carry positions") {
  SECTION("missing type") {
    try {
      parse_term("\\(x : ) x");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line == 1);
      CHECK(e.col == 7);
      CHECK(std::string(e.what()).find("expected a type") != std::string::npos);
    }
  }

  SECTION("duplicate method in literal") {
    CHECK_THROWS_WITH(parse_term("obj [m : inv Top] { m = self(s) s, m = self(s) s }"),
                      Catch::Matchers::ContainsSubstring("duplicate method"));
  }

  SECTION("duplicate method in type") {
    CHECK_THROWS_WITH(parse_type("[m : inv Top, m : cov Top]"),
                      Catch::Matchers::ContainsSubstring("duplicate method"));
  }

  SECTION("mixing split and variance entries") {
    CHECK_THROWS_WITH(parse_type("[m : inv Top, n : (Top, Top)]"),
                      Catch::Matchers::ContainsSubstring("cannot mix"));
  }

  SECTION("error on later line reports that line") {
    try {
      parse_term("\\(x : Top)\n  x .");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line == 2);
    }
  }
}

TEST_CASE("printer output is stable") {
  SECTION("terms") {
    roundtrip_term("clone(x)");
    roundtrip_term("\\(x : Top) x");
    roundtrip_term("Fun(X <: Top) \\(x : X) x");
    roundtrip_term("obj [m : inv Top] { m = self(s : [m : inv Top]) s.m }");
    roundtrip_term("x.m := self(y : Top) y.m");
    roundtrip_term("fold[mu X. [m : inv X]] x");
    roundtrip_term("unfold[mu X. Top] fold[mu X. Top] x");
    roundtrip_term("f[Top] a");
    roundtrip_term("pack<X <: Top = Bot, \\(x : X) x : X -> X>");
    roundtrip_term("open p as <X <: Top, x : X -> X> in x x : Top");
    roundtrip_term("(\\(x : Top) x) y");
    roundtrip_term("{m = l0, n = l1}");
    roundtrip_term("clone(x).m");
    roundtrip_term("f (x.m := self(y : Top) y)");
  }

  SECTION("types") {
    roundtrip_type("Top");
    roundtrip_type("Top -> Bot");
    roundtrip_type("(Top -> Bot) -> Top");
    roundtrip_type("[m : inv Top, n : cov Top -> Bot]");
    roundtrip_type("[]");
    roundtrip_type("[m : (Bot, Top)]");
    roundtrip_type("mu X. [m : inv X]");
    roundtrip_type("All(X <: Top) X -> X");
    roundtrip_type("Some(X <: Top) [m : (Bot, Top)]");
    roundtrip_type("Obj(X) [m : inv X]");
    roundtrip_type("Rec(X) [m : inv X]");
    roundtrip_type("Top -> (mu X. X) -> Top");
    roundtrip_type("approx[3] [m : inv Top]");
    roundtrip_type("ref inv Top");
    roundtrip_type("ref(Bot, Top)");
  }

  SECTION("non-canonical input normalizes") {
    CHECK(print_type(parse_type("Top->Bot")) == "Top -> Bot");
    CHECK(print_term(parse_term("obj [m:inv Top] { m = ς(s) s.m }")) ==
          "obj [m : inv Top] { m = self(s : [m : inv Top]) s.m }");
    CHECK(print_term(parse_term("  clone( x )  ")) == "clone(x)");
  }

  SECTION("comments are skipped") {
    CHECK(print_term(parse_term("// leading note\nclone(x) // trailing")) == "clone(x)");
  }
}

TEST_CASE("free variables") {
  SECTION("closed lambda") {
    FreeVars fv = free_vars(parse_term("\\(x : Top) x"));
    CHECK(fv.term_vars.empty());
    CHECK(fv.type_vars.empty());
    CHECK(fv.locs.empty());
  }

  SECTION("self binder is not free") {
    FreeVars fv = free_vars(parse_term("obj [m : inv Top] { m = self(s) s.m }"));
    CHECK(fv.term_vars.empty());
  }

  SECTION("runtime objects contribute locations") {
    FreeVars fv = free_vars(parse_term("{m = l0}"));
    CHECK(fv.locs == std::set<Loc>{0});
  }

  SECTION("open binds its type and term variable in the body only") {
    FreeVars fv = free_vars(parse_term("open p as <X <: Top, x : X> in x y : Top"));
    CHECK(fv.term_vars == std::set<std::string>{"p", "y"});
    CHECK(fv.type_vars.empty());

    // the result annotation sits outside the binder
    FreeVars gv = free_vars(parse_term("open p as <X <: Top, x : X> in x : X"));
    CHECK(gv.type_vars == std::set<std::string>{"X"});
  }

  SECTION("pack hides its witness variable in the payload") {
    FreeVars fv = free_vars(parse_term("pack<X <: Top = Bot, \\(y : X) y : X -> X>"));
    CHECK(fv.type_vars.empty());
    // the witness and bound are outside the binder
    FreeVars gv = free_vars(parse_term("pack<X <: Top = Y, x : X>"));
    CHECK(gv.type_vars == std::set<std::string>{"Y"});
  }

  SECTION("type annotations contribute type variables") {
    FreeVars fv = free_vars(parse_term("\\(x : A) x"));
    CHECK(fv.type_vars == std::set<std::string>{"A"});
  }
}

TEST_CASE("substitution is capture avoiding") {
  SECTION("plain replacement") {
    TermPtr t = subst_term(parse_term("x.m"), "x", parse_term("{m = l0}"));
    CHECK(print_term(t) == "{m = l0}.m");
  }

  SECTION("binder renamed when the image would be captured") {
    TermPtr t = subst_term(parse_term("\\(y : Top) x"), "x", parse_term("y"));
    CHECK(alpha_eq_term(t, parse_term("\\(w : Top) y")));
    // and the fresh binder is genuinely distinct from the image
    CHECK(t->name != "y");
  }

  SECTION("shadowed occurrences are untouched") {
    TermPtr t = subst_term(parse_term("\\(x : Top) x"), "x", parse_term("z"));
    CHECK(alpha_eq_term(t, parse_term("\\(x : Top) x")));
  }

  SECTION("type substitution renames type binders") {
    TypePtr t = subst_type(parse_type("All(Y <: Top) X"), "X", parse_type("Y"));
    CHECK(alpha_eq_type(t, parse_type("All(Z <: Top) Y")));
  }

  SECTION("type substitution reaches annotations in terms") {
    TermPtr t = subst_type_in_term(parse_term("\\(x : X) x"), "X", parse_type("Bot"));
    CHECK(print_term(t) == "\\(x : Bot) x");
  }

  SECTION("substituting under pack respects its binder") {
    TermPtr t = subst_type_in_term(parse_term("pack<X <: Top = X, x : X>"), "X",
                                   parse_type("Bot"));
    // the witness position is outside the binder, the payload annotation inside
    CHECK(t->ann2->kind == TypeKind::Bot);
    CHECK(t->ann3->kind == TypeKind::Var);
  }

  SECTION("composition on disjoint domains") {
    TermPtr t = parse_term("f x");
    TermPtr v1 = parse_term("\\(a : Top) a");
    TermPtr v2 = parse_term("{m = l0}");
    TermPtr lhs = subst_term(subst_term(t, "f", v1), "x", v2);
    TermPtr rhs = subst_term(subst_term(t, "x", v2), "f", v1);
    CHECK(alpha_eq_term(lhs, rhs));
  }

  SECTION("free variable accounting") {
    TermPtr t = parse_term("x.m := self(s) y");
    TermPtr r = subst_term(t, "x", parse_term("{m = l2}"));
    FreeVars fv = free_vars(r);
    CHECK(fv.term_vars == std::set<std::string>{"y"});
    CHECK(fv.locs == std::set<Loc>{2});
  }
}

TEST_CASE("alpha equivalence") {
  SECTION("recursive types up to bound renaming") {
    CHECK(alpha_eq_type(parse_type("mu X. [m : cov X]"), parse_type("mu Y. [m : cov Y]")));
  }

  SECTION("variance annotations matter") {
    CHECK_FALSE(alpha_eq_type(parse_type("[m : cov Top]"), parse_type("[m : con Top]")));
  }

  SECTION("method order is irrelevant") {
    CHECK(alpha_eq_type(parse_type("[m : inv Top, n : inv Bot]"),
                        parse_type("[n : inv Bot, m : inv Top]")));
    CHECK(alpha_eq_term(parse_term("{m = l0, n = l1}"), parse_term("{n = l1, m = l0}")));
  }

  SECTION("free variables compare by name") {
    CHECK_FALSE(alpha_eq_type(parse_type("X"), parse_type("Y")));
    CHECK(alpha_eq_term(parse_term("\\(x : Top) x y"), parse_term("\\(z : Top) z y")));
    CHECK_FALSE(alpha_eq_term(parse_term("\\(x : Top) x y"), parse_term("\\(z : Top) z w")));
  }

  SECTION("alpha-equal trees hash alike") {
    auto pairs = {
        std::pair{"mu X. [m : cov X]", "mu Y. [m : cov Y]"},
        std::pair{"All(X <: Top) X -> X", "All(A <: Top) A -> A"},
        std::pair{"[m : inv Top, n : inv Bot]", "[n : inv Bot, m : inv Top]"},
    };
    for (auto [a, b] : pairs) {
      CHECK(hash_type(parse_type(a)) == hash_type(parse_type(b)));
    }
    CHECK(hash_term(parse_term("\\(x : Top) x")) == hash_term(parse_term("\\(q : Top) q")));
    CHECK(hash_term(parse_term("{m = l0, n = l1}")) ==
          hash_term(parse_term("{n = l1, m = l0}")));
  }
}

TEST_CASE("annotation erasure") {
  SECTION("lambda annotations become Top") {
    CHECK(print_term(erase_annotations(parse_term("\\(x : [m : inv Top]) x"))) ==
          "\\(x : Top) x");
  }

  SECTION("type application arguments become Top") {
    CHECK(print_term(erase_annotations(parse_term("f[Bot]"))) == "f[Top]");
  }

  SECTION("object literals and updates") {
    TermPtr t = erase_annotations(
        parse_term("obj [m : inv Bot] { m = self(s : [m : inv Bot]) s.m := self(y : Bot) y }"));
    CHECK(print_term(t) ==
          "obj Top { m = self(s : Top) s.m := self(y : Top) y }");
  }

  SECTION("idempotent") {
    TermPtr t = parse_term("pack<X <: Top = Bot, \\(x : X) x : X -> X>");
    CHECK(alpha_eq_term(erase_annotations(erase_annotations(t)), erase_annotations(t)));
  }

  SECTION("commutes with substitution") {
    TermPtr t = parse_term("\\(y : X) x y");
    TermPtr v = parse_term("\\(z : [m : cov Top]) z");
    CHECK(alpha_eq_term(erase_annotations(subst_term(t, "x", v)),
                        subst_term(erase_annotations(t), "x", erase_annotations(v))));
  }
}

TEST_CASE("self type desugaring") {
  SECTION("single method") {
    TypePtr t = desugar_self(parse_type("Obj(X) [m : inv X]"));
    CHECK(alpha_eq_type(t, parse_type("mu Y. Some(X <: Y) [m : inv X]")));
    CHECK_FALSE(contains_self_obj(t));
  }

  SECTION("two methods") {
    TypePtr t = desugar_self(parse_type("Obj(X) [retrieve : inv X, backup : inv X]"));
    CHECK(alpha_eq_type(
        t, parse_type("mu Y. Some(X <: Y) [retrieve : inv X, backup : inv X]")));
  }

  SECTION("no self types means no change") {
    TypePtr t = parse_type("mu X. [m : inv X] -> Top");
    CHECK(alpha_eq_type(desugar_self(t), t));
  }

  SECTION("idempotent") {
    TypePtr t = parse_type("Top -> Obj(X) [m : cov X]");
    CHECK(alpha_eq_type(desugar_self(desugar_self(t)), desugar_self(t)));
  }

  SECTION("nested self types desugar innermost first") {
    TypePtr t = desugar_self(parse_type("Obj(X) [m : cov (Obj(Z) [n : cov Z])]"));
    CHECK_FALSE(contains_self_obj(t));
    CHECK(alpha_eq_type(
        t, parse_type("mu Y. Some(X <: Y) [m : cov (mu W. Some(Z <: W) [n : cov Z])]")));
  }
}

TEST_CASE("tree measures") {
  CHECK(type_size(parse_type("Top")) == 1);
  CHECK(type_size(parse_type("Top -> Bot")) == 3);
  CHECK(type_size(parse_type("[m : inv Top]")) == 2);
  CHECK(type_size(parse_type("mu X. X")) == 2);
  CHECK(term_size(parse_term("x")) == 1);
  CHECK(term_size(parse_term("f x")) == 3);
}
