#include <catch2/catch_amalgamated.hpp>

#include "sigma/binding.hpp"
#include "sigma/eval.hpp"
#include "sigma/generate.hpp"
#include "sigma/parser.hpp"
#include "sigma/printer.hpp"
#include "sigma/typecheck.hpp"

using namespace sigma;

namespace {

GenConfig small_cfg(uint64_t seed, Mode mode = Mode::Variance) {
  GenConfig cfg;
  cfg.max_term_depth = 4;
  cfg.max_type_size = 4;
  cfg.fuel = 300;
  cfg.seed = seed;
  cfg.mode = mode;
  return cfg;
}

bool same_report(const FuzzReport& a, const FuzzReport& b) {
  if (a.generated != b.generated || a.typechecked != b.typechecked ||
      a.value != b.value || a.fuel_exhausted != b.fuel_exhausted ||
      a.stuck != b.stuck || a.gave_up != b.gave_up ||
      a.failures.size() != b.failures.size())
    return false;
  for (size_t i = 0; i < a.failures.size(); ++i)
    if (a.failures[i].seed != b.failures[i].seed ||
        a.failures[i].kind != b.failures[i].kind ||
        a.failures[i].detail != b.failures[i].detail)
      return false;
  return true;
}

}  // namespace

TEST_CASE("generated programs are closed, location-free, and re-check") {
  for (Mode mode : {Mode::Variance, Mode::Split}) {
    DYNAMIC_SECTION("mode " << to_string(mode)) {
      size_t total_retries = 0;
      for (uint64_t s = 1; s <= 120; ++s) {
        GenConfig cfg = small_cfg(s, mode);
        GenResult r = gen_well_typed(cfg);
        REQUIRE(r.term);
        FreeVars fv = free_vars(r.term);
        CHECK(fv.term_vars.empty());
        CHECK(fv.type_vars.empty());
        CHECK(fv.locs.empty());
        TypePtr again = type_of(r.term, cfg.check_options());
        CHECK(alpha_eq_type(again, r.type));
        total_retries += r.retries;
      }
      // retries are permitted but a storm means the productions are wrong
      CHECK(total_retries < 120);
    }
  }
}

TEST_CASE("generation is deterministic per seed") {
  GenConfig cfg = small_cfg(42);
  GenResult a = gen_well_typed(cfg);
  GenResult b = gen_well_typed(cfg);
  CHECK(alpha_eq_term(a.term, b.term));
  CHECK(alpha_eq_type(a.type, b.type));

  bool any_differ = false;
  for (uint64_t s = 100; s < 110; ++s) {
    GenConfig other = small_cfg(s);
    if (!alpha_eq_term(gen_well_typed(other).term, a.term)) any_differ = true;
  }
  CHECK(any_differ);
}

TEST_CASE("generated programs survive a print and parse round trip") {
  for (uint64_t s = 1; s <= 60; ++s) {
    GenConfig cfg = small_cfg(s * 7 + 1);
    GenResult r = gen_well_typed(cfg);
    std::string text = print_term(r.term);
    INFO(text);
    TermPtr back = parse_term(text);
    CHECK(alpha_eq_term(back, r.term));
  }
}

TEST_CASE("feature toggles prune the goal space") {
  GenConfig cfg = small_cfg(5);
  cfg.quantifiers = false;
  cfg.recursion = false;
  cfg.self_types = false;
  for (uint64_t s = 1; s <= 40; ++s) {
    cfg.seed = s;
    GenResult r = gen_well_typed(cfg);
    // with everything off only Top, arrows, and plain objects remain
    std::function<void(const TypePtr&)> scan = [&](const TypePtr& t) {
      if (!t) return;
      CHECK((t->kind == TypeKind::Top || t->kind == TypeKind::Arrow ||
             t->kind == TypeKind::Obj || t->kind == TypeKind::Bot ||
             t->kind == TypeKind::Var));
      if (t->kind == TypeKind::Arrow) { scan(t->a); scan(t->b); }
      if (t->kind == TypeKind::Obj)
        for (const auto& m : t->methods) scan(m.type);
    };
    scan(r.type);
  }
}

TEST_CASE("safety fuzz finds no stuck programs") {
  GenConfig cfg = small_cfg(2026);
  cfg.max_term_depth = 5;
  FuzzReport rep = fuzz_safety(cfg, 250);
  CHECK(rep.generated == 250);
  CHECK(rep.typechecked == 250);
  CHECK(rep.gave_up == 0);
  CHECK(rep.stuck == 0);
  CHECK(rep.value + rep.fuel_exhausted == 250);
  CHECK(rep.safety_holds());
  CHECK(rep.failures.empty());

  GenConfig split = small_cfg(2027, Mode::Split);
  FuzzReport srep = fuzz_safety(split, 120);
  CHECK(srep.stuck == 0);
  CHECK(srep.gave_up == 0);
  CHECK(srep.safety_holds());
}

TEST_CASE("fuzz report does not depend on the thread partition") {
  GenConfig cfg = small_cfg(7);
  FuzzReport solo = fuzz_safety(cfg, 60, 1);
  FuzzReport trio = fuzz_safety(cfg, 60, 3);
  CHECK(same_report(solo, trio));
}

TEST_CASE("an empty fuzz run passes vacuously") {
  FuzzReport rep = fuzz_safety(small_cfg(1), 0);
  CHECK(rep.generated == 0);
  CHECK(rep.safety_holds());
  CHECK(rep.failures.empty());
}

TEST_CASE("each exploit template is mutated-accepted, stock-rejected, and stuck") {
  for (const std::string& name : Mutations::names()) {
    DYNAMIC_SECTION(name) {
      Mode mode = name == "con-read-payload" ? Mode::Split : Mode::Variance;
      for (uint64_t seed : {11ull, 12ull, 13ull}) {
        TermPtr t = gendetail::exploit_template(name, seed, {"m", "n", "p"});
        INFO(print_term(t));

        CheckOptions mutated;
        mutated.mode = mode;
        mutated.mut = *Mutations::by_name(name);
        CHECK_NOTHROW(type_of(t, mutated));

        CheckOptions stock;
        stock.mode = mode;
        CHECK_THROWS_AS(type_of(t, stock), TypeError);

        Trace tr = run(Config{{}, t}, 200);
        CHECK(tr.outcome == Outcome::Stuck);
      }
    }
  }
}

TEST_CASE("fuzzing against a broken checker reports unsound programs") {
  for (const std::string& name : Mutations::names()) {
    DYNAMIC_SECTION(name) {
      GenConfig cfg = small_cfg(
          900, name == "con-read-payload" ? Mode::Split : Mode::Variance);
      cfg.mutate = name;
      FuzzReport rep = fuzz_safety(cfg, 30);
      CHECK(rep.generated == 30);
      CHECK(rep.typechecked == 30);  // the broken checker accepted everything
      CHECK(rep.stuck >= 1);
      CHECK_FALSE(rep.safety_holds());
      bool has_stuck_failure = false;
      for (const auto& f : rep.failures) has_stuck_failure |= f.kind == "stuck";
      CHECK(has_stuck_failure);
    }
  }
}

TEST_CASE("config bounds are validated") {
  GenConfig cfg = small_cfg(1);
  cfg.max_term_depth = 0;
  CHECK_THROWS_AS(gen_well_typed(cfg), std::invalid_argument);
  cfg = small_cfg(1);
  cfg.fuel = 0;
  CHECK_THROWS_AS(fuzz_safety(cfg, 1), std::invalid_argument);
  cfg = small_cfg(1);
  cfg.method_pool.clear();
  CHECK_THROWS_AS(gen_well_typed(cfg), std::invalid_argument);
  cfg = small_cfg(1);
  cfg.mutate = "no-such-mutation";
  CHECK_THROWS_AS(gen_well_typed(cfg), std::invalid_argument);
}
