// Lemma falsifier: the stock statements hold with live evidence, every
// registered mutation is refuted, and reports are deterministic.

#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "sigma/lemmas.hpp"

using namespace sigma;

namespace {

std::string render(const LemmaReport& rep) {
  std::ostringstream os;
  os << rep.lemma << " mutated=" << rep.mutated << " live=" << rep.live
     << " refuted=" << rep.refuted << " inconclusive=" << rep.inconclusive << "\n";
  for (const LemmaInstance& inst : rep.instances) {
    os << "  [" << (inst.vacuous ? "vacuous" : inst.verdict.is_ce() ? "refuted" : "live") << "] "
       << inst.binding;
    if (inst.verdict.is_ce() && inst.verdict.ce)
      os << " :: " << inst.verdict.ce->site << ": " << inst.verdict.ce->detail;
    if (!inst.verdict.note.empty()) os << " :: " << inst.verdict.note;
    os << "\n";
  }
  return os.str();
}

}  // namespace

TEST_CASE("registry is consistent with the stock lists") {
  std::set<std::string> names;
  for (const std::string& n : lemma_names()) names.insert(n);
  for (const std::string& n : stock_lemma_names()) {
    INFO(n);
    REQUIRE(names.count(n) == 1);
  }
  for (const auto& [slug, lemma] : stock_mutation_lemmas()) {
    INFO(slug << " -> " << lemma);
    REQUIRE(names.count(lemma) == 1);
    REQUIRE(lemma_has_mutation(lemma));
  }
  REQUIRE_FALSE(lemma_names().empty());
}

TEST_CASE("stock lemmas hold with live instances") {
  Budget b = Budget::standard();
  for (const std::string& name : stock_lemma_names()) {
    DYNAMIC_SECTION(name) {
      LemmaReport rep = check_lemma(name, b);
      INFO(render(rep));
      CHECK(rep.refuted == 0);
      CHECK(rep.live >= 1);
      CHECK(rep.overall.holds());
    }
  }
}

TEST_CASE("registry extras beyond the stock set also hold") {
  Budget b = Budget::standard();
  std::set<std::string> stock(stock_lemma_names().begin(), stock_lemma_names().end());
  for (const std::string& name : lemma_names()) {
    if (stock.count(name)) continue;
    DYNAMIC_SECTION(name) {
      LemmaReport rep = check_lemma(name, b);
      INFO(render(rep));
      CHECK(rep.refuted == 0);
      CHECK(rep.live >= 1);
      CHECK(rep.overall.holds());
    }
  }
}

TEST_CASE("stock rule-mutations are each refuted") {
  Budget b = Budget::standard();
  for (const auto& [slug, lemma] : stock_mutation_lemmas()) {
    DYNAMIC_SECTION(slug) {
      LemmaReport rep = check_lemma(lemma, b, /*mutate=*/true);
      INFO(render(rep));
      CHECK(rep.refuted >= 1);
      CHECK(rep.overall.is_ce());
    }
  }
}

TEST_CASE("every registered mutation is refuted") {
  Budget b = Budget::standard();
  for (const std::string& name : lemma_names()) {
    if (!lemma_has_mutation(name)) continue;
    DYNAMIC_SECTION(name) {
      LemmaReport rep = check_lemma(name, b, /*mutate=*/true);
      INFO(render(rep));
      CHECK(rep.refuted >= 1);
      CHECK(rep.overall.is_ce());
    }
  }
}

TEST_CASE("reports are deterministic") {
  Budget b = Budget::standard();
  for (const std::string& name : {std::string("SemUpd"), std::string("SemSubRec")}) {
    LemmaReport r1 = check_lemma(name, b);
    LemmaReport r2 = check_lemma(name, b);
    REQUIRE(render(r1) == render(r2));
  }
  LemmaReport m1 = check_lemma("SemInv", b, true);
  LemmaReport m2 = check_lemma("SemInv", b, true);
  REQUIRE(render(m1) == render(m2));
}

TEST_CASE("unknown names and missing mutations are rejected") {
  Budget b = Budget::standard();
  REQUIRE_THROWS_AS(check_lemma("NoSuchLemma", b), std::invalid_argument);
  REQUIRE_THROWS_AS(check_lemma("SemApp", b, /*mutate=*/true), std::invalid_argument);
  REQUIRE_THROWS_AS(lemma_family("NoSuchLemma"), std::invalid_argument);
}

TEST_CASE("instantiation overrides narrow the pools") {
  Budget b = Budget::standard();
  LemmaInstantiation inst;
  inst.codes = {parse_type("Top")};
  inst.values = {parse_term("\\(x : Top) x")};
  LemmaReport rep = check_lemma("SemTAbs", b, false, inst);
  INFO(render(rep));
  CHECK(rep.refuted == 0);
  CHECK(rep.live >= 1);
}
