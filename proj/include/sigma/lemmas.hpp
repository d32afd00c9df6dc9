// Executable renditions of the semantic typing and subtyping lemmas.
//
// Every lemma is an implication between membership statements. A check
// finitizes it: metavariables range over a deterministic pool of concrete
// codes, values and heap typings (anchor instances known to satisfy the
// premises, plus catalog-drawn sweeps), premises are evaluated first, and
// the conclusion verdict decides each instance. Instances whose premises
// cannot be established within the budget are recorded as vacuous rather
// than silently dropped, so a report always shows how much live evidence
// backs a "holds" outcome.
//
// A mutated variant flips one premise or variance per lemma. Five of these
// flips correspond to the stock rule-mutations of the type checker, each
// attached to the lemma where that flip is the natural one:
//
//   drop-inv-variance   -> SemInv      (con methods admitted for invocation)
//   drop-upd-variance   -> SemUpd      (cov methods admitted for update)
//   cov-upd-body        -> SemUpd-Gen  (update body typed at a supertype)
//   width-reverse       -> SemSubObj   (target may add methods)
//   con-read-payload    -> SemInv-Gen  (invocation returns the write bound)
//
// A mutated check is expected to produce counterexamples; that expectation
// is what demonstrates the falsifier has teeth.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sigma/ast.hpp"
#include "sigma/binding.hpp"
#include "sigma/parser.hpp"
#include "sigma/printer.hpp"
#include "sigma/semtypes.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// Reports

struct LemmaInstance {
  std::string binding;   // rendered metavariable assignment
  bool vacuous = false;  // a premise could not be established
  Verdict verdict;       // conclusion verdict; premise verdict when vacuous
};

struct LemmaReport {
  std::string lemma;
  std::string family;
  bool mutated = false;
  uint64_t seed = 0;
  uint32_t k_max = 0;
  size_t live = 0;          // instances whose premises all held
  size_t refuted = 0;       // live instances with a counterexample
  size_t inconclusive = 0;  // live instances with a soft verdict
  std::vector<LemmaInstance> instances;
  Verdict overall;
};

// Optional overrides for the metavariable pools. Empty vectors mean the
// budget catalogs are used.
struct LemmaInstantiation {
  std::vector<TypePtr> codes;
  std::vector<TermPtr> values;
};

namespace lemmadetail {

// A type function: a code with one distinguished free variable. All the
// constructors in the code grammar are non-expansive, so any such body is an
// admissible argument for the quantified and recursive type definitions.
struct TypeFun {
  std::string var;
  TypePtr body;

  TypePtr operator()(const TypePtr& arg) const { return subst_type(body, var, arg); }
  std::string show() const { return var + ". " + print_type(body); }
};

// A concrete inhabitant of a code: the value together with the heap typing
// it needs. Handcrafted members place their cells in the 860+ band, disjoint
// from per-instance states (low locations) and from the bands the engine
// itself reserves.
struct Member {
  HeapTypingApprox psi;
  TermPtr v;
};

constexpr Loc kMemberBand = 860;

class LemmaContext {
 public:
  LemmaContext(const Budget& budget, std::vector<TypePtr> codes, std::vector<TermPtr> values,
               bool mutated, LemmaReport& rep)
      : eng_(budget),
        budget_(budget),
        codes_(std::move(codes)),
        values_(std::move(values)),
        mutated_(mutated),
        rep_(rep) {}

  Engine& eng() { return eng_; }
  uint32_t k_max() const { return budget_.k_max; }
  bool mutated() const { return mutated_; }
  const std::vector<TypePtr>& codes() const { return codes_; }
  const std::vector<TermPtr>& values() const { return values_; }

  // --- verdict plumbing ----------------------------------------------------

  // Sequential conjunction: the first counterexample wins, soft verdicts are
  // sticky, and instance counts accumulate.
  static Verdict merge(Verdict acc, const Verdict& next) {
    if (acc.is_ce()) return acc;
    if (next.is_ce()) {
      Verdict out = next;
      out.checked += acc.checked;
      return out;
    }
    acc.checked += next.checked;
    if (next.inconclusive() && !acc.inconclusive()) {
      acc.kind = Verdict::Kind::Inconclusive;
      acc.note = next.note;
    }
    return acc;
  }

  // Evaluates f at every index from 1 to k_max.
  Verdict sweep(const std::function<Verdict(uint32_t)>& f) {
    Verdict acc = Verdict::pass(0);
    for (uint32_t k = 1; k <= budget_.k_max; ++k) {
      acc = merge(std::move(acc), f(k));
      if (acc.is_ce()) return acc;
    }
    return acc;
  }

  // --- membership sampling -------------------------------------------------

  // Handcrafted inhabitants per code shape. Object-like codes get a fresh
  // record whose heap typing stores exactly the canonical slot codes, and
  // recursive codes get a one-level fold around an inhabitant of their
  // unrolling. Everything else falls back to the value catalog.
  std::vector<Member> handcrafted_members(const TypePtr& code) {
    std::vector<Member> out;
    switch (code->kind) {
      case TypeKind::Obj: {
        Member m;
        std::vector<std::pair<std::string, Loc>> slots;
        Loc l = kMemberBand;
        for (const auto& mt : code->methods) {
          m.psi[l] = Type::arrow(code, mt.type);
          slots.emplace_back(mt.name, l++);
        }
        m.v = Term::runtime_obj(std::move(slots));
        out.push_back(std::move(m));
        break;
      }
      case TypeKind::SelfObj:
      case TypeKind::RecObj: {
        Member m;
        std::vector<std::pair<std::string, Loc>> slots;
        Loc l = kMemberBand;
        for (const auto& mt : code->methods) {
          m.psi[l] = Type::arrow(code, subst_type(mt.type, code->name, code));
          slots.emplace_back(mt.name, l++);
        }
        m.v = Term::runtime_obj(std::move(slots));
        out.push_back(std::move(m));
        break;
      }
      case TypeKind::ObjSplit: {
        Member m;
        std::vector<std::pair<std::string, Loc>> slots;
        Loc l = kMemberBand;
        for (const auto& mt : code->split_methods) {
          // Any stored code between the write and read bounds works; the
          // write bound is chosen, so pool codes keep write below read.
          m.psi[l] = Type::arrow(code, mt.write);
          slots.emplace_back(mt.name, l++);
        }
        m.v = Term::runtime_obj(std::move(slots));
        out.push_back(std::move(m));
        break;
      }
      case TypeKind::Mu: {
        TypePtr unrolled = subst_type(code->a, code->name, code);
        if (unrolled->kind != TypeKind::Mu) {
          for (Member inner : handcrafted_members(unrolled)) {
            inner.v = Term::fold(code, inner.v);
            out.push_back(std::move(inner));
          }
        }
        break;
      }
      default:
        break;
    }
    return out;
  }

  // Members of a code at index k: handcrafted inhabitants first, then value
  // catalog entries, filtered by actual membership, capped for cost.
  std::vector<Member> sampled_members(uint32_t k, const TypePtr& code, size_t cap = 3) {
    std::vector<Member> pool = handcrafted_members(code);
    for (const TermPtr& v : values_) pool.push_back(Member{{}, v});
    std::vector<Member> out;
    for (Member& m : pool) {
      if (out.size() >= cap) break;
      if (eng_.mem_value(k, m.psi, m.v, code).holds()) out.push_back(std::move(m));
    }
    return out;
  }

  // Pool codes below a bound, for premises that quantify over subtypes.
  std::vector<TypePtr> bounded_witnesses(const TypePtr& bound, size_t cap = 3) {
    std::vector<TypePtr> out;
    out.push_back(bound);  // the bound itself is always admissible
    for (const TypePtr& c : codes_) {
      if (out.size() >= cap + 1) break;
      if (alpha_eq_type(c, bound)) continue;
      if (eng_.sem_subset(c, bound).holds()) out.push_back(c);
    }
    return out;
  }

  // --- judgement forms -------------------------------------------------

  // Closed value membership, swept over all indices.
  Verdict value_judgement(const HeapTypingApprox& psi, const TermPtr& v, const TypePtr& code) {
    return sweep([&](uint32_t k) { return eng_.mem_value(k, psi, v, code); });
  }

  // Closed term typing, swept over all indices.
  Verdict term_judgement(const HeapTypingApprox& psi, const TermPtr& a, const TypePtr& code) {
    return sweep([&](uint32_t k) { return eng_.mem_term(k, psi, a, code); });
  }

  // Hypothetical judgement with one assumption: substitutes sampled members
  // of sigma for x in the body and checks the result against tau. The base
  // state is merged with whatever state each member carries.
  Verdict hyp_judgement(const HeapTypingApprox& base, const TypePtr& sigma, const std::string& x,
                        const TermPtr& body, const TypePtr& tau) {
    return sweep([&](uint32_t k) {
      Verdict acc = Verdict::pass(0);
      for (const Member& m : sampled_members(k, sigma)) {
        HeapTypingApprox psi = base;
        for (const auto& [l, c] : m.psi) psi[l] = c;
        acc = merge(std::move(acc), eng_.mem_term(k, psi, subst_term(body, x, m.v), tau));
        if (acc.is_ce()) {
          acc.ce->trail.push_back("assumption " + x + " := " + print_term(m.v));
          return acc;
        }
      }
      return acc;
    });
  }

  // Inclusion claim between two value codes (or two reference codes): the
  // engine's sampled subset check, strengthened by explicitly transferring
  // pool members of the left code into the right one.
  Verdict subset_claim(const TypePtr& t1, const TypePtr& t2, const std::vector<Member>& extra = {}) {
    Verdict acc = eng_.sem_subset(t1, t2);
    if (acc.is_ce()) return acc;
    // Transferred members carry stored codes built around t1; offer it as the
    // self-witness for their membership in t2.
    Engine::WitnessHintGuard hint(eng_, t1);
    bool refs = t1->kind == TypeKind::RefV || t1->kind == TypeKind::RefGen;
    Verdict transfer = sweep([&](uint32_t k) {
      Verdict inner = Verdict::pass(0);
      if (refs) {
        for (const HeapTypingApprox& delta : eng_.budget().extension_catalog) {
          for (const auto& [l, c] : delta) {
            if (!eng_.mem_loc(k, delta, l, t1).holds()) continue;
            Verdict r = eng_.mem_loc(k, delta, l, t2);
            if (r.is_ce()) {
              r.ce->trail.push_back("location transferred from " + print_type(t1));
              return r;
            }
            inner = merge(std::move(inner), r);
          }
        }
        return inner;
      }
      std::vector<Member> pool = extra;
      for (Member& m : sampled_members(k, t1)) pool.push_back(std::move(m));
      for (const Member& m : pool) {
        if (!eng_.mem_value(k, m.psi, m.v, t1).holds()) continue;
        Verdict r = eng_.mem_value(k, m.psi, m.v, t2);
        if (r.is_ce()) {
          r.ce->trail.push_back("member transferred from " + print_type(t1));
          return r;
        }
        inner = merge(std::move(inner), r);
      }
      return inner;
    });
    return merge(std::move(acc), transfer);
  }

  // --- instance recording -------------------------------------------------

  class InstanceBuilder {
   public:
    InstanceBuilder(LemmaContext* cx, std::string binding) : cx_(cx), binding_(std::move(binding)) {}

    InstanceBuilder& premise(const std::string& label, const std::function<Verdict()>& f) {
      if (dead_) return *this;
      Verdict v = f();
      if (!v.holds()) {
        dead_ = true;
        failed_label_ = label;
        failed_ = std::move(v);
      }
      return *this;
    }

    void conclude(const std::string& label, const std::function<Verdict()>& f) {
      LemmaInstance inst;
      inst.binding = binding_;
      if (dead_) {
        inst.vacuous = true;
        std::string why = "premise '" + failed_label_ + "' not established";
        if (failed_.is_ce() && failed_.ce) why += ": " + failed_.ce->site + ", " + failed_.ce->detail;
        else if (!failed_.note.empty()) why += ": " + failed_.note;
        inst.verdict = Verdict::unknown(std::move(why), failed_.checked);
        cx_->record(std::move(inst));
        return;
      }
      inst.verdict = f();
      if (inst.verdict.is_ce() && inst.verdict.ce)
        inst.verdict.ce->trail.push_back("conclusion '" + label + "' under " + binding_);
      cx_->record(std::move(inst));
    }

   private:
    LemmaContext* cx_;
    std::string binding_;
    bool dead_ = false;
    std::string failed_label_;
    Verdict failed_;
  };

  InstanceBuilder inst(std::string binding) { return InstanceBuilder(this, std::move(binding)); }

  void record(LemmaInstance inst) {
    if (!inst.vacuous) {
      ++rep_.live;
      if (inst.verdict.is_ce()) {
        ++rep_.refuted;
        if (!rep_.overall.is_ce()) {
          Counterexample ce = inst.verdict.ce ? *inst.verdict.ce : Counterexample{};
          rep_.overall = Verdict::fail(std::move(ce));
        }
      } else if (inst.verdict.inconclusive()) {
        ++rep_.inconclusive;
      }
    }
    rep_.instances.push_back(std::move(inst));
  }

 private:
  Engine eng_;
  const Budget& budget_;
  std::vector<TypePtr> codes_;
  std::vector<TermPtr> values_;
  bool mutated_;
  LemmaReport& rep_;
};

// Shared shorthand for registry bodies.
inline TypePtr ty(const char* s) { return parse_type(s); }
inline TermPtr tm(const char* s) { return parse_term(s); }

struct LemmaDef {
  std::string family;
  std::string statement;  // one-line rendering of the implication
  std::string mutation;   // empty when no mutated variant is defined
  std::string stock_slug; // set when the mutation realizes a stock rule-mutation
  std::function<void(LemmaContext&)> run;
};

inline std::map<std::string, LemmaDef>& registry();

}  // namespace lemmadetail

// ---------------------------------------------------------------------------
// Public interface

inline std::vector<std::string> lemma_names() {
  std::vector<std::string> out;
  for (const auto& [name, def] : lemmadetail::registry()) out.push_back(name);
  return out;
}

// The set whose unmutated runs are pinned green by the acceptance suite.
inline const std::vector<std::string>& stock_lemma_names() {
  static const std::vector<std::string> names = {
      "SemLam", "SemApp", "SemSubProc",
      "SemSubCovRef", "SemSubConRef", "SemSubVarRef",
      "SemObj", "SemInv", "SemUpd", "SemClone", "SemSubObj", "SemSubObjVar",
      "SemTAbs", "SemTApp", "SemPack", "SemOpen", "SemSubUniv", "SemSubExist",
      "SemUnfold", "SemFold", "SemSubRec",
      "SemObj-Self", "SemInv-Self", "SemUpd-Self", "SemClone-Self",
      "SemSubObj-Self", "SemSubObjVar-Self",
      "SemSubRef-Gen", "SemObj-Gen", "SemInv-Gen", "SemUpd-Gen", "SemClone-Gen",
      "SemSubObj-Gen",
      "ClosureExtension", "NonExpansive", "MuFixedPoint",
      "ExtensionPreorder", "ExtensionForget", "ValueTermAgreement",
  };
  return names;
}

// Stock rule-mutation slugs mapped to the lemma whose mutated mode realizes
// them.
inline const std::map<std::string, std::string>& stock_mutation_lemmas() {
  static const std::map<std::string, std::string> m = {
      {"drop-inv-variance", "SemInv"},
      {"drop-upd-variance", "SemUpd"},
      {"cov-upd-body", "SemUpd-Gen"},
      {"width-reverse", "SemSubObj"},
      {"con-read-payload", "SemInv-Gen"},
  };
  return m;
}

inline bool lemma_has_mutation(const std::string& name) {
  auto& reg = lemmadetail::registry();
  auto it = reg.find(name);
  return it != reg.end() && !it->second.mutation.empty();
}

inline std::string lemma_family(const std::string& name) {
  auto& reg = lemmadetail::registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw std::invalid_argument("unknown lemma: " + name);
  return it->second.family;
}

inline std::string lemma_statement(const std::string& name) {
  auto& reg = lemmadetail::registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw std::invalid_argument("unknown lemma: " + name);
  return it->second.statement;
}

inline LemmaReport check_lemma(const std::string& name, const Budget& budget, bool mutate = false,
                               const LemmaInstantiation& inst = {}) {
  auto& reg = lemmadetail::registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw std::invalid_argument("unknown lemma: " + name);
  const lemmadetail::LemmaDef& def = it->second;
  if (mutate && def.mutation.empty())
    throw std::invalid_argument("lemma has no mutated variant: " + name);

  LemmaReport rep;
  rep.lemma = name;
  rep.family = def.family;
  rep.mutated = mutate;
  rep.seed = budget.seed;
  rep.k_max = budget.k_max;
  rep.overall = Verdict::pass(0);

  std::vector<TypePtr> codes = inst.codes.empty() ? budget.witness_catalog : inst.codes;
  std::vector<TermPtr> values = inst.values.empty() ? budget.value_catalog : inst.values;
  lemmadetail::LemmaContext cx(budget, std::move(codes), std::move(values), mutate, rep);
  def.run(cx);

  if (!rep.overall.is_ce()) {
    if (rep.live == 0)
      rep.overall = Verdict::unknown("all sampled instances were vacuous", rep.instances.size());
    else if (rep.live == rep.inconclusive)
      rep.overall = Verdict::unknown("all live instances were inconclusive", rep.live);
    else
      rep.overall = Verdict::pass(rep.live);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Registry

namespace lemmadetail {

inline std::map<std::string, LemmaDef>& registry() {
  static std::map<std::string, LemmaDef> reg = [] {
    std::map<std::string, LemmaDef> r;

    // Codes shared by many instance pools.
    const TypePtr T = ty("Top");
    const TypePtr B = ty("Bot");
    const TypePtr TT = ty("Top -> Top");
    const TypePtr objT = ty("[m : inv Top]");
    const TermPtr id = tm("\\(x : Top) x");
    const TermPtr kfst = tm("\\(x : Top) \\(y : Top) x");
    const TermPtr ksnd = tm("\\(x : Top) \\(y : Top) y");
    const TermPtr omega =
        tm("\\(u : Top) (\\(x : Top) x x) (\\(x : Top) x x)");  // diverges on application
    const TermPtr lit_objT = tm("obj [m : inv Top] { m = self(s : [m : inv Top]) s.m }");

    auto arrow = [](const TypePtr& a, const TypePtr& b) { return Type::arrow(a, b); };
    auto meth = [](const char* n, Variance v, TypePtr t) {
      return MethodType{n, v, std::move(t)};
    };
    auto self_body = [](const char* n, TypePtr ann, TermPtr b) {
      return MethodDef{n, "x", std::move(ann), std::move(b)};
    };

    // --- procedure types ---------------------------------------------------

    r["SemLam"] = LemmaDef{
        "procedure",
        "if every value of alpha sends the body into beta, the lambda inhabits alpha -> beta",
        "conclusion procedure type transposed to beta -> alpha",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr alpha, beta; TermPtr body; const char* show; };
          std::vector<Row> rows = {
              {T, T, Term::var("x"), "b = x"},
              {TT, TT, Term::var("x"), "b = x"},
              {T, TT, Term::lam("y", T, Term::var("x")), "b = \\y. x"},
              {objT, T, Term::var("x"), "b = x"},
          };
          for (const Row& row : rows) {
            TypePtr goal = cx.mutated() ? arrow(row.beta, row.alpha) : arrow(row.alpha, row.beta);
            cx.inst("alpha = " + print_type(row.alpha) + ", beta = " + print_type(row.beta) +
                    ", " + row.show)
                .premise("body maps alpha into beta",
                         [&] { return cx.hyp_judgement({}, row.alpha, "x", row.body, row.beta); })
                .conclude("lambda in procedure type", [&] {
                  return cx.value_judgement({}, Term::lam("x", T, row.body), goal);
                });
          }
        }};

    r["SemApp"] = LemmaDef{
        "procedure",
        "a function of beta -> alpha applied to an argument of beta lands in alpha",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TermPtr f, arg; TypePtr beta, alpha; };
          std::vector<Row> rows = {
              {id, ksnd, T, T},
              {kfst, id, TT, arrow(T, TT)},
              {Term::app(id, id), ksnd, T, T},
          };
          for (const Row& row : rows) {
            cx.inst("f = " + print_term(row.f) + ", b = " + print_term(row.arg) + ", beta = " +
                    print_type(row.beta) + ", alpha = " + print_type(row.alpha))
                .premise("function typed",
                         [&] { return cx.term_judgement({}, row.f, arrow(row.beta, row.alpha)); })
                .premise("argument typed", [&] { return cx.term_judgement({}, row.arg, row.beta); })
                .conclude("application typed", [&] {
                  return cx.term_judgement({}, Term::app(row.f, row.arg), row.alpha);
                });
          }
        }};

    r["SemSubProc"] = LemmaDef{
        "procedure",
        "procedure types are contravariant in the domain and covariant in the codomain",
        "domain premise taken covariantly",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr alpha, alphaP, beta, betaP; };
          std::vector<Row> rows = cx.mutated()
              ? std::vector<Row>{{B, T, T, T}}
              : std::vector<Row>{{T, TT, TT, T}, {TT, TT, T, T}, {objT, ty("[m : inv Top, n : inv Top]"), T, T}};
          for (const Row& row : rows) {
            auto dom_premise = [&] {
              return cx.mutated() ? cx.eng().sem_subset(row.alpha, row.alphaP)
                                  : cx.eng().sem_subset(row.alphaP, row.alpha);
            };
            cx.inst("alpha = " + print_type(row.alpha) + ", alpha' = " + print_type(row.alphaP) +
                    ", beta = " + print_type(row.beta) + ", beta' = " + print_type(row.betaP))
                .premise("domain premise", dom_premise)
                .premise("codomain premise",
                         [&] { return cx.eng().sem_subset(row.beta, row.betaP); })
                .conclude("procedure inclusion", [&] {
                  return cx.subset_claim(arrow(row.alpha, row.beta), arrow(row.alphaP, row.betaP));
                });
          }
        }};

    r["Subsumption"] = LemmaDef{
        "procedure",
        "a term of a type inhabits every supertype",
        "inclusion premise reversed",
        "",
        [=](LemmaContext& cx) {
          struct Row { TermPtr a; TypePtr alpha, beta; };
          std::vector<Row> rows = cx.mutated()
              ? std::vector<Row>{{lit_objT, T, TT}}
              : std::vector<Row>{{id, TT, T},
                                 {lit_objT, objT, ty("[m : cov Top]")},
                                 {tm("fold[Top] (\\(x : Top) x)"), ty("mu X. Top"), T}};
          for (const Row& row : rows) {
            auto incl = [&] {
              return cx.mutated() ? cx.eng().sem_subset(row.beta, row.alpha)
                                  : cx.eng().sem_subset(row.alpha, row.beta);
            };
            cx.inst("a = " + print_term(row.a) + ", alpha = " + print_type(row.alpha) +
                    ", beta = " + print_type(row.beta))
                .premise("term typed", [&] { return cx.term_judgement({}, row.a, row.alpha); })
                .premise("inclusion", incl)
                .conclude("term at supertype",
                          [&] { return cx.term_judgement({}, row.a, row.beta); });
          }
        }};

    // --- reference types ---------------------------------------------------

    r["SemSubCovRef"] = LemmaDef{
        "reference",
        "readable references are covariant",
        "conclusion inverted",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr alpha, beta; };
          std::vector<Row> rows = {{TT, T}, {T, T}, {objT, T}};
          for (const Row& row : rows) {
            TypePtr lhs = Type::ref_v(Variance::Cov, cx.mutated() ? row.beta : row.alpha);
            TypePtr rhs = Type::ref_v(Variance::Cov, cx.mutated() ? row.alpha : row.beta);
            cx.inst("alpha = " + print_type(row.alpha) + ", beta = " + print_type(row.beta))
                .premise("content inclusion",
                         [&] { return cx.eng().sem_subset(row.alpha, row.beta); })
                .conclude("reference inclusion", [&] { return cx.subset_claim(lhs, rhs); });
          }
        }};

    r["SemSubConRef"] = LemmaDef{
        "reference",
        "writable references are contravariant",
        "treated covariantly",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr alpha, beta; };
          if (cx.mutated()) {
            // Covariant reading of the rule: alpha below beta should NOT let
            // writable references follow.
            cx.inst("alpha = Top -> Top, beta = Top")
                .premise("content inclusion", [&] { return cx.eng().sem_subset(TT, T); })
                .conclude("reference inclusion", [&] {
                  return cx.subset_claim(Type::ref_v(Variance::Con, TT),
                                         Type::ref_v(Variance::Con, T));
                });
            return;
          }
          std::vector<Row> rows = {{T, TT}, {TT, TT}, {T, objT}};
          for (const Row& row : rows) {
            cx.inst("alpha = " + print_type(row.alpha) + ", beta = " + print_type(row.beta))
                .premise("content inclusion",
                         [&] { return cx.eng().sem_subset(row.beta, row.alpha); })
                .conclude("reference inclusion", [&] {
                  return cx.subset_claim(Type::ref_v(Variance::Con, row.alpha),
                                         Type::ref_v(Variance::Con, row.beta));
                });
          }
        }};

    r["SemSubVarRef"] = LemmaDef{
        "reference",
        "an invariant reference is below the same reference at any variance",
        "direction reversed for the readable case",
        "",
        [=](LemmaContext& cx) {
          if (cx.mutated()) {
            cx.inst("alpha = Top, readable below invariant")
                .conclude("reference inclusion", [&] {
                  return cx.subset_claim(Type::ref_v(Variance::Cov, T),
                                         Type::ref_v(Variance::Inv, T));
                });
            return;
          }
          for (const TypePtr& alpha : {T, TT, objT}) {
            for (Variance var : {Variance::Inv, Variance::Cov, Variance::Con}) {
              cx.inst("alpha = " + print_type(alpha) + ", target variance " + to_string(var))
                  .conclude("reference inclusion", [&] {
                    return cx.subset_claim(Type::ref_v(Variance::Inv, alpha),
                                           Type::ref_v(var, alpha));
                  });
            }
          }
        }};

    r["SemSubRef-Gen"] = LemmaDef{
        "generalized",
        "two-bound references are contravariant in the write bound and covariant in the read bound",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr aw, ar, bw, br; };
          std::vector<Row> rows = {{TT, TT, B, T}, {TT, TT, TT, T}, {T, T, T, T}};
          for (const Row& row : rows) {
            cx.inst("write " + print_type(row.aw) + " => " + print_type(row.bw) + ", read " +
                    print_type(row.ar) + " => " + print_type(row.br))
                .premise("write bound premise",
                         [&] { return cx.eng().sem_subset(row.bw, row.aw); })
                .premise("read bound premise", [&] { return cx.eng().sem_subset(row.ar, row.br); })
                .conclude("reference inclusion", [&] {
                  return cx.subset_claim(Type::ref_gen(row.aw, row.ar),
                                         Type::ref_gen(row.bw, row.br));
                });
          }
        }};

    // --- object types --------------------------------------------------

    r["SemObj"] = LemmaDef{
        "object",
        "an object literal whose bodies fit the declared method types inhabits its object type",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr ann; std::vector<MethodDef> defs; };
          TypePtr a1 = Type::obj({meth("m", Variance::Inv, T)});
          TypePtr a2 = Type::obj({meth("m", Variance::Inv, TT), meth("n", Variance::Cov, T)});
          TypePtr a3 = Type::obj({meth("p", Variance::Con, TT)});
          std::vector<Row> rows = {
              {a1, {self_body("m", a1, Term::var("x"))}},
              {a2, {self_body("m", a2, Term::lam("y", T, Term::var("y"))),
                    self_body("n", a2, Term::var("x"))}},
              {a3, {self_body("p", a3, Term::lam("y", T, Term::var("y")))}},
          };
          for (const Row& row : rows) {
            auto ib = cx.inst("alpha = " + print_type(row.ann));
            for (size_t i = 0; i < row.defs.size(); ++i) {
              const MethodDef& d = row.defs[i];
              const TypePtr& mt = row.ann->methods[i].type;
              ib.premise("body of " + d.name + " typed",
                         [&] { return cx.hyp_judgement({}, row.ann, d.self_var, d.body, mt); });
            }
            ib.conclude("literal in object type", [&] {
              return cx.term_judgement({}, Term::obj_new(row.ann, row.defs), row.ann);
            });
          }
        }};

    r["SemInv"] = LemmaDef{
        "object",
        "invoking a readable method of an object yields the declared method type",
        "variance premise dropped, write-only methods admitted",
        "drop-inv-variance",
        [=](LemmaContext& cx) {
          struct Row { TypePtr alpha; TypePtr stored; TypePtr result; const char* note; };
          TypePtr ainv = Type::obj({meth("m", Variance::Inv, TT)});
          TypePtr acov = Type::obj({meth("m", Variance::Cov, T)});
          TypePtr acon = Type::obj({meth("m", Variance::Con, TT)});
          std::vector<Row> rows = {
              {ainv, arrow(ainv, TT), TT, "inv"},
              {acov, arrow(acov, TT), T, "cov, store below the bound"},
          };
          if (cx.mutated()) rows.push_back({acon, arrow(acon, T), TT, "con admitted by mutation"});
          for (const Row& row : rows) {
            HeapTypingApprox psi{{0, row.stored}};
            TermPtr a = Term::runtime_obj({{"m", 0}});
            cx.inst("alpha = " + print_type(row.alpha) + " (" + row.note + "), stored " +
                    print_type(row.stored))
                .premise("receiver typed", [&] { return cx.value_judgement(psi, a, row.alpha); })
                .conclude("invocation typed", [&] {
                  return cx.term_judgement(psi, Term::invoke(a, "m"), row.result);
                });
          }
        }};

    r["SemUpd"] = LemmaDef{
        "object",
        "updating a writable method with a body of the declared type preserves the object type",
        "variance premise dropped, read-only methods admitted",
        "drop-upd-variance",
        [=](LemmaContext& cx) {
          TypePtr ainv = Type::obj({meth("m", Variance::Inv, T)});
          TypePtr acon = Type::obj({meth("m", Variance::Con, TT)});
          TypePtr acov = Type::obj({meth("m", Variance::Cov, T)});
          struct Row { TypePtr alpha, stored, mt; TermPtr body; const char* note; };
          std::vector<Row> rows = {
              {ainv, arrow(ainv, T), T, Term::var("x"), "inv"},
              {acon, arrow(acon, T), TT, Term::lam("y", T, Term::var("y")), "con"},
          };
          if (cx.mutated())
            rows = {{acov, arrow(acov, TT), T,
                     tm("obj [n : inv Top] { n = self(s : [n : inv Top]) s.n }"),
                     "cov admitted by mutation"}};
          for (const Row& row : rows) {
            HeapTypingApprox psi{{0, row.stored}};
            TermPtr a = Term::runtime_obj({{"m", 0}});
            cx.inst("alpha = " + print_type(row.alpha) + " (" + row.note + "), stored " +
                    print_type(row.stored))
                .premise("receiver typed", [&] { return cx.value_judgement(psi, a, row.alpha); })
                .premise("new body typed",
                         [&] { return cx.hyp_judgement(psi, row.alpha, "x", row.body, row.mt); })
                .conclude("update typed", [&] {
                  return cx.term_judgement(
                      psi, Term::update(a, "m", MethodDef{"", "x", row.alpha, row.body}),
                      row.alpha);
                });
          }
        }};

    r["SemClone"] = LemmaDef{
        "object",
        "cloning preserves the object type",
        "",
        "",
        [=](LemmaContext& cx) {
          HeapTypingApprox psi{{0, arrow(objT, T)}};
          TermPtr a = Term::runtime_obj({{"m", 0}});
          cx.inst("a = {m = 0}, alpha = " + print_type(objT))
              .premise("receiver typed", [&] { return cx.value_judgement(psi, a, objT); })
              .conclude("clone typed",
                        [&] { return cx.term_judgement(psi, Term::clone(a), objT); });
          cx.inst("a = object literal, alpha = " + print_type(objT))
              .premise("receiver typed", [&] { return cx.term_judgement({}, lit_objT, objT); })
              .conclude("clone typed",
                        [&] { return cx.term_judgement({}, Term::clone(lit_objT), objT); });
        }};

    r["SemSubObj"] = LemmaDef{
        "object",
        "object types subtype in width, and in depth along the variance annotations",
        "width premise reversed, target adds methods",
        "width-reverse",
        [=](LemmaContext& cx) {
          if (cx.mutated()) {
            cx.inst("[m : inv Top] below [m : inv Top, n : inv Top]")
                .conclude("object inclusion", [&] {
                  return cx.subset_claim(objT, ty("[m : inv Top, n : inv Top]"));
                });
            return;
          }
          cx.inst("width: extra cov method dropped")
              .conclude("object inclusion", [&] {
                return cx.subset_claim(
                    Type::obj({meth("m", Variance::Inv, T), meth("n", Variance::Cov, TT)}), objT);
              });
          cx.inst("depth cov: [m : cov Top -> Top] below [m : cov Top]")
              .premise("method payload inclusion", [&] { return cx.eng().sem_subset(TT, T); })
              .conclude("object inclusion", [&] {
                return cx.subset_claim(Type::obj({meth("m", Variance::Cov, TT)}),
                                       Type::obj({meth("m", Variance::Cov, T)}));
              });
          cx.inst("depth con: [m : con Top] below [m : con Top -> Top]")
              .premise("method payload inclusion", [&] { return cx.eng().sem_subset(TT, T); })
              .conclude("object inclusion", [&] {
                return cx.subset_claim(Type::obj({meth("m", Variance::Con, T)}),
                                       Type::obj({meth("m", Variance::Con, TT)}));
              });
        }};

    r["SemSubObjVar"] = LemmaDef{
        "object",
        "an invariant method may be retyped readable or writable",
        "weakening reversed, readable method claimed invariant",
        "",
        [=](LemmaContext& cx) {
          if (cx.mutated()) {
            // A location stored strictly below the bound inhabits the cov
            // type but cannot be invariant at it.
            std::vector<Member> extra = {
                {{ {0, arrow(T, ty("Bot -> Top"))} }, Term::runtime_obj({{"m", 0}})}};
            cx.inst("[m : cov Top] claimed below [m : inv Top]")
                .conclude("object inclusion", [&] {
                  return cx.subset_claim(ty("[m : cov Top]"), objT, extra);
                });
            return;
          }
          struct Row { TypePtr from, to; const char* show; };
          std::vector<Row> rows = {
              {objT, ty("[m : cov Top]"), "inv to cov"},
              {objT, ty("[m : con Top]"), "inv to con"},
              {Type::obj({meth("m", Variance::Inv, T), meth("n", Variance::Inv, TT)}),
               Type::obj({meth("m", Variance::Cov, T), meth("n", Variance::Con, TT)}),
               "mixed weakening"},
          };
          for (const Row& row : rows) {
            cx.inst(row.show)
                .conclude("object inclusion", [&] { return cx.subset_claim(row.from, row.to); });
          }
        }};

    // --- bounded quantified types -------------------------------------

    TypeFun fid{"X", Type::var("X")};
    TypeFun fconstT{"X", T};
    TypeFun fconstTT{"X", TT};
    TypeFun farr{"X", arrow(Type::var("X"), Type::var("X"))};
    TypeFun ftoTop{"X", arrow(Type::var("X"), T)};
    TypeFun fobjcov{"X", Type::obj({meth("m", Variance::Cov, Type::var("X"))})};

    r["SemTAbs"] = LemmaDef{
        "quantified",
        "a type abstraction whose body fits every instantiation below the bound inhabits the universal",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr bound; TypeFun f; TermPtr body; };
          std::vector<Row> rows = {
              {T, farr, Term::lam("y", T, Term::var("y"))},
              {T, fconstTT, id},
              {TT, ftoTop, id},
          };
          for (const Row& row : rows) {
            cx.inst("bound = " + print_type(row.bound) + ", F = " + row.f.show() + ", a = " +
                    print_term(row.body))
                .premise("body fits sampled instantiations",
                         [&] {
                           Verdict acc = Verdict::pass(0);
                           for (const TypePtr& tau : cx.bounded_witnesses(row.bound))
                             acc = LemmaContext::merge(
                                 std::move(acc), cx.term_judgement({}, row.body, row.f(tau)));
                           return acc;
                         })
                .conclude("abstraction in universal", [&] {
                  return cx.value_judgement({}, Term::tlam("X", row.bound, row.body),
                                            Type::all("X", row.bound, row.f.body));
                });
          }
        }};

    r["SemTApp"] = LemmaDef{
        "quantified",
        "instantiating a universal at a type below the bound yields the instantiated body",
        "bound premise dropped",
        "",
        [=](LemmaContext& cx) {
          if (cx.mutated()) {
            TermPtr a = Term::tlam("X", TT,
                                   Term::lam("f", Type::var("X"),
                                             Term::lam("u", T, Term::app(Term::var("f"), Term::var("u")))));
            TypeFun f{"X", arrow(Type::var("X"), TT)};
            cx.inst("a = Fun(X <: Top -> Top) \\f. \\u. f u, tau = [m : inv Top] outside the bound")
                .premise("abstraction typed",
                         [&] { return cx.value_judgement({}, a, Type::all("X", TT, f.body)); })
                .conclude("instantiation typed", [&] {
                  return cx.term_judgement({}, Term::tapp(a, objT), f(objT));
                });
            return;
          }
          TermPtr a = Term::tlam("X", T, Term::lam("y", T, Term::var("y")));
          for (const TypePtr& tau : {TT, objT}) {
            cx.inst("a = Fun(X <: Top) \\y. y, tau = " + print_type(tau))
                .premise("abstraction typed",
                         [&] { return cx.value_judgement({}, a, Type::all("X", T, farr.body)); })
                .premise("instantiation below bound",
                         [&] { return cx.eng().sem_subset(tau, T); })
                .conclude("instantiation typed", [&] {
                  return cx.term_judgement({}, Term::tapp(a, tau), farr(tau));
                });
          }
        }};

    r["SemPack"] = LemmaDef{
        "quantified",
        "packing a payload at a witness below the bound inhabits the existential",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr bound, witness; TypeFun f; TermPtr payload; };
          std::vector<Row> rows = {
              {T, T, fconstT, id},
              {T, TT, farr, id},
          };
          for (const Row& row : rows) {
            TermPtr p = Term::pack("X", row.bound, row.witness, row.payload, row.f.body);
            cx.inst("bound = " + print_type(row.bound) + ", witness = " + print_type(row.witness) +
                    ", F = " + row.f.show())
                .premise("witness below bound",
                         [&] { return cx.eng().sem_subset(row.witness, row.bound); })
                .premise("payload typed",
                         [&] { return cx.term_judgement({}, row.payload, row.f(row.witness)); })
                .conclude("pack in existential", [&] {
                  return cx.value_judgement({}, p, Type::some("X", row.bound, row.f.body));
                });
          }
        }};

    r["SemOpen"] = LemmaDef{
        "quantified",
        "opening an existential types the body uniformly in the hidden witness",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr bound; TypeFun f; TermPtr scrut; TypePtr beta; };
          std::vector<Row> rows = {
              {T, fconstT, Term::pack("X", T, T, id, fconstT.body), T},
              {T, farr, Term::pack("X", T, TT, id, farr.body), T},
          };
          for (const Row& row : rows) {
            cx.inst("bound = " + print_type(row.bound) + ", F = " + row.f.show() +
                    ", b = y, beta = " + print_type(row.beta))
                .premise("scrutinee typed",
                         [&] {
                           return cx.value_judgement({}, row.scrut,
                                                     Type::some("X", row.bound, row.f.body));
                         })
                .premise("body typed at sampled witnesses",
                         [&] {
                           Verdict acc = Verdict::pass(0);
                           for (const TypePtr& tau : cx.bounded_witnesses(row.bound))
                             acc = LemmaContext::merge(
                                 std::move(acc),
                                 cx.hyp_judgement({}, row.f(tau), "y", Term::var("y"), row.beta));
                           return acc;
                         })
                .conclude("open typed", [&] {
                  return cx.term_judgement({}, Term::open(row.scrut, "X", row.bound, "y",
                                                          row.f.body, Term::var("y"), row.beta),
                                           row.beta);
                });
          }
        }};

    r["SemSubUniv"] = LemmaDef{
        "quantified",
        "universals are contravariant in the bound and covariant in the body",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr alpha, beta; TypeFun f, g; };
          std::vector<Row> rows = {
              {T, TT, farr, ftoTop},
              {T, T, farr, farr},
          };
          for (const Row& row : rows) {
            cx.inst("alpha = " + print_type(row.alpha) + ", beta = " + print_type(row.beta) +
                    ", F = " + row.f.show() + ", G = " + row.g.show())
                .premise("bound premise", [&] { return cx.eng().sem_subset(row.beta, row.alpha); })
                .premise("body premise at sampled instantiations",
                         [&] {
                           Verdict acc = Verdict::pass(0);
                           for (const TypePtr& tau : cx.bounded_witnesses(row.beta))
                             acc = LemmaContext::merge(std::move(acc),
                                                       cx.eng().sem_subset(row.f(tau), row.g(tau)));
                           return acc;
                         })
                .conclude("universal inclusion", [&] {
                  return cx.subset_claim(Type::all("X", row.alpha, row.f.body),
                                         Type::all("X", row.beta, row.g.body));
                });
          }
        }};

    r["SemSubExist"] = LemmaDef{
        "quantified",
        "existentials are covariant in the bound and in the body",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr alpha, beta; TypeFun f, g; };
          std::vector<Row> rows = {
              {TT, T, fid, fconstT},
              {T, T, farr, ftoTop},
          };
          for (const Row& row : rows) {
            cx.inst("alpha = " + print_type(row.alpha) + ", beta = " + print_type(row.beta) +
                    ", F = " + row.f.show() + ", G = " + row.g.show())
                .premise("bound premise", [&] { return cx.eng().sem_subset(row.alpha, row.beta); })
                .premise("body premise at sampled instantiations",
                         [&] {
                           Verdict acc = Verdict::pass(0);
                           for (const TypePtr& tau : cx.bounded_witnesses(row.alpha))
                             acc = LemmaContext::merge(std::move(acc),
                                                       cx.eng().sem_subset(row.f(tau), row.g(tau)));
                           return acc;
                         })
                .conclude("existential inclusion", [&] {
                  return cx.subset_claim(Type::some("X", row.alpha, row.f.body),
                                         Type::some("X", row.beta, row.g.body));
                });
          }
        }};

    // --- recursive types ----------------------------------------------

    TypeFun fmuObj{"X", Type::obj({meth("m", Variance::Cov, Type::var("X"))})};
    TypeFun fmuArr{"X", arrow(T, Type::var("X"))};

    r["SemUnfold"] = LemmaDef{
        "recursive",
        "unfolding a term of the recursive type yields its unrolling",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypeFun f; Member m; const char* show; };
          TypePtr muT = Type::mu("X", T);
          TypePtr muA = Type::mu("X", fmuArr.body);
          std::vector<Row> rows = {
              {fconstT, {{}, Term::fold(muT, id)}, "payload id"},
              {fmuArr, {{}, Term::fold(muA, omega)}, "payload diverges on application"},
          };
          for (const Row& row : rows) {
            TypePtr mu = Type::mu("X", row.f.body);
            TypePtr unrolled = subst_type(row.f.body, "X", mu);
            cx.inst("F = " + row.f.show() + ", " + row.show)
                .premise("folded value typed",
                         [&] { return cx.value_judgement(row.m.psi, row.m.v, mu); })
                .conclude("unfold typed", [&] {
                  return cx.term_judgement(row.m.psi, Term::unfold(mu, row.m.v), unrolled);
                });
          }
        }};

    r["SemFold"] = LemmaDef{
        "recursive",
        "folding a term of the unrolling yields the recursive type",
        "",
        "",
        [=](LemmaContext& cx) {
          TypePtr muT = Type::mu("X", T);
          TypePtr muA = Type::mu("X", fmuArr.body);
          struct Row { TypeFun f; TypePtr mu; TermPtr a; const char* show; };
          std::vector<Row> rows = {
              {fconstT, muT, id, "value payload"},
              {fconstT, muT, Term::app(id, id), "payload computes"},
              {fmuArr, muA, omega, "payload diverges on application"},
          };
          for (const Row& row : rows) {
            TypePtr unrolled = subst_type(row.f.body, "X", row.mu);
            cx.inst("F = " + row.f.show() + ", " + row.show)
                .premise("payload typed at unrolling",
                         [&] { return cx.term_judgement({}, row.a, unrolled); })
                .conclude("fold typed", [&] {
                  return cx.term_judgement({}, Term::fold(row.mu, row.a), row.mu);
                });
          }
        }};

    r["SemSubRec"] = LemmaDef{
        "recursive",
        "recursive types are below one another when the bodies preserve inclusion pointwise",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypeFun f, g; };
          std::vector<Row> rows = {
              {fmuObj, fconstT},
              {fconstTT, fconstT},
              {fmuObj, fmuObj},
          };
          std::vector<std::pair<TypePtr, TypePtr>> pairs = {{T, T}, {TT, T}, {B, T}, {TT, TT}};
          for (const Row& row : rows) {
            cx.inst("F = " + row.f.show() + ", G = " + row.g.show())
                .premise("pointwise body premise",
                         [&] {
                           Verdict acc = Verdict::pass(0);
                           for (const auto& [s, t] : pairs) {
                             if (!cx.eng().sem_subset(s, t).holds()) continue;
                             acc = LemmaContext::merge(std::move(acc),
                                                       cx.eng().sem_subset(row.f(s), row.g(t)));
                           }
                           return acc;
                         })
                .conclude("recursive inclusion", [&] {
                  return cx.subset_claim(Type::mu("X", row.f.body), Type::mu("X", row.g.body));
                });
          }
        }};

    r["MuFixedPoint"] = LemmaDef{
        "recursive",
        "a value inhabits the unrolling exactly when its fold inhabits the recursive type",
        "",
        "",
        [=](LemmaContext& cx) {
          TypePtr muObj = Type::mu("X", fmuObj.body);
          TypePtr unrollObj = subst_type(fmuObj.body, "X", muObj);
          Member obj{{{0, arrow(unrollObj, muObj)}}, Term::runtime_obj({{"m", 0}})};
          struct Row { TypeFun f; TypePtr mu, unrolled; Member m; const char* show; };
          std::vector<Row> rows = {
              {fconstT, Type::mu("X", T), T, {{}, id}, "payload id"},
              {fmuObj, muObj, unrollObj, obj, "payload is a record"},
          };
          for (const Row& row : rows) {
            TermPtr folded = Term::fold(row.mu, row.m.v);
            cx.inst(std::string("forward, F = ") + row.f.show() + ", " + row.show)
                .premise("payload in unrolling",
                         [&] { return cx.value_judgement(row.m.psi, row.m.v, row.unrolled); })
                .conclude("fold in recursive type",
                          [&] { return cx.value_judgement(row.m.psi, folded, row.mu); });
            cx.inst(std::string("backward, F = ") + row.f.show() + ", " + row.show)
                .premise("fold in recursive type",
                         [&] { return cx.value_judgement(row.m.psi, folded, row.mu); })
                .conclude("payload in unrolling one index down", [&] {
                  return cx.sweep([&](uint32_t k) {
                    if (k < 2) return Verdict::pass(0, "index too small to unroll");
                    return cx.eng().mem_value(k - 1, approx_heap_typing(row.m.psi, k - 1), row.m.v,
                                              row.unrolled);
                  });
                });
          }
        }};

    // --- self types ----------------------------------------------------

    TypePtr aself = Type::self_obj("X", {meth("m", Variance::Inv, Type::var("X"))});
    TypePtr aselfCov = Type::self_obj("X", {meth("m", Variance::Cov, T)});
    HeapTypingApprox psiSelf{{0, arrow(aself, aself)}};
    TermPtr vSelf = Term::runtime_obj({{"m", 0}});

    r["SemObj-Self"] = LemmaDef{
        "self",
        "an object literal inhabits its self type when each body lands in that method's instantiation",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr ann; std::vector<MethodDef> defs; };
          TypePtr two = Type::self_obj(
              "X", {meth("m", Variance::Inv, Type::var("X")), meth("n", Variance::Cov, T)});
          std::vector<Row> rows = {
              {aself, {self_body("m", aself, Term::var("x"))}},
              {two, {self_body("m", two, Term::var("x")), self_body("n", two, Term::var("x"))}},
          };
          for (const Row& row : rows) {
            auto ib = cx.inst("alpha = " + print_type(row.ann));
            for (size_t i = 0; i < row.defs.size(); ++i) {
              const MethodDef& d = row.defs[i];
              TypePtr ft = subst_type(row.ann->methods[i].type, row.ann->name, row.ann);
              ib.premise("body of " + d.name + " typed",
                         [&] { return cx.hyp_judgement({}, row.ann, d.self_var, d.body, ft); });
            }
            ib.conclude("literal in self type", [&] {
              return cx.term_judgement({}, Term::obj_new(row.ann, row.defs), row.ann);
            });
          }
        }};

    r["SemInv-Self"] = LemmaDef{
        "self",
        "invoking a readable method of a self-typed object yields that method's instantiation",
        "",
        "",
        [=](LemmaContext& cx) {
          cx.inst("alpha = " + print_type(aself) + ", invoke m")
              .premise("receiver typed", [&] { return cx.value_judgement(psiSelf, vSelf, aself); })
              .conclude("invocation at the self instantiation", [&] {
                return cx.term_judgement(psiSelf, Term::invoke(vSelf, "m"), aself);
              });
          HeapTypingApprox psiCov{{0, arrow(aselfCov, T)}};
          cx.inst("alpha = " + print_type(aselfCov) + ", invoke m")
              .premise("receiver typed",
                       [&] { return cx.value_judgement(psiCov, vSelf, aselfCov); })
              .conclude("invocation at the self instantiation", [&] {
                return cx.term_judgement(psiCov, Term::invoke(vSelf, "m"), T);
              });
        }};

    r["SemUpd-Self"] = LemmaDef{
        "self",
        "updating a writable method with a body uniform in subtypes of the self type preserves it",
        "",
        "",
        [=](LemmaContext& cx) {
          cx.inst("alpha = " + print_type(aself) + ", b = x")
              .premise("receiver typed", [&] { return cx.value_judgement(psiSelf, vSelf, aself); })
              .premise("body typed at sampled subtypes",
                       [&] {
                         Verdict acc = Verdict::pass(0);
                         for (const TypePtr& xi : cx.bounded_witnesses(aself)) {
                           TypePtr fxi = subst_type(aself->methods[0].type, aself->name, xi);
                           acc = LemmaContext::merge(
                               std::move(acc),
                               cx.hyp_judgement(psiSelf, xi, "x", Term::var("x"), fxi));
                         }
                         return acc;
                       })
              .conclude("update typed", [&] {
                return cx.term_judgement(
                    psiSelf, Term::update(vSelf, "m", MethodDef{"", "x", aself, Term::var("x")}),
                    aself);
              });
        }};

    r["SemClone-Self"] = LemmaDef{
        "self",
        "cloning preserves the self type",
        "",
        "",
        [=](LemmaContext& cx) {
          cx.inst("alpha = " + print_type(aself))
              .premise("receiver typed", [&] { return cx.value_judgement(psiSelf, vSelf, aself); })
              .conclude("clone typed",
                        [&] { return cx.term_judgement(psiSelf, Term::clone(vSelf), aself); });
        }};

    r["SemSubObj-Self"] = LemmaDef{
        "self",
        "self types subtype in width, and in depth pointwise below the source type",
        "",
        "",
        [=](LemmaContext& cx) {
          TypePtr wide = Type::self_obj(
              "X", {meth("m", Variance::Inv, Type::var("X")), meth("n", Variance::Cov, T)});
          cx.inst("width: " + print_type(wide) + " below " + print_type(aself))
              .premise("pointwise premise at sampled subtypes",
                       [&] {
                         Verdict acc = Verdict::pass(0);
                         for (const TypePtr& xi : cx.bounded_witnesses(wide))
                           acc = LemmaContext::merge(std::move(acc), cx.eng().sem_subset(xi, xi));
                         return acc;
                       })
              .conclude("self type inclusion", [&] { return cx.subset_claim(wide, aself); });
          TypePtr covSelf = Type::self_obj("X", {meth("m", Variance::Cov, Type::var("X"))});
          cx.inst("depth: " + print_type(covSelf) + " below " + print_type(aselfCov))
              .premise("pointwise premise at sampled subtypes",
                       [&]
                       {
                         Verdict acc = Verdict::pass(0);
                         for (const TypePtr& xi : cx.bounded_witnesses(covSelf))
                           acc = LemmaContext::merge(std::move(acc), cx.eng().sem_subset(xi, T));
                         return acc;
                       })
              .conclude("self type inclusion", [&] { return cx.subset_claim(covSelf, aselfCov); });
        }};

    r["SemSubObjVar-Self"] = LemmaDef{
        "self",
        "an invariant method of a self type may be retyped readable or writable",
        "",
        "",
        [=](LemmaContext& cx) {
          for (Variance var : {Variance::Cov, Variance::Con}) {
            TypePtr to = Type::self_obj("X", {meth("m", var, Type::var("X"))});
            cx.inst(std::string("inv to ") + to_string(var))
                .conclude("self type inclusion", [&] { return cx.subset_claim(aself, to); });
          }
        }};

    // --- self types with structural assumptions -------------------------

    TypePtr recSelf = Type::rec_obj("X", {meth("m", Variance::Inv, Type::var("X"))});
    HeapTypingApprox psiRec{{0, arrow(recSelf, recSelf)}};

    r["SemObj-Str"] = LemmaDef{
        "structural",
        "an object literal inhabits its self type when each body is uniform in exposed self types",
        "",
        "",
        [=](LemmaContext& cx) {
          std::vector<MethodDef> defs = {self_body("m", aself, Term::var("x"))};
          cx.inst("alpha = " + print_type(aself) + ", b = x, xi drawn from exposed types")
              .premise("body typed at exposed self types",
                       [&] {
                         Verdict acc = cx.hyp_judgement({}, recSelf, "x", Term::var("x"), recSelf);
                         return LemmaContext::merge(
                             std::move(acc),
                             cx.hyp_judgement({}, aself, "x", Term::var("x"), aself));
                       })
              .conclude("literal in self type", [&] {
                return cx.term_judgement({}, Term::obj_new(aself, defs), aself);
              });
        }};

    r["SemInv-Str"] = LemmaDef{
        "structural",
        "invocation through an exposed self type yields that type's instantiation",
        "",
        "",
        [=](LemmaContext& cx) {
          cx.inst("alpha' = " + print_type(recSelf) + " exposed for " + print_type(aself))
              .premise("exposure", [&] { return cx.eng().tsubself_check(recSelf, aself); })
              .premise("receiver typed", [&] { return cx.value_judgement(psiRec, vSelf, recSelf); })
              .conclude("invocation at the exposed type", [&] {
                return cx.term_judgement(psiRec, Term::invoke(vSelf, "m"), recSelf);
              });
        }};

    r["SemUpd-Str"] = LemmaDef{
        "structural",
        "update through an exposed self type preserves the exposed type",
        "",
        "",
        [=](LemmaContext& cx) {
          cx.inst("alpha' = " + print_type(recSelf) + ", b = x")
              .premise("exposure", [&] { return cx.eng().tsubself_check(recSelf, aself); })
              .premise("receiver typed", [&] { return cx.value_judgement(psiRec, vSelf, recSelf); })
              .premise("body typed at the exposed type",
                       [&] { return cx.hyp_judgement(psiRec, recSelf, "x", Term::var("x"), recSelf); })
              .conclude("update typed", [&] {
                return cx.term_judgement(
                    psiRec, Term::update(vSelf, "m", MethodDef{"", "x", aself, Term::var("x")}),
                    recSelf);
              });
        }};

    r["SemClone-Str"] = LemmaDef{
        "structural",
        "cloning through an exposed self type preserves the exposed type",
        "",
        "",
        [=](LemmaContext& cx) {
          cx.inst("alpha' = " + print_type(recSelf))
              .premise("exposure", [&] { return cx.eng().tsubself_check(recSelf, aself); })
              .premise("receiver typed", [&] { return cx.value_judgement(psiRec, vSelf, recSelf); })
              .conclude("clone typed",
                        [&] { return cx.term_judgement(psiRec, Term::clone(vSelf), recSelf); });
        }};

    r["SemLet-Str"] = LemmaDef{
        "structural",
        "binding an object lets its body assume an exposed self type for the bound variable",
        "",
        "",
        [=](LemmaContext& cx) {
          // b = let z = clone x in x.m := self(y) z, the snapshot-and-restore
          // body. Typed uniformly in the exposed type, it preserves the full
          // self type of the bound object.
          TermPtr body = Term::app(
              Term::lam("z", T,
                        Term::update(Term::var("x"), "m", MethodDef{"", "y", aself, Term::var("z")})),
              Term::clone(Term::var("x")));
          cx.inst("alpha = " + print_type(aself) + ", b = let z = clone x in x.m := self(y) z")
              .premise("bound object typed",
                       [&] { return cx.value_judgement(psiSelf, vSelf, aself); })
              .premise("body typed at the exposed type",
                       [&] { return cx.hyp_judgement(psiSelf, recSelf, "x", body, aself); })
              .conclude("binding typed", [&] {
                return cx.term_judgement(psiSelf, Term::app(Term::lam("x", T, body), vSelf), aself);
              });
        }};

    r["RecObjSelf"] = LemmaDef{
        "structural",
        "the recursive record reading of an object type is an exposed self type for it",
        "",
        "",
        [=](LemmaContext& cx) {
          cx.inst(print_type(recSelf) + " exposed for " + print_type(aself))
              .conclude("exposure holds",
                        [&] { return cx.eng().tsubself_check(recSelf, aself); });
          TypePtr recCov = Type::rec_obj("X", {meth("m", Variance::Cov, T)});
          cx.inst(print_type(recCov) + " exposed for " + print_type(aselfCov))
              .conclude("exposure holds",
                        [&] { return cx.eng().tsubself_check(recCov, aselfCov); });
        }};

    // --- generalized object types ---------------------------------------

    TypePtr gInv = Type::obj_split({SplitMethodType{"m", TT, T}});  // write TT, read Top
    HeapTypingApprox psiGen{{0, arrow(gInv, TT)}};
    TermPtr vGen = Term::runtime_obj({{"m", 0}});

    r["SemObj-Gen"] = LemmaDef{
        "generalized",
        "an object literal whose bodies fit the shared bound inhabits the two-bound object type",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr ann; TermPtr body; TypePtr mt; };
          TypePtr e1 = Type::obj_split({SplitMethodType{"m", T, T}});
          TypePtr e2 = Type::obj_split({SplitMethodType{"m", TT, TT}});
          std::vector<Row> rows = {
              {e1, Term::var("x"), T},
              {e2, Term::lam("y", T, Term::var("y")), TT},
          };
          for (const Row& row : rows) {
            std::vector<MethodDef> defs = {MethodDef{"m", "x", row.ann, row.body}};
            cx.inst("alpha' = " + print_type(row.ann))
                .premise("body typed",
                         [&] { return cx.hyp_judgement({}, row.ann, "x", row.body, row.mt); })
                .conclude("literal in two-bound type", [&] {
                  return cx.term_judgement({}, Term::obj_new(row.ann, defs), row.ann);
                });
          }
        }};

    r["SemInv-Gen"] = LemmaDef{
        "generalized",
        "invoking a method of a two-bound object yields the read bound",
        "invocation returns the write bound",
        "con-read-payload",
        [=](LemmaContext& cx) {
          if (cx.mutated()) {
            HeapTypingApprox psi{{0, arrow(gInv, T)}};
            cx.inst("alpha = " + print_type(gInv) + ", result claimed at the write bound")
                .premise("receiver typed", [&] { return cx.value_judgement(psi, vGen, gInv); })
                .conclude("invocation typed", [&] {
                  return cx.term_judgement(psi, Term::invoke(vGen, "m"), TT);
                });
            return;
          }
          cx.inst("alpha = " + print_type(gInv) + ", stored at the write bound")
              .premise("receiver typed", [&] { return cx.value_judgement(psiGen, vGen, gInv); })
              .conclude("invocation at the read bound", [&] {
                return cx.term_judgement(psiGen, Term::invoke(vGen, "m"), T);
              });
          TypePtr gCov = Type::obj_split({SplitMethodType{"m", B, T}});
          HeapTypingApprox psiCov{{0, arrow(gCov, T)}};
          cx.inst("alpha = " + print_type(gCov) + ", read-only method")
              .premise("receiver typed", [&] { return cx.value_judgement(psiCov, vGen, gCov); })
              .conclude("invocation at the read bound", [&] {
                return cx.term_judgement(psiCov, Term::invoke(vGen, "m"), T);
              });
        }};

    r["SemUpd-Gen"] = LemmaDef{
        "generalized",
        "updating a method of a two-bound object with a body at the write bound preserves the type",
        "body premise weakened to a supertype of the write bound",
        "cov-upd-body",
        [=](LemmaContext& cx) {
          if (cx.mutated()) {
            TermPtr lit = tm("obj [n : inv Top] { n = self(s : [n : inv Top]) s.n }");
            cx.inst("alpha = " + print_type(gInv) + ", body typed only at Top above the write bound")
                .premise("receiver typed", [&] { return cx.value_judgement(psiGen, vGen, gInv); })
                .premise("write bound below the body type",
                         [&] { return cx.eng().sem_subset(TT, T); })
                .premise("body typed at the supertype",
                         [&] { return cx.hyp_judgement(psiGen, gInv, "x", lit, T); })
                .conclude("update typed", [&] {
                  return cx.term_judgement(
                      psiGen, Term::update(vGen, "m", MethodDef{"", "x", gInv, lit}), gInv);
                });
            return;
          }
          TermPtr body = Term::lam("y", T, Term::var("y"));
          cx.inst("alpha = " + print_type(gInv) + ", b = \\y. y")
              .premise("receiver typed", [&] { return cx.value_judgement(psiGen, vGen, gInv); })
              .premise("body typed at the write bound",
                       [&] { return cx.hyp_judgement(psiGen, gInv, "x", body, TT); })
              .conclude("update typed", [&] {
                return cx.term_judgement(
                    psiGen, Term::update(vGen, "m", MethodDef{"", "x", gInv, body}), gInv);
              });
        }};

    r["SemClone-Gen"] = LemmaDef{
        "generalized",
        "cloning preserves the two-bound object type",
        "",
        "",
        [=](LemmaContext& cx) {
          cx.inst("alpha = " + print_type(gInv))
              .premise("receiver typed", [&] { return cx.value_judgement(psiGen, vGen, gInv); })
              .conclude("clone typed",
                        [&] { return cx.term_judgement(psiGen, Term::clone(vGen), gInv); });
        }};

    r["SemSubObj-Gen"] = LemmaDef{
        "generalized",
        "two-bound object types subtype in width, write bounds contravariantly, read bounds covariantly",
        "",
        "",
        [=](LemmaContext& cx) {
          TypePtr wide = Type::obj_split(
              {SplitMethodType{"m", T, T}, SplitMethodType{"n", TT, TT}});
          TypePtr narrow = Type::obj_split({SplitMethodType{"m", T, T}});
          cx.inst("width: " + print_type(wide) + " below " + print_type(narrow))
              .conclude("object inclusion", [&] { return cx.subset_claim(wide, narrow); });
          TypePtr fine = Type::obj_split({SplitMethodType{"m", TT, TT}});
          TypePtr coarse = Type::obj_split({SplitMethodType{"m", B, T}});
          cx.inst("depth: " + print_type(fine) + " below " + print_type(coarse))
              .premise("write bound premise", [&] { return cx.eng().sem_subset(B, TT); })
              .premise("read bound premise", [&] { return cx.eng().sem_subset(TT, T); })
              .conclude("object inclusion", [&] { return cx.subset_claim(fine, coarse); });
        }};

    // --- foundations ------------------------------------------------------

    r["ClosureExtension"] = LemmaDef{
        "foundation",
        "value and location memberships survive state extension",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { HeapTypingApprox psi; TermPtr v; TypePtr code; const char* show; };
          HeapTypingApprox psiO{{0, arrow(objT, T)}};
          std::vector<Row> rows = {
              {{}, id, TT, "identity at Top -> Top"},
              {psiO, Term::runtime_obj({{"m", 0}}), objT, "record at [m : inv Top]"},
              {psiSelf, vSelf, aself, "record at the self type"},
          };
          HeapTypingApprox delta{{900, TT}};
          for (const Row& row : rows) {
            HeapTypingApprox grown = row.psi;
            for (const auto& [l, c] : delta) grown[l] = c;
            cx.inst(row.show)
                .premise("membership at the base state",
                         [&] { return cx.value_judgement(row.psi, row.v, row.code); })
                .conclude("membership at extended states", [&] {
                  return cx.sweep([&](uint32_t k) {
                    Verdict acc = Verdict::pass(0);
                    for (uint32_t j = 1; j <= k; ++j) {
                      acc = LemmaContext::merge(
                          std::move(acc),
                          cx.eng().mem_value(j, approx_heap_typing(grown, j), row.v, row.code));
                      if (acc.is_ce()) return acc;
                    }
                    return acc;
                  });
                });
          }
          // The same property for a location membership.
          cx.inst("location 0 at an invariant reference")
              .premise("membership at the base state",
                       [&] {
                         return cx.sweep([&](uint32_t k) {
                           return cx.eng().mem_loc(k, psiO, 0, Type::ref_v(Variance::Inv,
                                                                           arrow(objT, T)));
                         });
                       })
              .conclude("membership at extended states", [&] {
                HeapTypingApprox grown = psiO;
                grown[900] = TT;
                return cx.sweep([&](uint32_t k) {
                  return cx.eng().mem_loc(k, approx_heap_typing(grown, k), 0,
                                          Type::ref_v(Variance::Inv, arrow(objT, T)));
                });
              });
        }};

    r["NonExpansive"] = LemmaDef{
        "foundation",
        "every type constructor commutes with approximation at each index",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { TypePtr whole, cut; const char* show; };
          auto at = [&](uint32_t k, const TypePtr& t) { return Type::approx(k, t); };
          for (uint32_t k = 1; k <= cx.k_max(); ++k) {
            std::vector<Row> rows = {
                {arrow(TT, T), arrow(at(k, TT), at(k, T)), "procedure"},
                {Type::obj({meth("m", Variance::Inv, TT)}),
                 Type::obj({meth("m", Variance::Inv, at(k, TT))}), "object"},
                {Type::mu("X", Type::obj({meth("m", Variance::Cov, Type::var("X"))})),
                 Type::mu("X", at(k, Type::obj({meth("m", Variance::Cov, Type::var("X"))}))),
                 "recursive"},
                {Type::all("X", T, arrow(Type::var("X"), Type::var("X"))),
                 Type::all("X", at(k, T), at(k, arrow(Type::var("X"), Type::var("X")))),
                 "universal"},
                {Type::some("X", T, arrow(Type::var("X"), Type::var("X"))),
                 Type::some("X", at(k, T), at(k, arrow(Type::var("X"), Type::var("X")))),
                 "existential"},
            };
            for (const Row& row : rows) {
              cx.inst(std::string(row.show) + " constructor at index " + std::to_string(k))
                  .conclude("approximations agree", [&] {
                    return cx.eng().approx_eq(at(k, row.whole), at(k, row.cut), cx.k_max() + 1);
                  });
            }
          }
        }};

    r["ExtensionPreorder"] = LemmaDef{
        "foundation",
        "state extension is reflexive and transitive",
        "",
        "",
        [=](LemmaContext& cx) {
          std::vector<HeapTypingApprox> states = {{}, {{0, TT}}, {{0, arrow(objT, T)}, {1, TT}}};
          for (const HeapTypingApprox& psi : states) {
            cx.inst("reflexivity at " + print_heap_typing(psi))
                .conclude("state extends itself", [&] {
                  return cx.sweep([&](uint32_t k) { return cx.eng().state_extends(k, psi, k, psi); });
                });
            HeapTypingApprox mid = psi;
            mid[900] = TT;
            cx.inst("transitivity from " + print_heap_typing(psi))
                .premise("first step",
                         [&] {
                           return cx.sweep([&](uint32_t k) {
                             return k < 2 ? Verdict::pass(0)
                                          : cx.eng().state_extends(k, psi, k - 1,
                                                                   approx_heap_typing(mid, k - 1));
                           });
                         })
                .premise("second step",
                         [&] {
                           return cx.sweep([&](uint32_t k) {
                             if (k < 3) return Verdict::pass(0);
                             HeapTypingApprox far = mid;
                             far[901] = T;
                             return cx.eng().state_extends(k - 1, approx_heap_typing(mid, k - 1),
                                                           k - 2, approx_heap_typing(far, k - 2));
                           });
                         })
                .conclude("composite step", [&] {
                  return cx.sweep([&](uint32_t k) {
                    if (k < 3) return Verdict::pass(0);
                    HeapTypingApprox far = mid;
                    far[901] = T;
                    return cx.eng().state_extends(k, psi, k - 2, approx_heap_typing(far, k - 2));
                  });
                });
          }
        }};

    r["ExtensionForget"] = LemmaDef{
        "foundation",
        "lowering the index and cutting the heap typing to it is a state extension",
        "",
        "",
        [=](LemmaContext& cx) {
          std::vector<HeapTypingApprox> states = {{}, {{0, TT}}, {{0, arrow(objT, T)}, {1, TT}}};
          for (const HeapTypingApprox& psi : states) {
            cx.inst("base " + print_heap_typing(psi))
                .conclude("every cut extends", [&] {
                  return cx.sweep([&](uint32_t k) {
                    Verdict acc = Verdict::pass(0);
                    for (uint32_t j = 1; j <= k; ++j)
                      acc = LemmaContext::merge(
                          std::move(acc),
                          cx.eng().state_extends(k, psi, j, approx_heap_typing(psi, j)));
                    return acc;
                  });
                });
          }
        }};

    r["ValueTermAgreement"] = LemmaDef{
        "foundation",
        "for closed values, membership and term typing agree",
        "",
        "",
        [=](LemmaContext& cx) {
          struct Row { HeapTypingApprox psi; TermPtr v; TypePtr code; const char* show; };
          std::vector<Row> rows = {
              {{}, id, TT, "identity"},
              {{{0, arrow(objT, T)}}, Term::runtime_obj({{"m", 0}}), objT, "record"},
              {{}, Term::fold(Type::mu("X", T), id), Type::mu("X", T), "fold"},
          };
          for (const Row& row : rows) {
            cx.inst(std::string("membership to typing, ") + row.show)
                .premise("value membership",
                         [&] { return cx.value_judgement(row.psi, row.v, row.code); })
                .conclude("term typing",
                          [&] { return cx.term_judgement(row.psi, row.v, row.code); });
            cx.inst(std::string("typing to membership, ") + row.show)
                .premise("term typing",
                         [&] { return cx.term_judgement(row.psi, row.v, row.code); })
                .conclude("value membership",
                          [&] { return cx.value_judgement(row.psi, row.v, row.code); });
          }
        }};

    return r;
  }();
  return reg;
}

}  // namespace lemmadetail
}  // namespace sigma
