// Goal-directed generation of well-typed programs, and the safety fuzzer
// built on top of it.
//
// Generation walks the typing rules backwards: pick a goal type, pick a rule
// whose conclusion matches, recurse on the premises. Each emitted program is
// re-checked with the real type checker before it leaves this module, so the
// generator can afford to be optimistic; a construction that does not pan
// out throws Fail and the attempt is retried under a fresh derived seed.
//
// Two fallbacks keep the failure rate low. A readable member whose payload
// resists direct construction gets the body `s.m` (self-reference), which
// always typechecks and at worst diverges when invoked; divergence is safe.
// And zero-depth holes bottom out in the empty object, the cheapest value
// there is.
//
// Mutation mode generates programs that the deliberately broken checker
// accepts but the real one rejects, seeded from one exploit template per
// mutation. Running those programs is how the harness demonstrates that
// each rule breakage is unsound rather than merely different.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ast.hpp"
#include "binding.hpp"
#include "eval.hpp"
#include "printer.hpp"
#include "typecheck.hpp"

namespace sigma {

struct GenConfig {
  size_t max_term_depth = 6;
  size_t max_type_size = 4;
  std::vector<std::string> method_pool{"m", "n", "p"};
  size_t fuel = 500;
  uint64_t seed = 0;
  Mode mode = Mode::Variance;
  bool quantifiers = true;
  bool recursion = true;
  bool self_types = true;
  size_t max_retries = 64;
  std::string mutate;  // empty for the real checker, else a Mutations name

  CheckOptions check_options() const {
    CheckOptions o;
    o.mode = mode;
    if (!mutate.empty()) {
      auto m = Mutations::by_name(mutate);
      if (m) o.mut = *m;
    }
    return o;
  }

  void validate() const {
    if (max_term_depth < 1 || max_type_size < 1 || fuel < 1)
      throw std::invalid_argument("GenConfig: all bounds must be at least 1");
    if (method_pool.empty())
      throw std::invalid_argument("GenConfig: method name pool is empty");
    if (!mutate.empty() && !Mutations::by_name(mutate))
      throw std::invalid_argument("GenConfig: unknown mutation " + mutate);
  }
};

struct GenResult {
  TermPtr term;
  TypePtr type;       // the synthesized type; type_of(term) reproduces it
  size_t retries = 0;  // attempts discarded before this one succeeded
};

struct GenError : std::runtime_error {
  uint64_t seed;
  GenError(uint64_t s, const std::string& what)
      : std::runtime_error(what), seed(s) {}
};

namespace gendetail {

inline uint64_t mix64(uint64_t a, uint64_t b) {
  uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  z ^= z >> 30; z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27; z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

// Thrown when a production cannot be completed; retried at the attempt level.
struct Fail {};

struct Env {
  std::vector<std::pair<std::string, TypePtr>> terms;
  std::vector<std::pair<std::string, TypePtr>> tvars;  // name, upper bound

  Context context() const {
    Context c;
    for (const auto& [n, b] : tvars) c.binds.push_back({true, n, b});
    return c;
  }
};

class Gen {
 public:
  Gen(const GenConfig& cfg, uint64_t seed)
      : cfg_(cfg), opts_(cfg.check_options()), rng_(seed) {}

  // One attempt: may throw Fail. The caller validates and retries.
  TermPtr program(TypePtr& goal_out) {
    Env env;
    goal_out = goal_type(env, cfg_.max_type_size);
    return term_at(env, goal_out, cfg_.max_term_depth);
  }

 private:
  // ---- dice ------------------------------------------------------------
  size_t pick(size_t n) { return n < 2 ? 0 : rng_() % n; }
  bool chance(unsigned percent) { return pick(100) < percent; }
  std::string fresh(const char* stem) {
    return std::string(stem) + std::to_string(counter_++);
  }

  void spend() {
    if (++work_ > 4000) throw Fail{};  // runaway attempt, cheaper to restart
  }

  bool fits(const Env& env, const TypePtr& have, const TypePtr& want) {
    return subtype(env.context(), have, want, opts_).yes();
  }

  // ---- type generation ---------------------------------------------------
  // Every type produced here is inhabitable in the generating environment,
  // with two deliberate exceptions that the term side rescues lazily: a type
  // variable or recursive payload in a readable member position falls back
  // to a self-referencing body.

  TypePtr easy_type(size_t size) {
    switch (pick(4)) {
      case 0: return Type::top();
      case 1: return Type::arrow(Type::top(), Type::top());
      case 2: return Type::obj({{pool(0), Variance::Inv, Type::top()}});
      default:
        if (size > 1 && chance(50)) {
          Env none;
          return goal_type(none, size - 1);
        }
        return Type::top();
    }
  }

  std::string pool(size_t i) {
    return cfg_.method_pool[i % cfg_.method_pool.size()];
  }

  Variance member_variance() {
    if (cfg_.mode == Mode::Split) return Variance::Inv;  // literal W = R
    size_t r = pick(100);
    if (r < 60) return Variance::Inv;
    if (r < 85) return Variance::Cov;
    return Variance::Con;
  }

  // X appears only in rescuable slots: readable member payloads and arrow
  // domains (plus the identity pattern X -> X).
  TypePtr body_with_var(const std::string& x, size_t size) {
    switch (pick(3)) {
      case 0:
        return chance(50) ? Type::arrow(Type::var(x), Type::var(x))
                          : Type::arrow(Type::var(x), Type::top());
      case 1: {
        std::vector<MethodType> ms{{pool(0), Variance::Inv, Type::var(x)}};
        if (size > 2 && chance(40))
          ms.push_back({pool(1), Variance::Inv, easy_type(size - 2)});
        return Type::obj(std::move(ms));
      }
      default:
        return Type::arrow(Type::top(), Type::top());
    }
  }

  TypePtr goal_type(Env& env, size_t size) {
    if (size <= 1) return chance(70) ? Type::top()
                                     : Type::arrow(Type::top(), Type::top());
    size_t r = pick(100);
    if (r < 12) return Type::top();
    if (r < 38) {
      TypePtr dom = chance(25) && !env.tvars.empty()
                        ? Type::var(env.tvars[pick(env.tvars.size())].first)
                        : goal_type(env, size / 2 ? size / 2 : 1);
      return Type::arrow(std::move(dom), goal_type(env, size - 1));
    }
    if (r < 72) {
      size_t count = 1 + pick(std::min<size_t>(cfg_.method_pool.size(), 3));
      std::vector<MethodType> ms;
      for (size_t i = 0; i < count; ++i) {
        Variance v = member_variance();
        TypePtr payload;
        if (!env.tvars.empty() && v != Variance::Con && chance(20))
          payload = Type::var(env.tvars[pick(env.tvars.size())].first);
        else
          payload = goal_type(env, (size - 1) / count ? (size - 1) / count : 1);
        ms.push_back({pool(i), v, std::move(payload)});
      }
      return Type::obj(std::move(ms));
    }
    if (r < 82 && cfg_.recursion) {
      std::string x = fresh("X");
      std::vector<MethodType> ms{{pool(0), Variance::Inv, Type::var(x)}};
      if (size > 3 && chance(40))
        ms.push_back({pool(1), member_variance() == Variance::Con
                                   ? Variance::Inv
                                   : member_variance(),
                      easy_type(size - 3)});
      return Type::mu(x, Type::obj(std::move(ms)));
    }
    if (r < 94 && cfg_.quantifiers) {
      std::string x = fresh("X");
      TypePtr bound = chance(70) ? Type::top() : easy_type(2);
      TypePtr body = body_with_var(x, size - 2 ? size - 2 : 1);
      return chance(50) ? Type::all(x, bound, body)
                        : Type::some(x, bound, body);
    }
    if (cfg_.self_types) {
      std::string x = fresh("X");
      std::vector<MethodType> ms{{pool(0), Variance::Inv, Type::var(x)}};
      if (size > 3 && chance(50))
        ms.push_back({pool(1), Variance::Inv, easy_type(size - 3)});
      return Type::self_obj(x, std::move(ms));
    }
    return Type::obj({{pool(0), Variance::Inv, Type::top()}});
  }

  // A type strictly usable where `g` is expected, for subsumption wrappers.
  // Only stock-direction loosenings; mutation runs skip the wrapper.
  TypePtr subtype_of(const TypePtr& g, size_t size) {
    if (cfg_.mode == Mode::Split) return g;
    switch (g->kind) {
      case TypeKind::Top:
        return easy_type(size);
      case TypeKind::Arrow:
        return Type::arrow(chance(30) ? Type::top() : g->a,
                           chance(30) ? subtype_of(g->b, size) : g->b);
      case TypeKind::Obj: {
        std::vector<MethodType> ms;
        for (const auto& m : g->methods) {
          switch (m.variance) {
            case Variance::Inv:
              ms.push_back(m);
              break;
            case Variance::Cov:
              ms.push_back({m.name,
                            chance(50) ? Variance::Inv : Variance::Cov,
                            chance(30) ? subtype_of(m.type, size) : m.type});
              break;
            case Variance::Con:
              ms.push_back({m.name,
                            chance(50) ? Variance::Inv : Variance::Con,
                            m.type});
              break;
          }
        }
        // width: extra members make the source strictly narrower
        for (size_t i = 0; i < 2 && chance(40); ++i) {
          std::string extra = pool(g->methods.size() + i);
          bool taken = false;
          for (const auto& m : ms) taken |= m.name == extra;
          if (!taken) ms.push_back({extra, Variance::Inv, easy_type(2)});
        }
        return Type::obj(std::move(ms));
      }
      default:
        return g;
    }
  }

  // ---- term generation -----------------------------------------------------

  TermPtr term_at(Env& env, const TypePtr& goal, size_t depth) {
    spend();
    // a variable already below the goal is the cheapest program there is
    std::vector<size_t> hits;
    for (size_t i = 0; i < env.terms.size(); ++i)
      if (fits(env, env.terms[i].second, goal)) hits.push_back(i);
    if (!hits.empty() && chance(depth == 0 ? 70 : 35))
      return Term::var(env.terms[hits[pick(hits.size())]].first);

    if (depth > 0) {
      try {
        size_t r = pick(100);
        if (r < 10) return elim_app(env, goal, depth);
        if (r < 18) return elim_invoke(env, goal, depth);
        if (r < 24 && cfg_.quantifiers) return elim_tapp(env, goal, depth);
        if (r < 28 && cfg_.quantifiers) return elim_open(env, goal, depth);
      } catch (const Fail&) {
        // fall through to an introduction form
      }
    }

    switch (goal->kind) {
      case TypeKind::Top: {
        if (!hits.empty()) return Term::var(env.terms[hits[0]].first);
        if (depth == 0 || chance(30)) return Term::obj_new(Type::obj({}), {});
        return term_at(env, easy_type(cfg_.max_type_size), depth - 1);
      }
      case TypeKind::Var:
      case TypeKind::Bot:
        if (!hits.empty()) return Term::var(env.terms[hits[0]].first);
        throw Fail{};
      case TypeKind::Arrow: {
        std::string x = fresh("x");
        Env inner = env;
        inner.terms.emplace_back(x, goal->a);
        return Term::lam(x, goal->a,
                         term_at(inner, goal->b, depth ? depth - 1 : 0));
      }
      case TypeKind::Obj:
        return obj_at(env, goal, depth);
      case TypeKind::ObjSplit: {
        // native split goals only reach here from handwritten types; a
        // literal exists exactly when every member has write = read
        std::vector<MethodType> ms;
        for (const auto& m : goal->split_methods) {
          if (!alpha_eq_type(m.write, m.read)) throw Fail{};
          ms.push_back({m.name, Variance::Inv, m.read});
        }
        return obj_at(env, Type::obj(std::move(ms)), depth);
      }
      case TypeKind::Mu:
        return mu_at(env, goal, depth);
      case TypeKind::All: {
        std::string x = fresh("X");
        TypePtr body = subst_type(goal->b, goal->name, Type::var(x));
        Env inner = env;
        inner.tvars.emplace_back(x, goal->a);
        return Term::tlam(x, goal->a, term_at(inner, body, depth));
      }
      case TypeKind::Some: {
        std::string x = fresh("X");
        TypePtr body = subst_type(goal->b, goal->name, Type::var(x));
        TypePtr witness =
            chance(75) ? goal->a : subtype_of(goal->a, cfg_.max_type_size);
        if (!subtype(env.context(), witness, goal->a, opts_).yes())
          witness = goal->a;
        TermPtr payload = term_at(env, subst_type(body, x, witness),
                                  depth ? depth - 1 : 0);
        return Term::pack(x, goal->a, witness, std::move(payload), body);
      }
      case TypeKind::SelfObj:
        return self_at(env, goal, depth);
      default:
        throw Fail{};
    }
  }

  // Literal plus optional wrappers that stay at (a subtype of) the goal.
  TermPtr obj_at(Env& env, const TypePtr& goal, size_t depth) {
    if (depth > 0) {
      size_t r = pick(100);
      try {
        if (r < 16 && cfg_.mutate != "width-reverse") {
          // subsumption: build below the goal, coerce through a binder
          TypePtr s = subtype_of(goal, cfg_.max_type_size);
          TermPtr e = term_at(env, s, depth - 1);
          std::string x = fresh("x");
          return Term::app(Term::lam(x, goal, Term::var(x)), std::move(e));
        }
        if (r < 32 && cfg_.mutate != "cov-upd-body") return upd_at(env, goal, depth);
        if (r < 40) return Term::clone(term_at(env, goal, depth - 1));
      } catch (const Fail&) {
      }
    }
    return literal_at(env, goal, depth);
  }

  TermPtr upd_at(Env& env, const TypePtr& goal, size_t depth) {
    std::vector<size_t> updatable;
    for (size_t i = 0; i < goal->methods.size(); ++i)
      if (goal->methods[i].variance != Variance::Cov) updatable.push_back(i);
    if (updatable.empty()) throw Fail{};
    const MethodType& m = goal->methods[updatable[pick(updatable.size())]];
    TermPtr recv = term_at(env, goal, depth - 1);
    std::string s = fresh("s");
    Env inner = env;
    inner.terms.emplace_back(s, goal);
    TermPtr body = term_at(inner, m.type, depth - 1);
    return Term::update(std::move(recv), m.name,
                        {m.name, s, goal, std::move(body)});
  }

  TermPtr literal_at(Env& env, const TypePtr& goal, size_t depth) {
    spend();
    if (cfg_.mode == Mode::Split)
      for (const auto& m : goal->methods)
        if (m.variance != Variance::Inv) throw Fail{};
    std::string s = fresh("s");
    Env inner = env;
    inner.terms.emplace_back(s, goal);
    std::vector<MethodDef> defs;
    for (const auto& m : goal->methods) {
      bool readable = m.variance != Variance::Con;
      TermPtr body;
      if (readable && (chance(6) || (depth == 0 && !shallow(m.type)))) {
        body = Term::invoke(Term::var(s), m.name);  // ties the knot lazily
      } else {
        try {
          body = term_at(inner, m.type, depth ? depth - 1 : 0);
        } catch (const Fail&) {
          if (!readable) throw;
          body = Term::invoke(Term::var(s), m.name);
        }
      }
      defs.push_back({m.name, s, goal, std::move(body)});
    }
    return Term::obj_new(goal, std::move(defs));
  }

  // Safe to recurse into at depth zero: bottoming out cannot re-expand.
  static bool shallow(const TypePtr& t) {
    switch (t->kind) {
      case TypeKind::Mu:
      case TypeKind::SelfObj:
      case TypeKind::Some:
        return false;
      default:
        return true;
    }
  }

  TermPtr mu_at(Env& env, const TypePtr& goal, size_t depth) {
    TypePtr unrolled = subst_type(goal->a, goal->name, goal);
    if (depth > 0 && chance(15)) {
      // unfold then refold: exercises both reductions, lands back at goal
      TermPtr e = term_at(env, goal, depth - 1);
      return Term::fold(goal, Term::unfold(goal, std::move(e)));
    }
    if (depth == 0) {
      if (unroll0_) throw Fail{};
      unroll0_ = true;
      TermPtr body = term_at(env, unrolled, 0);
      unroll0_ = false;
      return Term::fold(goal, std::move(body));
    }
    return Term::fold(goal, term_at(env, unrolled, depth - 1));
  }

  // A self-quantified object value is a fold of a pack of a literal, the
  // shape its desugaring prescribes. The witness is the goal itself.
  TermPtr self_at(Env& env, const TypePtr& goal, size_t depth) {
    if (depth == 0) {
      if (unroll0_) throw Fail{};
      unroll0_ = true;
    }
    std::string x = fresh("X");
    std::vector<MethodType> body_ms, lit_ms;
    for (const auto& m : goal->methods) {
      TypePtr renamed = subst_type(m.type, goal->name, Type::var(x));
      body_ms.push_back({m.name, m.variance, renamed});
      lit_ms.push_back({m.name, m.variance, subst_type(renamed, x, goal)});
    }
    TermPtr lit = literal_at(env, Type::obj(std::move(lit_ms)),
                             depth ? depth - 1 : 0);
    if (depth == 0) unroll0_ = false;
    return Term::fold(goal, Term::pack(x, goal, goal, std::move(lit),
                                       Type::obj(std::move(body_ms))));
  }

  // ---- eliminations ---------------------------------------------------------

  TermPtr elim_app(Env& env, const TypePtr& goal, size_t depth) {
    TypePtr dom = easy_type(cfg_.max_type_size);
    TermPtr f = term_at(env, Type::arrow(dom, goal), depth - 1);
    TermPtr a = term_at(env, dom, depth - 1);
    return Term::app(std::move(f), std::move(a));
  }

  TermPtr elim_invoke(Env& env, const TypePtr& goal, size_t depth) {
    std::string m = pool(pick(cfg_.method_pool.size()));
    TypePtr recv_ty = Type::obj({{m, Variance::Inv, goal}});
    TermPtr recv = term_at(env, recv_ty, depth - 1);
    return Term::invoke(std::move(recv), m);
  }

  TermPtr elim_tapp(Env& env, const TypePtr& goal, size_t depth) {
    std::string x = fresh("X");
    TermPtr body = term_at(env, goal, depth - 1);  // goal never mentions x
    return Term::tapp(Term::tlam(x, Type::top(), std::move(body)),
                      easy_type(2));
  }

  TermPtr elim_open(Env& env, const TypePtr& goal, size_t depth) {
    TypePtr ex = Type::some("X", Type::top(), Type::top());
    TermPtr scrut = term_at(env, ex, depth - 1);
    std::string x = fresh("X"), y = fresh("y");
    Env inner = env;
    inner.tvars.emplace_back(x, Type::top());
    inner.terms.emplace_back(y, Type::top());
    TermPtr body = term_at(inner, goal, depth - 1);
    return Term::open(std::move(scrut), x, Type::top(), y, Type::top(),
                      std::move(body), goal);
  }

  const GenConfig& cfg_;
  CheckOptions opts_;
  std::mt19937_64 rng_;
  size_t counter_ = 0;
  size_t work_ = 0;
  bool unroll0_ = false;  // one structural unrolling allowed at depth zero
};

// ---------------------------------------------------------------------------
// Exploit templates: one program family per mutation, accepted by the broken
// checker, rejected by the real one, and stuck when run.

inline TermPtr let_in(const std::string& x, TypePtr t, TermPtr bound,
                      TermPtr body) {
  return Term::app(Term::lam(x, std::move(t), std::move(body)),
                   std::move(bound));
}

inline TermPtr exploit_template(const std::string& mutation, uint64_t seed,
                                const std::vector<std::string>& pool) {
  std::mt19937_64 rng(seed);
  std::string a = pool[rng() % pool.size()];
  std::string b = pool.size() > 1 ? pool[(rng() % (pool.size() - 1) + 1 +
                                          (rng() % pool.size())) %
                                         pool.size()]
                                  : a + "2";
  if (b == a) b = a + "2";
  // the value actually stored where a deeper object is expected
  TermPtr lam_top = Term::lam("x", Type::top(), Term::var("x"));
  TypePtr inner_payload =
      rng() % 2 ? Type::top() : Type::arrow(Type::top(), Type::top());
  TypePtr victim = Type::obj({{b, Variance::Inv, inner_payload}});

  if (mutation == "drop-inv-variance") {
    // read through a con member: the view promises more than the cell holds
    TypePtr lit_t = Type::obj({{a, Variance::Inv, Type::top()}});
    TermPtr o = Term::obj_new(lit_t, {{a, "s", lit_t, lam_top}});
    TypePtr view = Type::obj({{a, Variance::Con, victim}});
    return let_in("o", view, std::move(o),
                  Term::invoke(Term::invoke(Term::var("o"), a), b));
  }
  if (mutation == "drop-upd-variance") {
    // write through a cov alias, read the original at the deeper type
    TypePtr deep = Type::obj({{b, Variance::Inv, Type::top()}});
    TermPtr inner = Term::obj_new(deep, {{b, "t", deep, Term::var("t")}});
    TypePtr lit_t = Type::obj({{a, Variance::Inv, deep}});
    TermPtr o = Term::obj_new(lit_t, {{a, "s", lit_t, std::move(inner)}});
    TypePtr view = Type::obj({{a, Variance::Cov, Type::top()}});
    TermPtr upd = Term::update(Term::var("p"), a, {a, "s", nullptr, lam_top});
    TermPtr read = Term::invoke(Term::invoke(Term::var("o"), a), b);
    return let_in(
        "o", lit_t, std::move(o),
        let_in("p", view, Term::var("o"),
               let_in("u", Type::top(), std::move(upd), std::move(read))));
  }
  if (mutation == "cov-upd-body") {
    // the update body lands above the member type, not below it
    TypePtr deep = Type::obj({{b, Variance::Inv, Type::top()}});
    TermPtr inner = Term::obj_new(deep, {{b, "t", deep, Term::var("t")}});
    TypePtr lit_t = Type::obj({{a, Variance::Inv, deep}});
    TermPtr o = Term::obj_new(lit_t, {{a, "s", lit_t, std::move(inner)}});
    TermPtr top_body =
        Term::app(Term::lam("x", Type::top(), Term::var("x")),
                  Term::lam("y", Type::top(), Term::var("y")));
    TermPtr upd =
        Term::update(std::move(o), a, {a, "s", nullptr, std::move(top_body)});
    return Term::invoke(Term::invoke(std::move(upd), a), b);
  }
  if (mutation == "width-reverse") {
    // a narrow object passed where a wider one is promised
    TypePtr lit_t = Type::obj({{a, Variance::Inv, Type::top()}});
    TermPtr o = Term::obj_new(lit_t, {{a, "s", lit_t, Term::var("s")}});
    TypePtr wide = Type::obj({{a, Variance::Inv, Type::top()},
                              {b, Variance::Inv, Type::top()}});
    return let_in("o", wide, std::move(o), Term::invoke(Term::var("o"), b));
  }
  if (mutation == "con-read-payload") {
    // split mode: reading at the write bound trusts the promise, not the cell
    TypePtr lit_t = Type::obj({{a, Variance::Inv, Type::top()}});
    TermPtr o = Term::obj_new(lit_t, {{a, "s", lit_t, lam_top}});
    TypePtr view = Type::obj_split({{a, victim, Type::top()}});
    return let_in("p", view, std::move(o),
                  Term::invoke(Term::invoke(Term::var("p"), a), b));
  }
  throw std::invalid_argument("unknown mutation: " + mutation);
}

// The split-only mutation needs the split checker to mean anything.
inline bool exploit_fits_mode(const std::string& mutation, Mode mode) {
  return (mutation == "con-read-payload") == (mode == Mode::Split);
}

}  // namespace gendetail

// ---------------------------------------------------------------------------
// Public entry points

inline GenResult gen_well_typed(const GenConfig& cfg) {
  cfg.validate();
  CheckOptions opts = cfg.check_options();
  for (size_t attempt = 0; attempt < cfg.max_retries; ++attempt) {
    gendetail::Gen g(cfg, gendetail::mix64(cfg.seed, attempt));
    try {
      TypePtr goal;
      TermPtr term = g.program(goal);
      TypePtr synthesized = type_of(term, opts);  // self-validation gate
      return {std::move(term), std::move(synthesized), attempt};
    } catch (const gendetail::Fail&) {
    } catch (const TypeError&) {
      // a construction slipped past its own premises; the retry is the report
    }
  }
  throw GenError(cfg.seed, "generation gave up after " +
                               std::to_string(cfg.max_retries) + " retries");
}

struct FuzzReport {
  size_t generated = 0;
  size_t typechecked = 0;
  size_t value = 0;
  size_t fuel_exhausted = 0;
  size_t stuck = 0;
  size_t gave_up = 0;

  struct Failure {
    uint64_t seed;
    std::string kind;  // "stuck" | "generator-gave-up" | "exploit-rejected"
    std::string detail;
  };
  std::vector<Failure> failures;

  // run(c, fuel) never sticking means safe_k holds for every k up to fuel
  bool safety_holds() const { return stuck == 0; }

  void merge(FuzzReport&& other) {
    generated += other.generated;
    typechecked += other.typechecked;
    value += other.value;
    fuel_exhausted += other.fuel_exhausted;
    stuck += other.stuck;
    gave_up += other.gave_up;
    for (auto& f : other.failures) failures.push_back(std::move(f));
  }
};

namespace gendetail {

inline void fuzz_one(const GenConfig& cfg, size_t index, FuzzReport& rep) {
  uint64_t derived = mix64(cfg.seed, index);
  bool exploit = !cfg.mutate.empty() &&
                 exploit_fits_mode(cfg.mutate, cfg.mode) && index % 3 == 2;
  TermPtr term;
  if (exploit) {
    term = exploit_template(cfg.mutate, derived, cfg.method_pool);
    rep.generated++;
    try {
      type_of(term, cfg.check_options());
      rep.typechecked++;
    } catch (const TypeError& e) {
      rep.failures.push_back({derived, "exploit-rejected", e.what()});
      return;
    }
  } else {
    GenConfig local = cfg;
    local.seed = derived;
    try {
      GenResult r = gen_well_typed(local);
      term = std::move(r.term);
      rep.generated++;
      rep.typechecked++;  // gen_well_typed re-checks before returning
    } catch (const GenError& e) {
      rep.gave_up++;
      rep.failures.push_back({derived, "generator-gave-up", e.what()});
      return;
    }
  }
  Trace tr = run(Config{Heap{}, term}, cfg.fuel);
  switch (tr.outcome) {
    case Outcome::Value: rep.value++; break;
    case Outcome::FuelExhausted: rep.fuel_exhausted++; break;
    case Outcome::Stuck: {
      rep.stuck++;
      std::string why = tr.stuck_reason ? to_string(*tr.stuck_reason) : "?";
      rep.failures.push_back(
          {derived, "stuck", why + " in " + print_term(term)});
      break;
    }
  }
}

}  // namespace gendetail

// Generates n programs, runs each with cfg.fuel, and aggregates. Failures
// carry the derived seed that replays them. Work is partitioned across
// jobs threads; the merged report does not depend on the partition.
inline FuzzReport fuzz_safety(const GenConfig& cfg, size_t n,
                              size_t jobs = 1) {
  cfg.validate();
  if (jobs < 2 || n < 2) {
    FuzzReport rep;
    for (size_t i = 0; i < n; ++i) gendetail::fuzz_one(cfg, i, rep);
    std::sort(rep.failures.begin(), rep.failures.end(),
              [](const auto& a, const auto& b) { return a.seed < b.seed; });
    return rep;
  }
  jobs = std::min(jobs, n);
  std::vector<FuzzReport> parts(jobs);
  std::vector<std::thread> workers;
  size_t chunk = (n + jobs - 1) / jobs;
  for (size_t w = 0; w < jobs; ++w) {
    size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    workers.emplace_back([&cfg, &parts, w, lo, hi] {
      for (size_t i = lo; i < hi; ++i) gendetail::fuzz_one(cfg, i, parts[w]);
    });
  }
  for (auto& t : workers) t.join();
  FuzzReport rep;
  for (auto& p : parts) rep.merge(std::move(p));
  std::sort(rep.failures.begin(), rep.failures.end(),
            [](const auto& a, const auto& b) { return a.seed < b.seed; });
  return rep;
}

}  // namespace sigma
