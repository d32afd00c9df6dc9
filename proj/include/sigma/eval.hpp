#pragma once

// Small-step evaluator over heap configurations. A configuration pairs a heap
// (locations to stored procedures) with a term; each step contracts the unique
// redex found by evaluation-context decomposition, left to right, call by
// value. Method bodies are stored in the heap as procedures; invocation is
// self-application of the stored procedure to the enclosing object.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sigma/ast.hpp"
#include "sigma/binding.hpp"
#include "sigma/printer.hpp"

namespace sigma {

enum class StuckReason : uint8_t {
  InvokeOnNonObject,
  MissingMethod,
  UpdateOnNonObject,
  CloneNonObject,
  ApplyNonLambda,
  UnfoldNonFold,
  TypeApplyNonTLam,
  OpenNonPack,
  DanglingLocation,
  FreeVariable,
};

inline const char* to_string(StuckReason r) {
  switch (r) {
    case StuckReason::InvokeOnNonObject: return "invoke-on-non-object";
    case StuckReason::MissingMethod: return "missing-method";
    case StuckReason::UpdateOnNonObject: return "update-on-non-object";
    case StuckReason::CloneNonObject: return "clone-non-object";
    case StuckReason::ApplyNonLambda: return "apply-non-lambda";
    case StuckReason::UnfoldNonFold: return "unfold-non-fold";
    case StuckReason::TypeApplyNonTLam: return "type-apply-non-tlam";
    case StuckReason::OpenNonPack: return "open-non-pack";
    case StuckReason::DanglingLocation: return "dangling-location";
    case StuckReason::FreeVariable: return "free-variable";
  }
  return "?";
}

struct Heap {
  std::map<Loc, TermPtr> cells;

  const TermPtr* lookup(Loc l) const {
    auto it = cells.find(l);
    return it == cells.end() ? nullptr : &it->second;
  }
  bool contains(Loc l) const { return cells.count(l) > 0; }
};

struct Config {
  Heap heap;
  TermPtr term;
};

inline std::string print_heap(const Heap& h) {
  std::string out = "{";
  bool first = true;
  for (const auto& [l, v] : h.cells) {
    if (!first) out += ", ";
    first = false;
    out += print_loc(l);
    out += " -> ";
    out += print_term(v);
  }
  out += '}';
  return out;
}

inline std::string print_config(const Config& c) {
  return "<" + print_heap(c.heap) + ", " + print_term(c.term) + ">";
}

// Fresh-location source. Canonical mode hands out the smallest unused indices
// in increasing order, which pins traces byte for byte; randomized mode is for
// the allocator-independence property.
struct Allocator {
  enum class Mode : uint8_t { Canonical, Randomized };
  Mode mode = Mode::Canonical;
  std::mt19937_64 rng;
  Loc next = 0;

  static Allocator canonical() { return Allocator{}; }
  static Allocator randomized(uint64_t seed) {
    Allocator a;
    a.mode = Mode::Randomized;
    a.rng.seed(seed);
    return a;
  }

  Loc fresh(const Heap& h) {
    if (mode == Mode::Canonical) {
      while (h.contains(next)) ++next;
      return next++;
    }
    std::uniform_int_distribution<Loc> dist(0, (1u << 30) - 1);
    while (true) {
      Loc l = dist(rng);
      if (!h.contains(l)) return l;
    }
  }
};

// ---------------------------------------------------------------------------
// Decomposition

struct Decomposition {
  enum class Kind : uint8_t { Value, Redex, Stuck };
  Kind kind;
  TermPtr redex;                                  // Redex
  std::function<TermPtr(TermPtr)> rebuild;        // Redex: plugs the hole
  StuckReason reason = StuckReason::FreeVariable; // Stuck
  TermPtr stuck_at;                               // Stuck
};

namespace detail {

inline Decomposition value_decomp() { return {Decomposition::Kind::Value, nullptr, nullptr}; }

inline Decomposition stuck_decomp(StuckReason r, TermPtr at) {
  Decomposition d{Decomposition::Kind::Stuck, nullptr, nullptr};
  d.reason = r;
  d.stuck_at = std::move(at);
  return d;
}

inline Decomposition redex_decomp(TermPtr r) {
  Decomposition d{Decomposition::Kind::Redex, std::move(r),
                  [](TermPtr t) { return t; }};
  return d;
}

// Wraps an inner decomposition in one more context frame.
inline Decomposition frame(Decomposition inner, std::function<TermPtr(TermPtr)> wrap) {
  if (inner.kind == Decomposition::Kind::Redex) {
    auto prev = std::move(inner.rebuild);
    inner.rebuild = [prev = std::move(prev), wrap = std::move(wrap)](TermPtr t) {
      return wrap(prev(std::move(t)));
    };
  }
  return inner;
}

// Checks that every location of a runtime object is present in the heap.
inline std::optional<Loc> missing_loc(const TermPtr& obj, const Heap& h) {
  for (const auto& [n, l] : obj->slots)
    if (!h.contains(l)) return l;
  return std::nullopt;
}

}  // namespace detail

inline Decomposition decompose(const Config& c) {
  const TermPtr& t = c.term;
  using detail::frame;
  using detail::redex_decomp;
  using detail::stuck_decomp;
  using detail::value_decomp;

  switch (t->kind) {
    case TermKind::RuntimeObj:
    case TermKind::Lam:
    case TermKind::TLam:
      return value_decomp();

    case TermKind::Var:
      return stuck_decomp(StuckReason::FreeVariable, t);

    case TermKind::ObjNew:
      return redex_decomp(t);  // Red-Obj fires immediately

    case TermKind::Invoke: {
      if (!is_value(t->t1)) {
        auto m = t->name;
        return frame(decompose({c.heap, t->t1}),
                     [m](TermPtr s) { return Term::invoke(std::move(s), m); });
      }
      if (t->t1->kind != TermKind::RuntimeObj)
        return stuck_decomp(StuckReason::InvokeOnNonObject, t);
      const Loc* l = t->t1->find_slot(t->name);
      if (!l) return stuck_decomp(StuckReason::MissingMethod, t);
      if (!c.heap.contains(*l)) return stuck_decomp(StuckReason::DanglingLocation, t);
      return redex_decomp(t);
    }

    case TermKind::Update: {
      if (!is_value(t->t1)) {
        auto m = t->name;
        auto upd = t->upd;
        return frame(decompose({c.heap, t->t1}), [m, upd](TermPtr s) {
          return Term::update(std::move(s), m, upd);
        });
      }
      if (t->t1->kind != TermKind::RuntimeObj)
        return stuck_decomp(StuckReason::UpdateOnNonObject, t);
      const Loc* l = t->t1->find_slot(t->name);
      if (!l) return stuck_decomp(StuckReason::MissingMethod, t);
      if (!c.heap.contains(*l)) return stuck_decomp(StuckReason::DanglingLocation, t);
      return redex_decomp(t);
    }

    case TermKind::Clone: {
      if (!is_value(t->t1))
        return frame(decompose({c.heap, t->t1}),
                     [](TermPtr s) { return Term::clone(std::move(s)); });
      if (t->t1->kind != TermKind::RuntimeObj)
        return stuck_decomp(StuckReason::CloneNonObject, t);
      if (auto l = detail::missing_loc(t->t1, c.heap))
        return stuck_decomp(StuckReason::DanglingLocation, t);
      return redex_decomp(t);
    }

    case TermKind::App: {
      if (!is_value(t->t1)) {
        auto arg = t->t2;
        return frame(decompose({c.heap, t->t1}),
                     [arg](TermPtr s) { return Term::app(std::move(s), arg); });
      }
      if (!is_value(t->t2)) {
        auto fn = t->t1;
        return frame(decompose({c.heap, t->t2}),
                     [fn](TermPtr s) { return Term::app(fn, std::move(s)); });
      }
      if (t->t1->kind != TermKind::Lam)
        return stuck_decomp(StuckReason::ApplyNonLambda, t);
      return redex_decomp(t);
    }

    case TermKind::Fold: {
      if (is_value(t->t1)) return value_decomp();
      auto a = t->ann;
      return frame(decompose({c.heap, t->t1}),
                   [a](TermPtr s) { return Term::fold(a, std::move(s)); });
    }

    case TermKind::Unfold: {
      if (!is_value(t->t1)) {
        auto a = t->ann;
        return frame(decompose({c.heap, t->t1}),
                     [a](TermPtr s) { return Term::unfold(a, std::move(s)); });
      }
      if (t->t1->kind != TermKind::Fold)
        return stuck_decomp(StuckReason::UnfoldNonFold, t);
      return redex_decomp(t);
    }

    case TermKind::TApp: {
      if (!is_value(t->t1)) {
        auto a = t->ann2;
        return frame(decompose({c.heap, t->t1}),
                     [a](TermPtr s) { return Term::tapp(std::move(s), a); });
      }
      if (t->t1->kind != TermKind::TLam)
        return stuck_decomp(StuckReason::TypeApplyNonTLam, t);
      return redex_decomp(t);
    }

    case TermKind::Pack: {
      if (is_value(t->t1)) return value_decomp();
      auto x = t->name;
      auto bound = t->ann;
      auto wit = t->ann2;
      auto bt = t->ann3;
      return frame(decompose({c.heap, t->t1}), [x, bound, wit, bt](TermPtr s) {
        return Term::pack(x, bound, wit, std::move(s), bt);
      });
    }

    case TermKind::Open: {
      if (!is_value(t->t1)) {
        auto keep = t;
        return frame(decompose({c.heap, t->t1}), [keep](TermPtr s) {
          return Term::open(std::move(s), keep->name, keep->ann, keep->name2, keep->ann2,
                            keep->t2, keep->ann3);
        });
      }
      if (t->t1->kind != TermKind::Pack)
        return stuck_decomp(StuckReason::OpenNonPack, t);
      return redex_decomp(t);
    }
  }
  return stuck_decomp(StuckReason::FreeVariable, t);
}

// ---------------------------------------------------------------------------
// Stepping

struct StepResult {
  enum class Kind : uint8_t { Stepped, Value, Stuck };
  Kind kind;
  Config next;         // Stepped
  const char* rule = nullptr;
  StuckReason reason = StuckReason::FreeVariable;
  TermPtr stuck_at;
};

inline StepResult step(const Config& c, Allocator& alloc) {
  Decomposition d = decompose(c);
  if (d.kind == Decomposition::Kind::Value) return {StepResult::Kind::Value, {}, nullptr};
  if (d.kind == Decomposition::Kind::Stuck) {
    StepResult r{StepResult::Kind::Stuck, {}, nullptr};
    r.reason = d.reason;
    r.stuck_at = d.stuck_at;
    return r;
  }

  const TermPtr& r = d.redex;
  Heap h = c.heap;
  TermPtr result;
  const char* rule = nullptr;

  switch (r->kind) {
    case TermKind::ObjNew: {
      rule = "Red-Obj";
      // allocate in method-name order; slots keep the literal's order
      std::vector<const MethodDef*> sorted;
      for (const auto& m : r->methods) sorted.push_back(&m);
      std::sort(sorted.begin(), sorted.end(),
                [](auto* a, auto* b) { return a->name < b->name; });
      std::map<std::string, Loc> locs;
      for (const auto* m : sorted) {
        Loc l = alloc.fresh(h);
        h.cells[l] = Term::lam(m->self_var,
                               m->self_annot ? m->self_annot : Type::top(),
                               m->body);
        locs[m->name] = l;
      }
      std::vector<std::pair<std::string, Loc>> slots;
      for (const auto& m : r->methods) slots.emplace_back(m.name, locs[m.name]);
      result = Term::runtime_obj(std::move(slots));
      break;
    }
    case TermKind::Invoke: {
      rule = "Red-Inv";
      Loc l = *r->t1->find_slot(r->name);
      result = Term::app(*h.lookup(l), r->t1);
      break;
    }
    case TermKind::Update: {
      rule = "Red-Upd";
      Loc l = *r->t1->find_slot(r->name);
      h.cells[l] = Term::lam(r->upd.self_var,
                             r->upd.self_annot ? r->upd.self_annot : Type::top(),
                             r->upd.body);
      result = r->t1;
      break;
    }
    case TermKind::Clone: {
      rule = "Red-Clone";
      std::vector<std::pair<std::string, Loc>> src = r->t1->slots;
      std::vector<size_t> order(src.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](size_t a, size_t b) { return src[a].first < src[b].first; });
      std::map<std::string, Loc> locs;
      for (size_t ix : order) {
        Loc l = alloc.fresh(h);
        h.cells[l] = *h.lookup(src[ix].second);
        locs[src[ix].first] = l;
      }
      std::vector<std::pair<std::string, Loc>> slots;
      for (const auto& [n, _] : src) slots.emplace_back(n, locs[n]);
      result = Term::runtime_obj(std::move(slots));
      break;
    }
    case TermKind::App: {
      rule = "Red-Beta";
      result = subst_term(r->t1->t1, r->t1->name, r->t2);
      break;
    }
    case TermKind::Unfold: {
      rule = "Red-Unfold";
      result = r->t1->t1;
      break;
    }
    case TermKind::TApp: {
      rule = "Red-TBeta";
      result = subst_type_in_term(r->t1->t1, r->t1->name, r->ann2);
      break;
    }
    case TermKind::Open: {
      rule = "Red-Open";
      const TermPtr& p = r->t1;  // the pack value
      TermPtr payload = subst_type_in_term(p->t1, p->name, p->ann2);
      TermPtr body = subst_term(r->t2, r->name2, payload);
      result = subst_type_in_term(body, r->name, p->ann2);
      break;
    }
    default:
      return {StepResult::Kind::Stuck, {}, nullptr};
  }

  StepResult out{StepResult::Kind::Stepped, {std::move(h), d.rebuild(std::move(result))}, rule};
  return out;
}

// ---------------------------------------------------------------------------
// Driving

enum class Outcome : uint8_t { Value, Stuck, FuelExhausted };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Value: return "value";
    case Outcome::Stuck: return "stuck";
    case Outcome::FuelExhausted: return "fuel-exhausted";
  }
  return "?";
}

struct Trace {
  struct Entry {
    const char* rule;
    Config after;
  };
  Config initial;
  std::vector<Entry> entries;
  Outcome outcome = Outcome::FuelExhausted;
  std::optional<StuckReason> stuck_reason;
  TermPtr stuck_at;

  size_t steps() const { return entries.size(); }
  const Config& final_config() const {
    return entries.empty() ? initial : entries.back().after;
  }
};

// Checks the config invariant up front: free term variables or locations
// outside the heap domain surface as immediate stuckness.
inline std::optional<StuckReason> config_violation(const Config& c) {
  FreeVars fv = free_vars(c.term);
  if (!fv.term_vars.empty()) return StuckReason::FreeVariable;
  for (Loc l : fv.locs)
    if (!c.heap.contains(l)) return StuckReason::DanglingLocation;
  for (const auto& [_, v] : c.heap.cells) {
    FreeVars hv = free_vars(v);
    for (Loc l : hv.locs)
      if (!c.heap.contains(l)) return StuckReason::DanglingLocation;
  }
  return std::nullopt;
}

inline Trace run(const Config& start, size_t fuel, Allocator alloc = Allocator::canonical()) {
  Trace tr;
  tr.initial = start;
  if (auto bad = config_violation(start)) {
    tr.outcome = Outcome::Stuck;
    tr.stuck_reason = *bad;
    tr.stuck_at = start.term;
    return tr;
  }
  Config cur = start;
  for (size_t j = 0;; ++j) {
    StepResult s = step(cur, alloc);
    if (s.kind == StepResult::Kind::Value) {
      tr.outcome = Outcome::Value;
      return tr;
    }
    if (s.kind == StepResult::Kind::Stuck) {
      tr.outcome = Outcome::Stuck;
      tr.stuck_reason = s.reason;
      tr.stuck_at = s.stuck_at;
      return tr;
    }
    if (j == fuel) {
      tr.outcome = Outcome::FuelExhausted;
      return tr;
    }
    cur = s.next;
    tr.entries.push_back({s.rule, cur});
  }
}

// safe within k steps: no reduct reachable in fewer than k steps is stuck.
inline bool safe_k(const Config& c, size_t k) {
  if (k == 0) return true;
  Trace tr = run(c, k - 1);
  return tr.outcome != Outcome::Stuck;
}

// ---------------------------------------------------------------------------
// Location-renaming equivalence (allocator independence)

namespace detail {

inline void collect_locs(const TermPtr& t, std::vector<Loc>& order, std::set<Loc>& seen) {
  if (!t) return;
  if (t->kind == TermKind::RuntimeObj) {
    for (const auto& [n, l] : t->slots)
      if (seen.insert(l).second) order.push_back(l);
    return;
  }
  collect_locs(t->t1, order, seen);
  collect_locs(t->t2, order, seen);
  for (const auto& m : t->methods) collect_locs(m.body, order, seen);
  if (t->kind == TermKind::Update) collect_locs(t->upd.body, order, seen);
}

inline TermPtr relabel_term(const TermPtr& t, const std::map<Loc, Loc>& m);

inline MethodDef relabel_method(const MethodDef& d, const std::map<Loc, Loc>& m) {
  return {d.name, d.self_var, d.self_annot, relabel_term(d.body, m)};
}

inline TermPtr relabel_term(const TermPtr& t, const std::map<Loc, Loc>& m) {
  if (!t) return t;
  switch (t->kind) {
    case TermKind::RuntimeObj: {
      std::vector<std::pair<std::string, Loc>> slots;
      for (const auto& [n, l] : t->slots) {
        auto it = m.find(l);
        slots.emplace_back(n, it == m.end() ? l : it->second);
      }
      return Term::runtime_obj(std::move(slots));
    }
    case TermKind::Var:
      return t;
    case TermKind::Lam:
      return Term::lam(t->name, t->ann, relabel_term(t->t1, m));
    case TermKind::App:
      return Term::app(relabel_term(t->t1, m), relabel_term(t->t2, m));
    case TermKind::ObjNew: {
      std::vector<MethodDef> ms;
      for (const auto& d : t->methods) ms.push_back(relabel_method(d, m));
      return Term::obj_new(t->ann, std::move(ms));
    }
    case TermKind::Invoke:
      return Term::invoke(relabel_term(t->t1, m), t->name);
    case TermKind::Update:
      return Term::update(relabel_term(t->t1, m), t->name, relabel_method(t->upd, m));
    case TermKind::Clone:
      return Term::clone(relabel_term(t->t1, m));
    case TermKind::Fold:
      return Term::fold(t->ann, relabel_term(t->t1, m));
    case TermKind::Unfold:
      return Term::unfold(t->ann, relabel_term(t->t1, m));
    case TermKind::TLam:
      return Term::tlam(t->name, t->ann, relabel_term(t->t1, m));
    case TermKind::TApp:
      return Term::tapp(relabel_term(t->t1, m), t->ann2);
    case TermKind::Pack:
      return Term::pack(t->name, t->ann, t->ann2, relabel_term(t->t1, m), t->ann3);
    case TermKind::Open:
      return Term::open(relabel_term(t->t1, m), t->name, t->ann, t->name2, t->ann2,
                        relabel_term(t->t2, m), t->ann3);
  }
  return t;
}

}  // namespace detail

// Restricts the heap to the cells reachable from the term. Unreachable cells
// are garbage: no further step can observe them.
inline Config gc_config(const Config& c) {
  std::vector<Loc> frontier;
  std::set<Loc> seen;
  detail::collect_locs(c.term, frontier, seen);
  Config out;
  out.term = c.term;
  for (size_t i = 0; i < frontier.size(); ++i) {
    if (const TermPtr* v = c.heap.lookup(frontier[i])) {
      out.heap.cells[frontier[i]] = *v;
      detail::collect_locs(*v, frontier, seen);
    }
  }
  return out;
}

// Renumbers locations by first occurrence (term first, then remaining heap
// cells in ascending order), yielding a canonical form for comparison.
inline Config relabel_config(const Config& c) {
  std::vector<Loc> order;
  std::set<Loc> seen;
  detail::collect_locs(c.term, order, seen);
  std::vector<Loc> frontier = order;
  // walk reachable cells breadth-first so the numbering is structure-driven
  for (size_t i = 0; i < frontier.size(); ++i) {
    if (const TermPtr* v = c.heap.lookup(frontier[i])) {
      std::vector<Loc> more;
      detail::collect_locs(*v, more, seen);
      for (Loc l : more) {
        order.push_back(l);
        frontier.push_back(l);
      }
    }
  }
  for (const auto& [l, _] : c.heap.cells)
    if (seen.insert(l).second) order.push_back(l);
  std::map<Loc, Loc> m;
  for (size_t i = 0; i < order.size(); ++i) m[order[i]] = static_cast<Loc>(i);
  Config out;
  out.term = detail::relabel_term(c.term, m);
  for (const auto& [l, v] : c.heap.cells) out.heap.cells[m.at(l)] = detail::relabel_term(v, m);
  return out;
}

// Equivalence up to a location bijection, on the reachable parts. Garbage
// cells are dropped first: they are unobservable, and no ordering of them is
// stable across allocators.
inline bool config_equiv_upto_locations(const Config& a, const Config& b) {
  Config ca = relabel_config(gc_config(a)), cb = relabel_config(gc_config(b));
  if (ca.heap.cells.size() != cb.heap.cells.size()) return false;
  auto ia = ca.heap.cells.begin(), ib = cb.heap.cells.begin();
  for (; ia != ca.heap.cells.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (!alpha_eq_term(ia->second, ib->second)) return false;
  }
  return alpha_eq_term(ca.term, cb.term);
}

}  // namespace sigma
