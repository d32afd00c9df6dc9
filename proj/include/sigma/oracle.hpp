#pragma once

// Brute-force declarative subtyping oracle. The subtyping rules are closed as
// written, with free-standing reflexivity and transitivity, over a frozen
// finite universe of types, by iterating rule application to a bounded
// derivation depth. This gives an implementation of the subtype relation that
// shares nothing with the algorithmic checker: no bound promotion, no
// assumption cache, no composite object rule. Agreement between the two on
// the whole universe is an acceptance gate.
//
// Universe: every type of size <= max_size built from Top, Bot, the type
// variables X and Y, procedure arrows, variance-annotated object types over
// the method names {m, n}, and mu-types whose bodies close over their own
// binder (one recursion variable, no free outer variables under mu). The
// enumeration is order-canonical (object methods sorted, sizes ascending,
// alphabetical within a size) and frozen in a manifest file.
//
// Judgments: pairs are closed under the single context Y <: Top, X <: Y, the
// exact context the Amber rule's premise introduces. Closed pairs read off
// the same matrix; extra variable bindings cannot enable derivations between
// closed types (strengthening), and nested Amber premises re-land in this
// context because mu-bodies have no free outer variables.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sigma/ast.hpp"
#include "sigma/binding.hpp"
#include "sigma/printer.hpp"

namespace sigma {

// Sorts object methods by name, recursively, so that structurally equal
// types have one spelling. Universe members are already canonical; use this
// before looking up externally constructed types.
inline TypePtr canonical_type(const TypePtr& t) {
  if (!t) return t;
  switch (t->kind) {
    case TypeKind::Var:
    case TypeKind::Top:
    case TypeKind::Bot:
      return t;
    case TypeKind::Arrow:
      return Type::arrow(canonical_type(t->a), canonical_type(t->b));
    case TypeKind::Obj: {
      std::vector<MethodType> ms;
      for (const auto& m : t->methods)
        ms.push_back({m.name, m.variance, canonical_type(m.type)});
      std::sort(ms.begin(), ms.end(),
                [](const MethodType& a, const MethodType& b) { return a.name < b.name; });
      return Type::obj(std::move(ms));
    }
    case TypeKind::Mu:
      return Type::mu(t->name, canonical_type(t->a));
    default:
      return t;  // other kinds never appear in the oracle universe
  }
}

struct Universe {
  int max_size = 0;
  std::vector<TypePtr> types;        // canonical order: size, then print string
  std::vector<std::string> printed;  // printed[i] == print_type(types[i])
  std::vector<int> sizes;
  std::vector<int> closed;           // ids with no free type variables
  std::map<std::string, int> index;

  size_t count() const { return types.size(); }

  int id_of(const TypePtr& t) const {
    auto it = index.find(print_type(canonical_type(t)));
    return it == index.end() ? -1 : it->second;
  }

  static Universe enumerate(int max_size = 4) {
    Universe u;
    u.max_size = max_size;

    // by_size[s] holds every type of exact size s over {X, Y}, in some order
    std::vector<std::vector<TypePtr>> by_size(max_size + 1);
    if (max_size >= 1)
      by_size[1] = {Type::top(), Type::bot(), Type::var("X"), Type::var("Y"),
                    Type::obj({})};

    static const Variance vs[3] = {Variance::Inv, Variance::Cov, Variance::Con};
    for (int s = 2; s <= max_size; ++s) {
      auto& out = by_size[s];
      // procedure types
      for (int a = 1; a <= s - 2; ++a)
        for (const auto& dom : by_size[a])
          for (const auto& cod : by_size[s - 1 - a])
            out.push_back(Type::arrow(dom, cod));
      // one-method objects
      for (const char* name : {"m", "n"})
        for (Variance v : vs)
          for (const auto& p : by_size[s - 1])
            out.push_back(Type::obj({{name, v, p}}));
      // two-method objects, methods in canonical name order
      for (Variance vm : vs)
        for (Variance vn : vs)
          for (int a = 1; a <= s - 2; ++a)
            for (const auto& pm : by_size[a])
              for (const auto& pn : by_size[s - 1 - a])
                out.push_back(Type::obj({{"m", vm, pm}, {"n", vn, pn}}));
      // recursive types: body may use the binder X but not the outer Y
      for (const auto& body : by_size[s - 1])
        if (!free_type_vars(body).count("Y"))
          out.push_back(Type::mu("X", body));
    }

    for (int s = 1; s <= max_size; ++s) {
      std::vector<std::pair<std::string, TypePtr>> batch;
      for (const auto& t : by_size[s]) batch.emplace_back(print_type(t), t);
      std::sort(batch.begin(), batch.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (auto& [p, t] : batch) {
        if (u.index.count(p)) continue;
        u.index[p] = static_cast<int>(u.types.size());
        u.types.push_back(t);
        u.printed.push_back(p);
        u.sizes.push_back(s);
      }
    }
    for (size_t i = 0; i < u.types.size(); ++i)
      if (free_type_vars(u.types[i]).empty()) u.closed.push_back(static_cast<int>(i));
    return u;
  }

  std::string manifest() const {
    std::string out;
    out += "# subtyping universe: size <= " + std::to_string(max_size) +
           ", variables {X, Y}, methods {m, n}, mu bodies close over their binder\n";
    out += "# types: " + std::to_string(count()) +
           ", closed: " + std::to_string(closed.size()) + "\n";
    for (const auto& p : printed) {
      out += p;
      out += '\n';
    }
    return out;
  }
};

// Rule closure over a Universe to a bounded derivation depth: depth 1 holds
// the premise-free rules, and each pass derives conclusions whose premises
// hold at the previous depth (transitivity included, one cut per pass).
class DeclarativeOracle {
 public:
  static DeclarativeOracle close(const Universe& u, int max_depth = 8) {
    DeclarativeOracle o;
    o.n_ = static_cast<int>(u.count());
    o.words_ = (o.n_ + 63) / 64;
    o.bits_.assign(static_cast<size_t>(o.n_) * o.words_, 0);
    o.build_infos(u);

    // depth 1: SubRefl, SubTop, SubBot, SubVar, and SubObjVar (premise-free)
    int top_id = u.id_of(Type::top());
    int bot_id = u.id_of(Type::bot());
    int var_x = u.id_of(Type::var("X"));
    int var_y = u.id_of(Type::var("Y"));
    for (int i = 0; i < o.n_; ++i) {
      o.set(i, i);
      if (top_id >= 0) o.set(i, top_id);
      if (bot_id >= 0) o.set(bot_id, i);
    }
    if (var_x >= 0 && var_y >= 0) o.set(var_x, var_y);
    {
      // objects sharing method names and payloads weaken their annotations
      std::map<std::vector<std::pair<char, int>>, std::vector<int>> groups;
      for (int i : o.objs_) {
        std::vector<std::pair<char, int>> sig;
        for (const auto& m : o.infos_[i].ms) sig.emplace_back(m.name, m.payload);
        groups[sig].push_back(i);
      }
      for (const auto& [sig, members] : groups) {
        (void)sig;
        for (int a : members)
          for (int b : members) {
            if (a == b) continue;
            bool ok = true;
            for (size_t k = 0; k < o.infos_[a].ms.size(); ++k) {
              Variance va = o.infos_[a].ms[k].v, vb = o.infos_[b].ms[k].v;
              if (va != Variance::Inv && va != vb) { ok = false; break; }
            }
            if (ok) o.set(a, b);
          }
      }
    }

    // passes 2..max_depth, each reading the previous depth's relation
    o.depth_used_ = 1;
    o.fixpoint_ = false;
    std::vector<uint64_t> prev;
    for (int d = 2; d <= max_depth; ++d) {
      prev = o.bits_;
      o.run_pass(prev);
      if (o.bits_ == prev) {
        o.fixpoint_ = true;
        break;
      }
      o.depth_used_ = d;
    }
    if (!o.fixpoint_) {
      // the loop ran out of depth while still growing, or stabilized exactly
      // at max_depth; probe one further pass to tell the two apart
      prev = o.bits_;
      DeclarativeOracle probe = o;
      probe.run_pass(prev);
      o.fixpoint_ = (probe.bits_ == o.bits_);
    }
    return o;
  }

  bool holds(int a, int b) const { return test(a, b); }
  bool holds(const Universe& u, const TypePtr& a, const TypePtr& b) const {
    int ia = u.id_of(a), ib = u.id_of(b);
    return ia >= 0 && ib >= 0 && test(ia, ib);
  }

  // depth at which the relation last grew (the final relation is already
  // derivable with this depth bound)
  int depth_used() const { return depth_used_; }
  bool reached_fixpoint() const { return fixpoint_; }
  size_t derivable_count() const {
    size_t c = 0;
    for (uint64_t w : bits_) c += static_cast<size_t>(__builtin_popcountll(w));
    return c;
  }

 private:
  struct MethodRef {
    char name;
    Variance v;
    int payload;
  };
  struct Info {
    TypeKind kind;
    int dom = -1, cod = -1;        // Arrow
    int body = -1, body_ren = -1;  // Mu: body, and body with X renamed to Y
    std::vector<MethodRef> ms;     // Obj
    uint8_t mask = 0;              // bit 0: has m, bit 1: has n
  };

  void build_infos(const Universe& u) {
    infos_.assign(n_, Info{});
    for (int i = 0; i < n_; ++i) {
      const TypePtr& t = u.types[i];
      infos_[i].kind = t->kind;
      switch (t->kind) {
        case TypeKind::Arrow:
          infos_[i].dom = u.id_of(t->a);
          infos_[i].cod = u.id_of(t->b);
          arrows_.push_back(i);
          break;
        case TypeKind::Obj:
          for (const auto& m : t->methods) {
            infos_[i].ms.push_back({m.name[0], m.variance, u.id_of(m.type)});
            infos_[i].mask |= (m.name == "m") ? 1 : 2;
          }
          objs_.push_back(i);
          break;
        case TypeKind::Mu:
          infos_[i].body = u.id_of(t->a);
          infos_[i].body_ren = u.id_of(subst_type(t->a, "X", Type::var("Y")));
          mus_.push_back(i);
          break;
        default:
          break;
      }
    }
  }

  // one derivation step: structural rules plus a single transitivity cut,
  // premises drawn from prev, conclusions written into bits_
  void run_pass(const std::vector<uint64_t>& prev) {
    auto holds_prev = [&](int a, int b) {
      return (prev[static_cast<size_t>(a) * words_ + (b >> 6)] >> (b & 63)) & 1;
    };
    // SubProc
    for (int a : arrows_)
      for (int b : arrows_) {
        if (test(a, b)) continue;
        if (holds_prev(infos_[b].dom, infos_[a].dom) &&
            holds_prev(infos_[a].cod, infos_[b].cod))
          set(a, b);
      }
    // SubObj: width with identical annotations, depth guided by them
    for (int a : objs_)
      for (int b : objs_) {
        if (test(a, b)) continue;
        if ((infos_[b].mask & infos_[a].mask) != infos_[b].mask) continue;
        bool ok = true;
        for (const auto& mb : infos_[b].ms) {
          const MethodRef* ma = nullptr;
          for (const auto& m : infos_[a].ms)
            if (m.name == mb.name) { ma = &m; break; }
          if (!ma || ma->v != mb.v) { ok = false; break; }
          if ((mb.v == Variance::Cov || mb.v == Variance::Inv) &&
              !holds_prev(ma->payload, mb.payload)) { ok = false; break; }
          if ((mb.v == Variance::Con || mb.v == Variance::Inv) &&
              !holds_prev(mb.payload, ma->payload)) { ok = false; break; }
        }
        if (ok) set(a, b);
      }
    // SubRec: the premise lives in the same Amber context
    for (int a : mus_)
      for (int b : mus_) {
        if (test(a, b)) continue;
        if (holds_prev(infos_[a].body, infos_[b].body_ren)) set(a, b);
      }
    // SubTrans: row union over one intermediate type
    for (int a = 0; a < n_; ++a) {
      const uint64_t* row_a = &prev[static_cast<size_t>(a) * words_];
      uint64_t* out_a = &bits_[static_cast<size_t>(a) * words_];
      for (int w = 0; w < words_; ++w) {
        uint64_t word = row_a[w];
        while (word) {
          int c = (w << 6) + __builtin_ctzll(word);
          word &= word - 1;
          const uint64_t* row_c = &prev[static_cast<size_t>(c) * words_];
          for (int k = 0; k < words_; ++k) out_a[k] |= row_c[k];
        }
      }
    }
  }

  void set(int a, int b) {
    bits_[static_cast<size_t>(a) * words_ + (b >> 6)] |= 1ull << (b & 63);
  }
  bool test(int a, int b) const {
    return (bits_[static_cast<size_t>(a) * words_ + (b >> 6)] >> (b & 63)) & 1;
  }

  int n_ = 0;
  int words_ = 0;
  int depth_used_ = 0;
  bool fixpoint_ = false;
  std::vector<uint64_t> bits_;
  std::vector<Info> infos_;
  std::vector<int> arrows_, objs_, mus_;
};

// Spec-shaped convenience entry: closes a universe big enough for both sides
// and answers one query. Sweeps should hold a DeclarativeOracle directly.
inline bool declarative_subtype_oracle(const TypePtr& a, const TypePtr& b,
                                       int max_depth = 8, int universe_size = 4) {
  static std::map<std::pair<int, int>, std::pair<Universe, DeclarativeOracle>> cache;
  auto key = std::make_pair(max_depth, universe_size);
  auto it = cache.find(key);
  if (it == cache.end()) {
    Universe u = Universe::enumerate(universe_size);
    DeclarativeOracle o = DeclarativeOracle::close(u, max_depth);
    it = cache.emplace(key, std::make_pair(std::move(u), std::move(o))).first;
  }
  return it->second.second.holds(it->second.first, a, b);
}

}  // namespace sigma
