// The declarative subtyping oracle: universe enumeration frozen by manifest,
// rule closure behavior, and exact agreement with the algorithmic checker.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "sigma/oracle.hpp"
#include "sigma/parser.hpp"
#include "sigma/typecheck.hpp"

using namespace sigma;

namespace {

TypePtr T(const std::string& src) { return parse_type(src); }

const Universe& u4() {
  static Universe u = Universe::enumerate(4);
  return u;
}
const DeclarativeOracle& o4() {
  static DeclarativeOracle o = DeclarativeOracle::close(u4(), 8);
  return o;
}

bool algo(const Context& ctx, const TypePtr& a, const TypePtr& b) {
  Context work = ctx;
  detail::Subtyper s(Mode::Variance, 4096, Mutations{});
  SubtypeResult r = s.sub(work, a, b);
  REQUIRE(r.kind != SubtypeResult::Kind::Unknown);
  return r.yes();
}

Context amber_ctx() {
  Context c;
  c.push_type("Y", Type::top());
  c.push_type("X", Type::var("Y"));
  return c;
}

}  // namespace

TEST_CASE("universe enumeration matches the frozen manifest") {
  const char* path = std::getenv("SIGMA_MANIFEST");
  REQUIRE(path != nullptr);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(u4().manifest() == buf.str());

  CHECK(u4().count() == 7169);
  CHECK(u4().closed.size() == 3451);

  // spot membership: canonical spellings resolve, non-members do not
  CHECK(u4().id_of(T("[m : inv Top, n : cov Bot]")) >= 0);
  CHECK(u4().id_of(T("[n : cov Bot, m : inv Top]")) >= 0);  // canonicalized
  CHECK(u4().id_of(T("mu X. [m : cov X]")) >= 0);
  CHECK(u4().id_of(T("Top -> Top -> Top")) == -1);  // size 5
  CHECK(u4().id_of(T("All(X <: Top) X")) == -1);
}

TEST_CASE("closure reaches a fixpoint within the pinned depth") {
  CHECK(o4().reached_fixpoint());
  CHECK(o4().depth_used() <= 8);
  CHECK(o4().depth_used() == 6);
  CHECK(o4().derivable_count() == 1230984);
}

TEST_CASE("premise-free rules hold at depth 1") {
  Universe u = Universe::enumerate(2);
  DeclarativeOracle o = DeclarativeOracle::close(u, 1);
  CHECK(o.holds(u, T("Top"), T("Top")));
  CHECK(o.holds(u, T("Bot"), T("mu X. X")));
  CHECK(o.holds(u, T("[m : cov Top]"), T("Top")));
  CHECK(o.holds(u, T("X"), T("Y")));
  CHECK_FALSE(o.holds(u, T("Y"), T("X")));
  // annotation weakening is premise-free
  CHECK(o.holds(u, T("[m : inv Top]"), T("[m : cov Top]")));
  CHECK(o.holds(u, T("[m : inv Top]"), T("[m : con Top]")));
  CHECK_FALSE(o.holds(u, T("[m : cov Top]"), T("[m : con Top]")));
  // width needs a real SubObj step, which needs depth 2
  CHECK_FALSE(o.holds(u, T("[m : inv Top]"), T("[]")));
  DeclarativeOracle o2 = DeclarativeOracle::close(u, 2);
  CHECK(o2.holds(u, T("[m : inv Top]"), T("[]")));
}

TEST_CASE("known derivations and refusals") {
  const Universe& u = u4();
  const DeclarativeOracle& o = o4();

  CHECK(o.holds(u, T("[m : inv Top, n : inv Bot]"), T("[m : inv Top]")));
  CHECK(o.holds(u, T("[m : inv Top]"), T("[m : con Top]")));
  CHECK(o.holds(u, T("mu X. [m : cov X]"), T("mu X. [m : cov X]")));
  // width and weakening compose through transitivity
  CHECK(o.holds(u, T("[m : inv Bot, n : inv Top]"), T("[m : cov Top]")));
  // recursive subtyping via the Amber hypothesis
  CHECK(o.holds(u, T("mu X. [m : cov X]"), T("mu X. [m : cov Top]")));
  CHECK(o.holds(u, T("mu X. Top -> X"), T("mu X. Bot -> X")));
  CHECK_FALSE(o.holds(u, T("mu X. Bot -> X"), T("mu X. Top -> X")));
  CHECK_FALSE(o.holds(u, T("Top"), T("Bot")));
  CHECK_FALSE(o.holds(u, T("Top"), T("mu X. Top")));
  CHECK(o.holds(u, T("mu X. Top"), T("Top")));
  // no unfolding rule: rolled and unrolled spellings stay unrelated
  CHECK_FALSE(o.holds(u, T("[m : cov (mu X. [m : cov X])]"), T("mu X. [m : cov X]")));

  CHECK(declarative_subtype_oracle(T("Bot"), T("Top"), 2));
  CHECK(declarative_subtype_oracle(T("[m : inv Top]"), T("[m : con Top]"), 3));
}

TEST_CASE("small universe: oracle equals the algorithm everywhere") {
  Universe u = Universe::enumerate(3);
  DeclarativeOracle o = DeclarativeOracle::close(u, 8);
  CHECK(o.reached_fixpoint());

  Context empty;
  for (int ia : u.closed)
    for (int ib : u.closed) {
      bool a = algo(empty, u.types[ia], u.types[ib]);
      if (a != o.holds(ia, ib)) {
        INFO(u.printed[ia] << "  <:  " << u.printed[ib]);
        REQUIRE(a == o.holds(ia, ib));
      }
    }

  Context amber = amber_ctx();
  int n = static_cast<int>(u.count());
  for (int ia = 0; ia < n; ++ia)
    for (int ib = 0; ib < n; ++ib) {
      bool a = algo(amber, u.types[ia], u.types[ib]);
      if (a != o.holds(ia, ib)) {
        INFO(u.printed[ia] << "  <:  " << u.printed[ib]);
        REQUIRE(a == o.holds(ia, ib));
      }
    }
}

TEST_CASE("full universe: sampled agreement, closed and open pairs") {
  const Universe& u = u4();
  const DeclarativeOracle& o = o4();
  std::mt19937 rng(20240819);

  Context empty;
  std::uniform_int_distribution<size_t> pick_closed(0, u.closed.size() - 1);
  for (int i = 0; i < 60000; ++i) {
    int ia = u.closed[pick_closed(rng)];
    int ib = u.closed[pick_closed(rng)];
    bool a = algo(empty, u.types[ia], u.types[ib]);
    if (a != o.holds(ia, ib)) {
      INFO(u.printed[ia] << "  <:  " << u.printed[ib]);
      REQUIRE(a == o.holds(ia, ib));
    }
  }

  Context amber = amber_ctx();
  std::uniform_int_distribution<int> pick(0, static_cast<int>(u.count()) - 1);
  for (int i = 0; i < 60000; ++i) {
    int ia = pick(rng);
    int ib = pick(rng);
    bool a = algo(amber, u.types[ia], u.types[ib]);
    if (a != o.holds(ia, ib)) {
      INFO(u.printed[ia] << "  <:  " << u.printed[ib]);
      REQUIRE(a == o.holds(ia, ib));
    }
  }
}

TEST_CASE("algorithmic relation is reflexive and transitive on the universe") {
  const Universe& u = u4();
  Context empty;
  Context amber = amber_ctx();
  for (size_t i = 0; i < u.count(); ++i) {
    Context& ctx = free_type_vars(u.types[i]).empty() ? empty : amber;
    if (!algo(ctx, u.types[i], u.types[i])) {
      INFO(u.printed[i]);
      REQUIRE(false);
    }
  }

  // sample transitivity: chain derivable pairs through a shared middle
  Universe u3 = Universe::enumerate(3);
  DeclarativeOracle o3 = DeclarativeOracle::close(u3, 8);
  std::vector<std::pair<int, int>> yes;
  std::map<int, std::vector<int>> succ;
  for (int a : u3.closed)
    for (int b : u3.closed)
      if (o3.holds(a, b)) {
        yes.emplace_back(a, b);
        succ[a].push_back(b);
      }
  std::mt19937 rng(7);
  std::uniform_int_distribution<size_t> pick(0, yes.size() - 1);
  for (size_t i = 0; i < 20000; ++i) {
    auto [a, b] = yes[pick(rng)];
    const auto& outs = succ[b];
    int c = outs[std::uniform_int_distribution<size_t>(0, outs.size() - 1)(rng)];
    if (!algo(empty, u3.types[a], u3.types[c])) {
      INFO(u3.printed[a] << " <: " << u3.printed[b] << " <: " << u3.printed[c]);
      REQUIRE(false);
    }
  }
}
