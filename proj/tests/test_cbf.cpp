#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbfbt/cbf.hpp"

using namespace cbfbt;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

WorldState one_agent_world() {
  WorldState w;
  w.agents.push_back({});
  return w;
}

// barrier with state-independent value/gradient, enough to exercise the
// kernel without any geometry
Cbf fixed_cbf(std::string id, double h, Vec2 a, double gamma = 1.0) {
  Cbf c;
  c.id = std::move(id);
  c.gamma = gamma;
  c.value = [h](const WorldState&, int) { return h; };
  c.control_coeff = [a](const WorldState&, int) { return a; };
  return c;
}

Cbf drifting_cbf(std::string id, double h, Vec2 a, double drift) {
  Cbf c = fixed_cbf(std::move(id), h, a);
  c.drift = [drift](const WorldState&, int) { return drift; };
  return c;
}

HalfSpace hs(double ax, double ay, double b, std::string source = "") {
  return {Vec2(ax, ay), b, std::move(source)};
}

// dense polar sampling of the disc; returns the best min-slack found
double grid_max_slack(const std::vector<HalfSpace>& cs, double v_max) {
  auto slack = [&](const Vec2& u) {
    double worst = kInf;
    for (const HalfSpace& c : cs) worst = std::min(worst, c.a.dot(u) - c.b);
    return worst;
  };
  double best = slack(Vec2::Zero());
  for (int ir = 1; ir <= 200; ++ir) {
    double r = v_max * ir / 200.0;
    for (int it = 0; it < 256; ++it) {
      double th = 2.0 * M_PI * it / 256.0;
      best = std::max(best, slack(Vec2(r * std::cos(th), r * std::sin(th))));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("halfspace turns a barrier into its admissibility constraint") {
  WorldState w = one_agent_world();

  SUBCASE("clearance-shaped barrier") {
    HalfSpace c = halfspace(fixed_cbf("clear", 1.0, Vec2(1.0, 0.0)), w, 0);
    CHECK(c.a.x() == doctest::Approx(1.0));
    CHECK(c.a.y() == doctest::Approx(0.0));
    CHECK(c.b == doctest::Approx(-1.0));
    CHECK(c.source == "clear");
  }
  SUBCASE("drift tightens the bound") {
    HalfSpace c = halfspace(drifting_cbf("batt", 4.0, Vec2(-1.0, 0.0), -0.5), w, 0);
    CHECK(c.b == doctest::Approx(-3.5));
  }
  SUBCASE("on the boundary only the drift remains") {
    CHECK(halfspace(fixed_cbf("edge", 0.0, Vec2(0.0, 1.0)), w, 0).b == doctest::Approx(0.0));
    CHECK(halfspace(drifting_cbf("edge2", 0.0, Vec2(0.0, 1.0), -0.25), w, 0).b ==
          doctest::Approx(0.25));
  }
  SUBCASE("gamma scales how fast the barrier may decay") {
    HalfSpace c = halfspace(fixed_cbf("fast", 1.5, Vec2(1.0, 0.0), 2.0), w, 0);
    CHECK(c.b == doctest::Approx(-3.0));
  }
  SUBCASE("non-finite states are rejected by name") {
    Cbf nan_cbf = fixed_cbf("broken", std::nan(""), Vec2(1.0, 0.0));
    CHECK_THROWS_AS(halfspace(nan_cbf, w, 0), std::domain_error);
    Cbf inf_cbf = fixed_cbf("unbounded", kInf, Vec2(1.0, 0.0));
    CHECK_THROWS_AS(halfspace(inf_cbf, w, 0), std::domain_error);
  }
}

TEST_CASE("composition is min for and, max for or") {
  CHECK(compose_and({2.0, -1.0}) == doctest::Approx(-1.0));
  CHECK(compose_or({2.0, -1.0}) == doctest::Approx(2.0));
  CHECK(compose_and({0.5}) == doctest::Approx(0.5));
  CHECK(compose_and({2.0, 0.5, 4.0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(compose_and({}), std::invalid_argument);
  CHECK_THROWS_AS(compose_or({}), std::invalid_argument);
}

TEST_CASE("registry rejects duplicates and dangling references") {
  CbfRegistry reg;
  reg.add_atom(fixed_cbf("a", 1.0, Vec2(1.0, 0.0)));
  CHECK_THROWS_AS(reg.add_atom(fixed_cbf("a", 2.0, Vec2(0.0, 1.0))), std::invalid_argument);

  reg.add_condition("cond", BooleanExpr::make_atom("a"));
  CHECK_THROWS_AS(reg.add_condition("cond", BooleanExpr::make_atom("a")), std::invalid_argument);
  CHECK_THROWS_AS(reg.add_condition("other", BooleanExpr::make_atom("missing")),
                  std::invalid_argument);

  CHECK_THROWS_AS(reg.atom("missing"), std::invalid_argument);
  CHECK_THROWS_AS(reg.condition_expr("missing"), std::invalid_argument);
  CHECK(reg.atom("a").id == "a");
  CHECK(to_string(reg.condition_expr("cond")) == "a");
}

TEST_CASE("registry keeps conditions in insertion order") {
  CbfRegistry reg;
  reg.add_atom(fixed_cbf("z", 1.0, Vec2(1.0, 0.0)));
  reg.add_atom(fixed_cbf("a", 1.0, Vec2(1.0, 0.0)));
  reg.add_condition("zeta", BooleanExpr::make_atom("z"));
  reg.add_condition("alpha", BooleanExpr::make_atom("a"));
  CHECK(reg.condition_order() == std::vector<std::string>{"zeta", "alpha"});
}

TEST_CASE("expr_value composes barrier values along the expression") {
  WorldState w = one_agent_world();
  CbfRegistry reg;
  reg.add_atom(fixed_cbf("p", 2.0, Vec2(1.0, 0.0)));
  reg.add_atom(fixed_cbf("q", -1.0, Vec2(0.0, 1.0)));
  reg.add_atom(fixed_cbf("r", 0.5, Vec2(1.0, 1.0)));
  reg.add_atom(fixed_cbf("gone", -kInf, Vec2(0.0, 0.0)));

  auto atom = [](const char* id) { return BooleanExpr::make_atom(id); };
  CHECK(expr_value(atom("p"), reg, w, 0) == doctest::Approx(2.0));
  CHECK(expr_value(BooleanExpr::make_and({atom("p"), atom("q")}), reg, w, 0) ==
        doctest::Approx(-1.0));
  CHECK(expr_value(BooleanExpr::make_or({atom("p"), atom("q")}), reg, w, 0) ==
        doctest::Approx(2.0));
  CHECK(expr_value(BooleanExpr::make_and({atom("p"), atom("r"), atom("q")}), reg, w, 0) ==
        doctest::Approx(-1.0));
  // an unenforceable branch poisons an and but loses every or
  CHECK(expr_value(BooleanExpr::make_and({atom("p"), atom("gone")}), reg, w, 0) == -kInf);
  CHECK(expr_value(BooleanExpr::make_or({atom("gone"), atom("q")}), reg, w, 0) ==
        doctest::Approx(-1.0));
}

TEST_CASE("composed sign agrees with boolean evaluation for small trees") {
  WorldState w = one_agent_world();
  auto atom = [](int i) { return BooleanExpr::make_atom("h" + std::to_string(i)); };
  std::vector<BooleanExpr> exprs = {
      atom(0),
      BooleanExpr::make_and({atom(0), atom(1)}),
      BooleanExpr::make_or({atom(0), atom(1)}),
      BooleanExpr::make_and({atom(0), BooleanExpr::make_or({atom(1), atom(2)})}),
      BooleanExpr::make_or({BooleanExpr::make_and({atom(0), atom(1)}),
                            BooleanExpr::make_and({atom(2), atom(3)})}),
      BooleanExpr::make_and(
          {atom(0), BooleanExpr::make_or(
                        {atom(1), BooleanExpr::make_and({atom(2), atom(3), atom(4)})})}),
  };
  for (const BooleanExpr& e : exprs) {
    int n = static_cast<int>(atoms_of(e).size());
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      CbfRegistry reg;
      std::map<std::string, bool> truths;
      for (int i = 0; i < n; ++i) {
        double mag = 0.5 + 0.25 * i;
        double h = (mask >> i) & 1u ? mag : -mag;
        reg.add_atom(fixed_cbf("h" + std::to_string(i), h, Vec2(1.0, 0.0)));
        truths["h" + std::to_string(i)] = h >= 0.0;
      }
      double composed = expr_value(e, reg, w, 0);
      CHECK((composed >= 0.0) == eval(e, truths));
    }
  }
}

TEST_CASE("expr_halfspaces keeps the enforceable active constraints") {
  WorldState w = one_agent_world();
  CbfRegistry reg;
  reg.add_atom(fixed_cbf("far", -3.0, Vec2(1.0, 0.0)));
  reg.add_atom(fixed_cbf("near", -1.0, Vec2(0.0, 1.0)));
  reg.add_atom(fixed_cbf("tied", -3.0, Vec2(0.0, -1.0)));
  reg.add_atom(fixed_cbf("pos", 2.0, Vec2(-1.0, 0.0)));
  reg.add_atom(fixed_cbf("lost", -kInf, Vec2(0.5, 0.5)));
  auto atom = [](const char* id) { return BooleanExpr::make_atom(id); };

  SUBCASE("single atom matches halfspace directly") {
    auto got = expr_halfspaces(atom("near"), reg, w, 0);
    REQUIRE(got.size() == 1);
    HalfSpace want = halfspace(reg.atom("near"), w, 0);
    CHECK((got[0].a - want.a).norm() == 0.0);
    CHECK(got[0].b == doctest::Approx(want.b));
    CHECK(got[0].source == "near");
  }
  SUBCASE("or contributes its argmax branch") {
    auto got = expr_halfspaces(BooleanExpr::make_or({atom("far"), atom("near")}), reg, w, 0);
    REQUIRE(got.size() == 1);
    CHECK(got[0].source == "near");
  }
  SUBCASE("or ties resolve to the lowest index") {
    auto got = expr_halfspaces(BooleanExpr::make_or({atom("far"), atom("tied")}), reg, w, 0);
    REQUIRE(got.size() == 1);
    CHECK(got[0].source == "far");
  }
  SUBCASE("and splits into one constraint per branch") {
    auto got = expr_halfspaces(BooleanExpr::make_and({atom("pos"), atom("near")}), reg, w, 0);
    REQUIRE(got.size() == 2);
    CHECK(got[0].source == "pos");
    CHECK(got[1].source == "near");
  }
  SUBCASE("and under the active-atom policy keeps only the argmin") {
    auto got = expr_halfspaces(BooleanExpr::make_and({atom("pos"), atom("near")}), reg, w, 0,
                               AndPolicy::ActiveAtom);
    REQUIRE(got.size() == 1);
    CHECK(got[0].source == "near");
  }
  SUBCASE("unenforceable atoms are omitted") {
    auto in_or = expr_halfspaces(BooleanExpr::make_or({atom("lost"), atom("near")}), reg, w, 0);
    REQUIRE(in_or.size() == 1);
    CHECK(in_or[0].source == "near");
    auto in_and = expr_halfspaces(BooleanExpr::make_and({atom("pos"), atom("lost")}), reg, w, 0);
    REQUIRE(in_and.size() == 1);
    CHECK(in_and[0].source == "pos");
  }
  SUBCASE("nested or keeps the whole winning and branch") {
    BooleanExpr e = BooleanExpr::make_or(
        {atom("far"), BooleanExpr::make_and({atom("pos"), atom("near")})});
    auto got = expr_halfspaces(e, reg, w, 0);
    REQUIRE(got.size() == 2);  // min(2, -1) = -1 beats -3
    CHECK(got[0].source == "pos");
    CHECK(got[1].source == "near");
  }
}

TEST_CASE("feasible decides half-space systems over the disc exactly") {
  CHECK_FALSE(feasible({hs(1, 0, 2)}, 1.0));
  CHECK(feasible({hs(1, 0, 0), hs(-1, 0, 0)}, 1.0));
  CHECK(feasible({hs(1, 0, 1)}, 1.0));  // tangent point only
  CHECK(feasible({}, 1.0));
  CHECK(feasible({hs(0, 0, -0.5)}, 1.0));       // vacuous
  CHECK_FALSE(feasible({hs(0, 0, 0.5)}, 1.0));  // unsatisfiable regardless of u

  AdmissibleSet set;
  set.constraints = {hs(0, 1, 0.25)};
  set.v_max = 0.5;
  CHECK(feasible(set));
  set.constraints = {hs(0, 1, 0.75)};
  CHECK_FALSE(feasible(set));
}

TEST_CASE("feasible matches a dense grid oracle away from the boundary") {
  std::mt19937 rng(20240817u);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_real_distribution<double> bound(-1.2, 1.2);
  std::uniform_int_distribution<int> count(1, 4);

  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<HalfSpace> cs;
    int m = count(rng);
    for (int i = 0; i < m; ++i)
      cs.push_back(hs(coeff(rng), coeff(rng), bound(rng), "c" + std::to_string(i)));
    double slack = grid_max_slack(cs, 1.0);
    if (slack > 0.0) {
      CHECK(feasible(cs, 1.0));
      ++checked;
    } else if (slack < -0.02) {  // clear of the grid's resolution band
      CHECK_FALSE(feasible(cs, 1.0));
      ++checked;
    }
  }
  CHECK(checked > 100);  // the sampling ranges keep most cases decisive
}

TEST_CASE("build_khat keeps the largest feasible prefix of whole levels") {
  SUBCASE("conflicting second level is dropped") {
    AdmissibleSet set = build_khat({{hs(1, 0, 0, "right")}, {hs(-1, 0, 0.5, "left")}}, 1.0);
    CHECK(set.active_prefix == 1);
    REQUIRE(set.constraints.size() == 1);
    CHECK(set.constraints[0].source == "right");
    CHECK_FALSE(set.degraded_to_zero);
    CHECK(set.v_max == doctest::Approx(1.0));
  }
  SUBCASE("a single satisfiable level survives whole") {
    AdmissibleSet set = build_khat({{hs(1, 0, -1, "easy")}}, 1.0);
    CHECK(set.active_prefix == 1);
    CHECK(set.constraints.size() == 1);
    CHECK_FALSE(set.degraded_to_zero);
  }
  SUBCASE("infeasible first level degrades to the bare norm bound") {
    AdmissibleSet set = build_khat({{hs(1, 0, 2, "hopeless")}}, 1.0);
    CHECK(set.active_prefix == 0);
    CHECK(set.constraints.empty());
    CHECK(set.degraded_to_zero);
  }
  SUBCASE("levels are atomic: one bad constraint evicts its whole level") {
    AdmissibleSet set = build_khat(
        {{hs(0, 1, 0, "up")}, {hs(1, 0, 0.6, "a"), hs(-1, 0, 0.6, "b")}}, 1.0);
    CHECK(set.active_prefix == 1);
    REQUIRE(set.constraints.size() == 1);
    CHECK(set.constraints[0].source == "up");
  }
  SUBCASE("no levels means no degradation") {
    AdmissibleSet set = build_khat({}, 1.0);
    CHECK(set.active_prefix == 0);
    CHECK_FALSE(set.degraded_to_zero);
    CHECK(feasible(set));
  }
}

TEST_CASE("build_khat returns a feasible maximal prefix on random stacks") {
  std::mt19937 rng(7u);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_real_distribution<double> bound(-1.0, 1.0);
  std::uniform_int_distribution<int> n_levels(1, 4);
  std::uniform_int_distribution<int> n_cs(1, 2);

  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::vector<HalfSpace>> levels;
    int L = n_levels(rng);
    for (int l = 0; l < L; ++l) {
      std::vector<HalfSpace> level;
      int m = n_cs(rng);
      for (int i = 0; i < m; ++i) level.push_back(hs(coeff(rng), coeff(rng), bound(rng)));
      levels.push_back(level);
    }
    AdmissibleSet set = build_khat(levels, 1.0);
    REQUIRE(set.active_prefix <= L);
    CHECK(feasible(set));

    // the constraints are exactly the concatenation of the kept levels
    std::vector<HalfSpace> expect;
    for (int l = 0; l < set.active_prefix; ++l)
      expect.insert(expect.end(), levels[l].begin(), levels[l].end());
    REQUIRE(set.constraints.size() == expect.size());
    for (size_t i = 0; i < expect.size(); ++i) {
      CHECK((set.constraints[i].a - expect[i].a).norm() == 0.0);
      CHECK(set.constraints[i].b == doctest::Approx(expect[i].b));
    }

    // maximality: the next level in would have broken feasibility
    if (set.active_prefix < L) {
      std::vector<HalfSpace> more = set.constraints;
      more.insert(more.end(), levels[set.active_prefix].begin(),
                  levels[set.active_prefix].end());
      CHECK_FALSE(feasible(more, 1.0));
    }
    CHECK(set.degraded_to_zero == (set.active_prefix == 0));
  }
}
