#include "doctest.h"
#include "planchat/planning.hpp"
#include "planchat/relaxation.hpp"
#include "support/fixtures.hpp"

using namespace planchat;
using namespace planchat::opt;

TEST_CASE("minimal violation of x >= 2 and x <= 1 is one unit on one row") {
    LPProblem lp;
    lp.add_variable("x", 0.0);
    lp.add_row({1.0}, Sense::GreaterEqual, 2.0, {ConstraintKind::Other, "lower", -1});
    lp.add_row({1.0}, Sense::LessEqual, 1.0, {ConstraintKind::Other, "upper", -1});
    REQUIRE(solve_lp(lp).status == SolveStatus::Infeasible);

    auto r = relax_infeasible(lp);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.total_violation == doctest::Approx(1.0));
    CHECK(r.violated.size() == 1);
}

TEST_CASE("feasible baseline relaxes to itself") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    auto model = build_lp(inst);
    auto sol = solve_lp(model.lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    auto r = relax_infeasible(model.lp);
    CHECK(r.total_violation == 0.0);
    CHECK(r.violated.empty());
    CHECK(std::abs(r.relaxed_objective - sol.objective) <= 1e-5);
}

TEST_CASE("impossible hard deadline is attributed to the order") {
    auto inst = planchat::testing::load_fixture("capacity_bound");
    auto model = build_lp(inst, {ScenarioSpec{Restriction{HardDeadline{"W1"}}}});
    REQUIRE(solve_lp(model.lp).status == SolveStatus::Infeasible);
    auto r = relax_infeasible(model.lp);
    REQUIRE(r.status == SolveStatus::Optimal);
    // Three days of 10 units each against an order of 50.
    CHECK(r.total_violation == doctest::Approx(20));
    REQUIRE_FALSE(r.violated.empty());
    for (auto& v : r.violated) {
        CHECK((v.tag.kind == ConstraintKind::Demand || v.tag.kind == ConstraintKind::Linking));
        CHECK(v.tag.entity == (v.tag.kind == ConstraintKind::Demand ? "W1" : "widget"));
    }
    double sum = 0.0;
    for (auto& v : r.violated) sum += v.amount;
    CHECK(sum == doctest::Approx(r.total_violation));
}
