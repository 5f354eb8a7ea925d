#include <random>

#include "doctest.h"
#include "planchat/lp.hpp"
#include "support/vertex_oracle.hpp"

using namespace planchat::opt;

TEST_CASE("one-variable LP reaches its bound") {
    LPProblem lp;
    lp.add_variable("x", -1.0);
    lp.add_row({1.0}, Sense::LessEqual, 1.0);
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.x[0] == doctest::Approx(1.0));
    CHECK(sol.objective == doctest::Approx(-1.0));
}

TEST_CASE("contradictory bounds are infeasible") {
    LPProblem lp;
    lp.add_variable("x", 0.0);
    lp.add_row({1.0}, Sense::GreaterEqual, 2.0);
    lp.add_row({1.0}, Sense::LessEqual, 1.0);
    CHECK(solve_lp(lp).status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded ray is reported") {
    LPProblem lp;
    lp.add_variable("x", -1.0);
    lp.add_variable("y", 0.0);
    lp.add_row({1.0, -1.0}, Sense::LessEqual, 1.0);
    CHECK(solve_lp(lp).status == SolveStatus::Unbounded);
}

TEST_CASE("negative right-hand sides and equalities") {
    // min x + y  s.t. -x - y <= -3, x - y = 1  ->  x = 2, y = 1
    LPProblem lp;
    lp.add_variable("x", 1.0);
    lp.add_variable("y", 1.0);
    lp.add_row({-1.0, -1.0}, Sense::LessEqual, -3.0);
    lp.add_row({1.0, -1.0}, Sense::Equal, 1.0);
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(3.0));
    CHECK(lp.max_violation(sol.x) <= 1e-7);
}

TEST_CASE("redundant equality rows are tolerated") {
    LPProblem lp;
    lp.add_variable("x", 1.0);
    lp.add_variable("y", 2.0);
    lp.add_row({1.0, 1.0}, Sense::Equal, 4.0);
    lp.add_row({2.0, 2.0}, Sense::Equal, 8.0);
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(4.0));
}

TEST_CASE("dimension mismatch is rejected") {
    LPProblem lp;
    lp.objective = {1.0, 2.0};
    lp.rows = {{1.0}};
    lp.senses = {Sense::LessEqual};
    lp.rhs = {1.0};
    lp.tags = {{}};
    CHECK_THROWS_AS(solve_lp(lp), DimensionMismatch);
}

TEST_CASE("iteration limit is a distinct status") {
    LPProblem lp;
    lp.add_variable("x", -1.0);
    lp.add_variable("y", -1.0);
    lp.add_row({1.0, 0.0}, Sense::LessEqual, 1.0);
    lp.add_row({0.0, 1.0}, Sense::LessEqual, 1.0);
    SimplexOptions opts;
    opts.max_iterations = 1;
    auto sol = solve_lp(lp, opts);
    CHECK(sol.status == SolveStatus::IterationLimit);
    CHECK(sol.x.empty());
}

TEST_CASE("degenerate cycling example terminates under Bland's rule") {
    // Beale's classic cycling instance.
    LPProblem lp;
    lp.add_variable("x4", -0.75);
    lp.add_variable("x5", 20.0);
    lp.add_variable("x6", -0.5);
    lp.add_variable("x7", 6.0);
    lp.add_row({0.25, -8.0, -1.0, 9.0}, Sense::LessEqual, 0.0);
    lp.add_row({0.5, -12.0, -0.5, 3.0}, Sense::LessEqual, 0.0);
    lp.add_row({0.0, 0.0, 1.0, 0.0}, Sense::LessEqual, 1.0);
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-1.25));
}

TEST_CASE("random small LPs agree with vertex enumeration") {
    std::mt19937 rng(20240417);
    int optimal = 0, infeasible = 0, unbounded = 0;
    for (int trial = 0; trial < 300; ++trial) {
        auto lp = planchat::testing::random_lp(rng);
        auto oracle = planchat::testing::brute_force_lp(lp);
        auto sol = solve_lp(lp);
        INFO("trial " << trial);
        REQUIRE(sol.status == oracle.status);
        if (sol.status == SolveStatus::Optimal) {
            CHECK(std::abs(sol.objective - oracle.objective) <= 1e-6);
            CHECK(lp.max_violation(sol.x) <= 1e-7);
            ++optimal;
        } else if (sol.status == SolveStatus::Infeasible) {
            ++infeasible;
        } else {
            ++unbounded;
        }
    }
    // The generator must exercise every status.
    CHECK(optimal > 30);
    CHECK(infeasible > 10);
    CHECK(unbounded > 10);
}

TEST_CASE("pivoting is deterministic") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto lp = planchat::testing::random_lp(rng);
        auto a = solve_lp(lp);
        auto b = solve_lp(lp);
        CHECK(a.status == b.status);
        CHECK(a.x == b.x);
        CHECK(a.iterations == b.iterations);
    }
}
