#include "doctest.h"
#include "planchat/analysis.hpp"
#include "support/fixtures.hpp"

using namespace planchat;
using namespace planchat::opt;

namespace {

struct Solved {
    PlanningLP model;
    Plan plan;
};

Solved solve_fixture(const std::string& name, std::vector<ScenarioSpec> mods = {}) {
    auto model = build_lp(planchat::testing::load_fixture(name), mods);
    auto sol = solve_lp(model.lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    auto plan = extract_plan(model, sol, "p");
    return {std::move(model), std::move(plan)};
}

}  // namespace

TEST_CASE("on-time order is NotTardy") {
    auto s = solve_fixture("tire_plant");
    auto e = explain_delay(s.model, s.plan, "O1");
    CHECK(e.reason == DelayReason::NotTardy);
    CHECK(e.tardy_units <= 1e-6);
}

TEST_CASE("material-bound fixture blames the late material") {
    auto s = solve_fixture("material_bound");
    auto e = explain_delay(s.model, s.plan, "W1");
    CHECK(e.reason == DelayReason::MaterialShortage);
    CHECK(e.materials == std::vector<std::string>{"resin"});
    // 10 kg on hand covers 10 of 50 units before the due date.
    CHECK(e.tardy_units == doctest::Approx(40));
    CHECK(e.summary().find("resin") != std::string::npos);
}

TEST_CASE("capacity-bound fixture blames the plant") {
    auto s = solve_fixture("capacity_bound");
    auto e = explain_delay(s.model, s.plan, "W1");
    CHECK(e.reason == DelayReason::CapacityShortage);
    CHECK(e.plants == std::vector<std::string>{"line1"});
    CHECK(e.tardy_units == doctest::Approx(20));
}

TEST_CASE("tire fixture: truck order waits for natural rubber") {
    auto s = solve_fixture("tire_plant");
    auto e = explain_delay(s.model, s.plan, "O2");
    CHECK(e.reason == DelayReason::MaterialShortage);
    CHECK(e.materials == std::vector<std::string>{"natural_rubber"});
    CHECK(e.tardy_units == doctest::Approx(40));
}

TEST_CASE("unknown order") {
    auto s = solve_fixture("tire_plant");
    CHECK_THROWS_AS(explain_delay(s.model, s.plan, "O99"), UnknownOrder);
}
