#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "planchat/analysis.hpp"
#include "planchat/planning.hpp"
#include "support/fixtures.hpp"

using namespace planchat;
using namespace planchat::opt;

namespace {

Date day(const char* s) { return *parse_date(s); }

ScenarioSpec what_if(DataChange c) { return ScenarioSpec{std::move(c)}; }
ScenarioSpec why_not(Restriction r) { return ScenarioSpec{std::move(r)}; }

Plan solve(const aps::PlanningInstance& inst, const std::vector<ScenarioSpec>& mods = {}) {
    auto model = build_lp(inst, mods);
    auto sol = solve_lp(model.lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    return extract_plan(model, sol, "p");
}

std::size_t count_prefix(const LPProblem& lp, const std::string& prefix) {
    return static_cast<std::size_t>(std::count_if(lp.variable_names.begin(), lp.variable_names.end(),
                                                  [&](const std::string& n) { return n.rfind(prefix, 0) == 0; }));
}

// Recomputes weighted tardiness straight from the allocation map and the order data.
double recompute_tardiness(const aps::PlanningInstance& inst, const Plan& plan, const std::string& order_id) {
    const auto* o = inst.find_order(order_id);
    double total = 0.0;
    for (auto& [key, units] : plan.allocation) {
        if (key.first != order_id) continue;
        auto late = (key.second - o->due_date).count();
        if (late > 0) total += o->weight * static_cast<double>(late) * units;
    }
    return total;
}

void check_conservation(const aps::PlanningInstance& inst, const Plan& plan) {
    for (auto& o : inst.orders) {
        double delivered = 0.0;
        for (auto& [key, units] : plan.allocation)
            if (key.first == o.id) delivered += units;
        CHECK(std::abs(delivered + plan.shortage.at(o.id) - o.quantity) <= 1e-6);
    }
    for (auto& product : inst.products) {
        double made = 0.0, shipped = 0.0;
        for (auto d : inst.horizon) {
            for (auto& [key, units] : plan.production)
                if (std::get<1>(key) == product.id && std::get<2>(key) == d) made += units;
            for (auto& [key, units] : plan.allocation)
                if (key.second == d && inst.find_order(key.first)->product_id == product.id) shipped += units;
            CHECK(shipped <= made + 1e-6);
        }
    }
}

}  // namespace

TEST_CASE("build_lp column and row blocks") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    auto model = build_lp(inst);
    const auto days = inst.horizon.size();
    CHECK(count_prefix(model.lp, "x[") == inst.plants.size() * inst.products.size() * days);
    CHECK(count_prefix(model.lp, "a[") == inst.orders.size() * days);
    CHECK(count_prefix(model.lp, "s[") == inst.orders.size());
    // capacity + material + linking per day, one demand row per order
    CHECK(model.lp.num_rows() == (2 + 2 + 2) * days + 3);
    CHECK_NOTHROW(model.lp.check_dimensions());
    CHECK(model.shortage_penalty == doctest::Approx(1e4 * 10));
}

TEST_CASE("restrictions delete columns or add rows") {
    auto inst = planchat::testing::load_fixture("tire_plant");

    auto forbid = build_lp(inst, {why_not(ForbidPlant{"vancouver"})});
    CHECK(count_prefix(forbid.lp, "x[vancouver,") == 0);
    CHECK(count_prefix(forbid.lp, "x[toronto,") == 14);

    auto only = build_lp(inst, {why_not(RestrictToPlants{{"vancouver"}})});
    CHECK(count_prefix(only.lp, "x[toronto,") == 0);

    auto hard = build_lp(inst, {why_not(HardDeadline{"O1"})});
    CHECK(count_prefix(hard.lp, "s[O1]") == 0);
    CHECK(count_prefix(hard.lp, "a[O1,2024-04-18]") == 0);
    CHECK(count_prefix(hard.lp, "a[O1,2024-04-17]") == 1);

    auto cap = build_lp(inst, {why_not(MaxProduction{"truck_tire", 10})});
    CHECK(cap.lp.tags.back().kind == ConstraintKind::Restriction);
    CHECK(cap.lp.rhs.back() == 10);

    CHECK_THROWS_AS(build_lp(inst, {why_not(ForbidPlant{"nowhere"})}), ScenarioError);

    auto empty = inst;
    empty.horizon.clear();
    CHECK_THROWS_AS(build_lp(empty), ScenarioError);
}

TEST_CASE("apply_what_if") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    const auto original = inst;

    auto more = apply_what_if(inst, AddReceipt{"natural_rubber", day("2024-04-17"), 100});
    CHECK(more.find_material("natural_rubber")->receipts.at(day("2024-04-17")) == 100);
    CHECK(more.find_material("natural_rubber")->receipts.at(day("2024-04-19")) == 400);
    CHECK(inst == original);

    auto stacked = apply_what_if(more, AddReceipt{"natural_rubber", day("2024-04-19"), 50});
    CHECK(stacked.find_material("natural_rubber")->receipts.at(day("2024-04-19")) == 450);

    CHECK(apply_what_if(inst, AddReceipt{"natural_rubber", day("2024-04-17"), 0}) == inst);

    auto expect_kind = [&](const DataChange& c, ScenarioErrorKind kind) {
        try {
            apply_what_if(inst, c);
            FAIL("expected ScenarioError");
        } catch (const ScenarioError& e) {
            CHECK(e.kind() == kind);
        }
    };
    expect_kind(ChangeDueDate{"O1", day("2024-04-01")}, ScenarioErrorKind::DateOutsideHorizon);
    expect_kind(AddReceipt{"unobtainium", day("2024-04-17"), 1}, ScenarioErrorKind::UnknownEntity);
    expect_kind(AddReceipt{"natural_rubber", day("2024-04-17"), -1}, ScenarioErrorKind::NegativeQuantity);
    expect_kind(ChangeOrderQty{"O1", 0}, ScenarioErrorKind::NegativeQuantity);

    auto cap = apply_what_if(inst, SetCapacity{"toronto", day("2024-04-16"), 3});
    CHECK(cap.find_plant("toronto")->capacity.at(day("2024-04-16")) == 3);
    auto due = apply_what_if(inst, ChangeDueDate{"O2", day("2024-04-21")});
    CHECK(due.find_order("O2")->due_date == day("2024-04-21"));
}

TEST_CASE("baseline plan of the tire fixture") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    auto plan = solve(inst);

    // Hand-derived: 40 trucks of O2 wait one day for the 04-19 rubber receipt
    // (10 * 40 = 400), production costs 1200 at Toronto plus 16 units shifted to
    // Vancouver on 04-19.
    CHECK(plan.objective == doctest::Approx(1616).epsilon(1e-9));
    CHECK(plan.breakdown.tardiness_cost == doctest::Approx(400));
    CHECK(plan.breakdown.production_cost == doctest::Approx(1216));
    CHECK(plan.breakdown.shortage_cost == doctest::Approx(0));
    CHECK(std::abs(plan.breakdown.tardiness_cost + plan.breakdown.shortage_cost + plan.breakdown.production_cost -
                   plan.objective) <= 1e-6);
    CHECK(plan.is_baseline());
    CHECK(plan.instance_id == "tire_plant");

    for (auto& o : inst.orders) CHECK(plan.tardiness.at(o.id) == doctest::Approx(recompute_tardiness(inst, plan, o.id)));
    check_conservation(inst, plan);
}

TEST_CASE("extract_plan edge cases") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    SUBCASE("no orders means nothing is produced") {
        inst.orders.clear();
        auto plan = solve(inst);
        CHECK(plan.objective == 0.0);
        for (auto& [k, v] : plan.production) CHECK(v == 0.0);
    }
    SUBCASE("provenance passes through") {
        std::vector<ScenarioSpec> mods{why_not(ForbidPlant{"toronto"})};
        auto plan = solve(inst, mods);
        CHECK(plan.provenance == mods);
        nlohmann::json j = plan;
        CHECK(j["provenance"][0]["restriction"] == "forbid_plant");
        CHECK(nlohmann::json(solve(inst))["provenance"] == "baseline");
    }
    SUBCASE("non-optimal solutions are rejected") {
        auto model = build_lp(inst);
        LPSolution bad;
        bad.status = SolveStatus::Infeasible;
        CHECK_THROWS_AS(extract_plan(model, bad), NotOptimal);
    }
}

TEST_CASE("scenario plans on the tire fixture") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    auto base = solve(inst);

    auto receipt = solve(inst, {what_if(AddReceipt{"natural_rubber", day("2024-04-17"), 100})});
    // 100 kg more by 04-17 lets 20 more trucks ship on time: tardiness 200, and
    // everything fits at Toronto.
    CHECK(receipt.objective == doctest::Approx(1400));
    auto d = diff_plans(base, receipt);
    CHECK(d.objective_delta == doctest::Approx(-216));
    CHECK(d.objective_delta <= 0);
    CHECK(d.per_order_tardiness_delta.at("O2") == doctest::Approx(-200));

    auto vancouver = solve(inst, {why_not(RestrictToPlants{{"vancouver"}})});
    CHECK(vancouver.objective == doctest::Approx(1840));
    for (auto& [key, units] : vancouver.production) CHECK(std::get<0>(key) == "vancouver");
}

TEST_CASE("monotonicity on seeded fixture variants") {
    std::mt19937 rng(4242);
    for (int trial = 0; trial < 20; ++trial) {
        auto inst = planchat::testing::random_variant(rng);
        INFO("trial " << trial);
        auto base = solve(inst);
        check_conservation(inst, base);
        auto more = solve(inst, {what_if(AddReceipt{"synthetic_rubber", inst.horizon[2], 120})});
        CHECK(more.objective <= base.objective + 1e-6);
        auto forbid = solve(inst, {why_not(ForbidPlant{"toronto"})});
        CHECK(forbid.objective >= base.objective - 1e-6);
        auto capped = solve(inst, {why_not(MaxProduction{"passenger_tire", 90})});
        CHECK(capped.objective >= base.objective - 1e-6);
    }
}

TEST_CASE("diff_plans") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    auto base = solve(inst);
    auto self = diff_plans(base, base);
    CHECK(self.objective_delta == 0.0);
    CHECK(self.changed_cells.empty());
    for (auto& [id, v] : self.per_product_total_delta) CHECK(v == 0.0);
    for (auto& [id, v] : self.per_order_tardiness_delta) CHECK(v == 0.0);

    // 40 kg of natural rubber is unused in the baseline, enough for 20 more passenger tires.
    auto bigger = apply_what_if(inst, ChangeOrderQty{"O3", 100});
    auto more = solve(bigger);
    auto d = diff_plans(base, more);
    CHECK(d.total_units_delta() == doctest::Approx(20));
    CHECK(d.per_product_total_delta.at("passenger_tire") == doctest::Approx(20));
    CHECK_FALSE(d.changed_cells.empty());

    auto other = planchat::testing::load_fixture("capacity_bound");
    CHECK_THROWS_AS(diff_plans(base, solve(other)), IncompatiblePlans);
}

TEST_CASE("plan serialization") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    auto plan = solve(inst, {why_not(HardDeadline{"O2"}), what_if(SetCapacity{"toronto", inst.horizon[0], 4})});
    nlohmann::json j = plan;
    CHECK(j.get<Plan>() == plan);

    auto csv = plan_to_csv(plan);
    CHECK(csv.rfind("plant_id,product_id,date,units\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(plan.production.size()));
}

TEST_CASE("scenario specs round-trip through json") {
    std::vector<ScenarioSpec> specs{
        what_if(AddReceipt{"m", day("2024-01-02"), 1.5}), what_if(SetCapacity{"p", day("2024-01-03"), 2}),
        what_if(ChangeOrderQty{"o", 3}),                  what_if(ChangeDueDate{"o", day("2024-01-04")}),
        why_not(RestrictToPlants{{"a", "b"}}),            why_not(ForbidPlant{"a"}),
        why_not(HardDeadline{"o"}),                       why_not(MaxProduction{"x", 7})};
    for (auto& s : specs) {
        nlohmann::json j = s;
        CHECK(j.get<ScenarioSpec>() == s);
        CHECK_FALSE(describe(s).empty());
        CHECK_FALSE(slug(s).empty());
    }
    CHECK(slug(why_not(RestrictToPlants{{"vancouver"}})) == "vancouver_only");
}
