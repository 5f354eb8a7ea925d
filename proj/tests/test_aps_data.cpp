#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "planchat/aps_data.hpp"
#include "support/fixtures.hpp"

using namespace planchat;
using namespace planchat::aps;
using planchat::testing::TempDir;

namespace {

void copy_fixture(const std::string& name, const std::filesystem::path& to) {
    std::filesystem::copy(planchat::testing::fixture_dir(name), to, std::filesystem::copy_options::recursive);
}

void overwrite(const std::filesystem::path& file, const std::string& content) {
    std::ofstream(file) << content;
}

DataErrorKind parse_error_kind(const std::filesystem::path& dir) {
    try {
        parse_instance(dir);
    } catch (const DataError& e) {
        return e.kind();
    }
    FAIL("expected DataError");
    return DataErrorKind::InvalidData;
}

}  // namespace

TEST_CASE("tire plant fixture parses with expected dimensions") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    CHECK(inst.id == "tire_plant");
    CHECK(inst.plants.size() == 2);
    CHECK(inst.products.size() == 2);
    CHECK(inst.materials.size() == 2);
    CHECK(inst.orders.size() == 3);
    CHECK(inst.horizon.size() == 7);
    CHECK(format_date(inst.horizon.front()) == "2024-04-15");
    CHECK(validate_instance(inst).empty());
    CHECK(inst.find_material("natural_rubber")->receipts.size() == 1);
}

TEST_CASE("empty orders file gives an instance without orders") {
    TempDir tmp("aps");
    auto dir = tmp.path() / "ds";
    copy_fixture("tire_plant", dir);
    overwrite(dir / "orders.csv", "id,product_id,quantity,due_date,weight\n");
    auto inst = parse_instance(dir);
    CHECK(inst.orders.empty());
}

TEST_CASE("ingestion errors") {
    TempDir tmp("aps");
    auto dir = tmp.path() / "ds";
    copy_fixture("tire_plant", dir);

    SUBCASE("order referencing an unknown product") {
        overwrite(dir / "orders.csv", "id,product_id,quantity,due_date,weight\nO9,P9,5,2024-04-16,1\n");
        CHECK(parse_error_kind(dir) == DataErrorKind::DanglingReference);
    }
    SUBCASE("missing file") {
        std::filesystem::remove(dir / "bom.csv");
        CHECK(parse_error_kind(dir) == DataErrorKind::MissingFile);
    }
    SUBCASE("malformed numeric field names file and line") {
        overwrite(dir / "materials.csv", "id,name,initial_kg\nnatural_rubber,Natural Rubber,lots\n");
        try {
            parse_instance(dir);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.kind() == DataErrorKind::MalformedRow);
            CHECK(std::string(e.what()).find("materials.csv, 2") != std::string::npos);
        }
    }
    SUBCASE("wrong header") {
        overwrite(dir / "plants.csv", "plant,name\nvancouver,Vancouver\n");
        CHECK(parse_error_kind(dir) == DataErrorKind::MalformedRow);
    }
    SUBCASE("gap in the capacity calendar") {
        overwrite(dir / "capacity.csv", "plant_id,date,hours\nvancouver,2024-04-15,8\nvancouver,2024-04-17,8\n"
                                        "toronto,2024-04-15,8\ntoronto,2024-04-17,8\n");
        CHECK(parse_error_kind(dir) == DataErrorKind::NonContiguousHorizon);
    }
    SUBCASE("invariant violations surface as diagnostics") {
        overwrite(dir / "orders.csv", "id,product_id,quantity,due_date,weight\nO1,passenger_tire,0,2024-04-16,1\n");
        try {
            parse_instance(dir);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.kind() == DataErrorKind::InvalidData);
            REQUIRE(e.diagnostics().size() == 1);
            CHECK(e.diagnostics()[0].invariant == "Order.quantity");
        }
    }
}

TEST_CASE("validate_instance reports one diagnostic per violation") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    CHECK(validate_instance(inst).empty());

    SUBCASE("zero quantity") {
        inst.orders[0].quantity = 0;
        auto d = validate_instance(inst);
        REQUIRE(d.size() == 1);
        CHECK(d[0].invariant == "Order.quantity");
        CHECK(d[0].id == "O1");
    }
    SUBCASE("receipt outside horizon") {
        inst.materials[0].receipts[*parse_date("2024-05-30")] = 5;
        auto d = validate_instance(inst);
        REQUIRE(d.size() == 1);
        CHECK(d[0].invariant == "Material.receipts");
    }
    SUBCASE("duplicate plant id") {
        inst.plants.push_back(inst.plants[0]);
        auto d = validate_instance(inst);
        REQUIRE(d.size() == 1);
        CHECK(d[0].invariant == "Plant.id");
    }
}

TEST_CASE("write then parse is the identity") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    TempDir tmp("aps");
    for (int trial = 0; trial < 10; ++trial) {
        auto inst = planchat::testing::load_fixture("tire_plant");
        for (auto& p : inst.plants)
            for (auto& [d, h] : p.capacity) h = u(rng);
        for (auto& m : inst.materials) m.initial_inventory = u(rng);
        for (auto& o : inst.orders) o.quantity = 1.0 + u(rng);
        inst.plants[0].name = "Plant, with \"quotes\"";
        auto dir = tmp.path() / ("rt" + std::to_string(trial));
        write_instance(inst, dir);
        auto back = parse_instance(dir, inst.id);
        CHECK(back == inst);
    }
}

TEST_CASE("json round trip") {
    auto inst = planchat::testing::load_fixture("tire_plant");
    nlohmann::json j = inst;
    CHECK(j.get<PlanningInstance>() == inst);
}

TEST_CASE("resolve_entity") {
    auto inst = planchat::testing::load_fixture("tire_plant");

    auto r = resolve_entity("natural rubber", inst);
    REQUIRE(r.matched());
    CHECK(r.match->kind == EntityKind::Material);
    CHECK(r.match->id == "natural_rubber");

    CHECK(resolve_entity("zzz", inst).status == ResolveResult::Status::NoMatch);

    auto amb = resolve_entity("rubber", inst);
    CHECK(amb.status == ResolveResult::Status::Ambiguous);
    CHECK(amb.candidates.size() == 2);

    auto plant = resolve_entity("Vancouver", inst);
    REQUIRE(plant.matched());
    CHECK(plant.match->id == "vancouver");

    // Restricting the kind removes cross-kind hits.
    CHECK(resolve_entity("vancouver", inst, EntityKind::Material).status == ResolveResult::Status::NoMatch);

    auto order = resolve_entity("o2", inst, EntityKind::Order);
    REQUIRE(order.matched());
    CHECK(order.match->id == "O2");

    // Deterministic.
    CHECK(resolve_entity("truck", inst).match == resolve_entity("truck", inst).match);
}
