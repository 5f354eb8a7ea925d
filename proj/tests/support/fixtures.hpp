#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "planchat/aps_data.hpp"

namespace planchat::testing {

inline std::filesystem::path data_dir() { return PLANCHAT_DEFAULT_DATA_DIR; }

inline std::filesystem::path fixture_dir(const std::string& name) { return data_dir() / "fixtures" / name; }

inline aps::PlanningInstance load_fixture(const std::string& name) {
    return aps::parse_instance(fixture_dir(name));
}

/// Seeded perturbation of the tire-plant fixture: capacities, inventories,
/// receipts, quantities, due dates and weights all move, the entity sets do not.
inline aps::PlanningInstance random_variant(std::mt19937& rng) {
    auto inst = load_fixture("tire_plant");
    std::uniform_real_distribution<double> scale(0.4, 1.6);
    std::uniform_int_distribution<std::size_t> day(0, inst.horizon.size() - 1);
    for (auto& p : inst.plants)
        for (auto& [d, h] : p.capacity) h = std::round(h * scale(rng) * 4.0) / 4.0;
    for (auto& m : inst.materials) {
        m.initial_inventory = std::round(m.initial_inventory * scale(rng));
        m.receipts.clear();
        m.receipts[inst.horizon[day(rng)]] = std::round(300.0 * scale(rng));
    }
    for (auto& o : inst.orders) {
        o.quantity = std::round(o.quantity * scale(rng));
        o.due_date = inst.horizon[day(rng)];
        o.weight = std::round(10.0 * scale(rng));
    }
    inst.id = "variant";
    return inst;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (prefix + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace planchat::testing
