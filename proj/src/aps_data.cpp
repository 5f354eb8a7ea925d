#include "planchat/aps_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "planchat/csv.hpp"
#include "planchat/text.hpp"

namespace planchat::aps {

namespace fs = std::filesystem;
using nlohmann::json;

DataError::DataError(DataErrorKind kind, std::string message, std::vector<Diagnostic> diagnostics)
    : std::runtime_error(std::move(message)), kind_(kind), diagnostics_(std::move(diagnostics)) {}

void to_json(json& j, const Diagnostic& d) {
    j = json{{"invariant", d.invariant}, {"id", d.id}, {"message", d.message}};
}

namespace {

template <typename T>
const T* find_by_id(const std::vector<T>& items, const std::string& id) {
    auto it = std::find_if(items.begin(), items.end(), [&](const T& x) { return x.id == id; });
    return it == items.end() ? nullptr : &*it;
}

template <typename T>
T* find_by_id(std::vector<T>& items, const std::string& id) {
    auto it = std::find_if(items.begin(), items.end(), [&](const T& x) { return x.id == id; });
    return it == items.end() ? nullptr : &*it;
}

struct Table {
    std::string file;
    std::vector<std::pair<std::size_t, csv::Row>> rows;  // (line number, fields)
};

[[noreturn]] void malformed(const std::string& file, std::size_t line, const std::string& why) {
    auto msg = fmt::format("MalformedRow({}, {}): {}", file, line, why);
    throw DataError(DataErrorKind::MalformedRow, msg, {{"MalformedRow", fmt::format("{}:{}", file, line), why}});
}

Table read_table(const fs::path& dir, const std::string& file, const std::vector<std::string>& header) {
    auto path = dir / file;
    std::ifstream in(path);
    if (!in) {
        throw DataError(DataErrorKind::MissingFile, fmt::format("MissingFile({})", file),
                        {{"MissingFile", file, "dataset file not found"}});
    }
    Table t{file, {}};
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    csv::Row row;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (!csv::split_record(line, row) || row != header) {
                malformed(file, line_no, fmt::format("expected header '{}'", fmt::join(header, ",")));
            }
            have_header = true;
            continue;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (!csv::split_record(line, row)) malformed(file, line_no, "unterminated quoted field");
        if (row.size() != header.size()) {
            malformed(file, line_no, fmt::format("expected {} fields, got {}", header.size(), row.size()));
        }
        t.rows.emplace_back(line_no, row);
    }
    if (!have_header) malformed(file, 1, "missing header row");
    return t;
}

double parse_number(const std::string& text, const std::string& file, std::size_t line) {
    if (text.empty()) malformed(file, line, "empty numeric field");
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !std::isfinite(v)) {
        malformed(file, line, fmt::format("'{}' is not a number", text));
    }
    return v;
}

Date parse_day(const std::string& text, const std::string& file, std::size_t line) {
    auto d = parse_date(text);
    if (!d) malformed(file, line, fmt::format("'{}' is not an ISO-8601 date", text));
    return *d;
}

[[noreturn]] void dangling(const std::string& kind, const std::string& id, const std::string& file,
                           std::size_t line) {
    throw DataError(DataErrorKind::DanglingReference,
                    fmt::format("DanglingReference({}, {}) at {}:{}", kind, id, file, line),
                    {{"DanglingReference", id, fmt::format("unknown {} referenced at {}:{}", kind, file, line)}});
}

std::string fmt_num(double v) { return fmt::format("{}", v); }

}  // namespace

const Plant* PlanningInstance::find_plant(const std::string& id) const { return find_by_id(plants, id); }
const Product* PlanningInstance::find_product(const std::string& id) const { return find_by_id(products, id); }
const Material* PlanningInstance::find_material(const std::string& id) const { return find_by_id(materials, id); }
const Order* PlanningInstance::find_order(const std::string& id) const { return find_by_id(orders, id); }

std::optional<std::size_t> PlanningInstance::day_index(Date d) const {
    if (horizon.empty()) return std::nullopt;
    auto offset = (d - horizon.front()).count();
    if (offset < 0 || static_cast<std::size_t>(offset) >= horizon.size()) return std::nullopt;
    if (horizon[static_cast<std::size_t>(offset)] != d) return std::nullopt;
    return static_cast<std::size_t>(offset);
}

PlanningInstance parse_instance(const fs::path& dataset_dir, std::string id) {
    PlanningInstance inst;
    inst.id = id.empty() ? dataset_dir.filename().string() : std::move(id);
    if (inst.id.empty()) inst.id = dataset_dir.parent_path().filename().string();

    auto plants = read_table(dataset_dir, "plants.csv", {"id", "name"});
    auto capacity = read_table(dataset_dir, "capacity.csv", {"plant_id", "date", "hours"});
    auto products = read_table(dataset_dir, "products.csv", {"id", "name"});
    auto proc = read_table(dataset_dir, "proc.csv", {"plant_id", "product_id", "hours_per_unit", "cost_per_unit"});
    auto bom = read_table(dataset_dir, "bom.csv", {"product_id", "material_id", "kg_per_unit"});
    auto materials = read_table(dataset_dir, "materials.csv", {"id", "name", "initial_kg"});
    auto receipts = read_table(dataset_dir, "receipts.csv", {"material_id", "date", "kg"});
    auto orders = read_table(dataset_dir, "orders.csv", {"id", "product_id", "quantity", "due_date", "weight"});

    for (auto& [line, r] : plants.rows) inst.plants.push_back(Plant{r[0], r[1], {}, {}, {}});
    for (auto& [line, r] : products.rows) inst.products.push_back(Product{r[0], r[1], {}});
    for (auto& [line, r] : materials.rows) {
        inst.materials.push_back(Material{r[0], r[1], parse_number(r[2], materials.file, line), {}});
    }

    std::set<Date> days;
    for (auto& [line, r] : capacity.rows) {
        auto* plant = find_by_id(inst.plants, r[0]);
        if (!plant) dangling("plant", r[0], capacity.file, line);
        Date d = parse_day(r[1], capacity.file, line);
        plant->capacity[d] += parse_number(r[2], capacity.file, line);
        days.insert(d);
    }
    inst.horizon.assign(days.begin(), days.end());
    for (std::size_t i = 1; i < inst.horizon.size(); ++i) {
        if ((inst.horizon[i] - inst.horizon[i - 1]).count() != 1) {
            throw DataError(DataErrorKind::NonContiguousHorizon,
                            fmt::format("NonContiguousHorizon: gap after {}", format_date(inst.horizon[i - 1])),
                            {{"Instance.horizon", inst.id, "capacity dates are not contiguous"}});
        }
    }

    for (auto& [line, r] : proc.rows) {
        auto* plant = find_by_id(inst.plants, r[0]);
        if (!plant) dangling("plant", r[0], proc.file, line);
        if (!find_by_id(inst.products, r[1])) dangling("product", r[1], proc.file, line);
        plant->proc_time[r[1]] = parse_number(r[2], proc.file, line);
        plant->unit_cost[r[1]] = parse_number(r[3], proc.file, line);
    }
    for (auto& [line, r] : bom.rows) {
        auto* product = find_by_id(inst.products, r[0]);
        if (!product) dangling("product", r[0], bom.file, line);
        if (!find_by_id(inst.materials, r[1])) dangling("material", r[1], bom.file, line);
        product->bom[r[1]] += parse_number(r[2], bom.file, line);
    }
    for (auto& [line, r] : receipts.rows) {
        auto* material = find_by_id(inst.materials, r[0]);
        if (!material) dangling("material", r[0], receipts.file, line);
        material->receipts[parse_day(r[1], receipts.file, line)] += parse_number(r[2], receipts.file, line);
    }
    for (auto& [line, r] : orders.rows) {
        if (!find_by_id(inst.products, r[1])) dangling("product", r[1], orders.file, line);
        inst.orders.push_back(Order{r[0], r[1], parse_number(r[2], orders.file, line),
                                    parse_day(r[3], orders.file, line), parse_number(r[4], orders.file, line)});
    }

    auto diagnostics = validate_instance(inst);
    if (!diagnostics.empty()) {
        auto message = fmt::format("dataset violates {} invariant(s); first: {} ({})", diagnostics.size(),
                                   diagnostics.front().invariant, diagnostics.front().message);
        throw DataError(DataErrorKind::InvalidData, std::move(message), std::move(diagnostics));
    }
    return inst;
}

void write_instance(const PlanningInstance& inst, const fs::path& dir) {
    fs::create_directories(dir);
    auto open = [&](const char* name, csv::Row header) {
        std::ofstream out(dir / name);
        if (!out) throw std::runtime_error(fmt::format("cannot write {}", (dir / name).string()));
        csv::write_row(out, header);
        return out;
    };
    {
        auto out = open("plants.csv", {"id", "name"});
        for (auto& p : inst.plants) csv::write_row(out, {p.id, p.name});
    }
    {
        auto out = open("capacity.csv", {"plant_id", "date", "hours"});
        for (auto& p : inst.plants)
            for (auto& [d, h] : p.capacity) csv::write_row(out, {p.id, format_date(d), fmt_num(h)});
    }
    {
        auto out = open("products.csv", {"id", "name"});
        for (auto& p : inst.products) csv::write_row(out, {p.id, p.name});
    }
    {
        auto out = open("proc.csv", {"plant_id", "product_id", "hours_per_unit", "cost_per_unit"});
        for (auto& p : inst.plants)
            for (auto& [prod, h] : p.proc_time) {
                auto cost = p.unit_cost.count(prod) ? p.unit_cost.at(prod) : 0.0;
                csv::write_row(out, {p.id, prod, fmt_num(h), fmt_num(cost)});
            }
    }
    {
        auto out = open("bom.csv", {"product_id", "material_id", "kg_per_unit"});
        for (auto& p : inst.products)
            for (auto& [m, kg] : p.bom) csv::write_row(out, {p.id, m, fmt_num(kg)});
    }
    {
        auto out = open("materials.csv", {"id", "name", "initial_kg"});
        for (auto& m : inst.materials) csv::write_row(out, {m.id, m.name, fmt_num(m.initial_inventory)});
    }
    {
        auto out = open("receipts.csv", {"material_id", "date", "kg"});
        for (auto& m : inst.materials)
            for (auto& [d, kg] : m.receipts) csv::write_row(out, {m.id, format_date(d), fmt_num(kg)});
    }
    {
        auto out = open("orders.csv", {"id", "product_id", "quantity", "due_date", "weight"});
        for (auto& o : inst.orders)
            csv::write_row(out, {o.id, o.product_id, fmt_num(o.quantity), format_date(o.due_date), fmt_num(o.weight)});
    }
}

std::vector<Diagnostic> validate_instance(const PlanningInstance& inst) {
    std::vector<Diagnostic> out;
    auto add = [&](std::string inv, std::string id, std::string msg) {
        out.push_back({std::move(inv), std::move(id), std::move(msg)});
    };
    auto in_horizon = [&](Date d) { return inst.day_index(d).has_value(); };

    for (std::size_t i = 1; i < inst.horizon.size(); ++i) {
        if ((inst.horizon[i] - inst.horizon[i - 1]).count() != 1) {
            add("Instance.horizon", inst.id,
                fmt::format("horizon not contiguous between {} and {}", format_date(inst.horizon[i - 1]),
                            format_date(inst.horizon[i])));
        }
    }

    auto check_unique = [&](const auto& items, const char* inv) {
        std::set<std::string> seen;
        for (auto& x : items)
            if (!seen.insert(x.id).second) add(inv, x.id, "duplicate id");
    };
    check_unique(inst.plants, "Plant.id");
    check_unique(inst.products, "Product.id");
    check_unique(inst.materials, "Material.id");
    check_unique(inst.orders, "Order.id");

    for (auto& p : inst.plants) {
        for (auto d : inst.horizon)
            if (!p.capacity.count(d)) add("Plant.capacity", p.id, fmt::format("no capacity for {}", format_date(d)));
        for (auto& [d, h] : p.capacity) {
            if (!in_horizon(d)) add("Plant.capacity", p.id, fmt::format("capacity dated {} outside horizon", format_date(d)));
            if (!(h >= 0)) add("Plant.capacity", p.id, fmt::format("negative capacity on {}", format_date(d)));
        }
        for (auto& [prod, h] : p.proc_time) {
            if (!inst.find_product(prod)) add("Plant.proc_time", p.id, fmt::format("unknown product {}", prod));
            if (!(h > 0)) add("Plant.proc_time", p.id, fmt::format("processing time for {} must be > 0", prod));
        }
        for (auto& [prod, c] : p.unit_cost) {
            if (!(c >= 0)) add("Plant.unit_cost", p.id, fmt::format("negative unit cost for {}", prod));
        }
    }
    for (auto& p : inst.products) {
        for (auto& [m, kg] : p.bom) {
            if (!inst.find_material(m)) add("Product.bom", p.id, fmt::format("unknown material {}", m));
            if (!(kg >= 0)) add("Product.bom", p.id, fmt::format("negative requirement for {}", m));
        }
    }
    for (auto& m : inst.materials) {
        if (!(m.initial_inventory >= 0)) add("Material.initial_inventory", m.id, "negative initial inventory");
        for (auto& [d, kg] : m.receipts) {
            if (!in_horizon(d)) add("Material.receipts", m.id, fmt::format("receipt dated {} outside horizon", format_date(d)));
            if (!(kg >= 0)) add("Material.receipts", m.id, fmt::format("negative receipt on {}", format_date(d)));
        }
    }
    for (auto& o : inst.orders) {
        if (!inst.find_product(o.product_id)) add("Order.product_id", o.id, fmt::format("unknown product {}", o.product_id));
        if (!(o.quantity > 0)) add("Order.quantity", o.id, "quantity must be > 0");
        if (!in_horizon(o.due_date)) add("Order.due_date", o.id, fmt::format("due date {} outside horizon", format_date(o.due_date)));
        if (!(o.weight > 0)) add("Order.weight", o.id, "weight must be > 0");
    }
    return out;
}

std::string to_string(EntityKind kind) {
    switch (kind) {
        case EntityKind::Plant: return "plant";
        case EntityKind::Product: return "product";
        case EntityKind::Material: return "material";
        case EntityKind::Order: return "order";
    }
    return "unknown";
}

std::optional<EntityKind> entity_kind_from_string(const std::string& s) {
    if (s == "plant") return EntityKind::Plant;
    if (s == "product") return EntityKind::Product;
    if (s == "material") return EntityKind::Material;
    if (s == "order") return EntityKind::Order;
    return std::nullopt;
}

ResolveResult resolve_entity(const std::string& mention, const PlanningInstance& inst, std::optional<EntityKind> kind) {
    ResolveResult result;
    auto needle = text::normalize_phrase(mention);
    if (needle.empty()) return result;

    std::vector<EntityRef> exact, partial;

    // Orders carry no name; their id doubles as the display name.
    struct Named {
        const std::string& id;
        const std::string& name;
    };
    auto scan = [&](EntityKind k, const std::vector<Named>& items) {
        if (kind && *kind != k) return;
        for (auto& x : items) {
            auto id = text::normalize_phrase(x.id);
            auto name = text::normalize_phrase(x.name);
            if (needle == id || needle == name) {
                exact.push_back({k, x.id});
            } else if (id.find(needle) != std::string::npos || name.find(needle) != std::string::npos) {
                partial.push_back({k, x.id});
            }
        }
    };
    auto named = [](const auto& items) {
        std::vector<Named> v;
        for (auto& x : items) v.push_back({x.id, x.name});
        return v;
    };
    std::vector<Named> orders;
    for (auto& o : inst.orders) orders.push_back({o.id, o.id});

    scan(EntityKind::Plant, named(inst.plants));
    scan(EntityKind::Product, named(inst.products));
    scan(EntityKind::Material, named(inst.materials));
    scan(EntityKind::Order, orders);

    if (exact.size() == 1) {
        result.status = ResolveResult::Status::Match;
        result.match = exact.front();
    } else if (exact.size() > 1) {
        result.status = ResolveResult::Status::Ambiguous;
        result.candidates = std::move(exact);
    } else if (partial.size() == 1) {
        result.status = ResolveResult::Status::Match;
        result.match = partial.front();
    } else if (partial.size() > 1) {
        result.status = ResolveResult::Status::Ambiguous;
        result.candidates = std::move(partial);
    }
    return result;
}

void to_json(json& j, const PlanningInstance& inst) {
    auto dated = [](const std::map<Date, double>& m) {
        json o = json::object();
        for (auto& [d, v] : m) o[format_date(d)] = v;
        return o;
    };
    j = json::object();
    j["id"] = inst.id;
    j["horizon"] = json::array();
    for (auto d : inst.horizon) j["horizon"].push_back(format_date(d));
    j["plants"] = json::array();
    for (auto& p : inst.plants) {
        j["plants"].push_back({{"id", p.id}, {"name", p.name}, {"capacity", dated(p.capacity)},
                               {"proc_time", p.proc_time}, {"unit_cost", p.unit_cost}});
    }
    j["products"] = json::array();
    for (auto& p : inst.products) j["products"].push_back({{"id", p.id}, {"name", p.name}, {"bom", p.bom}});
    j["materials"] = json::array();
    for (auto& m : inst.materials) {
        j["materials"].push_back({{"id", m.id}, {"name", m.name}, {"initial_inventory", m.initial_inventory},
                                  {"receipts", dated(m.receipts)}});
    }
    j["orders"] = json::array();
    for (auto& o : inst.orders) {
        j["orders"].push_back({{"id", o.id}, {"product_id", o.product_id}, {"quantity", o.quantity},
                               {"due_date", format_date(o.due_date)}, {"weight", o.weight}});
    }
}

void from_json(const json& j, PlanningInstance& inst) {
    auto date_of = [](const std::string& s) {
        auto d = parse_date(s);
        if (!d) throw std::runtime_error("invalid date in instance document: " + s);
        return *d;
    };
    auto dated = [&](const json& o) {
        std::map<Date, double> m;
        for (auto& [k, v] : o.items()) m[date_of(k)] = v.get<double>();
        return m;
    };
    inst = PlanningInstance{};
    inst.id = j.at("id").get<std::string>();
    for (auto& d : j.at("horizon")) inst.horizon.push_back(date_of(d.get<std::string>()));
    for (auto& p : j.at("plants")) {
        inst.plants.push_back(Plant{p.at("id"), p.at("name"), dated(p.at("capacity")),
                                    p.at("proc_time").get<std::map<std::string, double>>(),
                                    p.at("unit_cost").get<std::map<std::string, double>>()});
    }
    for (auto& p : j.at("products")) {
        inst.products.push_back(Product{p.at("id"), p.at("name"), p.at("bom").get<std::map<std::string, double>>()});
    }
    for (auto& m : j.at("materials")) {
        inst.materials.push_back(
            Material{m.at("id"), m.at("name"), m.at("initial_inventory").get<double>(), dated(m.at("receipts"))});
    }
    for (auto& o : j.at("orders")) {
        inst.orders.push_back(Order{o.at("id"), o.at("product_id"), o.at("quantity").get<double>(),
                                    date_of(o.at("due_date").get<std::string>()), o.at("weight").get<double>()});
    }
}

}  // namespace planchat::aps
