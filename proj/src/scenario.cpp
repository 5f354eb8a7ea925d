#include "planchat/scenario.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace planchat::opt {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string num(double v) { return fmt::format("{}", v); }

std::string slugify(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            out += static_cast<char>(std::tolower(c));
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

[[noreturn]] void unknown(const std::string& kind, const std::string& id) {
    throw ScenarioError(ScenarioErrorKind::UnknownEntity, fmt::format("UnknownEntity: {} '{}'", kind, id));
}

Date date_of(const json& j) {
    auto d = parse_date(j.get<std::string>());
    if (!d) throw std::runtime_error("invalid scenario date: " + j.get<std::string>());
    return *d;
}

}  // namespace

std::string describe(const ScenarioSpec& spec) {
    return std::visit(
        overloaded{
            [](const DataChange& c) {
                return std::visit(
                    overloaded{
                        [](const AddReceipt& r) {
                            return fmt::format("add {} kg of {} on {}", num(r.kg), r.material, format_date(r.date));
                        },
                        [](const SetCapacity& r) {
                            return fmt::format("set {} capacity to {} hours on {}", r.plant, num(r.hours),
                                               format_date(r.date));
                        },
                        [](const ChangeOrderQty& r) {
                            return fmt::format("change {} quantity to {} units", r.order, num(r.units));
                        },
                        [](const ChangeDueDate& r) {
                            return fmt::format("move {} due date to {}", r.order, format_date(r.date));
                        },
                    },
                    c);
            },
            [](const Restriction& r) {
                return std::visit(
                    overloaded{
                        [](const RestrictToPlants& x) {
                            return fmt::format("only use {}", fmt::join(x.plants, ", "));
                        },
                        [](const ForbidPlant& x) { return fmt::format("do not use {}", x.plant); },
                        [](const HardDeadline& x) { return fmt::format("deliver {} by its due date", x.order); },
                        [](const MaxProduction& x) {
                            return fmt::format("produce at most {} units of {}", num(x.units), x.product);
                        },
                    },
                    r);
            },
        },
        spec.change);
}

std::string slug(const ScenarioSpec& spec) {
    return std::visit(
        overloaded{
            [](const DataChange& c) {
                return std::visit(
                    overloaded{
                        [](const AddReceipt& r) {
                            return slugify(fmt::format("receipt {} {}", r.material, format_date(r.date)));
                        },
                        [](const SetCapacity& r) {
                            return slugify(fmt::format("capacity {} {}", r.plant, format_date(r.date)));
                        },
                        [](const ChangeOrderQty& r) { return slugify(fmt::format("quantity {}", r.order)); },
                        [](const ChangeDueDate& r) {
                            return slugify(fmt::format("due {} {}", r.order, format_date(r.date)));
                        },
                    },
                    c);
            },
            [](const Restriction& r) {
                return std::visit(
                    overloaded{
                        [](const RestrictToPlants& x) {
                            return slugify(fmt::format("{} only", fmt::join(x.plants, " ")));
                        },
                        [](const ForbidPlant& x) { return slugify(fmt::format("without {}", x.plant)); },
                        [](const HardDeadline& x) { return slugify(fmt::format("deadline {}", x.order)); },
                        [](const MaxProduction& x) { return slugify(fmt::format("max {}", x.product)); },
                    },
                    r);
            },
        },
        spec.change);
}

void check_references(const aps::PlanningInstance& inst, const ScenarioSpec& spec) {
    auto plant = [&](const std::string& id) {
        if (!inst.find_plant(id)) unknown("plant", id);
    };
    auto order = [&](const std::string& id) {
        if (!inst.find_order(id)) unknown("order", id);
    };
    std::visit(overloaded{
                   [&](const DataChange& c) {
                       std::visit(overloaded{
                                      [&](const AddReceipt& r) {
                                          if (!inst.find_material(r.material)) unknown("material", r.material);
                                      },
                                      [&](const SetCapacity& r) { plant(r.plant); },
                                      [&](const ChangeOrderQty& r) { order(r.order); },
                                      [&](const ChangeDueDate& r) { order(r.order); },
                                  },
                                  c);
                   },
                   [&](const Restriction& r) {
                       std::visit(overloaded{
                                      [&](const RestrictToPlants& x) {
                                          for (auto& p : x.plants) plant(p);
                                      },
                                      [&](const ForbidPlant& x) { plant(x.plant); },
                                      [&](const HardDeadline& x) { order(x.order); },
                                      [&](const MaxProduction& x) {
                                          if (!inst.find_product(x.product)) unknown("product", x.product);
                                      },
                                  },
                                  r);
                   },
               },
               spec.change);
}

aps::PlanningInstance apply_what_if(const aps::PlanningInstance& instance, const DataChange& change) {
    check_references(instance, ScenarioSpec{change});
    auto out = instance;
    auto require_day = [&](Date d) {
        if (!instance.day_index(d)) {
            throw ScenarioError(ScenarioErrorKind::DateOutsideHorizon,
                                fmt::format("DateOutsideHorizon: {}", format_date(d)));
        }
    };
    auto require_nonnegative = [](double v, const char* what) {
        if (!(v >= 0)) {
            throw ScenarioError(ScenarioErrorKind::NegativeQuantity, fmt::format("NegativeQuantity: {} = {}", what, v));
        }
    };
    std::visit(overloaded{
                   [&](const AddReceipt& r) {
                       require_day(r.date);
                       require_nonnegative(r.kg, "kg");
                       if (r.kg == 0.0) return;
                       for (auto& m : out.materials)
                           if (m.id == r.material) m.receipts[r.date] += r.kg;
                   },
                   [&](const SetCapacity& r) {
                       require_day(r.date);
                       require_nonnegative(r.hours, "hours");
                       for (auto& p : out.plants)
                           if (p.id == r.plant) p.capacity[r.date] = r.hours;
                   },
                   [&](const ChangeOrderQty& r) {
                       if (!(r.units > 0)) {
                           throw ScenarioError(ScenarioErrorKind::NegativeQuantity,
                                               fmt::format("NegativeQuantity: order quantity must be > 0, got {}", r.units));
                       }
                       for (auto& o : out.orders)
                           if (o.id == r.order) o.quantity = r.units;
                   },
                   [&](const ChangeDueDate& r) {
                       require_day(r.date);
                       for (auto& o : out.orders)
                           if (o.id == r.order) o.due_date = r.date;
                   },
               },
               change);
    return out;
}

void to_json(json& j, const ScenarioSpec& spec) {
    std::visit(overloaded{
                   [&](const DataChange& c) {
                       std::visit(overloaded{
                                      [&](const AddReceipt& r) {
                                          j = {{"kind", "what_if"}, {"change", "add_receipt"}, {"material", r.material},
                                               {"date", format_date(r.date)}, {"kg", r.kg}};
                                      },
                                      [&](const SetCapacity& r) {
                                          j = {{"kind", "what_if"}, {"change", "set_capacity"}, {"plant", r.plant},
                                               {"date", format_date(r.date)}, {"hours", r.hours}};
                                      },
                                      [&](const ChangeOrderQty& r) {
                                          j = {{"kind", "what_if"}, {"change", "change_order_qty"}, {"order", r.order},
                                               {"units", r.units}};
                                      },
                                      [&](const ChangeDueDate& r) {
                                          j = {{"kind", "what_if"}, {"change", "change_due_date"}, {"order", r.order},
                                               {"date", format_date(r.date)}};
                                      },
                                  },
                                  c);
                   },
                   [&](const Restriction& r) {
                       std::visit(overloaded{
                                      [&](const RestrictToPlants& x) {
                                          j = {{"kind", "why_not"}, {"restriction", "restrict_to_plants"},
                                               {"plants", x.plants}};
                                      },
                                      [&](const ForbidPlant& x) {
                                          j = {{"kind", "why_not"}, {"restriction", "forbid_plant"}, {"plant", x.plant}};
                                      },
                                      [&](const HardDeadline& x) {
                                          j = {{"kind", "why_not"}, {"restriction", "hard_deadline"}, {"order", x.order}};
                                      },
                                      [&](const MaxProduction& x) {
                                          j = {{"kind", "why_not"}, {"restriction", "max_production"},
                                               {"product", x.product}, {"units", x.units}};
                                      },
                                  },
                                  r);
                   },
               },
               spec.change);
}

void from_json(const json& j, ScenarioSpec& spec) {
    auto kind = j.at("kind").get<std::string>();
    if (kind == "what_if") {
        auto change = j.at("change").get<std::string>();
        if (change == "add_receipt") {
            spec.change = DataChange{AddReceipt{j.at("material"), date_of(j.at("date")), j.at("kg").get<double>()}};
        } else if (change == "set_capacity") {
            spec.change = DataChange{SetCapacity{j.at("plant"), date_of(j.at("date")), j.at("hours").get<double>()}};
        } else if (change == "change_order_qty") {
            spec.change = DataChange{ChangeOrderQty{j.at("order"), j.at("units").get<double>()}};
        } else if (change == "change_due_date") {
            spec.change = DataChange{ChangeDueDate{j.at("order"), date_of(j.at("date"))}};
        } else {
            throw std::runtime_error("unknown what_if change: " + change);
        }
    } else if (kind == "why_not") {
        auto r = j.at("restriction").get<std::string>();
        if (r == "restrict_to_plants") {
            spec.change = Restriction{RestrictToPlants{j.at("plants").get<std::vector<std::string>>()}};
        } else if (r == "forbid_plant") {
            spec.change = Restriction{ForbidPlant{j.at("plant")}};
        } else if (r == "hard_deadline") {
            spec.change = Restriction{HardDeadline{j.at("order")}};
        } else if (r == "max_production") {
            spec.change = Restriction{MaxProduction{j.at("product"), j.at("units").get<double>()}};
        } else {
            throw std::runtime_error("unknown why_not restriction: " + r);
        }
    } else {
        throw std::runtime_error("scenario kind must be what_if or why_not, got " + kind);
    }
}

}  // namespace planchat::opt
