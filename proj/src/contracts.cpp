#include "planchat/contracts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "planchat/dates.hpp"
#include "planchat/text.hpp"

namespace planchat::tools {

using nlohmann::json;

std::string to_string(Category c) {
    switch (c) {
        case Category::QueryPlan: return "query_plan";
        case Category::WhyNot: return "why_not";
        case Category::WhatIf: return "what_if";
        case Category::ComparePlan: return "compare_plan";
        case Category::DisplayPlan: return "display_plan";
    }
    return "query_plan";
}

std::optional<Category> category_from_string(const std::string& s) {
    for (auto c : {Category::QueryPlan, Category::WhyNot, Category::WhatIf, Category::ComparePlan,
                   Category::DisplayPlan})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

std::string to_string(ParamType t) {
    switch (t) {
        case ParamType::String: return "string";
        case ParamType::Number: return "number";
        case ParamType::Date: return "date";
        case ParamType::Entity: return "entity";
        case ParamType::Enum: return "enum";
        case ParamType::Plan: return "plan";
    }
    return "string";
}

namespace {

std::optional<ParamType> param_type_from_string(const std::string& s) {
    for (auto t : {ParamType::String, ParamType::Number, ParamType::Date, ParamType::Entity, ParamType::Enum,
                   ParamType::Plan})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

std::string to_string(FieldType t) {
    switch (t) {
        case FieldType::String: return "string";
        case FieldType::Number: return "number";
        case FieldType::Date: return "date";
        case FieldType::Table: return "table";
    }
    return "string";
}

std::optional<FieldType> field_type_from_string(const std::string& s) {
    for (auto t : {FieldType::String, FieldType::Number, FieldType::Date, FieldType::Table})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Calls on_text for literal runs and on_slot for each {identifier}.
template <typename Text, typename Slot>
void scan_template(const std::string& tmpl, Text on_text, Slot on_slot) {
    std::size_t i = 0, literal = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{' && i + 1 < tmpl.size() && is_ident_start(tmpl[i + 1])) {
            std::size_t j = i + 1;
            while (j < tmpl.size() && is_ident(tmpl[j])) ++j;
            if (j < tmpl.size() && tmpl[j] == '}') {
                on_text(std::string_view(tmpl).substr(literal, i - literal));
                on_slot(tmpl.substr(i + 1, j - i - 1));
                i = literal = j + 1;
                continue;
            }
        }
        ++i;
    }
    on_text(std::string_view(tmpl).substr(literal));
}

class Reader {
public:
    Reader(const json& doc, std::string source) : doc_(doc), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& field, const std::string& why) const {
        throw SchemaViolation(source_, field, why);
    }

    const json& at(const json& obj, const std::string& key, const std::string& path) const {
        if (!obj.is_object() || !obj.contains(key)) fail(path, "missing");
        return obj.at(key);
    }

    std::string str(const json& obj, const std::string& key, const std::string& path, bool allow_empty = false) const {
        const auto& v = at(obj, key, path);
        if (!v.is_string()) fail(path, "expected a string");
        auto s = v.get<std::string>();
        if (!allow_empty && text::trim(s).empty()) fail(path, "empty");
        return s;
    }

    std::vector<std::string> strings(const json& v, const std::string& path) const {
        if (!v.is_array()) fail(path, "expected a list of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string() || text::trim(e.get<std::string>()).empty()) fail(path, "expected non-empty strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    bool flag(const json& obj, const std::string& key, const std::string& path) const {
        if (!obj.contains(key)) return false;
        if (!obj.at(key).is_boolean()) fail(path, "expected true or false");
        return obj.at(key).get<bool>();
    }

    const json& doc() const { return doc_; }

private:
    const json& doc_;
    std::string source_;
};

const std::set<std::string> kTopLevelKeys{"id",  "category", "description", "examples",
                                          "nl_output", "function", "input", "output"};
const std::set<std::string> kParamKeys{"name", "type", "kind", "values", "required", "multiple", "description", "infer"};
const std::set<std::string> kFieldKeys{"name", "type", "columns"};

void check_keys(const Reader& r, const json& obj, const std::set<std::string>& allowed, const std::string& path) {
    for (auto& [k, v] : obj.items())
        if (!allowed.count(k)) r.fail(path + "." + k, "unknown key");
}

ParamSpec read_param(const Reader& r, const json& p, const std::string& path) {
    if (!p.is_object()) r.fail(path, "expected an object");
    check_keys(r, p, kParamKeys, path);
    ParamSpec spec;
    spec.name = r.str(p, "name", path + ".name");
    auto type = param_type_from_string(r.str(p, "type", path + ".type"));
    if (!type) r.fail(path + ".type", "unknown parameter type");
    spec.type = *type;
    spec.required = r.flag(p, "required", path + ".required");
    spec.multiple = r.flag(p, "multiple", path + ".multiple");
    if (p.contains("description")) spec.description = r.str(p, "description", path + ".description", true);
    if (spec.required && text::trim(spec.description).empty())
        r.fail(path + ".description", "required parameters need a description");
    if (p.contains("infer")) spec.infer = r.str(p, "infer", path + ".infer");
    if (spec.type == ParamType::Entity) {
        auto kind = aps::entity_kind_from_string(r.str(p, "kind", path + ".kind"));
        if (!kind) r.fail(path + ".kind", "unknown entity kind");
        spec.kind = *kind;
    } else if (p.contains("kind")) {
        r.fail(path + ".kind", "only entity parameters take a kind");
    }
    if (spec.type == ParamType::Enum) {
        spec.values = r.strings(r.at(p, "values", path + ".values"), path + ".values");
        if (spec.values.empty()) r.fail(path + ".values", "enum values must not be empty");
    } else if (p.contains("values")) {
        r.fail(path + ".values", "only enum parameters take values");
    }
    return spec;
}

FieldSpec read_field(const Reader& r, const json& f, const std::string& path) {
    if (!f.is_object()) r.fail(path, "expected an object");
    check_keys(r, f, kFieldKeys, path);
    FieldSpec spec;
    spec.name = r.str(f, "name", path + ".name");
    auto type = field_type_from_string(r.str(f, "type", path + ".type"));
    if (!type) r.fail(path + ".type", "unknown field type");
    spec.type = *type;
    if (spec.type == FieldType::Table) {
        const auto& cols = r.at(f, "columns", path + ".columns");
        if (!cols.is_array() || cols.empty()) r.fail(path + ".columns", "tables need at least one column");
        std::set<std::string> seen;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            auto cpath = fmt::format("{}.columns[{}]", path, i);
            ColumnSpec c;
            c.name = r.str(cols[i], "name", cpath + ".name");
            auto ct = field_type_from_string(r.str(cols[i], "type", cpath + ".type"));
            if (!ct || *ct == FieldType::Table) r.fail(cpath + ".type", "column type must be string, number or date");
            c.type = *ct;
            if (!seen.insert(c.name).second) r.fail(cpath + ".name", "duplicate column");
            spec.columns.push_back(std::move(c));
        }
    } else if (f.contains("columns")) {
        r.fail(path + ".columns", "only table fields take columns");
    }
    return spec;
}

bool cell_matches(const json& v, FieldType type) {
    switch (type) {
        case FieldType::Number: return v.is_number();
        case FieldType::Date: return v.is_string() && parse_date(v.get<std::string>()).has_value();
        case FieldType::String: return v.is_string();
        case FieldType::Table: return false;
    }
    return false;
}

}  // namespace

std::string ParamSpec::type_label() const {
    std::string base;
    if (type == ParamType::Entity)
        base = "entity(" + aps::to_string(kind) + ")";
    else if (type == ParamType::Enum)
        base = "enum(" + fmt::format("{}", fmt::join(values, "|")) + ")";
    else
        base = to_string(type);
    return multiple ? "list of " + base : base;
}

const ParamSpec* ToolContract::find_param(const std::string& name) const {
    for (const auto& p : input)
        if (p.name == name) return &p;
    return nullptr;
}

const FieldSpec* ToolContract::find_field(const std::string& name) const {
    for (const auto& f : output)
        if (f.name == name) return &f;
    return nullptr;
}

std::string ToolContract::retrieval_text() const {
    std::string out = description;
    for (const auto& e : examples) out += " " + e;
    return out;
}

void to_json(json& j, const Table& t) {
    json cols = json::array();
    for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"type", to_string(c.type)}});
    j = {{"title", t.title}, {"columns", cols}, {"rows", t.rows}};
}

void from_json(const json& j, Table& t) {
    t.title = j.at("title").get<std::string>();
    t.columns.clear();
    for (const auto& c : j.at("columns"))
        t.columns.push_back({c.at("name").get<std::string>(),
                             field_type_from_string(c.at("type").get<std::string>()).value_or(FieldType::String)});
    t.rows = j.at("rows").get<std::vector<std::vector<json>>>();
}

SchemaViolation::SchemaViolation(std::string file, std::string field, const std::string& why)
    : CatalogError(fmt::format("{}: {}: {}", file, field, why)), file_(std::move(file)), field_(std::move(field)) {}

ToolContract parse_contract(const json& doc, const std::string& source) {
    Reader r(doc, source);
    if (!doc.is_object()) r.fail("(document)", "expected an object");
    for (const auto& key : kTopLevelKeys)
        if (!doc.contains(key)) r.fail(key, "missing");
    check_keys(r, doc, kTopLevelKeys, "");

    ToolContract c;
    c.id = r.str(doc, "id", "id");
    auto cat = category_from_string(r.str(doc, "category", "category"));
    if (!cat) r.fail("category", "unknown category");
    c.category = *cat;
    c.description = r.str(doc, "description", "description");
    c.examples = r.strings(doc.at("examples"), "examples");
    if (c.examples.size() < 2) r.fail("examples", "at least two examples are required");
    c.nl_output = r.str(doc, "nl_output", "nl_output");
    c.function = r.str(doc, "function", "function");

    const auto& input = doc.at("input");
    if (!input.is_array()) r.fail("input", "expected a list");
    std::set<std::string> names;
    for (std::size_t i = 0; i < input.size(); ++i) {
        c.input.push_back(read_param(r, input[i], fmt::format("input[{}]", i)));
        if (!names.insert(c.input.back().name).second) r.fail(fmt::format("input[{}].name", i), "duplicate");
    }
    const auto& output = doc.at("output");
    if (!output.is_array()) r.fail("output", "expected a list");
    names.clear();
    for (std::size_t i = 0; i < output.size(); ++i) {
        c.output.push_back(read_field(r, output[i], fmt::format("output[{}]", i)));
        if (!names.insert(c.output.back().name).second) r.fail(fmt::format("output[{}].name", i), "duplicate");
    }
    for (const auto& slot : template_placeholders(c.nl_output)) {
        const auto* f = c.find_field(slot);
        if (!f) r.fail(slot, "template placeholder has no output field");
        if (f->type == FieldType::Table) r.fail(slot, "tables cannot be placed in the template");
    }
    return c;
}

Catalog load_catalog(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw CatalogError("catalog directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    Catalog catalog;
    std::set<std::string> ids;
    for (const auto& file : files) {
        std::ifstream in(file);
        json doc = json::parse(in, nullptr, false);
        auto name = file.filename().string();
        if (doc.is_discarded()) throw SchemaViolation(name, "(document)", "not valid JSON");
        auto contract = parse_contract(doc, name);
        if (!ids.insert(contract.id).second) throw DuplicateId(contract.id);
        catalog.push_back(std::move(contract));
    }
    return catalog;
}

std::vector<std::string> template_placeholders(const std::string& tmpl) {
    std::vector<std::string> out;
    scan_template(tmpl, [](std::string_view) {}, [&](const std::string& slot) { out.push_back(slot); });
    return out;
}

std::string render_nl_output(const std::string& tmpl, const json& payload) {
    std::string out;
    scan_template(
        tmpl, [&](std::string_view lit) { out += lit; },
        [&](const std::string& slot) {
            if (!payload.is_object() || !payload.contains(slot)) throw MissingField(slot);
            const auto& v = payload.at(slot);
            if (v.is_number()) {
                out += text::format_number(v.get<double>());
            } else if (v.is_string()) {
                out += v.get<std::string>();
            } else if (v.is_array()) {
                std::vector<std::string> parts;
                for (const auto& e : v) parts.push_back(e.is_string() ? e.get<std::string>() : e.dump());
                out += fmt::format("{}", fmt::join(parts, ", "));
            } else {
                out += v.dump();
            }
        });
    return out;
}

void validate_payload(const ToolContract& contract, const json& payload) {
    if (!payload.is_object()) throw SchemaViolation(contract.id, "(payload)", "expected an object");
    for (const auto& f : contract.output) {
        if (!payload.contains(f.name)) throw SchemaViolation(contract.id, f.name, "missing from payload");
        const auto& v = payload.at(f.name);
        if (f.type != FieldType::Table) {
            if (!cell_matches(v, f.type)) throw SchemaViolation(contract.id, f.name, "expected " + to_string(f.type));
            continue;
        }
        if (!v.is_array()) throw SchemaViolation(contract.id, f.name, "expected a list of rows");
        for (const auto& row : v) {
            if (!row.is_array() || row.size() != f.columns.size())
                throw SchemaViolation(contract.id, f.name, "row width differs from declared columns");
            for (std::size_t c = 0; c < f.columns.size(); ++c)
                if (!cell_matches(row[c], f.columns[c].type))
                    throw SchemaViolation(contract.id, f.name + "." + f.columns[c].name,
                                          "expected " + to_string(f.columns[c].type));
        }
    }
}

ToolOutput make_output(const ToolContract& contract, json payload) {
    validate_payload(contract, payload);
    ToolOutput out;
    out.nl_text = render_nl_output(contract.nl_output, payload);
    for (const auto& f : contract.output) {
        if (f.type != FieldType::Table) continue;
        Table t{f.name, f.columns, {}};
        for (const auto& row : payload.at(f.name)) t.rows.push_back(row.get<std::vector<json>>());
        out.renderables.push_back(std::move(t));
    }
    out.payload = std::move(payload);
    return out;
}

const BoundTool* BoundCatalog::find(const std::string& id) const {
    for (const auto& t : tools_)
        if (t.contract.id == id) return &t;
    return nullptr;
}

BoundCatalog bind_handlers(const Catalog& catalog, const HandlerRegistry& registry) {
    std::vector<BoundTool> bound;
    for (const auto& c : catalog) {
        auto it = registry.find(c.function);
        if (it == registry.end() || !it->second) throw UnboundFunction(c.function);
        bound.push_back({c, it->second});
    }
    return BoundCatalog(std::move(bound));
}

}  // namespace planchat::tools
