#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planchat/aps_data.hpp"

namespace planchat::tools {

enum class Category { QueryPlan, WhyNot, WhatIf, ComparePlan, DisplayPlan };

std::string to_string(Category c);
std::optional<Category> category_from_string(const std::string& s);

// "plan" is a reference to a plan saved in the session rather than to APS data.
enum class ParamType { String, Number, Date, Entity, Enum, Plan };

std::string to_string(ParamType t);

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::String;
    aps::EntityKind kind = aps::EntityKind::Plant;  // Entity only
    std::vector<std::string> values;                 // Enum only
    bool required = false;
    bool multiple = false;  // value is a list
    std::string description;
    // Name of a session-side default used when the query leaves the parameter
    // out, e.g. "horizon_start" or "latest_plan". Empty means no default.
    std::string infer;

    /// Human-readable type, e.g. "entity(material)".
    std::string type_label() const;
};

enum class FieldType { String, Number, Date, Table };

struct ColumnSpec {
    std::string name;
    FieldType type = FieldType::String;
};

struct FieldSpec {
    std::string name;
    FieldType type = FieldType::String;
    std::vector<ColumnSpec> columns;  // Table only
};

struct ToolContract {
    std::string id;
    Category category = Category::QueryPlan;
    std::string description;
    std::vector<std::string> examples;
    std::string nl_output;
    std::string function;
    std::vector<ParamSpec> input;
    std::vector<FieldSpec> output;

    const ParamSpec* find_param(const std::string& name) const;
    const FieldSpec* find_field(const std::string& name) const;
    /// Description and examples joined by single spaces, the text that gets embedded.
    std::string retrieval_text() const;
};

struct Table {
    std::string title;
    std::vector<ColumnSpec> columns;
    std::vector<std::vector<nlohmann::json>> rows;
};

void to_json(nlohmann::json& j, const Table& t);
void from_json(const nlohmann::json& j, Table& t);

struct ToolOutput {
    std::string nl_text;
    std::vector<Table> renderables;
    nlohmann::json payload = nlohmann::json::object();
};

class CatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaViolation : public CatalogError {
public:
    SchemaViolation(std::string file, std::string field, const std::string& why);
    const std::string& file() const { return file_; }
    const std::string& field() const { return field_; }

private:
    std::string file_;
    std::string field_;
};

class DuplicateId : public CatalogError {
public:
    explicit DuplicateId(const std::string& id) : CatalogError("duplicate tool id: " + id) {}
};

class UnboundFunction : public CatalogError {
public:
    explicit UnboundFunction(std::string name)
        : CatalogError("no handler registered for function " + name), name_(std::move(name)) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class MissingField : public CatalogError {
public:
    explicit MissingField(std::string name) : CatalogError("payload lacks field " + name), name_(std::move(name)) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

using Catalog = std::vector<ToolContract>;

/// Parses and validates one contract document. `source` names it in errors.
ToolContract parse_contract(const nlohmann::json& doc, const std::string& source);

/// Loads every *.json file in `dir`, in file-name order.
Catalog load_catalog(const std::filesystem::path& dir);

/// Placeholder names in order of appearance.
std::vector<std::string> template_placeholders(const std::string& tmpl);

/// Replaces each {name} with the payload value. Numbers get format_number, lists
/// of strings are joined with ", ".
std::string render_nl_output(const std::string& tmpl, const nlohmann::json& payload);

/// Throws SchemaViolation(contract id, field) when `payload` does not match the
/// contract's output fields.
void validate_payload(const ToolContract& contract, const nlohmann::json& payload);

/// Validates the payload, fills the template and lifts table fields into renderables.
ToolOutput make_output(const ToolContract& contract, nlohmann::json payload);

struct HandlerContext;
using Handler = std::function<nlohmann::json(HandlerContext&)>;
using HandlerRegistry = std::map<std::string, Handler>;

struct BoundTool {
    ToolContract contract;
    Handler handler;
};

class BoundCatalog {
public:
    BoundCatalog() = default;
    explicit BoundCatalog(std::vector<BoundTool> tools) : tools_(std::move(tools)) {}

    const std::vector<BoundTool>& tools() const { return tools_; }
    const BoundTool* find(const std::string& id) const;
    std::size_t size() const { return tools_.size(); }
    bool empty() const { return tools_.empty(); }

private:
    std::vector<BoundTool> tools_;
};

BoundCatalog bind_handlers(const Catalog& catalog, const HandlerRegistry& registry);

}  // namespace planchat::tools
