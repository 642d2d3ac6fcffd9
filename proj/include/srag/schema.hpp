#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "srag/corpus.hpp"
#include "srag/error.hpp"
#include "srag/util.hpp"
#include "srag/value.hpp"

namespace srag {

// One typed attribute of the corpus entity. `name` is the normalized
// snake_case identifier used as the SQL column; the original spelling from
// the model is kept as `display_name`.
struct AttributeSpec {
    std::string name;
    std::string display_name;
    ValueType type = ValueType::String;
    std::string description;
    std::vector<Value> examples;  // 1..5 literals of `type`
    bool required = false;
};

struct Schema {
    std::string title;
    std::vector<AttributeSpec> attributes;

    // provenance
    int iterations = 0;
    std::string sample_fingerprint;

    const AttributeSpec* find(std::string_view name) const {
        for (const auto& a : attributes)
            if (a.name == name) return &a;
        return nullptr;
    }

    std::vector<std::string> attribute_names() const {
        std::vector<std::string> names;
        names.reserve(attributes.size());
        for (const auto& a : attributes) names.push_back(a.name);
        return names;
    }
};

struct SchemaViolation {
    std::string attribute;  // empty for schema-level problems
    std::string message;
};

using SchemaOrViolations = std::variant<Schema, std::vector<SchemaViolation>>;

inline std::string normalize_attribute_name(std::string_view display) {
    std::string name = snake_case(display);
    // reserve the key column and a few words SQLite chokes on as bare columns
    static const std::set<std::string> reserved = {
        "doc_id", "select", "from",  "where", "group", "order", "table", "index",
        "primary", "key",   "join",  "union", "limit", "offset", "having", "case",
        "when",   "then",   "else",  "end",   "null",  "and",    "or",     "not",
        "in",     "as",     "on",    "all",   "distinct"};
    if (reserved.count(name)) name += "_";
    return name;
}

// Checks a raw JSON document against the flat-schema contract and returns
// either the typed Schema or the complete list of violations. Violations are
// data, not errors: induction uses them to drive re-asks and repairs.
inline SchemaOrViolations validate_schema(const json& raw) {
    std::vector<SchemaViolation> violations;
    if (!raw.is_object()) {
        violations.push_back({"", "schema is not a JSON object"});
        return violations;
    }

    Schema schema;
    if (raw.contains("title") && raw["title"].is_string() && !raw["title"].get<std::string>().empty())
        schema.title = raw["title"].get<std::string>();
    else
        violations.push_back({"", "missing title"});

    if (raw.contains("type") && raw["type"].is_string() && raw["type"].get<std::string>() != "object")
        violations.push_back({"", "schema type must be \"object\""});

    if (!raw.contains("properties") || !raw["properties"].is_object() || raw["properties"].empty()) {
        violations.push_back({"", "schema has no properties"});
        return violations;
    }

    std::set<std::string> required_names;
    if (raw.contains("required")) {
        if (!raw["required"].is_array())
            violations.push_back({"", "required must be an array of attribute names"});
        else
            for (const auto& r : raw["required"])
                if (r.is_string()) required_names.insert(r.get<std::string>());
    }

    std::set<std::string> seen_normalized;
    for (const auto& [display, prop] : raw["properties"].items()) {
        AttributeSpec spec;
        spec.display_name = display;
        spec.name = normalize_attribute_name(display);
        if (spec.name.empty()) {
            violations.push_back({display, "attribute name normalizes to an empty identifier"});
            continue;
        }
        if (!seen_normalized.insert(spec.name).second) {
            violations.push_back({display, "duplicate attribute name after normalization: " + spec.name});
            continue;
        }
        if (!prop.is_object()) {
            violations.push_back({display, "attribute definition is not an object"});
            continue;
        }
        if (prop.contains("properties") || (prop.contains("type") && prop["type"] == "object")) {
            violations.push_back({display, "nested object attribute"});
            continue;
        }
        if (prop.contains("items") || (prop.contains("type") && prop["type"] == "array")) {
            violations.push_back({display, "list attribute"});
            continue;
        }
        if (!prop.contains("type") || !prop["type"].is_string()) {
            violations.push_back({display, "missing attribute type"});
            continue;
        }
        auto type = value_type_from_name(prop["type"].get<std::string>());
        if (!type) {
            violations.push_back({display, "unsupported type: " + prop["type"].get<std::string>()});
            continue;
        }
        spec.type = *type;

        if (!prop.contains("description") || !prop["description"].is_string() ||
            trim(prop["description"].get<std::string>()).empty()) {
            violations.push_back({display, "missing description"});
            continue;
        }
        spec.description = trim(prop["description"].get<std::string>());

        if (!prop.contains("examples") || !prop["examples"].is_array() || prop["examples"].empty()) {
            violations.push_back({display, "missing examples"});
            continue;
        }
        bool example_ok = true;
        for (const auto& ex : prop["examples"]) {
            auto coerced = coerce_scalar(ex, spec.type);
            if (coerced.outcome == Coercion::Rejected || ex.is_null()) {
                violations.push_back({display, "example does not parse as " +
                                                   std::string(value_type_name(spec.type)) + ": " + ex.dump()});
                example_ok = false;
                break;
            }
            if (spec.examples.size() < 5) spec.examples.push_back(coerced.value);
        }
        if (!example_ok) continue;

        spec.required = required_names.count(display) > 0 || required_names.count(spec.name) > 0;
        schema.attributes.push_back(std::move(spec));
    }

    if (!violations.empty()) return violations;
    if (schema.attributes.empty()) {
        violations.push_back({"", "schema has no valid attributes"});
        return violations;
    }
    return schema;
}

// Serialized shape mirrors what the induction prompts ask the model for:
// title / type / properties / required.
inline json schema_to_json(const Schema& schema) {
    json properties = json::object();
    for (const auto& a : schema.attributes) {
        json examples = json::array();
        for (const auto& ex : a.examples) examples.push_back(ex.to_json());
        properties[a.name] = {{"type", value_type_name(a.type)},
                              {"description", a.description},
                              {"examples", examples}};
    }
    json required = json::array();
    for (const auto& a : schema.attributes)
        if (a.required) required.push_back(a.name);
    json out = {{"title", schema.title}, {"type", "object"}, {"properties", properties}, {"required", required}};
    if (schema.iterations > 0)
        out["x_srag_provenance"] = {{"iterations", schema.iterations},
                                    {"sample_fingerprint", schema.sample_fingerprint}};
    return out;
}

inline std::string schema_violations_text(const std::vector<SchemaViolation>& violations) {
    std::vector<std::string> lines;
    for (const auto& v : violations)
        lines.push_back(v.attribute.empty() ? v.message : v.attribute + ": " + v.message);
    return join(lines, "\n");
}

// Parse + validate, throwing on violation. Used for trusted inputs (gold
// schema files, snapshots we wrote ourselves).
inline Schema schema_from_json(const json& raw) {
    auto result = validate_schema(raw);
    if (auto* violations = std::get_if<std::vector<SchemaViolation>>(&result))
        throw Error(ErrorKind::Parse, "invalid schema: " + schema_violations_text(*violations));
    Schema schema = std::get<Schema>(std::move(result));
    if (raw.contains("x_srag_provenance")) {
        const auto& prov = raw["x_srag_provenance"];
        if (prov.contains("iterations")) schema.iterations = prov["iterations"].get<int>();
        if (prov.contains("sample_fingerprint"))
            schema.sample_fingerprint = prov["sample_fingerprint"].get<std::string>();
    }
    return schema;
}

inline Schema load_schema(const fs::path& path) {
    json raw = json::parse(read_text_file(path), nullptr, false);
    if (raw.is_discarded()) throw Error(ErrorKind::Parse, "schema file is not JSON: " + path.string());
    return schema_from_json(raw);
}

inline void save_schema(const fs::path& path, const Schema& schema) {
    write_text_file(path, schema_to_json(schema).dump(2) + "\n");
}

// Plain-text rendering of the schema for prompts (extraction, translation).
inline std::string schema_prompt_block(const Schema& schema) {
    std::string out = "Entity: " + schema.title + "\nAttributes:\n";
    for (const auto& a : schema.attributes) {
        out += "- " + a.name + " (" + value_type_name(a.type) + (a.required ? ", required" : "") +
               "): " + a.description;
        if (!a.examples.empty()) {
            std::vector<std::string> ex;
            for (const auto& e : a.examples) ex.push_back(e.to_display());
            out += " Examples: " + join(ex, ", ") + ".";
        }
        out += "\n";
    }
    return out;
}

}  // namespace srag
