#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "srag/inference.hpp"

namespace srag {

// Synthetic dataset generator: seeded records of a schema, HTML verbalization
// of each record, and aggregative questions whose gold answers come from
// executing the gold SQL, never from hand-authored labels.

struct AttributeForge {
    AttributeSpec spec;
    json distribution;             // {"kind": ..., params...}
    double null_probability = 0.0;
};

struct ForgeSpec {
    std::string title;          // entity type, e.g. "Hotel"
    std::string entity_noun;    // "hotel"
    std::string entity_plural;  // "hotels"
    std::string name_attribute;
    int n_records = 1;
    std::vector<AttributeForge> attributes;
    std::string verbalization_mode = "template";  // or "llm"
    double inline_fraction = 0.5;  // share of attributes woven into prose instead of the table
    int filler_sentences_min = 0;  // flavour prose, calibrates document length
    int filler_sentences_max = 0;
    uint64_t seed = 1;
};

struct Annotation {
    std::string attribute;
    std::string lexicalization;  // exact string embedded in the page
    std::string location;        // "title" | "prose" | "table"
};

struct VerbalizedDocument {
    Document doc;
    std::vector<Annotation> annotations;
};

struct ForgedQA {
    std::string question_id;
    std::string question;
    std::string tag;  // count | avg | min_max | filter | superlative_composition
    FormalQuery gold_sql;
    std::string gold_answer;
    std::vector<std::string> supporting_doc_ids;
};

inline const std::vector<std::string>& forge_tags() {
    static const std::vector<std::string> kTags = {"count", "avg", "min_max", "filter",
                                                   "superlative_composition"};
    return kTags;
}

// --- spec validation and serialization ---

inline Schema schema_of(const ForgeSpec& spec) {
    Schema schema;
    schema.title = spec.title;
    for (const auto& a : spec.attributes) schema.attributes.push_back(a.spec);
    return schema;
}

namespace forge_detail {

inline int64_t name_pool_size(const json& dist) {
    int64_t total = 1;
    for (const auto& part : dist.at("parts")) total *= static_cast<int64_t>(part.size());
    return total;
}

inline std::string compose_name(const json& dist, int64_t index) {
    std::string out = dist.at("format").get<std::string>();
    const json& parts = dist.at("parts");
    for (size_t p = 0; p < parts.size(); ++p) {
        int64_t size = static_cast<int64_t>(parts[p].size());
        std::string token = parts[p][static_cast<size_t>(index % size)].get<std::string>();
        index /= size;
        std::string placeholder = "{" + std::to_string(p) + "}";
        size_t pos = out.find(placeholder);
        if (pos == std::string::npos)
            throw Error(ErrorKind::Config, "name format is missing " + placeholder);
        out.replace(pos, placeholder.size(), token);
    }
    return out;
}

}  // namespace forge_detail

inline void validate_forge_spec(const ForgeSpec& spec) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, "forge spec: " + msg); };
    if (spec.n_records < 1) fail("n_records must be >= 1");
    if (spec.attributes.empty()) fail("no attributes");
    if (spec.inline_fraction < 0.0 || spec.inline_fraction > 1.0) fail("inline_fraction out of [0,1]");
    if (spec.filler_sentences_min > spec.filler_sentences_max) fail("filler sentence range inverted");
    if (spec.verbalization_mode != "template" && spec.verbalization_mode != "llm")
        fail("unknown verbalization mode " + spec.verbalization_mode);

    const AttributeForge* name_attr = nullptr;
    std::set<std::string> seen;
    for (const auto& a : spec.attributes) {
        if (!seen.insert(a.spec.name).second) fail("duplicate attribute " + a.spec.name);
        if (a.null_probability < 0.0 || a.null_probability >= 1.0)
            fail(a.spec.name + ": null_probability out of [0,1)");
        const std::string kind = a.distribution.value("kind", "");
        if (kind == "choice") {
            if (!a.distribution.contains("values") || a.distribution["values"].empty())
                fail(a.spec.name + ": choice needs values");
            for (const auto& v : a.distribution["values"])
                if (coerce_scalar(v, a.spec.type).outcome == Coercion::Rejected)
                    fail(a.spec.name + ": choice value " + v.dump() + " is not " +
                         value_type_name(a.spec.type));
        } else if (kind == "int_range") {
            if (a.spec.type != ValueType::Integer) fail(a.spec.name + ": int_range needs integer type");
            if (a.distribution.value("min", int64_t(0)) > a.distribution.value("max", int64_t(0)))
                fail(a.spec.name + ": empty int_range");
        } else if (kind == "real_range") {
            if (a.spec.type != ValueType::Number) fail(a.spec.name + ": real_range needs number type");
            if (!(a.distribution.value("min", 0.0) <= a.distribution.value("max", 0.0)))
                fail(a.spec.name + ": empty real_range");
        } else if (kind == "bernoulli") {
            if (a.spec.type != ValueType::Boolean) fail(a.spec.name + ": bernoulli needs boolean type");
        } else if (kind == "unique_name") {
            if (a.spec.type != ValueType::String) fail(a.spec.name + ": unique_name needs string type");
            if (!a.distribution.contains("parts") || !a.distribution.contains("format"))
                fail(a.spec.name + ": unique_name needs parts and format");
            if (forge_detail::name_pool_size(a.distribution) < spec.n_records)
                fail(a.spec.name + ": name pool smaller than n_records");
        } else {
            fail(a.spec.name + ": unknown distribution kind '" + kind + "'");
        }
        if (a.spec.name == spec.name_attribute) {
            name_attr = &a;
            if (a.null_probability != 0.0) fail("name attribute cannot be nullable");
            if (kind != "unique_name") fail("name attribute needs a unique_name distribution");
        }
    }
    if (!name_attr) fail("name_attribute " + spec.name_attribute + " not among attributes");

    auto validated = validate_schema(schema_to_json(schema_of(spec)));
    if (std::holds_alternative<std::vector<SchemaViolation>>(validated))
        fail("derived schema is invalid: " +
             schema_violations_text(std::get<std::vector<SchemaViolation>>(validated)));
}

inline json forge_spec_to_json(const ForgeSpec& spec) {
    json attrs = json::array();
    for (const auto& a : spec.attributes) {
        json examples = json::array();
        for (const auto& e : a.spec.examples) examples.push_back(e.to_json());
        attrs.push_back({{"name", a.spec.name},
                         {"display_name", a.spec.display_name},
                         {"type", value_type_name(a.spec.type)},
                         {"description", a.spec.description},
                         {"examples", examples},
                         {"required", a.spec.required},
                         {"distribution", a.distribution},
                         {"null_probability", a.null_probability}});
    }
    return json{{"title", spec.title},
                {"entity_noun", spec.entity_noun},
                {"entity_plural", spec.entity_plural},
                {"name_attribute", spec.name_attribute},
                {"n_records", spec.n_records},
                {"attributes", attrs},
                {"verbalization_mode", spec.verbalization_mode},
                {"inline_fraction", spec.inline_fraction},
                {"filler_sentences_min", spec.filler_sentences_min},
                {"filler_sentences_max", spec.filler_sentences_max},
                {"seed", spec.seed}};
}

inline ForgeSpec forge_spec_from_json(const json& j) {
    ForgeSpec spec;
    spec.title = j.at("title").get<std::string>();
    spec.entity_noun = j.value("entity_noun", to_lower(spec.title));
    spec.entity_plural = j.value("entity_plural", spec.entity_noun + "s");
    spec.name_attribute = j.at("name_attribute").get<std::string>();
    spec.n_records = j.at("n_records").get<int>();
    spec.verbalization_mode = j.value("verbalization_mode", "template");
    spec.inline_fraction = j.value("inline_fraction", 0.5);
    spec.filler_sentences_min = j.value("filler_sentences_min", 0);
    spec.filler_sentences_max = j.value("filler_sentences_max", 0);
    spec.seed = j.value("seed", uint64_t(1));
    for (const auto& a : j.at("attributes")) {
        AttributeForge f;
        f.spec.name = a.at("name").get<std::string>();
        f.spec.display_name = a.value("display_name", f.spec.name);
        auto type = value_type_from_name(a.at("type").get<std::string>());
        if (!type) throw Error(ErrorKind::Parse, "forge spec: bad type for " + f.spec.name);
        f.spec.type = *type;
        f.spec.description = a.value("description", "");
        for (const auto& e : a.value("examples", json::array()))
            f.spec.examples.push_back(Value::from_json(e));
        f.spec.required = a.value("required", false);
        f.distribution = a.at("distribution");
        f.null_probability = a.value("null_probability", 0.0);
        spec.attributes.push_back(std::move(f));
    }
    validate_forge_spec(spec);
    return spec;
}

// --- record generation ---

namespace forge_detail {

inline Value draw_value(const AttributeForge& attr, Rng& rng) {
    const std::string kind = attr.distribution.at("kind").get<std::string>();
    if (kind == "choice") {
        const json& values = attr.distribution.at("values");
        size_t i = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(values.size()) - 1));
        return coerce_scalar(values[i], attr.spec.type).value;
    }
    if (kind == "int_range")
        return Value::integer(rng.uniform_int(attr.distribution.at("min").get<int64_t>(),
                                              attr.distribution.at("max").get<int64_t>()));
    if (kind == "real_range") {
        double lo = attr.distribution.at("min").get<double>();
        double hi = attr.distribution.at("max").get<double>();
        int decimals = attr.distribution.value("decimals", 2);
        double scale = 1.0;
        for (int i = 0; i < decimals; ++i) scale *= 10.0;
        double raw = rng.uniform_real(lo, hi);
        return Value::number(static_cast<double>(std::llround(raw * scale)) / scale);
    }
    if (kind == "bernoulli") return Value::boolean(rng.bernoulli(attr.distribution.value("p", 0.5)));
    throw Error(ErrorKind::Config, "cannot draw from distribution " + kind);
}

}  // namespace forge_detail

// Deterministic record set: (spec, seed) fully determines output. Each record
// draws from its own substream so records are order-independent, and the
// designated name attribute is unique across records by construction.
inline std::vector<Record> forge_records(const ForgeSpec& spec) {
    validate_forge_spec(spec);
    Rng root(spec.seed);

    const AttributeForge* name_attr = nullptr;
    for (const auto& a : spec.attributes)
        if (a.spec.name == spec.name_attribute) name_attr = &a;
    int64_t pool = forge_detail::name_pool_size(name_attr->distribution);
    Rng name_rng = root.fork(0);
    std::vector<size_t> picks =
        name_rng.sample_indices(static_cast<size_t>(pool), static_cast<size_t>(spec.n_records));

    std::vector<Record> records;
    records.reserve(static_cast<size_t>(spec.n_records));
    for (int i = 0; i < spec.n_records; ++i) {
        Rng rng = root.fork(static_cast<uint64_t>(i) + 1);
        Record rec;
        std::string name =
            forge_detail::compose_name(name_attr->distribution, static_cast<int64_t>(picks[static_cast<size_t>(i)]));
        rec.doc_id = snake_case(name);
        for (const auto& a : spec.attributes) {
            Value v;
            if (a.spec.name == spec.name_attribute) {
                v = Value::text(name);
            } else if (a.null_probability > 0.0 && rng.bernoulli(a.null_probability)) {
                v = Value::null();
            } else {
                v = forge_detail::draw_value(a, rng);
            }
            rec.meta[a.spec.name] = {v.is_null() ? CellStatus::Null : CellStatus::Ok, "", ""};
            rec.values[a.spec.name] = std::move(v);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

// --- verbalization ---

namespace forge_detail {

// Boolean cells read as yes/no on the page; everything else uses the value's
// canonical display form, so the annotation lexicalization is always findable.
inline std::string lexicalize(const Value& v) {
    if (v.is_bool()) return v.as_bool() ? "yes" : "no";
    return v.to_display();
}

inline const std::vector<std::string>& prose_templates() {
    static const std::vector<std::string> kTemplates = {
        "Its {attr} is {value}.",
        "The {attr} of this {noun} is {value}.",
        "Visitors should note that the {attr} is {value}.",
        "According to the latest listing, its {attr} stands at {value}.",
        "For travellers who ask about the {attr}, the current figure on file is {value}.",
    };
    return kTemplates;
}

inline const std::vector<std::string>& filler_sentences() {
    static const std::vector<std::string> kFiller = {
        "The surrounding neighbourhood offers a mix of cafes, small galleries and quiet side streets.",
        "Staff at the front desk are available around the clock to help with directions and bookings.",
        "Many guests arrive by train, and the nearest station is a short and well signposted walk away.",
        "The lobby keeps a small library of local guides, maps and magazines for planning day trips.",
        "Seasonal menus in the on-site restaurant lean on produce from nearby markets and farms.",
        "Rooms are cleaned daily, and fresh towels can be requested at any hour without extra charge.",
        "A luggage room is available for guests who arrive early or depart on late evening services.",
        "The building itself has been renovated several times while keeping its original facade intact.",
        "Walking tours of the old town leave every morning from a square two blocks from the entrance.",
        "Long-stay visitors can ask about weekly housekeeping schedules and laundry arrangements.",
        "The reception sells tickets for most museums in town, often with a small convenience fee.",
        "Bicycles can be rented next door, and the riverside path is flat for the first several miles.",
        "Quiet hours are observed after ten in the evening in all corridors and shared spaces.",
        "Breakfast service runs late on weekends, which regulars consider a point in its favour.",
        "Airport shuttles stop across the street roughly every half hour during daytime.",
        "Pets are welcome in selected rooms when arranged in advance with the reservations team.",
        "The conference annex seats small workshops and can be booked together with catering.",
        "Local regulations require registration on arrival, which the desk handles in minutes.",
        "A small gift shop near the elevators stocks essentials, postcards and regional sweets.",
        "Reviews frequently mention the calm courtyard, which is open to guests all day.",
    };
    return kFiller;
}

inline std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

}  // namespace forge_detail

// Template-mode verbalization: one HTML page per record. A seeded split sends
// `inline_fraction` of the populated attributes into prose sentences and the
// rest into a details table; null attributes are simply never mentioned.
// Returns the page plus an annotation per mentioned value for audits.
inline VerbalizedDocument verbalize_record(const ForgeSpec& spec, const Record& record) {
    namespace fd = forge_detail;
    Rng rng(splitmix64(spec.seed ^ fnv1a64(record.doc_id)));

    const std::string name = record.values.at(spec.name_attribute).to_display();
    VerbalizedDocument out;
    out.annotations.push_back({spec.name_attribute, name, "title"});

    std::vector<const AttributeForge*> mentioned;
    for (const auto& a : spec.attributes) {
        if (a.spec.name == spec.name_attribute) continue;
        if (record.values.at(a.spec.name).is_null()) continue;
        mentioned.push_back(&a);
    }
    size_t inline_count = static_cast<size_t>(spec.inline_fraction * static_cast<double>(mentioned.size()) + 0.5);
    std::vector<size_t> order = rng.fork(1).sample_indices(mentioned.size(), mentioned.size());

    std::string html = "<html>\n<head><title>" + fd::html_escape(name) + "</title></head>\n<body>\n";
    html += "<h1>" + fd::html_escape(name) + "</h1>\n";

    // prose paragraph weaving the inline attributes into sentences
    html += "<p>" + fd::html_escape(name) + " is a " + fd::html_escape(spec.entity_noun) +
            " described in this listing. ";
    Rng prose_rng = rng.fork(2);
    for (size_t i = 0; i < inline_count; ++i) {
        const AttributeForge& a = *mentioned[order[i]];
        std::string lex = fd::lexicalize(record.values.at(a.spec.name));
        std::string sentence = prose_rng.choice(fd::prose_templates());
        auto replace_all_once = [](std::string& s, const std::string& from, const std::string& to) {
            size_t pos;
            while ((pos = s.find(from)) != std::string::npos) s.replace(pos, from.size(), to);
        };
        replace_all_once(sentence, "{attr}", a.spec.display_name);
        replace_all_once(sentence, "{value}", fd::html_escape(lex));
        replace_all_once(sentence, "{noun}", spec.entity_noun);
        html += sentence + " ";
        out.annotations.push_back({a.spec.name, lex, "prose"});
    }
    html += "</p>\n";

    // flavour prose, token-length calibration
    if (spec.filler_sentences_max > 0) {
        Rng filler_rng = rng.fork(3);
        int n_filler = static_cast<int>(filler_rng.uniform_int(spec.filler_sentences_min,
                                                               spec.filler_sentences_max));
        const auto& bank = fd::filler_sentences();
        for (int i = 0; i < n_filler; ++i) {
            if (i % 6 == 0) html += "<p>";
            html += filler_rng.choice(bank);
            html += (i % 6 == 5 || i + 1 == n_filler) ? "</p>\n" : " ";
        }
    }

    // details table for the remaining attributes
    if (inline_count < mentioned.size()) {
        html += "<table>\n<tr><th>Attribute</th><th>Value</th></tr>\n";
        std::vector<std::pair<std::string, const AttributeForge*>> rows;
        for (size_t i = inline_count; i < mentioned.size(); ++i)
            rows.emplace_back(mentioned[order[i]]->spec.name, mentioned[order[i]]);
        std::sort(rows.begin(), rows.end());
        for (const auto& [attr_name, a] : rows) {
            std::string lex = fd::lexicalize(record.values.at(attr_name));
            html += "<tr><td>" + fd::html_escape(a->spec.display_name) + "</td><td>" +
                    fd::html_escape(lex) + "</td></tr>\n";
            out.annotations.push_back({attr_name, lex, "table"});
        }
        html += "</table>\n";
    }
    html += "</body>\n</html>\n";

    out.doc.doc_id = record.doc_id;
    out.doc.text = html;
    out.doc.token_count = count_tokens(html);
    return out;
}

inline constexpr const char* kVerbalizeSystemPrompt =
    "You write natural HTML pages describing a single entity. Embed every provided attribute value "
    "verbatim somewhere in the page, never invent additional facts, and never mention attributes that "
    "are not provided. Reply with only the HTML.";

// LLM-mode verbalization for corpora that should not look templated. Values
// must still appear verbatim; the annotation audit enforces it.
inline VerbalizedDocument verbalize_record_llm(const ForgeSpec& spec, const Record& record,
                                               ChatProvider& provider, const std::string& model_id = "") {
    namespace fd = forge_detail;
    std::string prompt = "Entity type: " + spec.entity_noun + "\nAttributes:\n";
    VerbalizedDocument out;
    for (const auto& a : spec.attributes) {
        const Value& v = record.values.at(a.spec.name);
        if (v.is_null()) continue;
        std::string lex = fd::lexicalize(v);
        prompt += "- " + a.spec.display_name + ": " + lex + "\n";
        out.annotations.push_back({a.spec.name, lex, "prose"});
    }
    ChatRequest req{kVerbalizeSystemPrompt, prompt, model_id, 0.0, 4096};
    out.doc.doc_id = record.doc_id;
    out.doc.text = provider.complete(req);
    out.doc.token_count = count_tokens(out.doc.text);
    for (const auto& ann : out.annotations)
        if (out.doc.text.find(ann.lexicalization) == std::string::npos)
            throw Error(ErrorKind::Extraction, "verbalized page for " + record.doc_id +
                                                   " dropped value of " + ann.attribute);
    return out;
}

inline std::vector<VerbalizedDocument> verbalize_corpus(const ForgeSpec& spec,
                                                        const std::vector<Record>& records) {
    std::vector<VerbalizedDocument> docs;
    docs.reserve(records.size());
    for (const auto& rec : records) docs.push_back(verbalize_record(spec, rec));
    return docs;
}

// --- question forging ---

namespace forge_detail {

inline std::string sql_literal(const Value& v) {
    if (v.is_null()) return "NULL";
    if (v.is_bool()) return v.as_bool() ? "1" : "0";
    if (v.is_string()) {
        std::string out = "'";
        for (char c : v.as_string()) {
            out += c;
            if (c == '\'') out += '\'';
        }
        out += "'";
        return out;
    }
    return v.to_display();
}

inline std::string qid(const std::string& col) { return sqlite_detail::quote_identifier(col); }

struct QuestionDraft {
    std::string question;
    std::string sql;
    std::string support_sql;  // projects doc_id of exactly the rows the gold SQL touches
};

// Per-tag template banks. Values referenced in filters are drawn from actual
// records, so filter questions always have non-empty support.
inline std::optional<QuestionDraft> draft_question(const ForgeSpec& spec,
                                                   const std::vector<Record>& records,
                                                   const std::string& tag, Rng& rng) {
    std::vector<const AttributeForge*> numeric, categorical, all_but_name;
    for (const auto& a : spec.attributes) {
        if (a.spec.name == spec.name_attribute) continue;
        all_but_name.push_back(&a);
        if (a.spec.type == ValueType::Integer || a.spec.type == ValueType::Number)
            numeric.push_back(&a);
        else
            categorical.push_back(&a);
    }
    const std::string name_col = qid(spec.name_attribute);
    auto non_null_value_of = [&](const AttributeForge& a) -> std::optional<Value> {
        // seeded pick of a stored value so the filter provably matches something
        std::vector<const Value*> pool;
        for (const auto& r : records) {
            const Value& v = r.values.at(a.spec.name);
            if (!v.is_null()) pool.push_back(&v);
        }
        if (pool.empty()) return std::nullopt;
        return *pool[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1))];
    };

    QuestionDraft d;
    if (tag == "count") {
        if (rng.bernoulli(0.4) || all_but_name.empty()) {
            d.question = rng.bernoulli(0.5)
                             ? "How many " + spec.entity_plural + " are there in total?"
                             : "What is the total number of " + spec.entity_plural + " in the corpus?";
            d.sql = "SELECT COUNT(*) FROM corpus";
            d.support_sql = "SELECT doc_id FROM corpus";
            return d;
        }
        const AttributeForge& a = *rng.choice(all_but_name);
        if (a.spec.type == ValueType::Boolean) {
            d.question = "How many " + spec.entity_plural + " have " + a.spec.display_name + "?";
            d.sql = "SELECT COUNT(*) FROM corpus WHERE " + qid(a.spec.name) + " = 1";
        } else if (a.spec.type == ValueType::String) {
            auto v = non_null_value_of(a);
            if (!v) return std::nullopt;
            d.question = "How many " + spec.entity_plural + " have a " + a.spec.display_name + " of " +
                         v->to_display() + "?";
            d.sql = "SELECT COUNT(*) FROM corpus WHERE " + qid(a.spec.name) + " = " + sql_literal(*v);
        } else {
            auto v = non_null_value_of(a);
            if (!v) return std::nullopt;
            d.question = "How many " + spec.entity_plural + " have a " + a.spec.display_name +
                         " greater than " + v->to_display() + "?";
            d.sql = "SELECT COUNT(*) FROM corpus WHERE " + qid(a.spec.name) + " > " + sql_literal(*v);
        }
        d.support_sql = "SELECT doc_id FROM corpus" + d.sql.substr(d.sql.find(" WHERE"));
        return d;
    }
    if (tag == "avg") {
        if (numeric.empty()) return std::nullopt;
        const AttributeForge& a = *rng.choice(numeric);
        d.question = rng.bernoulli(0.5)
                         ? "What is the average " + a.spec.display_name + " across all " +
                               spec.entity_plural + "?"
                         : "Across the whole corpus, what is the mean " + a.spec.display_name + " of the " +
                               spec.entity_plural + "?";
        d.sql = "SELECT AVG(" + qid(a.spec.name) + ") FROM corpus";
        d.support_sql = "SELECT doc_id FROM corpus WHERE " + qid(a.spec.name) + " IS NOT NULL";
        return d;
    }
    if (tag == "min_max") {
        if (numeric.empty()) return std::nullopt;
        const AttributeForge& a = *rng.choice(numeric);
        bool use_max = rng.bernoulli(0.5);
        d.question = std::string("What is the ") + (use_max ? "highest " : "lowest ") +
                     a.spec.display_name + " among all " + spec.entity_plural + "?";
        d.sql = std::string("SELECT ") + (use_max ? "MAX(" : "MIN(") + qid(a.spec.name) + ") FROM corpus";
        d.support_sql = "SELECT doc_id FROM corpus WHERE " + qid(a.spec.name) + " = (" + d.sql + ")";
        return d;
    }
    if (tag == "filter") {
        if (categorical.empty() && numeric.empty()) return std::nullopt;
        const AttributeForge& a =
            categorical.empty() ? *rng.choice(numeric) : *rng.choice(categorical);
        std::string condition;
        std::string phrase;
        if (a.spec.type == ValueType::Boolean) {
            bool want = rng.bernoulli(0.5);
            condition = qid(a.spec.name) + " = " + (want ? "1" : "0");
            phrase = (want ? "have " : "do not have ") + a.spec.display_name;
        } else {
            auto v = non_null_value_of(a);
            if (!v) return std::nullopt;
            if (a.spec.type == ValueType::String) {
                condition = qid(a.spec.name) + " = " + sql_literal(*v);
                phrase = "have a " + a.spec.display_name + " of " + v->to_display();
            } else {
                condition = qid(a.spec.name) + " >= " + sql_literal(*v);
                phrase = "have a " + a.spec.display_name + " of at least " + v->to_display();
            }
        }
        d.question = "Which " + spec.entity_plural + " " + phrase + "? List their names.";
        d.sql = "SELECT " + name_col + " FROM corpus WHERE " + condition + " ORDER BY " + name_col;
        d.support_sql = "SELECT doc_id FROM corpus WHERE " + condition;
        return d;
    }
    if (tag == "superlative_composition") {
        if (numeric.empty() || all_but_name.size() < 2) return std::nullopt;
        const AttributeForge& by = *rng.choice(numeric);
        const AttributeForge* what = nullptr;
        for (int tries = 0; tries < 16 && !what; ++tries) {
            const AttributeForge* cand = rng.choice(all_but_name);
            if (cand->spec.name != by.spec.name) what = cand;
        }
        if (!what) return std::nullopt;
        bool use_max = rng.bernoulli(0.5);
        d.question = "What is the " + what->spec.display_name + " of the " + spec.entity_noun +
                     " with the " + (use_max ? "highest " : "lowest ") + by.spec.display_name + "?";
        std::string order = qid(by.spec.name) + (use_max ? " DESC" : " ASC");
        std::string where = " WHERE " + qid(by.spec.name) + " IS NOT NULL";
        d.sql = "SELECT " + qid(what->spec.name) + " FROM corpus" + where + " ORDER BY " + order + ", " +
                name_col + " ASC LIMIT 1";
        d.support_sql = "SELECT doc_id FROM corpus" + where + " ORDER BY " + order + ", " + name_col +
                        " ASC LIMIT 1";
        return d;
    }
    return std::nullopt;
}

}  // namespace forge_detail

// Aggregative question set over forged records. Tags are cycled so any set of
// five or more questions covers every reasoning kind the spec's templates
// support; gold answers come from executing the gold SQL on the record table
// (the oracle), never from templates.
inline std::vector<ForgedQA> forge_questions(const ForgeSpec& spec, const std::vector<Record>& records,
                                             int n_questions, uint64_t seed) {
    if (records.empty()) throw Error(ErrorKind::Config, "cannot forge questions without records");
    if (n_questions < 0) throw Error(ErrorKind::Config, "n_questions must be >= 0");

    Schema schema = schema_of(spec);
    StructuredStore store = build_table(":memory:", schema, records);
    Rng rng(seed);

    std::vector<ForgedQA> out;
    std::set<std::string> texts;
    const auto& tags = forge_tags();
    size_t tag_i = 0;
    int stale = 0;
    while (static_cast<int>(out.size()) < n_questions) {
        const std::string& tag = tags[tag_i % tags.size()];
        ++tag_i;
        auto draft = forge_detail::draft_question(spec, records, tag, rng);
        if (!draft) {
            if (++stale > 200)
                throw Error(ErrorKind::Config, "forge spec cannot produce " +
                                                   std::to_string(n_questions) + " distinct questions");
            continue;
        }
        // uniqueness, and no question may be a substring of another: question
        // texts key the scripted text-to-SQL exchanges used by offline runs
        bool clashes = texts.count(draft->question) > 0;
        for (const auto& t : texts) {
            if (clashes) break;
            if (t.find(draft->question) != std::string::npos ||
                draft->question.find(t) != std::string::npos)
                clashes = true;
        }
        if (clashes) {
            if (++stale > 200)
                throw Error(ErrorKind::Config, "forge spec cannot produce " +
                                                   std::to_string(n_questions) + " distinct questions");
            continue;
        }
        stale = 0;
        texts.insert(draft->question);

        ForgedQA qa;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "q%03d", static_cast<int>(out.size()) + 1);
        qa.question_id = buf;
        qa.question = draft->question;
        qa.tag = tag;
        auto guarded = guard_sql(draft->sql, {kCorpusTable, false}, qa.question_id);
        if (std::holds_alternative<std::string>(guarded))
            throw Error(ErrorKind::Config,
                        "forged SQL failed its own guard: " + std::get<std::string>(guarded));
        qa.gold_sql = std::get<FormalQuery>(guarded);
        qa.gold_answer = render_result_direct(store.execute(qa.gold_sql));

        auto support = guard_sql(draft->support_sql, {kCorpusTable, true}, qa.question_id);
        QueryResult rows = store.execute(std::get<FormalQuery>(support));
        for (const auto& row : rows.rows)
            if (!row[0].is_null()) qa.supporting_doc_ids.push_back(row[0].to_display());
        std::sort(qa.supporting_doc_ids.begin(), qa.supporting_doc_ids.end());
        out.push_back(std::move(qa));
    }
    return out;
}

// Soundness re-check: every gold answer must still equal executing its gold
// SQL over the records. Run after loading a dataset from disk.
inline void verify_gold_answers(const Schema& schema, const std::vector<Record>& records,
                                const std::vector<ForgedQA>& qa) {
    if (qa.empty()) return;
    StructuredStore store = build_table(":memory:", schema, records);
    for (const auto& q : qa) {
        std::string answer = render_result_direct(store.execute(q.gold_sql));
        if (answer != q.gold_answer)
            throw Error(ErrorKind::Config, "gold answer drift for " + q.question_id + ": stored \"" +
                                               q.gold_answer + "\" but SQL yields \"" + answer + "\"");
    }
}

// --- dataset persistence ---

inline json forged_qa_to_json(const ForgedQA& qa) {
    return json{{"question_id", qa.question_id}, {"question", qa.question},
                {"tag", qa.tag},                 {"gold_sql", qa.gold_sql.sql_text},
                {"gold_answer", qa.gold_answer}, {"supporting_doc_ids", qa.supporting_doc_ids}};
}

inline ForgedQA forged_qa_from_json(const json& j) {
    ForgedQA qa;
    qa.question_id = j.at("question_id").get<std::string>();
    qa.question = j.at("question").get<std::string>();
    qa.tag = j.value("tag", "");
    qa.gold_sql = FormalQuery{j.at("gold_sql").get<std::string>(), true, qa.question_id};
    qa.gold_answer = j.at("gold_answer").get<std::string>();
    qa.supporting_doc_ids = j.value("supporting_doc_ids", std::vector<std::string>{});
    return qa;
}

inline void save_forged_qa(const fs::path& path, const std::vector<ForgedQA>& qa) {
    std::ostringstream out;
    for (const auto& q : qa) out << forged_qa_to_json(q).dump() << "\n";
    write_text_file(path, out.str());
}

inline std::vector<ForgedQA> load_forged_qa(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read gold file " + path.string());
    std::vector<ForgedQA> qa;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        qa.push_back(forged_qa_from_json(json::parse(line)));
    }
    return qa;
}

// Scripted-provider scripts derived from forge ground truth: one exchange per
// document mapping its extraction prompt to the true record JSON, and one per
// question mapping its translation prompt to the gold SQL. These make fully
// offline end-to-end runs possible.
inline std::vector<ScriptedExchange> extraction_script(const Schema& schema,
                                                       const std::vector<Record>& records) {
    std::vector<ScriptedExchange> script;
    script.reserve(records.size());
    for (const auto& rec : records) {
        json values = json::object();
        for (const auto& a : schema.attributes) values[a.name] = rec.values.at(a.name).to_json();
        script.push_back({ScriptedExchange::Match::Substring, "--- document " + rec.doc_id + " ---",
                          values.dump(2)});
    }
    return script;
}

inline std::vector<ScriptedExchange> translation_script(const std::vector<ForgedQA>& qa) {
    std::vector<ScriptedExchange> script;
    script.reserve(qa.size());
    for (const auto& q : qa)
        script.push_back({ScriptedExchange::Match::Substring, "Question: " + q.question + "\n",
                          "```sql\n" + q.gold_sql.sql_text + "\n```"});
    return script;
}

struct DatasetPaths {
    fs::path root;
    fs::path docs_dir() const { return root / "docs"; }
    fs::path manifest() const { return root / "manifest.jsonl"; }
    fs::path schema() const { return root / "schema.json"; }
    fs::path records() const { return root / "records.jsonl"; }
    fs::path questions() const { return root / "questions.jsonl"; }
    fs::path gold() const { return root / "gold.jsonl"; }
    fs::path annotations() const { return root / "annotations.jsonl"; }
    fs::path extraction_script() const { return root / "extraction_script.json"; }
    fs::path translation_script() const { return root / "translation_script.json"; }
    fs::path forge_spec() const { return root / "forge_spec.json"; }
};

// Writes the dataset in exactly the layout ingestion and evaluation consume:
// documents as files, corpus manifest, gold schema, ground-truth records,
// questions, gold answers and the two derived scripts.
inline DatasetPaths export_dataset(const ForgeSpec& spec, const std::vector<Record>& records,
                                   const std::vector<VerbalizedDocument>& docs,
                                   const std::vector<ForgedQA>& qa, const fs::path& out_dir) {
    DatasetPaths paths{out_dir};
    fs::create_directories(paths.docs_dir());

    std::vector<Document> corpus;
    std::ostringstream annotations;
    for (const auto& vd : docs) {
        fs::path file = paths.docs_dir() / (vd.doc.doc_id + ".html");
        write_text_file(file, vd.doc.text);
        Document doc = vd.doc;
        // relative to the dataset root so the manifest replays from any cwd
        doc.source_path = (fs::path("docs") / (vd.doc.doc_id + ".html")).generic_string();
        corpus.push_back(std::move(doc));
        for (const auto& ann : vd.annotations)
            annotations << json{{"doc_id", vd.doc.doc_id},
                                {"attribute", ann.attribute},
                                {"lexicalization", ann.lexicalization},
                                {"location", ann.location}}
                               .dump()
                        << "\n";
    }
    std::sort(corpus.begin(), corpus.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    save_manifest(paths.manifest(), corpus);
    write_text_file(paths.annotations(), annotations.str());

    Schema schema = schema_of(spec);
    save_schema(paths.schema(), schema);
    save_records(paths.records(), records, schema);

    std::ostringstream questions;
    for (const auto& q : qa)
        questions << json{{"question_id", q.question_id}, {"text", q.question}}.dump() << "\n";
    write_text_file(paths.questions(), questions.str());
    save_forged_qa(paths.gold(), qa);

    save_script(paths.extraction_script(), extraction_script(schema, records));
    save_script(paths.translation_script(), translation_script(qa));
    write_text_file(paths.forge_spec(), forge_spec_to_json(spec).dump(2) + "\n");
    return paths;
}

// Reference spec used by tests and as CLI documentation. Scales to several
// hundred unique records; filler prose calibrates pages to a few hundred
// tokens each.
inline ForgeSpec example_hotels_spec(int n_records = 50, uint64_t seed = 7) {
    auto attr = [](std::string name, std::string display, ValueType type, std::string description,
                   std::vector<Value> examples, json distribution, double null_p = 0.0) {
        AttributeForge f;
        f.spec.name = std::move(name);
        f.spec.display_name = std::move(display);
        f.spec.type = type;
        f.spec.description = std::move(description);
        f.spec.examples = std::move(examples);
        f.spec.required = false;
        f.distribution = std::move(distribution);
        f.null_probability = null_p;
        return f;
    };

    ForgeSpec spec;
    spec.title = "Hotel";
    spec.entity_noun = "hotel";
    spec.entity_plural = "hotels";
    spec.name_attribute = "hotel_name";
    spec.n_records = n_records;
    spec.seed = seed;
    spec.inline_fraction = 0.5;
    spec.filler_sentences_min = 14;
    spec.filler_sentences_max = 22;

    spec.attributes.push_back(attr(
        "hotel_name", "hotel name", ValueType::String, "Full name of the hotel as it appears in the listing.",
        {Value::text("Grand Harbor Hotel")},
        json{{"kind", "unique_name"},
             {"format", "{0} {1} Hotel"},
             {"parts",
              json::array({json::array({"Grand",  "Royal",  "Golden",   "Silver", "Emerald", "Crimson",
                                        "Azure",  "Ivory",  "Velvet",   "Marble", "Copper",  "Sapphire",
                                        "Amber",  "Coral",  "Jade",     "Onyx",   "Pearl",   "Ruby",
                                        "Topaz",  "Garnet"}),
                           json::array({"Harbor", "Garden", "Palace",  "Plaza",  "Court",  "Lodge",
                                        "Manor",  "Terrace", "Retreat", "Haven",  "Crown",  "Meadow",
                                        "Springs", "Vista",  "Arms",    "House",  "Station", "Bridge",
                                        "Park",   "Quay"})})}}));
    spec.attributes.push_back(attr("city", "city", ValueType::String,
                                   "City the hotel is located in.", {Value::text("Amsterdam")},
                                   json{{"kind", "choice"},
                                        {"values", json::array({"Amsterdam", "Berlin", "Lisbon", "Prague",
                                                                "Vienna", "Madrid", "Oslo", "Dublin",
                                                                "Athens", "Warsaw", "Zurich", "Porto"})}}));
    spec.attributes.push_back(attr("stars", "star rating", ValueType::Integer,
                                   "Official star classification from 1 to 5.", {Value::integer(4)},
                                   json{{"kind", "int_range"}, {"min", 1}, {"max", 5}}));
    spec.attributes.push_back(attr("guest_rating", "guest rating", ValueType::Number,
                                   "Average guest review score on a 10-point scale.",
                                   {Value::number(8.7)},
                                   json{{"kind", "real_range"}, {"min", 2.0}, {"max", 9.9}, {"decimals", 1}}));
    spec.attributes.push_back(attr("review_count", "review count", ValueType::Integer,
                                   "Total number of published guest reviews.", {Value::integer(1284)},
                                   json{{"kind", "int_range"}, {"min", 15}, {"max", 4200}}));
    spec.attributes.push_back(attr("nightly_rate", "nightly rate", ValueType::Number,
                                   "Standard double room rate per night in euros.", {Value::number(145.5)},
                                   json{{"kind", "real_range"}, {"min", 40.0}, {"max", 900.0}, {"decimals", 1}},
                                   0.05));
    spec.attributes.push_back(attr("room_count", "room count", ValueType::Integer,
                                   "Number of guest rooms in the hotel.", {Value::integer(120)},
                                   json{{"kind", "int_range"}, {"min", 12}, {"max", 420}}));
    spec.attributes.push_back(attr("has_pool", "pool", ValueType::Boolean,
                                   "Whether the hotel has a swimming pool (yes/no on the page).",
                                   {Value::boolean(true)}, json{{"kind", "bernoulli"}, {"p", 0.45}}));
    spec.attributes.push_back(attr("breakfast_included", "breakfast included", ValueType::Boolean,
                                   "Whether breakfast is included in the standard rate.",
                                   {Value::boolean(false)}, json{{"kind", "bernoulli"}, {"p", 0.5}}));
    spec.attributes.push_back(attr("availability_status", "availability status", ValueType::String,
                                   "Current booking availability of the hotel.",
                                   {Value::text("available")},
                                   json{{"kind", "choice"},
                                        {"values", json::array({"available", "limited availability",
                                                                "fully booked"})}}));
    spec.attributes.push_back(attr("year_opened", "year opened", ValueType::Integer,
                                   "Year the hotel first opened.", {Value::integer(1987)},
                                   json{{"kind", "int_range"}, {"min", 1950}, {"max", 2023}}, 0.1));
    return spec;
}

}  // namespace srag
