#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "srag/corpus.hpp"
#include "srag/gateway.hpp"
#include "srag/schema.hpp"

namespace srag {

enum class CellStatus { Ok, Null, Coerced, Rejected };

inline const char* cell_status_name(CellStatus s) {
    switch (s) {
        case CellStatus::Ok: return "ok";
        case CellStatus::Null: return "null";
        case CellStatus::Coerced: return "coerced";
        case CellStatus::Rejected: return "rejected";
    }
    return "null";
}

inline std::optional<CellStatus> cell_status_from_name(std::string_view s) {
    if (s == "ok") return CellStatus::Ok;
    if (s == "null") return CellStatus::Null;
    if (s == "coerced") return CellStatus::Coerced;
    if (s == "rejected") return CellStatus::Rejected;
    return std::nullopt;
}

struct CellMeta {
    CellStatus status = CellStatus::Null;
    std::string raw;   // original literal for coerced/rejected values
    std::string note;  // e.g. merge conflicts on chunked documents
};

// One row of the corpus table: a typed (possibly null) value per schema
// attribute, plus per-cell audit trail.
struct Record {
    std::string doc_id;
    std::map<std::string, Value> values;
    std::map<std::string, CellMeta> meta;
    bool failed = false;  // document-level extraction failure, all values null
};

struct ValidatedCell {
    Value value;
    CellStatus status = CellStatus::Null;
    std::string raw;
};

// Post-processing type check for a single predicted value. Exact matches and
// the documented coercions pass; everything else is rejected (null value, raw
// literal preserved).
inline ValidatedCell validate_value(const json& raw, const AttributeSpec& spec) {
    if (raw.is_null()) return {Value::null(), CellStatus::Null, ""};
    auto coerced = coerce_scalar(raw, spec.type);
    switch (coerced.outcome) {
        case Coercion::Exact: return {coerced.value, CellStatus::Ok, ""};
        case Coercion::Coerced: return {coerced.value, CellStatus::Coerced, raw.dump()};
        case Coercion::Rejected: return {Value::null(), CellStatus::Rejected, raw.dump()};
    }
    return {Value::null(), CellStatus::Rejected, raw.dump()};
}

inline constexpr const char* kExtractionSystemPrompt =
    "You extract structured records from documents. Answer with a single fenced JSON object and nothing "
    "else. Use null for attributes the document does not state. Follow each attribute's description and "
    "examples for units, capitalization and formatting.";

struct ExtractionOptions {
    int reask_budget = 1;       // re-asks after the first unparseable reply
    int window_tokens = 60000;  // documents longer than this are processed in sequential windows
    std::string model_id;
    int max_output_tokens = 4096;
};

inline std::string build_extraction_prompt(const Document& doc, const Schema& schema,
                                           std::string_view window_text) {
    std::string prompt =
        "Read the document and produce a JSON object with exactly one key per attribute listed below. "
        "Every value must match the attribute's type; use null when the document does not express the "
        "attribute.\n\n";
    prompt += schema_prompt_block(schema);
    prompt += "\n--- document " + doc.doc_id + " ---\n";
    prompt += std::string(window_text);
    prompt += "\n--- end of document ---\n";
    return prompt;
}

namespace detail {

inline Record all_null_record(const Document& doc, const Schema& schema, const std::string& note) {
    Record rec;
    rec.doc_id = doc.doc_id;
    rec.failed = true;
    for (const auto& a : schema.attributes) {
        rec.values[a.name] = Value::null();
        rec.meta[a.name] = {CellStatus::Null, "", note};
    }
    return rec;
}

// One LLM pass over one window of the document.
inline std::optional<json> ask_for_record(ChatProvider& provider, const Document& doc, const Schema& schema,
                                          std::string_view window_text, const ExtractionOptions& opts) {
    std::string prompt = build_extraction_prompt(doc, schema, window_text);
    for (int attempt = 0; attempt <= opts.reask_budget; ++attempt) {
        ChatRequest req{kExtractionSystemPrompt, prompt, opts.model_id, 0.0, opts.max_output_tokens};
        std::string response = provider.complete(req);
        json parsed = json::parse(strip_code_fence(response), nullptr, false);
        if (parsed.is_object()) return parsed;
        prompt = build_extraction_prompt(doc, schema, window_text) +
                 "\nYour previous reply was not a valid JSON object. Reply with only the fenced JSON object.\n";
    }
    return std::nullopt;
}

}  // namespace detail

// Maps one document to a typed record. Long documents are processed in
// sequential windows merged by "first non-null wins"; conflicting non-null
// values are kept from the earliest window and flagged in the cell note.
inline Record extract_record(ChatProvider& provider, const Document& doc, const Schema& schema,
                             const ExtractionOptions& opts = {}) {
    if (schema.attributes.empty()) throw Error(ErrorKind::Config, "cannot extract with an empty schema");
    if (doc.text.empty()) return detail::all_null_record(doc, schema, "empty document");

    std::vector<std::string_view> windows;
    std::string_view rest = doc.text;
    while (!rest.empty()) {
        std::string_view window = token_prefix(rest, static_cast<size_t>(opts.window_tokens));
        if (window.empty()) window = rest;  // defensive: should not happen for non-empty text
        windows.push_back(window);
        rest = rest.substr(window.size());
    }

    Record rec;
    rec.doc_id = doc.doc_id;
    bool any_window_parsed = false;
    for (const auto& a : schema.attributes) {
        rec.values[a.name] = Value::null();
        rec.meta[a.name] = {CellStatus::Null, "", ""};
    }

    for (std::string_view window : windows) {
        auto parsed = detail::ask_for_record(provider, doc, schema, window, opts);
        if (!parsed) continue;
        any_window_parsed = true;
        for (const auto& a : schema.attributes) {
            // Prompts use normalized names; tolerate replies keyed by the display name.
            const json* cell_json = nullptr;
            if (parsed->contains(a.name)) cell_json = &(*parsed)[a.name];
            else if (!a.display_name.empty() && parsed->contains(a.display_name))
                cell_json = &(*parsed)[a.display_name];
            if (!cell_json) continue;
            ValidatedCell cell = validate_value(*cell_json, a);
            auto& current = rec.values[a.name];
            auto& meta = rec.meta[a.name];
            if (current.is_null() && meta.status != CellStatus::Rejected) {
                current = cell.value;
                meta.status = cell.status;
                meta.raw = cell.raw;
            } else if (!cell.value.is_null() && cell.value != current) {
                meta.note = "conflict: kept first window value, later window saw " + cell.value.to_display();
            }
        }
    }

    if (!any_window_parsed)
        return detail::all_null_record(doc, schema, "model output unparseable after re-asks");
    return rec;
}

struct ExtractionReport {
    size_t total_documents = 0;
    size_t failed_documents = 0;
    std::vector<std::string> failed_doc_ids;
    std::map<std::string, double> null_rate;          // attribute -> fraction of null cells
    std::vector<std::string> all_null_attributes;     // schema-quality warnings
};

struct CorpusExtraction {
    std::vector<Record> records;
    ExtractionReport report;
};

// Extracts every document, documents being independent the work is spread
// over `parallelism` threads; results are merged in doc_id order so the output
// is identical to a serial run.
inline CorpusExtraction extract_corpus(ChatProvider& provider, const std::vector<Document>& corpus,
                                       const Schema& schema, int parallelism = 1,
                                       const ExtractionOptions& opts = {},
                                       double max_failure_fraction = 0.5) {
    if (corpus.empty()) throw Error(ErrorKind::Config, "cannot extract an empty corpus");
    if (parallelism < 1) parallelism = 1;

    std::vector<Record> records(corpus.size());
    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    std::vector<std::string> worker_errors;

    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= corpus.size()) break;
            try {
                records[i] = extract_record(provider, corpus[i], schema, opts);
            } catch (const std::exception& e) {
                records[i] = detail::all_null_record(corpus[i], schema, e.what());
                std::lock_guard<std::mutex> lock(error_mutex);
                worker_errors.push_back(corpus[i].doc_id + ": " + e.what());
            }
        }
    };

    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < parallelism; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    std::sort(records.begin(), records.end(),
              [](const Record& a, const Record& b) { return a.doc_id < b.doc_id; });

    CorpusExtraction out;
    out.report.total_documents = corpus.size();
    std::map<std::string, size_t> null_counts;
    for (const auto& rec : records) {
        if (rec.failed) {
            out.report.failed_documents++;
            out.report.failed_doc_ids.push_back(rec.doc_id);
        }
        for (const auto& [name, value] : rec.values)
            if (value.is_null()) null_counts[name]++;
    }
    for (const auto& a : schema.attributes) {
        double rate = static_cast<double>(null_counts[a.name]) / static_cast<double>(records.size());
        out.report.null_rate[a.name] = rate;
        if (rate == 1.0) out.report.all_null_attributes.push_back(a.name);
    }

    double failure_fraction =
        static_cast<double>(out.report.failed_documents) / static_cast<double>(corpus.size());
    if (failure_fraction > max_failure_fraction)
        throw Error(ErrorKind::Extraction,
                    std::to_string(out.report.failed_documents) + "/" + std::to_string(corpus.size()) +
                        " documents failed extraction (limit " + format_double(max_failure_fraction) + ")");

    out.records = std::move(records);
    return out;
}

// --- records persistence (JSON lines keyed by doc_id) ---

inline json record_to_json(const Record& rec, const Schema& schema) {
    json values = json::object();
    json meta = json::object();
    for (const auto& a : schema.attributes) {
        values[a.name] = rec.values.at(a.name).to_json();
        const auto& m = rec.meta.at(a.name);
        json cell = {{"status", cell_status_name(m.status)}};
        if (!m.raw.empty()) cell["raw"] = m.raw;
        if (!m.note.empty()) cell["note"] = m.note;
        meta[a.name] = cell;
    }
    json out = {{"doc_id", rec.doc_id}, {"values", values}, {"meta", meta}};
    if (rec.failed) out["failed"] = true;
    return out;
}

inline Record record_from_json(const json& j, const Schema& schema) {
    Record rec;
    rec.doc_id = j.at("doc_id").get<std::string>();
    rec.failed = j.value("failed", false);
    const json& values = j.at("values");
    for (const auto& a : schema.attributes) {
        if (!values.contains(a.name))
            throw Error(ErrorKind::Parse, "record " + rec.doc_id + " missing attribute " + a.name);
        ValidatedCell cell = validate_value(values[a.name], a);
        if (cell.status == CellStatus::Rejected)
            throw Error(ErrorKind::Parse, "record " + rec.doc_id + " attribute " + a.name +
                                              " does not parse as " + value_type_name(a.type));
        rec.values[a.name] = cell.value;
        CellMeta meta{cell.status, cell.raw, ""};
        if (j.contains("meta") && j["meta"].contains(a.name)) {
            const json& m = j["meta"][a.name];
            if (auto st = cell_status_from_name(m.value("status", ""))) meta.status = *st;
            meta.raw = m.value("raw", meta.raw);
            meta.note = m.value("note", "");
        }
        rec.meta[a.name] = meta;
    }
    return rec;
}

inline void save_records(const fs::path& path, const std::vector<Record>& records, const Schema& schema) {
    std::ostringstream out;
    for (const auto& rec : records) out << record_to_json(rec, schema).dump() << "\n";
    write_text_file(path, out.str());
}

inline std::vector<Record> load_records(const fs::path& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read records " + path.string());
    std::vector<Record> records;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        records.push_back(record_from_json(json::parse(line), schema));
    }
    return records;
}

}  // namespace srag
