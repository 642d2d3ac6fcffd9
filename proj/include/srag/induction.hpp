#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srag/corpus.hpp"
#include "srag/gateway.hpp"
#include "srag/schema.hpp"

namespace srag {

// Iterative schema prediction: one bootstrap pass over sample documents, then
// question-guided refinement passes. Model output is re-validated every
// iteration; violations trigger bounded re-asks and finally an
// attribute-dropping repair, so the returned schema always satisfies the flat
// single-table contract.

inline constexpr const char* kSchemaInitialInstructions = R"(Task: Extract a single JSON schema from the provided documents. I'll provide you with a set of documents. Your task is to analyze these documents and identify recurring concepts. Then, build a single JSON schema that exhaustively captures *all* these concepts across all documents.

Focus specifically on identifying patterns that appear consistently across multiple documents.

Present your response as a complete JSON schema with the following structure:

```json
{
  "title": "YourSchemaName",
  "type": "object",
  "properties": {
    "fieldName": {
      "type": "string",
      "description": "Detailed description of the field, at least two sentences.",
      "examples": ["example1", "example2"]
    }
  },
  "required": ["fieldName"]
}
```

When building the schema:
- Avoid object-type fields with additional nested properties when possible.
- Avoid list. Instead use boolean attribute for each of the potential value.
- Make sure to capture all recurring concepts
- Relevant concepts may include locations, dates, numbers, strings, etc.
- Relevant concepts should not be lengthy strings (e.g. a "description" field is not a good choice), you should rather decompose into separate fields if possible.
)";

inline constexpr const char* kSchemaRefineInstructions = R"(Task: Refine an existing JSON schema based on set of questions and documents analysis

I'll provide you with an existing JSON schema, set of questions, and a set of documents. The JSON schemas of different documents will be converted into an SQL table, that will be used as knowledge source to answer questions that are similar to the provided questions. Your task is to analyze what attributes from the documents can provide answers to questions similar to the provided questions, and refine the existing schema.
Make sure that the attribute value can be extracted (and not inferred) from each of the documents.

Provide the final refined JSON schema implementation:

```json
{
  "title": "RefinedSchemaName",
  "type": "object",
  "properties": {
    "propertyName": {
      "type": "string",
      "description": "Detailed description of the property, at least two sentences.",
      "examples": ["example1", "example2"]
    }
  },
  "required": ["propertyName"]
}
```

In addition for each attribute and document provide the value of the attribute in the document.

When evaluating the existing schema:
- Make sure that every property can be extracted from each of the documents
- Modify properties where the name, type, or definition could be improved
- Add new properties for concepts that can help answer the questions. E.g.: if a question is about "the most common location", you should add a property for "location" if it doesn't exist. Make sure that the property value can be extracted from each of the documents.
- Add new properties for recurring concepts not captured in the existing schema
- Add new properties for trivial concepts that are missing in the existing schema. E.g: If the schema represents a house for sale, it must include the seller's name.
- Use appropriate JSON Schema types (string, number, integer, boolean, array, etc.)
- Provide descriptions and examples for each property
- Avoid nested object properties
- Fields should not be lengthy strings (e.g. a "description" field is not a good choice), you should rather decompose into separate fields if possible.
- Avoid assigning values to the attributes in the schema. You should only provide the schema itself, without any values.
For each property decision, provide a clear rationale based on related question or patterns observed in the documents. Your goal is to create a refined schema that better captures the recurring patterns that can be used to answer the questions while minimizing unnecessary changes to the existing structure.
)";

inline constexpr const char* kInductionSystemPrompt =
    "You design JSON schemas that describe document collections. Answer with a single fenced JSON code block.";

struct InductionOptions {
    int iterations = 4;
    int per_doc_tokens = 4000;  // truncation budget per sampled document
    int reask_budget = 2;       // re-asks after the first failed attempt
    std::string model_id;
    int max_output_tokens = 4096;
};

struct InductionResult {
    Schema schema;
    std::vector<Schema> snapshots;  // one per iteration, all valid
    std::vector<std::string> warnings;
};

inline std::string sample_fingerprint(const CorpusSample& sample) {
    uint64_t h = fnv1a64("sample");
    for (const auto& d : sample.documents) h = fnv1a64(d.doc_id, fnv1a64("\x1f", h));
    for (const auto& q : sample.questions) h = fnv1a64(q, fnv1a64("\x1e", h));
    return to_hex(h);
}

namespace detail {

inline std::string documents_block(const std::vector<Document>& docs, int per_doc_tokens) {
    std::string out = "Documents:\n";
    for (const auto& d : docs) {
        std::string_view prefix = token_prefix(d.text, static_cast<size_t>(per_doc_tokens));
        out += "--- document " + d.doc_id + " ---\n";
        out += std::string(prefix);
        if (prefix.size() < d.text.size()) out += "\n[truncated]";
        out += "\n\n";
    }
    return out;
}

inline std::string questions_block(const std::vector<std::string>& questions) {
    std::string out = "Questions:\n";
    for (const auto& q : questions) out += "- " + q + "\n";
    return out;
}

// Drop the attributes named in violations and patch trivial schema-level
// problems, then re-validate. Returns nothing if the wreck is not salvageable.
inline std::optional<Schema> repair_schema(json raw, const std::vector<SchemaViolation>& violations,
                                           std::vector<std::string>* warnings) {
    if (!raw.is_object()) return std::nullopt;
    for (const auto& v : violations) {
        if (!v.attribute.empty() && raw.contains("properties") && raw["properties"].is_object()) {
            raw["properties"].erase(v.attribute);
            warnings->push_back("dropped attribute '" + v.attribute + "': " + v.message);
        } else if (v.message == "missing title") {
            raw["title"] = "Entity";
            warnings->push_back("schema title missing, defaulted to 'Entity'");
        } else if (v.message.rfind("schema type", 0) == 0) {
            raw["type"] = "object";
        } else if (v.message.rfind("required", 0) == 0) {
            raw.erase("required");
            warnings->push_back("discarded malformed required list");
        }
    }
    auto result = validate_schema(raw);
    if (auto* schema = std::get_if<Schema>(&result)) return std::move(*schema);
    return std::nullopt;
}

// Shared ask/parse/validate/re-ask loop for both induction steps.
inline Schema request_schema(ChatProvider& provider, const std::string& base_prompt,
                             const InductionOptions& opts, std::vector<std::string>* warnings) {
    std::vector<std::string> raw_responses;
    std::string prompt = base_prompt;
    for (int attempt = 0; attempt <= opts.reask_budget; ++attempt) {
        ChatRequest req{kInductionSystemPrompt, prompt, opts.model_id, 0.0, opts.max_output_tokens};
        std::string response = provider.complete(req);
        raw_responses.push_back(response);

        json parsed = json::parse(strip_code_fence(response), nullptr, false);
        std::vector<SchemaViolation> violations;
        if (parsed.is_discarded()) {
            violations.push_back({"", "response is not valid JSON"});
        } else {
            auto result = validate_schema(parsed);
            if (auto* schema = std::get_if<Schema>(&result)) return std::move(*schema);
            violations = std::get<std::vector<SchemaViolation>>(std::move(result));
        }

        if (attempt == opts.reask_budget) {
            // out of re-asks; salvage what we can before giving up
            if (!parsed.is_discarded())
                if (auto repaired = repair_schema(parsed, violations, warnings)) return std::move(*repaired);
            std::string detail = "schema induction failed after " + std::to_string(attempt + 1) +
                                 " attempts; last violations:\n" + schema_violations_text(violations) +
                                 "\nlast raw response:\n" + raw_responses.back();
            throw Error(ErrorKind::Induction, detail);
        }
        prompt = base_prompt +
                 "\n\nYour previous schema was rejected for these violations, fix them and resend the full "
                 "corrected JSON schema:\n" +
                 schema_violations_text(violations) + "\n";
    }
    throw Error(ErrorKind::Induction, "unreachable");
}

}  // namespace detail

inline Schema predict_initial_schema(ChatProvider& provider, const std::vector<Document>& sample_docs,
                                     const InductionOptions& opts = {},
                                     std::vector<std::string>* warnings = nullptr) {
    if (sample_docs.empty()) throw Error(ErrorKind::Config, "schema induction needs at least one document");
    std::vector<std::string> sink;
    std::string prompt = std::string(kSchemaInitialInstructions) + "\n" +
                         detail::documents_block(sample_docs, opts.per_doc_tokens);
    return detail::request_schema(provider, prompt, opts, warnings ? warnings : &sink);
}

inline Schema refine_schema(ChatProvider& provider, const Schema& current, const CorpusSample& sample,
                            const InductionOptions& opts = {},
                            std::vector<std::string>* warnings = nullptr) {
    std::vector<std::string> sink;
    json current_json = schema_to_json(current);
    current_json.erase("x_srag_provenance");
    std::string prompt = std::string(kSchemaRefineInstructions) + "\nExisting schema:\n```json\n" +
                         current_json.dump(2) + "\n```\n\n" + detail::questions_block(sample.questions) +
                         "\n" + detail::documents_block(sample.documents, opts.per_doc_tokens);
    return detail::request_schema(provider, prompt, opts, warnings ? warnings : &sink);
}

inline InductionResult induce(ChatProvider& provider, const CorpusSample& sample,
                              const InductionOptions& opts = {}) {
    if (opts.iterations < 1) throw Error(ErrorKind::Config, "iterations must be >= 1");
    InductionResult result;
    Schema schema = predict_initial_schema(provider, sample.documents, opts, &result.warnings);
    schema.iterations = 1;
    schema.sample_fingerprint = sample_fingerprint(sample);
    result.snapshots.push_back(schema);
    for (int it = 2; it <= opts.iterations; ++it) {
        schema = refine_schema(provider, schema, sample, opts, &result.warnings);
        schema.iterations = it;
        schema.sample_fingerprint = result.snapshots.front().sample_fingerprint;
        result.snapshots.push_back(schema);
    }
    result.schema = schema;
    return result;
}

}  // namespace srag
