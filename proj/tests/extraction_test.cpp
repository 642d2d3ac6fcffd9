#include <catch2/catch_amalgamated.hpp>

#include "srag/extraction.hpp"
#include "test_support.hpp"

using namespace srag;
using test_support::fresh_dir;

namespace {

Schema hotel_schema() {
    json raw = {
        {"title", "Hotel"},
        {"type", "object"},
        {"properties",
         {{"hotel_name",
           {{"type", "string"}, {"description", "Name of the hotel."}, {"examples", {"Grand Plaza"}}}},
          {"stars", {{"type", "integer"}, {"description", "Star class."}, {"examples", {4}}}},
          {"guest_rating",
           {{"type", "number"}, {"description", "Average rating."}, {"examples", {8.7}}}}}},
    };
    return schema_from_json(raw);
}

Document doc(const std::string& id, const std::string& text) { return {id, id + ".html", text, 0}; }

// Hash matcher for the exact first extraction request of `d` (re-ask prompts
// embed the original, so substring matchers cannot tell the attempts apart).
ScriptedExchange first_ask_by_hash(const Document& d, const Schema& schema,
                                   const ExtractionOptions& opts, const std::string& response) {
    ChatRequest req{kExtractionSystemPrompt, build_extraction_prompt(d, schema, d.text), opts.model_id,
                    0.0, opts.max_output_tokens};
    return {ScriptedExchange::Match::Hash, request_fingerprint(req), response};
}

}  // namespace

TEST_CASE("validate_value maps coercion outcomes to cell statuses", "[extraction]") {
    Schema schema = hotel_schema();
    const AttributeSpec& rating = *schema.find("guest_rating");
    const AttributeSpec& stars = *schema.find("stars");

    ValidatedCell c = validate_value(json(8.7), rating);
    CHECK(c.status == CellStatus::Ok);
    CHECK(c.value == Value::number(8.7));
    CHECK(c.raw.empty());

    c = validate_value(json("8.7"), rating);
    CHECK(c.status == CellStatus::Coerced);
    CHECK(c.value == Value::number(8.7));
    CHECK(c.raw == "\"8.7\"");  // original literal preserved for audit

    c = validate_value(json("abc"), rating);
    CHECK(c.status == CellStatus::Rejected);
    CHECK(c.value.is_null());
    CHECK(c.raw == "\"abc\"");

    c = validate_value(json(nullptr), stars);
    CHECK(c.status == CellStatus::Null);
    CHECK(c.value.is_null());

    c = validate_value(json(3.0), stars);
    CHECK(c.status == CellStatus::Coerced);
    CHECK(c.value == Value::integer(3));
}

TEST_CASE("extract_record types a clean reply", "[extraction]") {
    Schema schema = hotel_schema();
    Document d = doc("grand-plaza", "<h1>Grand Plaza</h1><p>5 stars, rated 8.7.</p>");
    ScriptedProvider provider({{ScriptedExchange::Match::Substring, "--- document grand-plaza ---",
                                "```json\n{\"hotel_name\": \"Grand Plaza\", \"stars\": 5, "
                                "\"guest_rating\": 8.7}\n```"}});
    Record rec = extract_record(provider, d, schema);
    CHECK_FALSE(rec.failed);
    CHECK(rec.values.at("hotel_name") == Value::text("Grand Plaza"));
    CHECK(rec.values.at("stars") == Value::integer(5));
    CHECK(rec.values.at("guest_rating") == Value::number(8.7));
    CHECK(rec.meta.at("hotel_name").status == CellStatus::Ok);
}

TEST_CASE("replies keyed by display name are tolerated", "[extraction]") {
    json raw = {{"title", "Hotel"},
                {"type", "object"},
                {"properties",
                 {{"Guest Rating",
                   {{"type", "number"}, {"description", "Average rating."}, {"examples", {8.7}}}}}}};
    Schema schema = schema_from_json(raw);  // normalized column: guest_rating
    Document d = doc("h1", "rated highly");
    ScriptedProvider provider({{ScriptedExchange::Match::Substring, "--- document h1 ---",
                                R"({"Guest Rating": 9.1})"}});
    Record rec = extract_record(provider, d, schema);
    CHECK(rec.values.at("guest_rating") == Value::number(9.1));
}

TEST_CASE("missing keys and unknown keys leave cells null without failing", "[extraction]") {
    Schema schema = hotel_schema();
    Document d = doc("partial", "some text");
    ScriptedProvider provider({{ScriptedExchange::Match::Substring, "--- document partial ---",
                                R"({"hotel_name": "Lodge", "unrelated_key": 1})"}});
    Record rec = extract_record(provider, d, schema);
    CHECK_FALSE(rec.failed);
    CHECK(rec.values.at("hotel_name") == Value::text("Lodge"));
    CHECK(rec.values.at("stars").is_null());
    CHECK(rec.meta.at("stars").status == CellStatus::Null);
    CHECK(rec.values.count("unrelated_key") == 0);  // never invents attributes
}

TEST_CASE("unparseable reply triggers one re-ask, then the window is given up", "[extraction]") {
    Schema schema = hotel_schema();
    Document d = doc("flaky", "flaky content");
    ExtractionOptions opts;

    SECTION("re-ask succeeds") {
        ScriptedProvider provider({
            first_ask_by_hash(d, schema, opts, "NOT JSON"),
            {ScriptedExchange::Match::Substring, "was not a valid JSON object",
             R"({"hotel_name": "Fixed", "stars": 3, "guest_rating": null})"},
        });
        CallLog log;
        provider.attach_log(&log);
        Record rec = extract_record(provider, d, schema, opts);
        CHECK(log.size() == 2);
        CHECK_FALSE(rec.failed);
        CHECK(rec.values.at("hotel_name") == Value::text("Fixed"));
    }

    SECTION("re-ask also fails: all-null failed record, no exception") {
        ScriptedProvider provider({
            first_ask_by_hash(d, schema, opts, "NOT JSON"),
            {ScriptedExchange::Match::Substring, "was not a valid JSON object", "STILL NOT JSON"},
        });
        Record rec = extract_record(provider, d, schema, opts);
        CHECK(rec.failed);
        for (const auto& [name, value] : rec.values) CHECK(value.is_null());
        CHECK(rec.meta.at("stars").note.find("unparseable") != std::string::npos);
    }
}

TEST_CASE("long documents are windowed and merged first-non-null", "[extraction]") {
    Schema schema = hotel_schema();
    // 10 tokens; with window_tokens=5 this is exactly two windows.
    Document d = doc("big", "WINDOWONE Grand Plaza five stars WINDOWTWO rating nine one aaa");
    ExtractionOptions opts;
    opts.window_tokens = 5;

    ScriptedProvider provider({
        {ScriptedExchange::Match::Substring, "WINDOWONE",
         R"({"hotel_name": "Grand Plaza", "stars": 5, "guest_rating": null})"},
        {ScriptedExchange::Match::Substring, "WINDOWTWO",
         R"({"hotel_name": "Station Inn", "stars": null, "guest_rating": 9.1})"},
    });
    CallLog log;
    provider.attach_log(&log);
    Record rec = extract_record(provider, d, schema, opts);
    CHECK(log.size() == 2);  // one call per window
    // First window wins hotel_name; the disagreement is flagged, not silently dropped.
    CHECK(rec.values.at("hotel_name") == Value::text("Grand Plaza"));
    CHECK(rec.meta.at("hotel_name").note.find("Station Inn") != std::string::npos);
    // Later windows fill nulls.
    CHECK(rec.values.at("stars") == Value::integer(5));
    CHECK(rec.values.at("guest_rating") == Value::number(9.1));
}

TEST_CASE("a rejected cell is not overwritten by later windows", "[extraction]") {
    Schema schema = hotel_schema();
    Document d = doc("rej", "WINDOWONE a b c d WINDOWTWO e f g h");
    ExtractionOptions opts;
    opts.window_tokens = 5;
    ScriptedProvider provider({
        {ScriptedExchange::Match::Substring, "WINDOWONE",
         R"({"hotel_name": null, "stars": "five", "guest_rating": null})"},
        {ScriptedExchange::Match::Substring, "WINDOWTWO",
         R"({"hotel_name": null, "stars": 5, "guest_rating": null})"},
    });
    Record rec = extract_record(provider, d, schema, opts);
    CHECK(rec.values.at("stars").is_null());
    CHECK(rec.meta.at("stars").status == CellStatus::Rejected);
    CHECK(rec.meta.at("stars").raw == "\"five\"");
}

TEST_CASE("empty documents and empty schemas", "[extraction]") {
    Schema schema = hotel_schema();
    ScriptedProvider provider{std::vector<ScriptedExchange>{}};
    Record rec = extract_record(provider, doc("void", ""), schema);
    CHECK(rec.failed);
    CHECK(rec.meta.at("stars").note == "empty document");

    Schema empty;
    CHECK_THROWS_AS(extract_record(provider, doc("x", "text"), empty), Error);
}

namespace {

std::vector<Document> ten_docs() {
    std::vector<Document> docs;
    for (int i = 0; i < 10; ++i) {
        std::string id = "hotel-" + std::to_string(i);
        docs.push_back(doc(id, "page for " + id));
    }
    return docs;
}

std::vector<ScriptedExchange> exchanges_for(const std::vector<Document>& docs, int skip_index = -1) {
    std::vector<ScriptedExchange> ex;
    for (size_t i = 0; i < docs.size(); ++i) {
        if (static_cast<int>(i) == skip_index) continue;
        json values = {{"hotel_name", "Hotel " + std::to_string(i)},
                       {"stars", static_cast<int>(i % 5) + 1},
                       {"guest_rating", i == 3 ? json(nullptr) : json(5.0 + static_cast<double>(i) / 10.0)}};
        ex.push_back({ScriptedExchange::Match::Substring, "--- document " + docs[i].doc_id + " ---",
                      values.dump()});
    }
    return ex;
}

bool records_equal(const Record& a, const Record& b) {
    return a.doc_id == b.doc_id && a.failed == b.failed && a.values == b.values;
}

}  // namespace

TEST_CASE("parallel extraction equals serial extraction", "[extraction]") {
    Schema schema = hotel_schema();
    auto docs = ten_docs();
    ScriptedProvider p1(exchanges_for(docs)), p4(exchanges_for(docs));
    CorpusExtraction serial = extract_corpus(p1, docs, schema, 1);
    CorpusExtraction parallel = extract_corpus(p4, docs, schema, 4);
    REQUIRE(serial.records.size() == parallel.records.size());
    for (size_t i = 0; i < serial.records.size(); ++i)
        CHECK(records_equal(serial.records[i], parallel.records[i]));
    // Output order is doc_id order regardless of worker scheduling.
    CHECK(std::is_sorted(parallel.records.begin(), parallel.records.end(),
                         [](const Record& a, const Record& b) { return a.doc_id < b.doc_id; }));
}

TEST_CASE("one failing document is isolated, reported, and does not abort the corpus", "[extraction]") {
    Schema schema = hotel_schema();
    auto docs = ten_docs();
    ScriptedProvider provider(exchanges_for(docs, /*skip_index=*/4));  // doc 4 has no exchange
    CorpusExtraction out = extract_corpus(provider, docs, schema, 3);
    CHECK(out.report.total_documents == 10);
    CHECK(out.report.failed_documents == 1);
    CHECK(out.report.failed_doc_ids == std::vector<std::string>{"hotel-4"});
    REQUIRE(out.records.size() == 10);
    CHECK(out.records[4].failed);
    for (const auto& [name, v] : out.records[4].values) CHECK(v.is_null());
    CHECK_FALSE(out.records[5].failed);
}

TEST_CASE("null rates are exact and all-null attributes are flagged", "[extraction]") {
    Schema schema = hotel_schema();
    auto docs = ten_docs();
    // Rewrite the script so guest_rating is always null.
    std::vector<ScriptedExchange> ex;
    for (size_t i = 0; i < docs.size(); ++i) {
        json values = {{"hotel_name", "H" + std::to_string(i)},
                       {"stars", i < 4 ? json(nullptr) : json(3)},
                       {"guest_rating", nullptr}};
        ex.push_back({ScriptedExchange::Match::Substring, "--- document " + docs[i].doc_id + " ---",
                      values.dump()});
    }
    ScriptedProvider provider(ex);
    CorpusExtraction out = extract_corpus(provider, docs, schema);
    CHECK(out.report.null_rate.at("hotel_name") == 0.0);
    CHECK(out.report.null_rate.at("stars") == 0.4);
    CHECK(out.report.null_rate.at("guest_rating") == 1.0);
    CHECK(out.report.all_null_attributes == std::vector<std::string>{"guest_rating"});
}

TEST_CASE("corpus-level failure budget aborts ingestion", "[extraction]") {
    Schema schema = hotel_schema();
    auto docs = ten_docs();
    // Only 4 of 10 documents have exchanges: 60% failures > 50% budget.
    std::vector<ScriptedExchange> ex;
    for (size_t i = 0; i < 4; ++i)
        ex.push_back({ScriptedExchange::Match::Substring, "--- document " + docs[i].doc_id + " ---",
                      R"({"hotel_name": "H", "stars": 1, "guest_rating": 5.0})"});
    ScriptedProvider provider(ex);
    CHECK_THROWS_AS(extract_corpus(provider, docs, schema), Error);
}

TEST_CASE("records survive a JSONL round trip with their audit trail", "[extraction]") {
    Schema schema = hotel_schema();
    Document d = doc("rt", "text");
    ScriptedProvider provider({{ScriptedExchange::Match::Substring, "--- document rt ---",
                                R"({"hotel_name": "RT", "stars": "3", "guest_rating": null})"}});
    Record rec = extract_record(provider, d, schema);
    REQUIRE(rec.meta.at("stars").status == CellStatus::Coerced);

    auto dir = fresh_dir("extraction_rt");
    save_records(dir / "records.jsonl", {rec}, schema);
    auto loaded = load_records(dir / "records.jsonl", schema);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].doc_id == "rt");
    CHECK(loaded[0].values == rec.values);
    CHECK(loaded[0].meta.at("stars").status == CellStatus::Coerced);
    CHECK(loaded[0].meta.at("stars").raw == "\"3\"");

    // A file whose values no longer parse as the schema types is rejected.
    write_text_file(dir / "bad.jsonl",
                    json{{"doc_id", "x"},
                         {"values", {{"hotel_name", "H"}, {"stars", "many"}, {"guest_rating", 1.0}}}}
                        .dump() +
                        "\n");
    CHECK_THROWS_AS(load_records(dir / "bad.jsonl", schema), Error);
}
