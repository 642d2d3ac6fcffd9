#include <catch2/catch_amalgamated.hpp>

#include "srag/induction.hpp"

using namespace srag;

namespace {

json hotel_schema_json() {
    return json{
        {"title", "Hotel"},
        {"type", "object"},
        {"properties",
         {{"hotel_name",
           {{"type", "string"}, {"description", "Name of the hotel."}, {"examples", {"Grand Plaza"}}}},
          {"stars", {{"type", "integer"}, {"description", "Star class."}, {"examples", {4}}}}}},
        {"required", {"hotel_name"}},
    };
}

CorpusSample small_sample() {
    CorpusSample sample;
    sample.documents = {
        {"hotel-a", "a.html", "<h1>Grand Plaza</h1><p>A 5-star hotel.</p>", 0},
        {"hotel-b", "b.html", "<h1>Station Inn</h1><p>A 2-star hotel.</p>", 0},
    };
    sample.questions = {"How many hotels have five stars?"};
    return sample;
}

// Initial and refine prompts carry distinct instruction headers, so one
// exchange each scripts the whole loop.
ScriptedProvider happy_provider() {
    return ScriptedProvider({
        {ScriptedExchange::Match::Substring, "Extract a single JSON schema",
         hotel_schema_json().dump()},
        {ScriptedExchange::Match::Substring, "Refine an existing JSON schema",
         "```json\n" + hotel_schema_json().dump(2) + "\n```"},
    });
}

}  // namespace

TEST_CASE("induce makes one provider call per iteration, four by default", "[induction]") {
    ScriptedProvider provider = happy_provider();
    CallLog log;
    provider.attach_log(&log);
    InductionResult result = induce(provider, small_sample());
    CHECK(log.size() == 4);  // 1 initial + 3 refinements
    REQUIRE(result.snapshots.size() == 4);
    for (size_t i = 0; i < result.snapshots.size(); ++i) {
        CHECK(result.snapshots[i].iterations == static_cast<int>(i + 1));
        CHECK(result.snapshots[i].sample_fingerprint == sample_fingerprint(small_sample()));
        CHECK_FALSE(result.snapshots[i].attributes.empty());  // every snapshot is valid
    }
    CHECK(result.schema.iterations == 4);
    CHECK(result.schema.attribute_names() == std::vector<std::string>{"hotel_name", "stars"});
}

TEST_CASE("iteration count is configurable and validated", "[induction]") {
    ScriptedProvider provider = happy_provider();
    CallLog log;
    provider.attach_log(&log);
    InductionOptions opts;
    opts.iterations = 2;
    InductionResult result = induce(provider, small_sample(), opts);
    CHECK(log.size() == 2);
    CHECK(result.snapshots.size() == 2);

    opts.iterations = 0;
    CHECK_THROWS_AS(induce(provider, small_sample(), opts), Error);
}

// The re-ask prompt embeds the full initial prompt, so a script cannot tell
// the attempts apart by substring alone; the first attempt is pinned by hash
// (which is what hash matchers are for) and the re-ask by its violation text.
static ScriptedExchange initial_by_hash(const CorpusSample& sample, const InductionOptions& opts,
                                        const std::string& response) {
    std::string prompt = std::string(kSchemaInitialInstructions) + "\n" +
                         detail::documents_block(sample.documents, opts.per_doc_tokens);
    ChatRequest req{kInductionSystemPrompt, prompt, opts.model_id, 0.0, opts.max_output_tokens};
    return {ScriptedExchange::Match::Hash, request_fingerprint(req), response};
}

TEST_CASE("a rejected schema triggers a violation-carrying re-ask", "[induction]") {
    // First reply misses a description; the re-ask prompt quotes the violation
    // and the corrected reply then passes.
    json bad = hotel_schema_json();
    bad["properties"]["stars"].erase("description");
    InductionOptions opts;
    opts.iterations = 1;
    ScriptedProvider provider({
        initial_by_hash(small_sample(), opts, bad.dump()),
        {ScriptedExchange::Match::Substring, "rejected for these violations",
         hotel_schema_json().dump()},
    });
    CallLog log;
    provider.attach_log(&log);
    InductionResult result = induce(provider, small_sample(), opts);
    CHECK(log.size() == 2);  // initial + one re-ask
    CHECK(result.schema.attributes.size() == 2);
}

TEST_CASE("out of re-asks, salvageable schemas are repaired by dropping attributes", "[induction]") {
    // Nested attribute never goes away across replies; with the re-ask budget
    // exhausted the repair path drops it and keeps the valid rest.
    json with_nested = hotel_schema_json();
    with_nested["properties"]["address"] = {
        {"type", "object"},
        {"properties", {{"city", {{"type", "string"}}}}},
        {"description", "structured address"},
        {"examples", {"x"}}};
    InductionOptions opts;
    opts.iterations = 1;
    opts.reask_budget = 1;
    ScriptedProvider provider({
        initial_by_hash(small_sample(), opts, with_nested.dump()),
        {ScriptedExchange::Match::Substring, "rejected for these violations", with_nested.dump()},
    });
    std::vector<std::string> warnings;
    InductionResult result = induce(provider, small_sample(), opts);
    CHECK(result.schema.attribute_names() == std::vector<std::string>{"hotel_name", "stars"});
    REQUIRE_FALSE(result.warnings.empty());
    CHECK(result.warnings[0].find("address") != std::string::npos);
}

TEST_CASE("unsalvageable output exhausts the budget and fails loudly", "[induction]") {
    InductionOptions opts;
    opts.iterations = 1;
    opts.reask_budget = 1;
    ScriptedProvider provider({
        initial_by_hash(small_sample(), opts, "i am not json {{{"),
        {ScriptedExchange::Match::Substring, "rejected for these violations", "still not json"},
    });
    CallLog log;
    provider.attach_log(&log);
    CHECK_THROWS_AS(induce(provider, small_sample(), opts), Error);
    CHECK(log.size() == 2);  // first attempt + one re-ask, then give up
}

TEST_CASE("induction needs documents", "[induction]") {
    ScriptedProvider provider = happy_provider();
    CorpusSample empty;
    CHECK_THROWS_AS(induce(provider, empty), Error);
}

TEST_CASE("refine prompts carry the current schema and the question sample", "[induction]") {
    // Capture the refine prompt via a hash-miss error message? Cleaner: use a
    // recording transport -- the scripted provider's substring matching already
    // proves the header; here we assert the prompt builders directly.
    CorpusSample sample = small_sample();
    std::string docs = detail::documents_block(sample.documents, 4000);
    CHECK(docs.find("--- document hotel-a ---") != std::string::npos);
    CHECK(docs.find("Grand Plaza") != std::string::npos);
    std::string questions = detail::questions_block(sample.questions);
    CHECK(questions.find("- How many hotels have five stars?") != std::string::npos);

    // Long documents are truncated at the per-document token budget.
    std::vector<Document> longdoc = {{"big", "", "word " + std::string(4000, 'x') + " tail", 0}};
    std::string truncated = detail::documents_block(longdoc, 1);
    CHECK(truncated.find("[truncated]") != std::string::npos);
    CHECK(truncated.find("tail") == std::string::npos);
}

TEST_CASE("sample fingerprint is order-stable and content-sensitive", "[induction]") {
    CorpusSample a = small_sample();
    CorpusSample b = small_sample();
    CHECK(sample_fingerprint(a) == sample_fingerprint(b));
    b.questions[0] = "different question";
    CHECK(sample_fingerprint(a) != sample_fingerprint(b));
}
