#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "srag/store.hpp"
#include "test_support.hpp"

using namespace srag;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using test_support::fresh_dir;

namespace {

Schema hotel_schema() {
    json raw = {{"title", "Hotel"},
                {"type", "object"},
                {"properties",
                 {{"hotel_name",
                   {{"type", "string"}, {"description", "Name."}, {"examples", {"Grand Plaza"}}}},
                  {"stars", {{"type", "integer"}, {"description", "Stars."}, {"examples", {4}}}},
                  {"has_pool", {{"type", "boolean"}, {"description", "Pool."}, {"examples", {true}}}}}}};
    return schema_from_json(raw);
}

Record make_record(std::string doc_id, std::map<std::string, Value> values) {
    Record r;
    r.doc_id = std::move(doc_id);
    r.values = std::move(values);
    return r;
}

}  // namespace

TEST_CASE("tournament goal totals reproduce the known mean", "[store]") {
    // Goals scored in each of the 22 tournaments from 1930 through 2022; the
    // average must come out at 123.64 to two decimals (sum 2720 over 22).
    const std::vector<int64_t> goals = {70,  70,  84,  88,  140, 126, 89,  89,  95,  97,  102,
                                        146, 132, 115, 141, 171, 161, 147, 145, 171, 169, 172};
    REQUIRE(goals.size() == 22);

    json raw = {{"title", "World Cup"},
                {"type", "object"},
                {"properties",
                 {{"year", {{"type", "integer"}, {"description", "Year."}, {"examples", {1930}}}},
                  {"total_goals",
                   {{"type", "integer"}, {"description", "Goals scored."}, {"examples", {70}}}}}}};
    Schema schema = schema_from_json(raw);

    std::vector<Record> records;
    for (size_t i = 0; i < goals.size(); ++i) {
        records.push_back(make_record("wc-" + std::to_string(1930 + 4 * i),
                                      {{"year", Value::integer(1930 + static_cast<int64_t>(4 * i))},
                                       {"total_goals", Value::integer(goals[i])}}));
    }
    StructuredStore store = build_table(":memory:", schema, records);
    CHECK(store.row_count() == 22);

    QueryResult result =
        store.execute(FormalQuery{"SELECT AVG(total_goals) FROM corpus", true, "q-mean"});
    REQUIRE(result.rows.size() == 1);
    double mean = result.rows[0][0].as_double();
    CHECK_THAT(mean, WithinAbs(123.64, 0.01));
    CHECK(mean == 2720.0 / 22.0);  // exact: integer sum divided once

    // compute_statistics must agree with the query engine.
    for (const auto& st : store.compute_statistics())
        if (st.attribute == "total_goals") CHECK(*st.mean == mean);
}

TEST_CASE("records round-trip through the table field-for-field", "[store]") {
    Schema schema = hotel_schema();
    std::vector<Record> in = {
        make_record("a", {{"hotel_name", Value::text("Alpha")},
                          {"stars", Value::integer(5)},
                          {"has_pool", Value::boolean(true)}}),
        make_record("b", {{"hotel_name", Value::text("Beta")},
                          {"stars", Value::null()},
                          {"has_pool", Value::boolean(false)}}),
        make_record("c", {{"hotel_name", Value::null()}, {"stars", Value::integer(0)}}),
    };  // record c omits has_pool entirely: stored as NULL
    StructuredStore store = build_table(":memory:", schema, in);

    std::vector<Record> out = store.select_all_records();
    REQUIRE(out.size() == 3);
    for (size_t i = 0; i < in.size(); ++i) {
        CHECK(out[i].doc_id == in[i].doc_id);
        for (const auto& a : schema.attributes) {
            auto it = in[i].values.find(a.name);
            Value expected = it == in[i].values.end() ? Value::null() : it->second;
            INFO("doc " << in[i].doc_id << " attribute " << a.name);
            CHECK(out[i].values.at(a.name) == expected);
        }
    }
    // Booleans come back as booleans, not their stored integers.
    CHECK(out[0].values.at("has_pool") == Value::boolean(true));
}

TEST_CASE("store reopens self-describing from disk", "[store]") {
    auto dir = fresh_dir("store_reopen");
    std::string path = (dir / "corpus.db").string();
    Schema schema = hotel_schema();
    {
        StructuredStore store = build_table(
            path, schema, {make_record("a", {{"hotel_name", Value::text("Alpha")}})});
        CHECK(store.row_count() == 1);
    }
    StructuredStore reopened = StructuredStore::open(path);
    CHECK(reopened.schema().attribute_names() == schema.attribute_names());
    CHECK(reopened.row_count() == 1);
    CHECK(reopened.select_all_records()[0].values.at("hotel_name") == Value::text("Alpha"));

    CHECK_THROWS_AS(StructuredStore::open((dir / "missing.db").string()), Error);
}

TEST_CASE("build rejects duplicates and empty record sets", "[store]") {
    Schema schema = hotel_schema();
    CHECK_THROWS_WITH(build_table(":memory:", schema,
                                  {make_record("same", {}), make_record("same", {})}),
                      Catch::Matchers::ContainsSubstring("duplicate doc_id"));
    CHECK_THROWS_AS(build_table(":memory:", schema, {}), Error);
}

TEST_CASE("aggregates ignore NULLs", "[store]") {
    Schema schema = hotel_schema();
    StructuredStore store = build_table(
        ":memory:", schema,
        {make_record("a", {{"stars", Value::integer(2)}}), make_record("b", {}),
         make_record("c", {{"stars", Value::integer(4)}})});
    QueryResult r = store.execute(FormalQuery{"SELECT AVG(stars), COUNT(stars) FROM corpus"});
    CHECK(r.rows[0][0].as_double() == 3.0);
    CHECK(r.rows[0][1] == Value::integer(2));
}

// --- statistics against a brute-force oracle ---

namespace {

struct BruteTable {
    Schema schema;
    std::vector<Record> records;
};

BruteTable random_table(uint64_t seed) {
    json raw = {{"title", "Random"},
                {"type", "object"},
                {"properties",
                 {{"name", {{"type", "string"}, {"description", "n"}, {"examples", {"s1"}}}},
                  {"score", {{"type", "number"}, {"description", "s"}, {"examples", {1.5}}}},
                  {"count", {{"type", "integer"}, {"description", "c"}, {"examples", {3}}}},
                  {"flag", {{"type", "boolean"}, {"description", "f"}, {"examples", {true}}}}}}};
    BruteTable t;
    t.schema = schema_from_json(raw);
    Rng rng(seed);
    int n = rng.uniform_int(1, 60);
    for (int i = 0; i < n; ++i) {
        Record r;
        r.doc_id = "doc-" + std::to_string(1000 + i);
        auto maybe_null = [&]() { return rng.uniform_int(0, 4) == 0; };
        r.values["name"] =
            maybe_null() ? Value::null()
                         : Value::text("s" + std::to_string(rng.uniform_int(0, 29)));
        if (maybe_null())
            r.values["score"] = Value::null();
        else
            r.values["score"] = Value::number(rng.uniform_int(0, 9) == 0
                                                  ? 0.0
                                                  : rng.uniform_real(-10.0, 10.0));
        r.values["count"] =
            maybe_null() ? Value::null() : Value::integer(rng.uniform_int(-50, 50));
        r.values["flag"] = maybe_null() ? Value::null() : Value::boolean(rng.uniform_int(0, 1) == 1);
        t.records.push_back(std::move(r));
    }
    return t;
}

// Independent recomputation of every statistic straight from the records.
void check_against_brute_force(const BruteTable& t, const std::vector<AttributeStatistics>& stats) {
    REQUIRE(stats.size() == t.schema.attributes.size());
    for (size_t ai = 0; ai < t.schema.attributes.size(); ++ai) {
        const AttributeSpec& attr = t.schema.attributes[ai];
        const AttributeStatistics& st = stats[ai];
        INFO("attribute " << attr.name);
        CHECK(st.attribute == attr.name);
        CHECK(st.type == attr.type);

        std::vector<Value> non_null;
        for (const auto& r : t.records) {
            auto it = r.values.find(attr.name);
            if (it != r.values.end() && !it->second.is_null()) non_null.push_back(it->second);
        }
        CHECK(st.non_null_count == static_cast<int64_t>(non_null.size()));

        if (attr.type == ValueType::Integer || attr.type == ValueType::Number) {
            int64_t non_zero = 0;
            double sum = 0.0;
            for (const auto& v : non_null) {
                double d = v.is_int() ? static_cast<double>(v.as_int()) : v.as_double();
                if (d != 0.0) ++non_zero;
                sum += d;
            }
            REQUIRE(st.non_zero_count.has_value());
            CHECK(*st.non_zero_count == non_zero);
            if (non_null.empty()) {
                CHECK_FALSE(st.mean.has_value());
                CHECK_FALSE(st.min.has_value());
            } else {
                double mean = sum / static_cast<double>(non_null.size());
                REQUIRE(st.mean.has_value());
                CHECK_THAT(*st.mean, WithinRel(mean, 1e-9) || WithinAbs(mean, 1e-12));
                auto cmp = [](const Value& a, const Value& b) {
                    double da = a.is_int() ? static_cast<double>(a.as_int()) : a.as_double();
                    double db = b.is_int() ? static_cast<double>(b.as_int()) : b.as_double();
                    return da < db;
                };
                CHECK(*st.min == *std::min_element(non_null.begin(), non_null.end(), cmp));
                CHECK(*st.max == *std::max_element(non_null.begin(), non_null.end(), cmp));
            }
        } else {
            std::set<std::string> distinct;
            int64_t true_count = 0;
            for (const auto& v : non_null) {
                distinct.insert(v.to_display());
                if (v.is_bool() && v.as_bool()) ++true_count;
            }
            CHECK(st.unique_count == static_cast<int64_t>(distinct.size()));
            if (attr.type == ValueType::Boolean) {
                REQUIRE(st.non_zero_count.has_value());
                CHECK(*st.non_zero_count == true_count);
            }
            std::set<std::string> reported;
            for (const auto& v : st.unique_values) reported.insert(v.to_display());
            if (distinct.size() <= static_cast<size_t>(st.unique_cap)) {
                CHECK(reported == distinct);  // set equality, order-independent
            } else {
                CHECK(st.unique_values.size() == static_cast<size_t>(st.unique_cap));
                for (const auto& s : reported) CHECK(distinct.count(s) == 1);
            }
        }
    }
}

}  // namespace

TEST_CASE("statistics match a brute-force recomputation over random tables", "[store]") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        INFO("table seed " << seed);
        BruteTable t = random_table(seed);
        StructuredStore store = build_table(":memory:", t.schema, t.records);
        check_against_brute_force(t, store.compute_statistics());
    }
}

TEST_CASE("unique value lists are capped but the distinct count is not", "[store]") {
    json raw = {{"title", "T"},
                {"type", "object"},
                {"properties",
                 {{"name", {{"type", "string"}, {"description", "n"}, {"examples", {"x"}}}}}}};
    Schema schema = schema_from_json(raw);
    std::vector<Record> records;
    for (int i = 0; i < 250; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "v%03d", i);
        records.push_back(make_record("d" + std::to_string(i), {{"name", Value::text(buf)}}));
    }
    StructuredStore store = build_table(":memory:", schema, records);
    auto stats = store.compute_statistics();
    REQUIRE(stats.size() == 1);
    CHECK(stats[0].unique_count == 250);
    REQUIRE(stats[0].unique_values.size() == static_cast<size_t>(kUniqueValueCap));
    // Capped list is the first 200 in sorted order.
    CHECK(stats[0].unique_values.front() == Value::text("v000"));
    CHECK(stats[0].unique_values.back() == Value::text("v199"));
}

// --- guarded execution ---

TEST_CASE("execute re-validates and enforces read-only", "[store]") {
    StructuredStore store = build_table(":memory:", hotel_schema(),
                                        {make_record("a", {{"stars", Value::integer(3)}})});
    // Defense in depth: a FormalQuery built by hand still cannot carry writes.
    CHECK_THROWS_WITH(store.execute(FormalQuery{"DROP TABLE corpus", true, ""}),
                      Catch::Matchers::ContainsSubstring("guardrail"));
    CHECK_THROWS_WITH(store.execute(FormalQuery{"SELECT 1", false, ""}),
                      Catch::Matchers::ContainsSubstring("read-only"));
    // Engine-level errors surface with the engine message (repair-round fuel).
    CHECK_THROWS_WITH(store.execute(FormalQuery{"SELECT no_such_column FROM corpus", true, ""}),
                      Catch::Matchers::ContainsSubstring("no such column"));
}

TEST_CASE("row limits truncate and timeouts interrupt", "[store]") {
    Schema schema = hotel_schema();
    std::vector<Record> records;
    for (int i = 0; i < 10; ++i)
        records.push_back(make_record("d" + std::to_string(i), {{"stars", Value::integer(i)}}));
    StructuredStore store = build_table(":memory:", schema, records);

    QueryLimits limits;
    limits.max_rows = 4;
    QueryResult r = store.execute(FormalQuery{"SELECT doc_id FROM corpus ORDER BY doc_id"}, limits);
    CHECK(r.rows.size() == 4);
    CHECK(r.truncated);
    CHECK_FALSE(
        store.execute(FormalQuery{"SELECT doc_id FROM corpus ORDER BY doc_id"}).truncated);

    QueryLimits tight;
    tight.timeout_ms = 30;
    CHECK_THROWS_WITH(
        store.execute(FormalQuery{"WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM c "
                                  "WHERE x < 100000000) SELECT COUNT(*) FROM c"},
                      tight),
        Catch::Matchers::ContainsSubstring("timeout"));
}

TEST_CASE("query results carry column names and typed cells", "[store]") {
    StructuredStore store = build_table(":memory:", hotel_schema(),
                                        {make_record("a", {{"stars", Value::integer(3)}})});
    QueryResult r = store.execute(FormalQuery{"SELECT COUNT(*) AS n, AVG(stars) AS m FROM corpus"});
    CHECK(r.columns == std::vector<std::string>{"n", "m"});
    CHECK(r.rows[0][0] == Value::integer(1));
    CHECK(r.rows[0][1] == Value::number(3.0));
    CHECK(r.elapsed_ms >= 0.0);
}

// --- serialization of statistics ---

TEST_CASE("the statistics block is stable prompt text", "[store]") {
    Schema schema = hotel_schema();
    StructuredStore store = build_table(
        ":memory:", schema,
        {make_record("a", {{"hotel_name", Value::text("Alpha")},
                           {"stars", Value::integer(0)},
                           {"has_pool", Value::boolean(true)}}),
         make_record("b", {{"hotel_name", Value::text("Beta")},
                           {"stars", Value::integer(4)},
                           {"has_pool", Value::boolean(false)}}),
         make_record("c", {{"hotel_name", Value::text("Gamma")}, {"stars", Value::integer(5)}})});

    std::string block = statistics_block(store.compute_statistics(), store.row_count());
    const std::string expected =
        "corpus statistics (format v1)\n"
        "table: corpus, key column: doc_id, rows: 3\n"
        "- hotel_name (string): non_null 3, unique 3: \"Alpha\", \"Beta\", \"Gamma\"\n"
        "- stars (integer): non_null 3, non_zero 2, min 0, max 5, mean 3\n"
        "- has_pool (boolean): non_null 2, true 1, values: false, true\n";
    CHECK(block == expected);
}

TEST_CASE("statistics serialize to json with rows and per-column blocks", "[store]") {
    Schema schema = hotel_schema();
    StructuredStore store = build_table(":memory:", schema,
                                        {make_record("a", {{"hotel_name", Value::text("Alpha")},
                                                           {"stars", Value::integer(2)}})});
    json j = statistics_to_json(store.compute_statistics(), store.row_count());
    CHECK(j.at("format") == "v1");
    CHECK(j.at("rows") == 1);
    REQUIRE(j.at("columns").size() == 3);
    const json& name_col = j.at("columns").at(0);
    CHECK(name_col.at("attribute") == "hotel_name");
    CHECK(name_col.at("unique_values") == json::array({"Alpha"}));
    CHECK(name_col.at("unique_cap") == kUniqueValueCap);
    const json& stars_col = j.at("columns").at(1);
    CHECK(stars_col.at("mean") == 2.0);
    CHECK(stars_col.at("min") == 2);
    CHECK_FALSE(stars_col.contains("unique_values"));
}
