#pragma once

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "srag/extraction.hpp"
#include "srag/schema.hpp"
#include "srag/sql_guard.hpp"

namespace srag {

inline constexpr const char* kCorpusTable = "corpus";
inline constexpr int kUniqueValueCap = 200;
inline constexpr const char* kStatsFormatVersion = "v1";

struct TableDefinition {
    std::string table_name = kCorpusTable;
    std::vector<std::pair<std::string, std::string>> columns;  // attribute -> SQL type
    std::string key_column = "doc_id";
    int64_t row_count = 0;
};

struct AttributeStatistics {
    std::string attribute;
    ValueType type = ValueType::String;
    int64_t non_null_count = 0;
    std::optional<int64_t> non_zero_count;  // numeric columns; for booleans this is the true count
    std::optional<double> mean;             // numeric, absent when non_null_count == 0
    std::optional<Value> min;
    std::optional<Value> max;
    std::vector<Value> unique_values;  // string/boolean, sorted, capped
    int64_t unique_count = 0;          // total distinct non-null values
    int unique_cap = kUniqueValueCap;
};

struct QueryLimits {
    int timeout_ms = 5000;
    int max_rows = 10000;
};

struct QueryResult {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;
    bool truncated = false;
    double elapsed_ms = 0.0;
};

namespace sqlite_detail {

inline std::string quote_identifier(std::string_view name) {
    std::string out = "\"";
    for (char c : name) {
        out += c;
        if (c == '"') out += '"';
    }
    out += "\"";
    return out;
}

inline const char* sql_type_for(ValueType t) {
    switch (t) {
        case ValueType::String: return "TEXT";
        case ValueType::Integer: return "INTEGER";
        case ValueType::Number: return "REAL";
        case ValueType::Boolean: return "INTEGER";
    }
    return "TEXT";
}

struct DbDeleter {
    void operator()(sqlite3* db) const {
        if (db) sqlite3_close_v2(db);
    }
};
using DbHandle = std::unique_ptr<sqlite3, DbDeleter>;

struct StmtDeleter {
    void operator()(sqlite3_stmt* s) const {
        if (s) sqlite3_finalize(s);
    }
};
using StmtHandle = std::unique_ptr<sqlite3_stmt, StmtDeleter>;

inline DbHandle open_db(const std::string& path, bool create) {
    sqlite3* raw = nullptr;
    int flags = SQLITE_OPEN_READWRITE | (create ? SQLITE_OPEN_CREATE : 0);
    if (path == ":memory:") flags |= SQLITE_OPEN_MEMORY | SQLITE_OPEN_CREATE;
    int rc = sqlite3_open_v2(path.c_str(), &raw, flags, nullptr);
    DbHandle db(raw);
    if (rc != SQLITE_OK) {
        std::string msg = raw ? sqlite3_errmsg(raw) : "out of memory";
        throw Error(ErrorKind::Store, "cannot open database " + path + ": " + msg);
    }
    return db;
}

inline StmtHandle prepare(sqlite3* db, std::string_view sql) {
    sqlite3_stmt* raw = nullptr;
    int rc = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &raw, nullptr);
    StmtHandle stmt(raw);
    if (rc != SQLITE_OK) throw Error(ErrorKind::Store, sqlite3_errmsg(db));
    if (!stmt) throw Error(ErrorKind::Store, "empty statement");
    return stmt;
}

inline void exec(sqlite3* db, std::string_view sql) {
    auto stmt = prepare(db, sql);
    int rc = sqlite3_step(stmt.get());
    if (rc != SQLITE_DONE && rc != SQLITE_ROW) throw Error(ErrorKind::Store, sqlite3_errmsg(db));
}

inline void bind_value(sqlite3* db, sqlite3_stmt* stmt, int index, const Value& v) {
    int rc;
    if (v.is_null())
        rc = sqlite3_bind_null(stmt, index);
    else if (v.is_bool())
        rc = sqlite3_bind_int(stmt, index, v.as_bool() ? 1 : 0);
    else if (v.is_int())
        rc = sqlite3_bind_int64(stmt, index, v.as_int());
    else if (v.is_double())
        rc = sqlite3_bind_double(stmt, index, v.as_double());
    else
        rc = sqlite3_bind_text(stmt, index, v.as_string().c_str(), -1, SQLITE_TRANSIENT);
    if (rc != SQLITE_OK) throw Error(ErrorKind::Store, sqlite3_errmsg(db));
}

inline Value column_value(sqlite3_stmt* stmt, int col) {
    switch (sqlite3_column_type(stmt, col)) {
        case SQLITE_INTEGER: return Value::integer(sqlite3_column_int64(stmt, col));
        case SQLITE_FLOAT: return Value::number(sqlite3_column_double(stmt, col));
        case SQLITE_NULL: return Value::null();
        default: {
            const unsigned char* text = sqlite3_column_text(stmt, col);
            return Value::text(text ? reinterpret_cast<const char*>(text) : "");
        }
    }
}

// Engine values back to schema-typed record values (booleans are stored 0/1).
inline Value column_value_as(sqlite3_stmt* stmt, int col, ValueType type) {
    if (sqlite3_column_type(stmt, col) == SQLITE_NULL) return Value::null();
    switch (type) {
        case ValueType::Boolean: return Value::boolean(sqlite3_column_int64(stmt, col) != 0);
        case ValueType::Integer: return Value::integer(sqlite3_column_int64(stmt, col));
        case ValueType::Number: return Value::number(sqlite3_column_double(stmt, col));
        case ValueType::String: {
            const unsigned char* text = sqlite3_column_text(stmt, col);
            return Value::text(text ? reinterpret_cast<const char*>(text) : "");
        }
    }
    return Value::null();
}

// Second safety layer behind the lexical guard: the engine itself refuses
// anything that is not a plain read while a formal query runs.
inline int read_only_authorizer(void* ctx, int action, const char* arg1, const char*, const char*,
                                const char*) {
    switch (action) {
        case SQLITE_SELECT:
        case SQLITE_READ:
        case SQLITE_RECURSIVE:
            return SQLITE_OK;
        case SQLITE_FUNCTION: {
            (void)ctx;
            return SQLITE_OK;  // arg1 is null for FUNCTION; name arrives in arg2 below
        }
        default:
            break;
    }
    (void)arg1;
    return SQLITE_DENY;
}

struct DeadlineCtx {
    std::chrono::steady_clock::time_point deadline;
};

inline int progress_check(void* ctx) {
    auto* d = static_cast<DeadlineCtx*>(ctx);
    return std::chrono::steady_clock::now() > d->deadline ? 1 : 0;
}

}  // namespace sqlite_detail

// Single-table relational store for extracted records. The file carries the
// schema in a side table so the store reopens self-describing. Writes happen
// only during build; formal queries run read-only behind the guard plus an
// engine authorizer.
class StructuredStore {
public:
    StructuredStore(StructuredStore&&) = default;
    StructuredStore& operator=(StructuredStore&&) = default;

    static StructuredStore create(const std::string& path, const Schema& schema) {
        namespace sd = sqlite_detail;
        if (path != ":memory:" && fs::path(path).has_parent_path())
            fs::create_directories(fs::path(path).parent_path());
        StructuredStore store(sd::open_db(path, true), schema);
        sd::exec(store.db(), "CREATE TABLE IF NOT EXISTS srag_meta (key TEXT PRIMARY KEY, value TEXT)");
        std::string ddl = "CREATE TABLE " + std::string(kCorpusTable) + " (doc_id TEXT PRIMARY KEY";
        for (const auto& a : schema.attributes)
            ddl += ", " + sd::quote_identifier(a.name) + " " + sd::sql_type_for(a.type);
        ddl += ")";
        sd::exec(store.db(), ddl);
        auto stmt = sd::prepare(store.db(), "INSERT OR REPLACE INTO srag_meta VALUES ('schema', ?)");
        std::string schema_text = schema_to_json(schema).dump();
        sqlite3_bind_text(stmt.get(), 1, schema_text.c_str(), -1, SQLITE_TRANSIENT);
        if (sqlite3_step(stmt.get()) != SQLITE_DONE)
            throw Error(ErrorKind::Store, sqlite3_errmsg(store.db()));
        return store;
    }

    static StructuredStore open(const std::string& path) {
        namespace sd = sqlite_detail;
        if (path != ":memory:" && !fs::exists(path))
            throw Error(ErrorKind::Store, "database not found: " + path);
        sd::DbHandle db = sd::open_db(path, false);
        auto stmt = sd::prepare(db.get(), "SELECT value FROM srag_meta WHERE key = 'schema'");
        if (sqlite3_step(stmt.get()) != SQLITE_ROW)
            throw Error(ErrorKind::Store, "database has no stored schema: " + path);
        const unsigned char* text = sqlite3_column_text(stmt.get(), 0);
        Schema schema = schema_from_json(json::parse(reinterpret_cast<const char*>(text)));
        return StructuredStore(std::move(db), schema);
    }

    const Schema& schema() const { return schema_; }

    // Inserts all records in one transaction, in doc_id order regardless of
    // the caller's order: row order feeds floating-point aggregate summation,
    // so the same record set must produce a bit-identical table every time.
    // Duplicate doc_ids and empty record sets are build errors, not engine
    // constraint failures.
    void insert_records(const std::vector<Record>& records) {
        namespace sd = sqlite_detail;
        if (records.empty()) throw Error(ErrorKind::Store, "empty record set");
        std::set<std::string> seen;
        for (const auto& r : records)
            if (!seen.insert(r.doc_id).second)
                throw Error(ErrorKind::Store, "duplicate doc_id " + r.doc_id);
        std::vector<const Record*> ordered;
        ordered.reserve(records.size());
        for (const auto& r : records) ordered.push_back(&r);
        std::sort(ordered.begin(), ordered.end(),
                  [](const Record* a, const Record* b) { return a->doc_id < b->doc_id; });

        std::string sql = "INSERT INTO " + std::string(kCorpusTable) + " VALUES (?";
        for (size_t i = 0; i < schema_.attributes.size(); ++i) sql += ", ?";
        sql += ")";
        sd::exec(db(), "BEGIN");
        try {
            auto stmt = sd::prepare(db(), sql);
            for (const Record* rec_ptr : ordered) {
                const Record& rec = *rec_ptr;
                sqlite3_reset(stmt.get());
                sqlite3_clear_bindings(stmt.get());
                sqlite3_bind_text(stmt.get(), 1, rec.doc_id.c_str(), -1, SQLITE_TRANSIENT);
                int idx = 2;
                for (const auto& a : schema_.attributes) {
                    auto it = rec.values.find(a.name);
                    sd::bind_value(db(), stmt.get(), idx++,
                                   it == rec.values.end() ? Value::null() : it->second);
                }
                if (sqlite3_step(stmt.get()) != SQLITE_DONE)
                    throw Error(ErrorKind::Store, sqlite3_errmsg(db()));
            }
            sd::exec(db(), "COMMIT");
        } catch (...) {
            sd::exec(db(), "ROLLBACK");
            throw;
        }
    }

    int64_t row_count() const {
        auto stmt = sqlite_detail::prepare(db(), "SELECT COUNT(*) FROM " + std::string(kCorpusTable));
        sqlite3_step(stmt.get());
        return sqlite3_column_int64(stmt.get(), 0);
    }

    TableDefinition table_definition() const {
        TableDefinition def;
        for (const auto& a : schema_.attributes)
            def.columns.emplace_back(a.name, sqlite_detail::sql_type_for(a.type));
        def.row_count = row_count();
        return def;
    }

    // Reconstructs typed records from the table; the field-equality oracle in
    // tests compares these against what went in.
    std::vector<Record> select_all_records() const {
        namespace sd = sqlite_detail;
        std::string sql = "SELECT doc_id";
        for (const auto& a : schema_.attributes) sql += ", " + sd::quote_identifier(a.name);
        sql += " FROM " + std::string(kCorpusTable) + " ORDER BY doc_id";
        auto stmt = sd::prepare(db(), sql);
        std::vector<Record> records;
        while (sqlite3_step(stmt.get()) == SQLITE_ROW) {
            Record rec;
            rec.doc_id = reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), 0));
            int col = 1;
            for (const auto& a : schema_.attributes) {
                Value v = sd::column_value_as(stmt.get(), col++, a.type);
                rec.meta[a.name] = {v.is_null() ? CellStatus::Null : CellStatus::Ok, "", ""};
                rec.values[a.name] = std::move(v);
            }
            records.push_back(std::move(rec));
        }
        return records;
    }

    std::vector<AttributeStatistics> compute_statistics() const {
        namespace sd = sqlite_detail;
        std::vector<AttributeStatistics> out;
        const std::string table = kCorpusTable;
        for (const auto& a : schema_.attributes) {
            AttributeStatistics st;
            st.attribute = a.name;
            st.type = a.type;
            const std::string col = sd::quote_identifier(a.name);
            {
                auto stmt = sd::prepare(db(), "SELECT COUNT(" + col + ") FROM " + table);
                sqlite3_step(stmt.get());
                st.non_null_count = sqlite3_column_int64(stmt.get(), 0);
            }
            if (a.type == ValueType::Integer || a.type == ValueType::Number) {
                auto stmt = sd::prepare(db(), "SELECT AVG(" + col + "), MIN(" + col + "), MAX(" + col +
                                                  "), COUNT(CASE WHEN " + col +
                                                  " <> 0 THEN 1 END) FROM " + table);
                sqlite3_step(stmt.get());
                if (st.non_null_count > 0) {
                    st.mean = sqlite3_column_double(stmt.get(), 0);
                    st.min = sd::column_value(stmt.get(), 1);
                    st.max = sd::column_value(stmt.get(), 2);
                }
                st.non_zero_count = sqlite3_column_int64(stmt.get(), 3);
            } else {
                if (a.type == ValueType::Boolean) {
                    auto stmt = sd::prepare(
                        db(), "SELECT COUNT(CASE WHEN " + col + " <> 0 THEN 1 END) FROM " + table);
                    sqlite3_step(stmt.get());
                    st.non_zero_count = sqlite3_column_int64(stmt.get(), 0);
                }
                {
                    auto stmt = sd::prepare(db(), "SELECT COUNT(DISTINCT " + col + ") FROM " + table);
                    sqlite3_step(stmt.get());
                    st.unique_count = sqlite3_column_int64(stmt.get(), 0);
                }
                auto stmt = sd::prepare(db(), "SELECT DISTINCT " + col + " FROM " + table + " WHERE " +
                                                  col + " IS NOT NULL ORDER BY " + col + " LIMIT " +
                                                  std::to_string(kUniqueValueCap));
                while (sqlite3_step(stmt.get()) == SQLITE_ROW)
                    st.unique_values.push_back(sd::column_value_as(stmt.get(), 0, a.type));
            }
            out.push_back(std::move(st));
        }
        return out;
    }

    // Runs one guarded SELECT. Engine errors surface with the engine message so
    // the inference layer can feed them back for a repair round.
    QueryResult execute(const FormalQuery& query, const QueryLimits& limits = {}) const {
        namespace sd = sqlite_detail;
        SqlValidation v = validate_sql(query.sql_text, {kCorpusTable, false});
        if (!v.ok) throw Error(ErrorKind::Store, "guardrail: " + v.reason);
        if (!query.read_only) throw Error(ErrorKind::Store, "guardrail: query must be read-only");

        sqlite3* handle = db();
        sd::DeadlineCtx deadline{std::chrono::steady_clock::now() +
                                 std::chrono::milliseconds(limits.timeout_ms)};
        sqlite3_set_authorizer(handle, sd::read_only_authorizer, nullptr);
        sqlite3_progress_handler(handle, 500, sd::progress_check, &deadline);
        auto cleanup = [&]() {
            sqlite3_set_authorizer(handle, nullptr, nullptr);
            sqlite3_progress_handler(handle, 0, nullptr, nullptr);
        };

        auto started = std::chrono::steady_clock::now();
        QueryResult result;
        try {
            auto stmt = sd::prepare(handle, query.sql_text);
            if (!sqlite3_stmt_readonly(stmt.get()))
                throw Error(ErrorKind::Store, "guardrail: statement is not read-only");
            int cols = sqlite3_column_count(stmt.get());
            for (int i = 0; i < cols; ++i) {
                const char* name = sqlite3_column_name(stmt.get(), i);
                result.columns.push_back(name ? name : "column_" + std::to_string(i));
            }
            while (true) {
                int rc = sqlite3_step(stmt.get());
                if (rc == SQLITE_DONE) break;
                if (rc == SQLITE_INTERRUPT)
                    throw Error(ErrorKind::Store, "query exceeded " + std::to_string(limits.timeout_ms) +
                                                      "ms timeout");
                if (rc != SQLITE_ROW) throw Error(ErrorKind::Store, sqlite3_errmsg(handle));
                if (static_cast<int>(result.rows.size()) >= limits.max_rows) {
                    result.truncated = true;
                    break;
                }
                std::vector<Value> row;
                row.reserve(static_cast<size_t>(cols));
                for (int i = 0; i < cols; ++i) row.push_back(sd::column_value(stmt.get(), i));
                result.rows.push_back(std::move(row));
            }
        } catch (...) {
            cleanup();
            throw;
        }
        cleanup();
        result.elapsed_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - started)
                                .count();
        return result;
    }

private:
    StructuredStore(sqlite_detail::DbHandle db, Schema schema)
        : db_(std::move(db)), schema_(std::move(schema)) {}

    sqlite3* db() const { return db_.get(); }

    sqlite_detail::DbHandle db_;
    Schema schema_;
};

// Build step: schema + validated records -> populated table.
inline StructuredStore build_table(const std::string& path, const Schema& schema,
                                   const std::vector<Record>& records) {
    StructuredStore store = StructuredStore::create(path, schema);
    store.insert_records(records);
    return store;
}

// --- statistics serialization ---

// The exact text injected into inference prompts and printed by `srag stats`.
// Versioned so prompt-affecting changes are visible in artifacts.
inline std::string statistics_block(const std::vector<AttributeStatistics>& stats, int64_t rows) {
    std::string out = "corpus statistics (format " + std::string(kStatsFormatVersion) + ")\n";
    out += "table: " + std::string(kCorpusTable) + ", key column: doc_id, rows: " + std::to_string(rows) +
           "\n";
    for (const auto& st : stats) {
        out += "- " + st.attribute + " (" + value_type_name(st.type) +
               "): non_null " + std::to_string(st.non_null_count);
        if (st.type == ValueType::Integer || st.type == ValueType::Number) {
            if (st.non_zero_count) out += ", non_zero " + std::to_string(*st.non_zero_count);
            if (st.non_null_count > 0 && st.mean) {
                out += ", min " + st.min->to_display();
                out += ", max " + st.max->to_display();
                out += ", mean " + format_double(*st.mean);
            }
        } else if (st.type == ValueType::Boolean) {
            if (st.non_zero_count) out += ", true " + std::to_string(*st.non_zero_count);
            if (!st.unique_values.empty()) {
                out += ", values: ";
                for (size_t i = 0; i < st.unique_values.size(); ++i) {
                    if (i) out += ", ";
                    out += st.unique_values[i].to_display();
                }
            }
        } else {
            out += ", unique " + std::to_string(st.unique_count);
            if (!st.unique_values.empty()) {
                out += ": ";
                for (size_t i = 0; i < st.unique_values.size(); ++i) {
                    if (i) out += ", ";
                    out += "\"" + st.unique_values[i].to_display() + "\"";
                }
                if (st.unique_count > static_cast<int64_t>(st.unique_values.size()))
                    out += " (+" +
                           std::to_string(st.unique_count -
                                          static_cast<int64_t>(st.unique_values.size())) +
                           " more)";
            }
        }
        out += "\n";
    }
    return out;
}

inline json statistics_to_json(const std::vector<AttributeStatistics>& stats, int64_t rows) {
    json cols = json::array();
    for (const auto& st : stats) {
        json c = {{"attribute", st.attribute},
                  {"type", value_type_name(st.type)},
                  {"non_null_count", st.non_null_count}};
        if (st.non_zero_count) c["non_zero_count"] = *st.non_zero_count;
        if (st.mean) c["mean"] = *st.mean;
        if (st.min) c["min"] = st.min->to_json();
        if (st.max) c["max"] = st.max->to_json();
        if (st.type == ValueType::String || st.type == ValueType::Boolean) {
            json uniques = json::array();
            for (const auto& v : st.unique_values) uniques.push_back(v.to_json());
            c["unique_values"] = uniques;
            c["unique_count"] = st.unique_count;
            c["unique_cap"] = st.unique_cap;
        }
        cols.push_back(std::move(c));
    }
    return json{{"format", kStatsFormatVersion}, {"rows", rows}, {"columns", cols}};
}

}  // namespace srag
