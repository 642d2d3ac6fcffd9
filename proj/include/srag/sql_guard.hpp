#pragma once

#include <set>
#include <string>
#include <variant>
#include <vector>

#include "srag/error.hpp"
#include "srag/util.hpp"

namespace srag {

// Lexical validation of model-generated SQL before anything touches the
// database. Read-only single-statement SELECTs over the one corpus table;
// everything else is rejected with a reason. Execution adds a second layer
// (sqlite authorizer + read-only handle), this one exists so hostile
// statements never reach the engine at all.

struct SqlToken {
    enum class Kind { Word, Punct, String, Number };
    Kind kind;
    std::string text;   // words are uppercased, strings keep quotes
};

namespace sql_detail {

inline bool is_word_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Tokenizes SQL, stripping comments; quoted strings and identifiers survive
// as single tokens so keywords inside literals never trigger false rejects.
inline std::vector<SqlToken> lex_sql(std::string_view sql, std::string& error) {
    std::vector<SqlToken> tokens;
    size_t i = 0;
    const size_t n = sql.size();
    while (i < n) {
        char c = sql[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
            while (i < n && sql[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
            size_t end = sql.find("*/", i + 2);
            if (end == std::string_view::npos) {
                error = "unterminated block comment";
                return {};
            }
            i = end + 2;
            continue;
        }
        if (c == '\'' || c == '"' || c == '`') {
            char quote = c;
            size_t start = i++;
            while (i < n) {
                if (sql[i] == quote) {
                    if (quote == '\'' && i + 1 < n && sql[i + 1] == '\'') {
                        i += 2;  // escaped quote inside string literal
                        continue;
                    }
                    break;
                }
                ++i;
            }
            if (i >= n) {
                error = "unterminated quoted token";
                return {};
            }
            ++i;
            tokens.push_back({SqlToken::Kind::String, std::string(sql.substr(start, i - start))});
            continue;
        }
        if (c == '[') {  // bracket-quoted identifier
            size_t end = sql.find(']', i + 1);
            if (end == std::string_view::npos) {
                error = "unterminated bracket identifier";
                return {};
            }
            tokens.push_back({SqlToken::Kind::String, std::string(sql.substr(i, end - i + 1))});
            i = end + 1;
            continue;
        }
        if (is_word_start(c)) {
            size_t start = i;
            while (i < n && is_word_char(sql[i])) ++i;
            std::string word(sql.substr(start, i - start));
            for (auto& ch : word) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            tokens.push_back({SqlToken::Kind::Word, word});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = i;
            while (i < n && (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '.')) ++i;
            tokens.push_back({SqlToken::Kind::Number, std::string(sql.substr(start, i - start))});
            continue;
        }
        tokens.push_back({SqlToken::Kind::Punct, std::string(1, c)});
        ++i;
    }
    return tokens;
}

inline const std::set<std::string>& forbidden_keywords() {
    static const std::set<std::string> kSet = {
        "INSERT", "UPDATE", "DELETE",  "DROP",     "CREATE",   "ALTER",   "ATTACH",
        "DETACH", "PRAGMA", "VACUUM",  "REINDEX",  "REPLACE",  "TRUNCATE", "GRANT",
        "REVOKE", "BEGIN",  "COMMIT",  "ROLLBACK", "SAVEPOINT", "RELEASE", "ANALYZE",
        "EXPLAIN"};
    return kSet;
}

inline const std::set<std::string>& forbidden_functions() {
    static const std::set<std::string> kSet = {"LOAD_EXTENSION", "READFILE",       "WRITEFILE",
                                               "FTS3_TOKENIZER", "ZIPFILE",        "EDIT"};
    return kSet;
}

inline std::string unquote_identifier(const std::string& text) {
    if (text.size() >= 2) {
        char a = text.front(), b = text.back();
        if ((a == '"' && b == '"') || (a == '`' && b == '`') || (a == '[' && b == ']') ||
            (a == '\'' && b == '\''))
            return to_lower(text.substr(1, text.size() - 2));
    }
    return to_lower(text);
}

}  // namespace sql_detail

struct SqlValidation {
    bool ok = false;
    std::string reason;  // empty when ok
};

struct SqlGuardOptions {
    std::string table_name = "corpus";
    bool require_doc_id_projection = false;  // hybrid mode: SELECT list must mention doc_id
};

inline SqlValidation validate_sql(std::string_view sql, const SqlGuardOptions& opts = {}) {
    using sql_detail::forbidden_functions;
    using sql_detail::forbidden_keywords;

    std::string lex_error;
    std::vector<SqlToken> tokens = sql_detail::lex_sql(sql, lex_error);
    if (!lex_error.empty()) return {false, lex_error};
    if (tokens.empty()) return {false, "empty statement"};

    // Single statement: a ';' may only appear as the final token.
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].kind == SqlToken::Kind::Punct && tokens[i].text == ";") {
            if (i + 1 != tokens.size()) return {false, "multiple statements are not allowed"};
            tokens.pop_back();
            break;
        }
    }
    if (tokens.empty()) return {false, "empty statement"};

    if (tokens.front().kind != SqlToken::Kind::Word ||
        (tokens.front().text != "SELECT" && tokens.front().text != "WITH"))
        return {false, "only SELECT statements are allowed, got " + tokens.front().text};

    // Collect CTE names so WITH queries can reference them in FROM.
    std::set<std::string> cte_names;
    if (tokens.front().text == "WITH") {
        size_t i = 1;
        if (i < tokens.size() && tokens[i].text == "RECURSIVE") ++i;
        int depth = 0;
        bool expecting_name = true;
        for (; i < tokens.size(); ++i) {
            const auto& t = tokens[i];
            if (t.kind == SqlToken::Kind::Punct) {
                if (t.text == "(") ++depth;
                else if (t.text == ")") --depth;
                else if (t.text == "," && depth == 0) expecting_name = true;
                continue;
            }
            if (depth == 0 && t.kind == SqlToken::Kind::Word && t.text == "SELECT") break;
            if (depth == 0 && expecting_name &&
                (t.kind == SqlToken::Kind::Word || t.kind == SqlToken::Kind::String)) {
                if (t.kind == SqlToken::Kind::Word && forbidden_keywords().count(t.text))
                    return {false, "forbidden keyword " + t.text};
                cte_names.insert(sql_detail::unquote_identifier(t.text));
                expecting_name = false;
            }
        }
    }

    for (const auto& t : tokens) {
        if (t.kind == SqlToken::Kind::Word && forbidden_keywords().count(t.text))
            return {false, "forbidden keyword " + t.text};
    }

    const std::string table = to_lower(opts.table_name);
    for (size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        // Function blocklist: WORD followed by '('.
        if (t.kind == SqlToken::Kind::Word && i + 1 < tokens.size() &&
            tokens[i + 1].kind == SqlToken::Kind::Punct && tokens[i + 1].text == "(") {
            if (forbidden_functions().count(t.text)) return {false, "forbidden function " + t.text};
        }
        if (t.kind != SqlToken::Kind::Word || (t.text != "FROM" && t.text != "JOIN")) continue;

        // Each FROM/JOIN target must be the corpus table, a declared CTE, or a
        // parenthesized subquery. Comma-separated FROM lists are walked too.
        size_t j = i + 1;
        while (j < tokens.size()) {
            const auto& target = tokens[j];
            if (target.kind == SqlToken::Kind::Punct && target.text == "(") break;  // subquery
            if (target.kind == SqlToken::Kind::Word || target.kind == SqlToken::Kind::String) {
                std::string name = sql_detail::unquote_identifier(target.text);
                if (name != table && !cte_names.count(name))
                    return {false, "unknown table " + name + ", only " + table + " may be queried"};
                // `name(` would be a table-valued function; the corpus table is not one.
                if (j + 1 < tokens.size() && tokens[j + 1].kind == SqlToken::Kind::Punct &&
                    tokens[j + 1].text == "(")
                    return {false, "table-valued functions are not allowed"};
                // Skip optional alias: [AS] word.
                size_t k = j + 1;
                if (k < tokens.size() && tokens[k].kind == SqlToken::Kind::Word && tokens[k].text == "AS") ++k;
                // Comma continues a FROM list with another target.
                if (k < tokens.size() && tokens[k].kind == SqlToken::Kind::Punct && tokens[k].text == ",") {
                    j = k + 1;
                    continue;
                }
                if (k < tokens.size() && tokens[k].kind == SqlToken::Kind::Word &&
                    tokens[k].text != "WHERE" && tokens[k].text != "GROUP" && tokens[k].text != "ORDER" &&
                    tokens[k].text != "LIMIT" && tokens[k].text != "JOIN" && tokens[k].text != "ON" &&
                    tokens[k].text != "LEFT" && tokens[k].text != "RIGHT" && tokens[k].text != "INNER" &&
                    tokens[k].text != "OUTER" && tokens[k].text != "CROSS" && tokens[k].text != "UNION" &&
                    tokens[k].text != "EXCEPT" && tokens[k].text != "INTERSECT" && tokens[k].text != "HAVING" &&
                    tokens[k].text != "NATURAL") {
                    // alias without AS; the comma check after it keeps list walking alive
                    if (k + 1 < tokens.size() && tokens[k + 1].kind == SqlToken::Kind::Punct &&
                        tokens[k + 1].text == ",") {
                        j = k + 2;
                        continue;
                    }
                }
            }
            break;
        }
    }

    if (opts.require_doc_id_projection) {
        // The projection between the first SELECT and its FROM must mention
        // doc_id (or be SELECT *). Narrowing queries need it to name documents.
        size_t sel = 0;
        while (sel < tokens.size() && tokens[sel].text != "SELECT") ++sel;
        bool found = false;
        int depth = 0;
        for (size_t i = sel + 1; i < tokens.size(); ++i) {
            const auto& t = tokens[i];
            if (t.kind == SqlToken::Kind::Punct) {
                if (t.text == "(") ++depth;
                else if (t.text == ")") --depth;
                else if (t.text == "*" && depth == 0) found = true;
                continue;
            }
            if (depth == 0 && t.kind == SqlToken::Kind::Word && t.text == "FROM") break;
            if (t.kind == SqlToken::Kind::Word && t.text == "DOC_ID") found = true;
            if (t.kind == SqlToken::Kind::String && sql_detail::unquote_identifier(t.text) == "doc_id")
                found = true;
        }
        if (!found) return {false, "narrowing query must project doc_id"};
    }

    return {true, ""};
}

// A statement that passed the guard, ready for the execution engine.
struct FormalQuery {
    std::string sql_text;
    bool read_only = true;
    std::string question_id;  // provenance: the NL question this answers
};

// Guard entry point: the statement either becomes a FormalQuery or yields the
// violation reason as data.
inline std::variant<FormalQuery, std::string> guard_sql(std::string_view sql,
                                                        const SqlGuardOptions& opts = {},
                                                        std::string question_id = "") {
    SqlValidation v = validate_sql(sql, opts);
    if (!v.ok) return v.reason;
    return FormalQuery{std::string(sql), true, std::move(question_id)};
}

}  // namespace srag
