#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srag/corpus.hpp"
#include "srag/gateway.hpp"
#include "srag/sql_guard.hpp"

namespace srag {

struct Question {
    std::string question_id;
    std::string text;
};

inline void require_valid(const Question& q) {
    if (trim(q.text).empty()) throw Error(ErrorKind::Config, "question text is empty");
}

struct TraceEntry {
    std::string stage;  // e.g. "translate", "repair", "verbalize", "generate"
    std::string system_prompt;
    std::string user_prompt;
    std::string response;
};

// Everything one answering run produced, auditably: the SQL (when the system
// uses one), the stringified result the generator saw, and every prompt round.
struct AnswerBundle {
    std::string question_id;
    std::string system;  // "s-rag", "hybrid-s-rag", "vector-rag", "full-corpus"
    std::optional<FormalQuery> sql;
    std::string result_preview;
    std::string answer_text;
    bool answered = true;  // false when translation/execution failed and the bundle says so
    std::string failure_reason;
    std::vector<std::string> narrowed_doc_ids;  // hybrid stage (i) output
    bool hybrid_fallback = false;               // narrowing came back empty, fell back to plain retrieval
    std::vector<TraceEntry> trace;
};

// Generation is context-only across every system: answers must be grounded in
// what retrieval or SQL execution produced, never parametric knowledge.
inline constexpr const char* kContextAnswerSystemPrompt =
    "You are a question answering assistant. Generate answers solely on the basis of the provided "
    "context. If the context does not contain the information needed, answer exactly: The context does "
    "not provide this information. Never use outside knowledge.";

inline json answer_bundle_to_json(const AnswerBundle& b) {
    json j = {{"question_id", b.question_id},
              {"system", b.system},
              {"answered", b.answered},
              {"answer_text", b.answer_text}};
    if (b.sql) j["sql"] = b.sql->sql_text;
    if (!b.result_preview.empty()) j["result_preview"] = b.result_preview;
    if (!b.failure_reason.empty()) j["failure_reason"] = b.failure_reason;
    if (!b.narrowed_doc_ids.empty()) j["narrowed_doc_ids"] = b.narrowed_doc_ids;
    if (b.hybrid_fallback) j["hybrid_fallback"] = true;
    json trace = json::array();
    for (const auto& t : b.trace)
        trace.push_back({{"stage", t.stage},
                         {"system_prompt", t.system_prompt},
                         {"user_prompt", t.user_prompt},
                         {"response", t.response}});
    j["trace"] = trace;
    return j;
}

inline AnswerBundle answer_bundle_from_json(const json& j) {
    AnswerBundle b;
    b.question_id = j.at("question_id").get<std::string>();
    b.system = j.value("system", "");
    b.answered = j.value("answered", true);
    b.answer_text = j.value("answer_text", "");
    if (j.contains("sql")) b.sql = FormalQuery{j["sql"].get<std::string>(), true, b.question_id};
    b.result_preview = j.value("result_preview", "");
    b.failure_reason = j.value("failure_reason", "");
    if (j.contains("narrowed_doc_ids"))
        b.narrowed_doc_ids = j["narrowed_doc_ids"].get<std::vector<std::string>>();
    b.hybrid_fallback = j.value("hybrid_fallback", false);
    for (const auto& t : j.value("trace", json::array()))
        b.trace.push_back({t.value("stage", ""), t.value("system_prompt", ""),
                           t.value("user_prompt", ""), t.value("response", "")});
    return b;
}

inline void save_answer_bundles(const fs::path& path, const std::vector<AnswerBundle>& bundles) {
    std::ostringstream out;
    for (const auto& b : bundles) out << answer_bundle_to_json(b).dump() << "\n";
    write_text_file(path, out.str());
}

inline std::vector<AnswerBundle> load_answer_bundles(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read answers " + path.string());
    std::vector<AnswerBundle> bundles;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        bundles.push_back(answer_bundle_from_json(json::parse(line)));
    }
    return bundles;
}

}  // namespace srag
