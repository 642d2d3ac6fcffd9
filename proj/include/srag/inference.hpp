#pragma once

#include <string>
#include <utility>
#include <vector>

#include "srag/answer.hpp"
#include "srag/baselines.hpp"
#include "srag/store.hpp"

namespace srag {

inline constexpr const char* kTranslateSystemPrompt =
    "You translate natural-language questions into SQL for SQLite. Reply with a single read-only SELECT "
    "statement inside a fenced code block and nothing else. Query only the table named corpus using the "
    "columns listed in the schema. The statistics describe the values actually stored; use them to map "
    "the question's wording onto the stored spellings and ranges. Use NULL-safe aggregates and never "
    "modify data.";

enum class Verbalization { Direct, Llm };

struct InferenceOptions {
    std::string model_id;
    int max_output_tokens = 1024;
    Verbalization verbalization = Verbalization::Llm;
    int preview_max_rows = 100;
    int preview_max_tokens = 8000;
    QueryLimits limits;
};

// Deterministic rendering of a query result. This is both the Direct
// verbalization mode and the renderer the dataset forge uses to compute gold
// answers, so a correct SQL round trip reproduces gold answers exactly.
inline std::string render_result_direct(const QueryResult& result) {
    if (result.rows.empty()) return "no matching entities";
    if (result.rows.size() == 1 && result.rows[0].size() == 1) return result.rows[0][0].to_display();
    std::string out;
    if (result.columns.size() == 1) {
        for (size_t i = 0; i < result.rows.size(); ++i) {
            if (i) out += ", ";
            out += result.rows[i][0].to_display();
        }
        return out;
    }
    out = join(result.columns, " | ");
    for (const auto& row : result.rows) {
        std::vector<std::string> cells;
        cells.reserve(row.size());
        for (const auto& v : row) cells.push_back(v.to_display());
        out += "\n" + join(cells, " | ");
    }
    return out;
}

// Stringified result table for the verbalizer, bounded in rows and tokens so
// the context stays within budget; truncation is stated in the preview itself.
inline std::string result_preview(const QueryResult& result, int max_rows = 100, int max_tokens = 8000) {
    std::string out = join(result.columns, " | ");
    size_t shown = 0;
    for (const auto& row : result.rows) {
        if (static_cast<int>(shown) >= max_rows) break;
        std::vector<std::string> cells;
        cells.reserve(row.size());
        for (const auto& v : row) cells.push_back(v.to_display());
        std::string line = join(cells, " | ");
        if (count_tokens(out) + count_tokens(line) > static_cast<size_t>(max_tokens)) break;
        out += "\n" + line;
        ++shown;
    }
    size_t total = result.rows.size();
    if (shown < total)
        out += "\n[truncated: showing " + std::to_string(shown) + " of " + std::to_string(total) + " rows]";
    if (result.truncated) out += "\n[engine row limit reached; more rows exist]";
    return out;
}

// Text-to-SQL plus execution with one bounded repair round, then verbalization
// over the stringified result only.
class InferenceEngine {
public:
    InferenceEngine(const StructuredStore& store, ChatProvider& provider, InferenceOptions opts = {})
        : store_(store), provider_(provider), opts_(std::move(opts)) {
        stats_block_ = statistics_block(store_.compute_statistics(), store_.row_count());
    }

    const std::string& stats_block() const { return stats_block_; }

    // Translate, validate, execute. A validation or engine failure triggers
    // exactly one repair round carrying the error message; a second failure
    // surfaces as a translation error rather than a made-up answer.
    std::pair<FormalQuery, QueryResult> translate_and_execute(const Question& q, bool hybrid,
                                                              std::vector<TraceEntry>& trace) const {
        require_valid(q);
        std::string prompt = translate_prompt(q, hybrid);
        std::string error_feedback;
        std::string last_sql;
        for (int attempt = 0; attempt < 2; ++attempt) {
            std::string user_prompt = prompt;
            if (!error_feedback.empty())
                user_prompt += "\nYour previous statement was:\n" + last_sql +
                               "\nIt failed with: " + error_feedback + "\nReply with a corrected statement.";
            ChatRequest req{kTranslateSystemPrompt, user_prompt, opts_.model_id, 0.0,
                            opts_.max_output_tokens};
            std::string response = provider_.complete(req);
            trace.push_back({attempt == 0 ? "translate" : "repair", kTranslateSystemPrompt, user_prompt,
                             response});
            last_sql = trim(strip_code_fence(response));
            SqlGuardOptions guard{kCorpusTable, hybrid};
            auto guarded = guard_sql(last_sql, guard, q.question_id);
            if (std::holds_alternative<std::string>(guarded)) {
                error_feedback = std::get<std::string>(guarded);
                continue;
            }
            FormalQuery query = std::get<FormalQuery>(guarded);
            try {
                QueryResult result = store_.execute(query, opts_.limits);
                return {query, result};
            } catch (const Error& e) {
                error_feedback = e.what();
            }
        }
        throw Error(ErrorKind::Translation,
                    "SQL repair exhausted for question " + q.question_id + ": " + error_feedback);
    }

    AnswerBundle answer(const Question& q) const {
        AnswerBundle bundle;
        bundle.question_id = q.question_id;
        bundle.system = "s-rag";
        try {
            auto [query, result] = translate_and_execute(q, false, bundle.trace);
            bundle.sql = query;
            bundle.result_preview = result_preview(result, opts_.preview_max_rows, opts_.preview_max_tokens);
            bundle.answer_text = verbalize(q, result, bundle);
        } catch (const Error& e) {
            bundle.answered = false;
            bundle.failure_reason = e.what();
            bundle.answer_text = "Unable to answer: " + std::string(e.what());
        }
        return bundle;
    }

    // Hybrid mode: stage (i) SQL names the matching documents, stage (ii)
    // retrieval runs only over those documents. An empty narrowing falls back
    // to plain retrieval and says so in the bundle.
    AnswerBundle hybrid_answer(const Question& q, const VectorIndex& index, Embedder& embedder,
                               int k_chunks = kRetrievalK, const BaselineOptions& gen_opts = {}) const {
        AnswerBundle bundle;
        bundle.question_id = q.question_id;
        bundle.system = "hybrid-s-rag";
        std::optional<FormalQuery> query;
        std::set<std::string> narrowed;
        try {
            auto [fq, result] = translate_and_execute(q, true, bundle.trace);
            query = fq;
            auto doc_col = std::find(result.columns.begin(), result.columns.end(), "doc_id");
            if (doc_col != result.columns.end()) {
                size_t col = static_cast<size_t>(doc_col - result.columns.begin());
                for (const auto& row : result.rows)
                    if (!row[col].is_null()) narrowed.insert(row[col].to_display());
            }
        } catch (const Error& e) {
            bundle.trace.push_back({"narrowing-failure", "", "", e.what()});
        }

        std::optional<std::set<std::string>> filter;
        if (!narrowed.empty()) {
            filter = narrowed;
        } else {
            bundle.hybrid_fallback = true;
            bundle.trace.push_back(
                {"fallback", "", "", "document narrowing returned no documents; using plain retrieval"});
        }
        AnswerBundle generated =
            vector_rag_answer(provider_, index, embedder, q, k_chunks, gen_opts, filter);
        bundle.sql = query;
        bundle.answer_text = generated.answer_text;
        bundle.narrowed_doc_ids.assign(narrowed.begin(), narrowed.end());
        for (auto& t : generated.trace) bundle.trace.push_back(std::move(t));
        return bundle;
    }

private:
    std::string translate_prompt(const Question& q, bool hybrid) const {
        std::string prompt = schema_prompt_block(store_.schema()) + "\n" + stats_block_ + "\n";
        if (hybrid)
            prompt +=
                "The statement must return the doc_id column listing every document that matches the "
                "question's conditions.\n";
        prompt += "Question: " + q.text + "\n";
        return prompt;
    }

    std::string verbalize(const Question& q, const QueryResult& result, AnswerBundle& bundle) const {
        if (opts_.verbalization == Verbalization::Direct) return render_result_direct(result);
        std::string user_prompt = "Context:\n" + bundle.result_preview + "\n\nQuestion: " + q.text +
                                  "\n\nAnswer the question using only the context above. The context is "
                                  "the result table of a database query over the corpus.";
        ChatRequest req{kContextAnswerSystemPrompt, user_prompt, opts_.model_id, 0.0,
                        opts_.max_output_tokens};
        std::string response = provider_.complete(req);
        bundle.trace.push_back({"verbalize", kContextAnswerSystemPrompt, user_prompt, response});
        return response;
    }

    const StructuredStore& store_;
    ChatProvider& provider_;
    InferenceOptions opts_;
    std::string stats_block_;
};

}  // namespace srag
