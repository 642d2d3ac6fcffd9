#pragma once

#include <string>
#include <vector>

#include "srag/answer.hpp"
#include "srag/vector_index.hpp"

namespace srag {

// Fixed context delimiter between retrieved chunks (and between document
// prefixes in the full-corpus baseline). The concept calls for a special
// separator token; the concrete string is ours and documented here.
inline constexpr const char* kContextDelimiter = "\n\n=====\n\n";

inline constexpr int kFullCorpusPerDocCap = 20000;
inline constexpr int kDefaultContextBudget = 160000;

struct BaselineOptions {
    std::string model_id;
    int max_output_tokens = 1024;
};

namespace detail {

inline AnswerBundle generate_from_context(ChatProvider& provider, const Question& q,
                                          const std::string& context, const std::string& system_name,
                                          const BaselineOptions& opts) {
    std::string user_prompt =
        "Context:\n" + context + "\n\nQuestion: " + q.text + "\n\nAnswer the question using only the context above.";
    ChatRequest req{kContextAnswerSystemPrompt, user_prompt, opts.model_id, 0.0, opts.max_output_tokens};
    std::string response = provider.complete(req);
    AnswerBundle bundle;
    bundle.question_id = q.question_id;
    bundle.system = system_name;
    bundle.answer_text = response;
    bundle.trace.push_back({"generate", kContextAnswerSystemPrompt, user_prompt, response});
    return bundle;
}

}  // namespace detail

// Plain retrieval baseline: top-k chunks by cosine similarity, concatenated in
// score order, context-only generation.
inline AnswerBundle vector_rag_answer(ChatProvider& provider, const VectorIndex& index,
                                      Embedder& embedder, const Question& q, int k = kRetrievalK,
                                      const BaselineOptions& opts = {},
                                      const std::optional<std::set<std::string>>& doc_filter = std::nullopt) {
    require_valid(q);
    RetrievalResult retrieved = index.retrieve(embedder, q.text, k, doc_filter);
    std::vector<std::string> parts;
    parts.reserve(retrieved.scored.size());
    for (const auto& sc : retrieved.scored) parts.push_back(index.chunk(sc.index).text);
    AnswerBundle bundle =
        detail::generate_from_context(provider, q, join(parts, kContextDelimiter), "vector-rag", opts);
    for (const auto& sc : retrieved.scored) bundle.narrowed_doc_ids.push_back(index.chunk(sc.index).doc_id);
    return bundle;
}

struct FullCorpusContext {
    std::string context;
    std::vector<std::string> included_doc_ids;
    std::vector<int> prefix_tokens;  // tokens contributed per included document
};

// Greedy prefix packing: every document is truncated to `per_doc_cap` tokens,
// prefixes are taken in corpus order and packing stops at the first document
// whose capped prefix no longer fits the budget. Only document tokens count
// against the budget; the fixed headers and delimiters do not.
inline FullCorpusContext build_full_corpus_context(const std::vector<Document>& corpus,
                                                   int per_doc_cap = kFullCorpusPerDocCap,
                                                   int context_budget = kDefaultContextBudget) {
    if (corpus.empty()) throw Error(ErrorKind::Config, "corpus is empty");
    if (per_doc_cap < 1 || context_budget < 1)
        throw Error(ErrorKind::Config, "token budgets must be positive");
    FullCorpusContext out;
    std::vector<std::string> parts;
    int64_t used = 0;
    for (const auto& doc : corpus) {
        std::string_view prefix = token_prefix(doc.text, static_cast<size_t>(per_doc_cap));
        int prefix_tokens = static_cast<int>(count_tokens(prefix));
        if (used + prefix_tokens > context_budget) break;
        used += prefix_tokens;
        parts.push_back("--- document " + doc.doc_id + " ---\n" + std::string(prefix));
        out.included_doc_ids.push_back(doc.doc_id);
        out.prefix_tokens.push_back(prefix_tokens);
    }
    out.context = join(parts, kContextDelimiter);
    return out;
}

// Long-context baseline: no retrieval, the generator sees as many capped
// document prefixes as the context budget admits, in corpus order.
inline AnswerBundle full_corpus_answer(ChatProvider& provider, const std::vector<Document>& corpus,
                                       const Question& q, int per_doc_cap = kFullCorpusPerDocCap,
                                       int context_budget = kDefaultContextBudget,
                                       const BaselineOptions& opts = {}) {
    require_valid(q);
    FullCorpusContext ctx = build_full_corpus_context(corpus, per_doc_cap, context_budget);
    AnswerBundle bundle = detail::generate_from_context(provider, q, ctx.context, "full-corpus", opts);
    bundle.narrowed_doc_ids = ctx.included_doc_ids;
    return bundle;
}

}  // namespace srag
