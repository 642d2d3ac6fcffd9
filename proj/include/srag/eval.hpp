#pragma once

#include <atomic>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "srag/answer.hpp"

namespace srag {

// Binary correctness judgment. The template is the exact judging prompt, with
// {query}, {gold_answer} and {judged_answer} as fill slots; tests pin it
// against a golden file because any drift silently changes scores.
inline constexpr const char* kJudgeComparisonTemplate =
    "<instructions>\n"
    "You are given a query, a gold answer, and a judged answer.\n"
    "Decide if the judged answer is a correct answer for the query, based\n"
    "on the gold answer.\n"
    "Do not use any external or prior knowledge. Only use the gold answer.\n"
    "Answer Yes if the judged answer is a correct answer\n"
    "for the query, and No otherwise.\n"
    "<query>\n"
    "{query}\n"
    "</query>\n"
    "<gold_answer>\n"
    "{gold_answer}\n"
    "</gold_answer>\n"
    "<judged_answer>\n"
    "{judged_answer}\n"
    "</judged_answer>\n"
    "</instructions>";

// Answer Recall prompts are ours (the mechanism is fixed, the wording is not);
// versioned so score-affecting edits are visible.
inline constexpr const char* kClaimDecompositionTemplate =
    "Decompose the following answer into its individual factual claims. (recall-prompts v1)\n"
    "Each claim must be a single self-contained statement. Reply with a JSON array of strings and "
    "nothing else. If the answer contains no factual claims, reply with [].\n"
    "<answer>\n"
    "{gold_answer}\n"
    "</answer>";

inline constexpr const char* kClaimCoverageTemplate =
    "You are given a claim and a candidate answer. (recall-prompts v1)\n"
    "Decide whether the claim is covered by the candidate answer. Use only the candidate answer, never "
    "prior knowledge. Answer Yes if the candidate answer states or entails the claim, and No otherwise.\n"
    "<claim>\n"
    "{claim}\n"
    "</claim>\n"
    "<candidate_answer>\n"
    "{candidate_answer}\n"
    "</candidate_answer>";

namespace eval_detail {

inline std::string fill(std::string tmpl, std::string_view slot, std::string_view value) {
    std::string needle = "{" + std::string(slot) + "}";
    size_t pos = tmpl.find(needle);
    if (pos == std::string::npos)
        throw Error(ErrorKind::Eval, "judge template is missing slot " + needle);
    tmpl.replace(pos, needle.size(), value);
    return tmpl;
}

// First alphabetic token, lowercased: "Yes." -> "yes".
inline std::optional<bool> parse_yes_no(std::string_view response) {
    size_t i = 0;
    while (i < response.size() && !std::isalpha(static_cast<unsigned char>(response[i]))) ++i;
    size_t j = i;
    while (j < response.size() && std::isalpha(static_cast<unsigned char>(response[j]))) ++j;
    std::string token = to_lower(response.substr(i, j - i));
    if (token == "yes") return true;
    if (token == "no") return false;
    return std::nullopt;
}

}  // namespace eval_detail

inline std::string fill_comparison_prompt(const std::string& query, const std::string& gold,
                                          const std::string& judged) {
    return eval_detail::fill(
        eval_detail::fill(eval_detail::fill(kJudgeComparisonTemplate, "query", query), "gold_answer",
                          gold),
        "judged_answer", judged);
}

enum class JudgmentStatus { Ok, Skipped, JudgeError };

struct Judgment {
    std::string question_id;
    std::string metric;  // "answer_comparison" | "answer_recall"
    double score = 0.0;  // comparison in {0,1}; recall = covered / total
    JudgmentStatus status = JudgmentStatus::Ok;
    std::string rationale;  // raw judge output(s)
    std::vector<std::pair<std::string, bool>> claims;  // recall only: (claim, covered)
};

struct EvalOptions {
    std::string model_id;
    int max_output_tokens = 1024;
    int parallelism = 1;
};

// Yes/No verdict on the candidate against the gold answer. One re-ask on an
// unparseable verdict, after that the judgment is an error, never a guess.
inline Judgment judge_comparison(ChatProvider& judge, const std::string& query, const std::string& gold,
                                 const std::string& candidate, const EvalOptions& opts = {},
                                 const std::string& question_id = "") {
    Judgment j;
    j.question_id = question_id;
    j.metric = "answer_comparison";
    std::string prompt = fill_comparison_prompt(query, gold, candidate);
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string ask = attempt == 0 ? prompt : prompt + "\nAnswer with exactly Yes or No.";
        std::string response =
            judge.complete({"", ask, opts.model_id, 0.0, opts.max_output_tokens});
        j.rationale += (attempt ? "\n--- re-ask ---\n" : "") + response;
        if (auto verdict = eval_detail::parse_yes_no(response)) {
            j.score = *verdict ? 1.0 : 0.0;
            return j;
        }
    }
    j.status = JudgmentStatus::JudgeError;
    return j;
}

// Two-step recall: decompose the gold answer into claims, then check each
// claim against the candidate. Zero claims is a skip, not a zero score.
inline Judgment judge_recall(ChatProvider& judge, const std::string& query, const std::string& gold,
                             const std::string& candidate, const EvalOptions& opts = {},
                             const std::string& question_id = "") {
    (void)query;  // recall depends on gold and candidate only; kept for interface symmetry
    Judgment j;
    j.question_id = question_id;
    j.metric = "answer_recall";

    std::string decomp_prompt = eval_detail::fill(kClaimDecompositionTemplate, "gold_answer", gold);
    std::string response =
        judge.complete({"", decomp_prompt, opts.model_id, 0.0, opts.max_output_tokens});
    j.rationale = response;
    json claims = json::parse(strip_code_fence(response), nullptr, false);
    if (!claims.is_array()) {
        j.status = JudgmentStatus::JudgeError;
        return j;
    }
    if (claims.empty()) {
        j.status = JudgmentStatus::Skipped;
        return j;
    }

    size_t covered = 0;
    for (const auto& claim_json : claims) {
        if (!claim_json.is_string()) {
            j.status = JudgmentStatus::JudgeError;
            return j;
        }
        std::string claim = claim_json.get<std::string>();
        std::string prompt = eval_detail::fill(
            eval_detail::fill(kClaimCoverageTemplate, "claim", claim), "candidate_answer", candidate);
        std::optional<bool> verdict;
        for (int attempt = 0; attempt < 2 && !verdict; ++attempt) {
            std::string ask = attempt == 0 ? prompt : prompt + "\nAnswer with exactly Yes or No.";
            std::string cover_response =
                judge.complete({"", ask, opts.model_id, 0.0, opts.max_output_tokens});
            j.rationale += "\n--- claim ---\n" + cover_response;
            verdict = eval_detail::parse_yes_no(cover_response);
        }
        if (!verdict) {
            j.status = JudgmentStatus::JudgeError;
            return j;
        }
        if (*verdict) ++covered;
        j.claims.emplace_back(std::move(claim), *verdict);
    }
    j.score = static_cast<double>(covered) / static_cast<double>(claims.size());
    return j;
}

// Gold answer as the eval harness consumes it; extra fields in gold files
// (tags, SQL) are ignored here.
struct GoldAnswer {
    std::string question_id;
    std::string question;
    std::string gold_answer;
};

inline std::vector<GoldAnswer> load_gold_answers(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read gold file " + path.string());
    std::vector<GoldAnswer> gold;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        gold.push_back({j.at("question_id").get<std::string>(), j.at("question").get<std::string>(),
                        j.at("gold_answer").get<std::string>()});
    }
    return gold;
}

struct RunReport {
    std::string system;
    std::string ingestion_type;  // e.g. "gold schema", "predicted schema", "-" for baselines
    std::vector<Judgment> judgments;
    double answer_recall_mean = 0.0;
    size_t answer_recall_judged = 0;
    double answer_comparison_mean = 0.0;
    size_t answer_comparison_judged = 0;
    size_t skipped = 0;
    size_t judge_errors = 0;
    std::vector<std::string> missing_answer_ids;    // gold questions no answer bundle covered
    std::vector<std::string> unmatched_answer_ids;  // answers with no gold row
};

// Scores one system's answers against gold. Questions are judged independently
// (parallel when asked); aggregates are plain means over judged questions,
// with skips and judge errors counted but excluded from denominators.
inline RunReport evaluate_run(ChatProvider& judge, const std::vector<AnswerBundle>& answers,
                              const std::vector<GoldAnswer>& gold, const std::string& system_label,
                              const std::string& ingestion_type, const EvalOptions& opts = {}) {
    RunReport report;
    report.system = system_label;
    report.ingestion_type = ingestion_type;

    std::map<std::string, const AnswerBundle*> by_id;
    for (const auto& a : answers) {
        if (!by_id.emplace(a.question_id, &a).second)
            throw Error(ErrorKind::Eval, "duplicate answer for question " + a.question_id);
    }
    std::set<std::string> gold_ids;
    std::vector<std::pair<const GoldAnswer*, const AnswerBundle*>> joined;
    for (const auto& g : gold) {
        gold_ids.insert(g.question_id);
        auto it = by_id.find(g.question_id);
        if (it == by_id.end())
            report.missing_answer_ids.push_back(g.question_id);
        else
            joined.emplace_back(&g, it->second);
    }
    for (const auto& a : answers)
        if (!gold_ids.count(a.question_id)) report.unmatched_answer_ids.push_back(a.question_id);

    std::vector<std::pair<Judgment, Judgment>> results(joined.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= joined.size()) break;
            const auto& [g, a] = joined[i];
            results[i].first =
                judge_comparison(judge, g->question, g->gold_answer, a->answer_text, opts, g->question_id);
            results[i].second =
                judge_recall(judge, g->question, g->gold_answer, a->answer_text, opts, g->question_id);
        }
    };
    if (opts.parallelism <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < opts.parallelism; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    double comparison_sum = 0.0, recall_sum = 0.0;
    for (auto& [comparison, recall] : results) {
        for (const Judgment* j : {&comparison, &recall}) {
            if (j->status == JudgmentStatus::Skipped) report.skipped++;
            if (j->status == JudgmentStatus::JudgeError) report.judge_errors++;
        }
        if (comparison.status == JudgmentStatus::Ok) {
            comparison_sum += comparison.score;
            report.answer_comparison_judged++;
        }
        if (recall.status == JudgmentStatus::Ok) {
            recall_sum += recall.score;
            report.answer_recall_judged++;
        }
        report.judgments.push_back(std::move(comparison));
        report.judgments.push_back(std::move(recall));
    }
    if (report.answer_comparison_judged)
        report.answer_comparison_mean = comparison_sum / static_cast<double>(report.answer_comparison_judged);
    if (report.answer_recall_judged)
        report.answer_recall_mean = recall_sum / static_cast<double>(report.answer_recall_judged);
    return report;
}

// --- report rendering ---

inline json judgment_to_json(const Judgment& j) {
    json out = {{"question_id", j.question_id}, {"metric", j.metric}};
    switch (j.status) {
        case JudgmentStatus::Ok:
            out["score"] = j.score;
            break;
        case JudgmentStatus::Skipped:
            out["skipped"] = true;
            break;
        case JudgmentStatus::JudgeError:
            out["judge_error"] = true;
            break;
    }
    if (!j.claims.empty()) {
        json claims = json::array();
        for (const auto& [text, covered] : j.claims)
            claims.push_back({{"claim", text}, {"covered", covered}});
        out["claims"] = claims;
    }
    out["rationale"] = j.rationale;
    return out;
}

inline json report_to_json(const RunReport& r) {
    json judgments = json::array();
    for (const auto& j : r.judgments) judgments.push_back(judgment_to_json(j));
    return json{{"system", r.system},
                {"ingestion_type", r.ingestion_type},
                {"answer_recall", {{"mean", r.answer_recall_mean}, {"judged", r.answer_recall_judged}}},
                {"answer_comparison",
                 {{"mean", r.answer_comparison_mean}, {"judged", r.answer_comparison_judged}}},
                {"skipped", r.skipped},
                {"judge_errors", r.judge_errors},
                {"missing_answer_ids", r.missing_answer_ids},
                {"unmatched_answer_ids", r.unmatched_answer_ids},
                {"judgments", judgments}};
}

// Side-by-side table, one row per system.
inline std::string reports_to_markdown(const std::vector<RunReport>& reports) {
    auto cell = [](double mean, size_t judged) {
        if (judged == 0) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", mean);
        return std::string(buf);
    };
    std::string out = "| System | Ingestion Type | Answer Recall | Answer Comparison |\n";
    out += "|---|---|---|---|\n";
    for (const auto& r : reports) {
        out += "| " + r.system + " | " + r.ingestion_type + " | " +
               cell(r.answer_recall_mean, r.answer_recall_judged) + " | " +
               cell(r.answer_comparison_mean, r.answer_comparison_judged) + " |\n";
        if (!r.missing_answer_ids.empty())
            out += "| | missing answers | " + join(r.missing_answer_ids, ", ") + " | |\n";
    }
    return out;
}

}  // namespace srag
