#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "srag/baselines.hpp"
#include "srag/eval.hpp"
#include "srag/extraction.hpp"
#include "srag/http.hpp"
#include "srag/induction.hpp"
#include "srag/inference.hpp"

namespace srag {

// One flat configuration surface for end-to-end runs. Every knob the pipeline
// consumes lives here; the seed is mandatory so no run is accidentally
// irreproducible.
struct PipelineConfig {
    fs::path run_dir;
    fs::path corpus_dir;
    std::string schema_mode = "induce";  // induce | import
    fs::path schema_path;                // required when schema_mode == "import"
    json provider = json::object();      // {"kind": "scripted", "script_path": ...} | {"kind": "http", ...}
    json judge = json::object();         // judge provider; empty object -> reuse `provider`
    uint64_t seed = 0;

    std::string model_id;
    std::string judge_model_id;
    int parallelism = 1;
    std::string verbalization = "llm";  // llm | direct

    // ingestion knobs
    int induction_iterations = 4;
    int sample_docs = 12;
    int sample_questions = 10;
    fs::path questions_path;  // questions used for the induction sample and for bench
    fs::path gold_path;       // gold answers for bench evaluation

    // baseline parameters
    int chunk_tokens = kChunkTokens;
    int retrieval_k = kRetrievalK;
    int per_doc_cap = kFullCorpusPerDocCap;
    int context_budget = kDefaultContextBudget;
    size_t embedding_dim = 256;

    json raw = json::object();  // verbatim source, snapshotted into the run directory
};

inline PipelineConfig pipeline_config_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "pipeline config must be a JSON object");
    PipelineConfig cfg;
    cfg.raw = j;
    auto path_of = [&](const char* key) { return fs::path(j.at(key).get<std::string>()); };
    if (!j.contains("run_dir")) throw Error(ErrorKind::Config, "config is missing run_dir");
    cfg.run_dir = path_of("run_dir");
    if (j.contains("corpus_dir")) cfg.corpus_dir = path_of("corpus_dir");
    if (!j.contains("seed") || !j["seed"].is_number_unsigned())
        throw Error(ErrorKind::Config, "config must set an explicit non-negative integer seed");
    cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("schema_mode")) cfg.schema_mode = j["schema_mode"].get<std::string>();
    if (cfg.schema_mode != "induce" && cfg.schema_mode != "import")
        throw Error(ErrorKind::Config, "schema_mode must be induce or import, got " + cfg.schema_mode);
    if (j.contains("schema_path")) cfg.schema_path = path_of("schema_path");
    if (cfg.schema_mode == "import" && cfg.schema_path.empty())
        throw Error(ErrorKind::Config, "schema_mode import requires schema_path");
    if (!j.contains("provider"))
        throw Error(ErrorKind::Config, "config is missing a provider block");
    cfg.provider = j["provider"];
    if (j.contains("judge")) cfg.judge = j["judge"];
    if (j.contains("model_id")) cfg.model_id = j["model_id"].get<std::string>();
    if (j.contains("judge_model_id")) cfg.judge_model_id = j["judge_model_id"].get<std::string>();
    if (j.contains("parallelism")) cfg.parallelism = j["parallelism"].get<int>();
    if (cfg.parallelism < 1) throw Error(ErrorKind::Config, "parallelism must be >= 1");
    if (j.contains("verbalization")) cfg.verbalization = j["verbalization"].get<std::string>();
    if (cfg.verbalization != "llm" && cfg.verbalization != "direct")
        throw Error(ErrorKind::Config, "verbalization must be llm or direct");
    if (j.contains("induction_iterations")) cfg.induction_iterations = j["induction_iterations"].get<int>();
    if (j.contains("sample_docs")) cfg.sample_docs = j["sample_docs"].get<int>();
    if (j.contains("sample_questions")) cfg.sample_questions = j["sample_questions"].get<int>();
    if (j.contains("questions_path")) cfg.questions_path = path_of("questions_path");
    if (j.contains("gold_path")) cfg.gold_path = path_of("gold_path");
    if (j.contains("chunk_tokens")) cfg.chunk_tokens = j["chunk_tokens"].get<int>();
    if (j.contains("retrieval_k")) cfg.retrieval_k = j["retrieval_k"].get<int>();
    if (j.contains("per_doc_cap")) cfg.per_doc_cap = j["per_doc_cap"].get<int>();
    if (j.contains("context_budget")) cfg.context_budget = j["context_budget"].get<int>();
    if (j.contains("embedding_dim")) cfg.embedding_dim = j["embedding_dim"].get<size_t>();
    if (cfg.chunk_tokens < 1 || cfg.retrieval_k < 1 || cfg.per_doc_cap < 1 || cfg.context_budget < 1 ||
        cfg.embedding_dim == 0)
        throw Error(ErrorKind::Config, "baseline parameters must be positive");
    return cfg;
}

inline PipelineConfig load_pipeline_config(const fs::path& path) {
    return pipeline_config_from_json(json::parse(read_text_file(path)));
}

inline std::unique_ptr<ChatProvider> make_provider(const json& cfg) {
    if (!cfg.is_object() || !cfg.contains("kind"))
        throw Error(ErrorKind::Config, "provider config needs a kind (scripted or http)");
    std::string kind = cfg.at("kind").get<std::string>();
    if (kind == "scripted") {
        if (!cfg.contains("script_path"))
            throw Error(ErrorKind::Config, "scripted provider needs script_path");
        return std::make_unique<ScriptedProvider>(
            load_script(cfg.at("script_path").get<std::string>()));
    }
    if (kind == "http") {
        return std::make_unique<HttpProvider>(http_provider_config_from_json(cfg));
    }
    throw Error(ErrorKind::Config, "unknown provider kind: " + kind);
}

// Fixed layout inside a run directory; everything needed to replay a run.
struct RunPaths {
    fs::path config_snapshot;
    fs::path corpus_manifest;
    fs::path schema;
    fs::path induction_snapshots;
    fs::path records;
    fs::path extraction_report;
    fs::path db;
    fs::path statistics_json;
    fs::path statistics_text;
    fs::path index;
    fs::path ingest_calls;
    fs::path bench_calls;
    fs::path report_json;
    fs::path report_markdown;

    fs::path answers(const std::string& system) const {
        return answers_dir / ("answers_" + system + ".jsonl");
    }
    fs::path answers_dir;
};

inline RunPaths run_paths(const fs::path& run_dir) {
    RunPaths p;
    p.config_snapshot = run_dir / "config.json";
    p.corpus_manifest = run_dir / "corpus_manifest.jsonl";
    p.schema = run_dir / "schema.json";
    p.induction_snapshots = run_dir / "induction_snapshots.json";
    p.records = run_dir / "records.jsonl";
    p.extraction_report = run_dir / "extraction_report.json";
    p.db = run_dir / "corpus.db";
    p.statistics_json = run_dir / "statistics.json";
    p.statistics_text = run_dir / "statistics.txt";
    p.index = run_dir / "index.jsonl";
    p.ingest_calls = run_dir / "ingest_calls.jsonl";
    p.bench_calls = run_dir / "bench_calls.jsonl";
    p.report_json = run_dir / "report.json";
    p.report_markdown = run_dir / "report.md";
    p.answers_dir = run_dir;
    return p;
}

inline std::vector<Question> load_questions(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read questions file " + path.string());
    std::vector<Question> questions;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        questions.push_back({j.at("question_id").get<std::string>(), j.at("text").get<std::string>()});
    }
    return questions;
}

namespace pipeline_detail {

// Stage failures surface with the stage name attached so a batch log says
// where the pipeline died; partial artifacts written before the failure stay
// on disk.
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), "stage " + stage + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Parse, "stage " + stage + ": " + e.what());
    }
}

}  // namespace pipeline_detail

struct IngestArtifacts {
    Schema schema;
    std::vector<Record> records;
    ExtractionReport report;
    std::vector<AttributeStatistics> statistics;
    fs::path db_path;
    size_t document_count = 0;
};

inline IngestArtifacts run_ingest(const PipelineConfig& cfg) {
    using pipeline_detail::run_stage;
    if (cfg.corpus_dir.empty()) throw Error(ErrorKind::Config, "ingest requires corpus_dir");
    RunPaths paths = run_paths(cfg.run_dir);
    fs::create_directories(cfg.run_dir);
    write_text_file(paths.config_snapshot, cfg.raw.dump(2) + "\n");

    IngestArtifacts artifacts;

    std::vector<Document> corpus = run_stage("corpus", [&] {
        LoadResult loaded = load_corpus(cfg.corpus_dir);
        if (loaded.documents.empty())
            throw Error(ErrorKind::Config, "corpus at " + cfg.corpus_dir.string() + " has no documents");
        save_manifest(paths.corpus_manifest, loaded.documents);
        return std::move(loaded.documents);
    });
    artifacts.document_count = corpus.size();

    std::unique_ptr<ChatProvider> provider = make_provider(cfg.provider);
    CallLog log;
    provider->attach_log(&log);

    artifacts.schema = run_stage("schema", [&] {
        if (cfg.schema_mode == "import") {
            Schema schema = load_schema(cfg.schema_path);
            save_schema(paths.schema, schema);
            return schema;
        }
        std::vector<std::string> question_texts;
        if (!cfg.questions_path.empty())
            for (const auto& q : load_questions(cfg.questions_path)) question_texts.push_back(q.text);
        CorpusSample sample =
            draw_sample(corpus, question_texts, std::min<size_t>(cfg.sample_docs, corpus.size()),
                        cfg.sample_questions, cfg.seed);
        InductionOptions opts;
        opts.iterations = cfg.induction_iterations;
        opts.model_id = cfg.model_id;
        InductionResult result = induce(*provider, sample, opts);
        save_schema(paths.schema, result.schema);
        json snapshots = json::array();
        for (const auto& s : result.snapshots) snapshots.push_back(schema_to_json(s));
        write_text_file(paths.induction_snapshots, snapshots.dump(2) + "\n");
        return result.schema;
    });
    log.save(paths.ingest_calls);  // keep whatever was spent even if extraction dies

    CorpusExtraction extraction = run_stage("extract", [&] {
        ExtractionOptions opts;
        opts.model_id = cfg.model_id;
        CorpusExtraction out = extract_corpus(*provider, corpus, artifacts.schema, cfg.parallelism, opts);
        save_records(paths.records, out.records, artifacts.schema);
        json report = {{"total_documents", out.report.total_documents},
                       {"failed_documents", out.report.failed_documents},
                       {"failed_doc_ids", out.report.failed_doc_ids},
                       {"null_rate", out.report.null_rate},
                       {"all_null_attributes", out.report.all_null_attributes}};
        write_text_file(paths.extraction_report, report.dump(2) + "\n");
        return out;
    });
    artifacts.records = std::move(extraction.records);
    artifacts.report = extraction.report;

    run_stage("store", [&] {
        if (fs::exists(paths.db)) fs::remove(paths.db);  // rebuild, never append
        StructuredStore store = build_table(paths.db, artifacts.schema, artifacts.records);
        artifacts.statistics = store.compute_statistics();
        write_text_file(paths.statistics_json,
                        statistics_to_json(artifacts.statistics, store.row_count()).dump(2) + "\n");
        write_text_file(paths.statistics_text,
                        statistics_block(artifacts.statistics, store.row_count()));
        return 0;
    });
    artifacts.db_path = paths.db;

    log.save(paths.ingest_calls);
    return artifacts;
}

// --- bench ---

inline const std::map<std::string, std::pair<std::string, std::string>>& system_labels() {
    // key -> (report label, ingestion column for schema-backed systems)
    static const std::map<std::string, std::pair<std::string, std::string>> labels = {
        {"srag", {"S-RAG", "schema"}},
        {"hybrid", {"Hybrid-S-RAG", "schema"}},
        {"vector", {"VectorRAG", "-"}},
        {"fullcorpus", {"FullCorpus", "-"}},
    };
    return labels;
}

struct BenchResult {
    std::vector<RunReport> reports;                // one per system that completed
    std::map<std::string, std::string> failures;   // system -> error for isolated failures
};

// Answers + evaluation for each requested system. Systems are isolated: one
// failing is recorded and the rest still run.
inline BenchResult run_bench(const PipelineConfig& cfg, const std::vector<std::string>& systems) {
    if (systems.empty()) throw Error(ErrorKind::Config, "bench needs at least one system");
    for (const auto& s : systems)
        if (!system_labels().count(s))
            throw Error(ErrorKind::Config,
                        "unknown system " + s + " (expected srag, hybrid, vector, fullcorpus)");
    if (cfg.questions_path.empty()) throw Error(ErrorKind::Config, "bench requires questions_path");
    if (cfg.gold_path.empty()) throw Error(ErrorKind::Config, "bench requires gold_path");

    RunPaths paths = run_paths(cfg.run_dir);
    fs::create_directories(cfg.run_dir);
    std::vector<Question> questions = load_questions(cfg.questions_path);
    if (questions.empty()) throw Error(ErrorKind::Config, "questions file is empty");
    std::vector<GoldAnswer> gold = load_gold_answers(cfg.gold_path);

    std::unique_ptr<ChatProvider> provider = make_provider(cfg.provider);
    std::unique_ptr<ChatProvider> judge =
        make_provider(cfg.judge.is_object() && !cfg.judge.empty() ? cfg.judge : cfg.provider);
    CallLog log;
    provider->attach_log(&log);
    judge->attach_log(&log);

    const bool needs_schema = std::any_of(systems.begin(), systems.end(), [](const std::string& s) {
        return s == "srag" || s == "hybrid";
    });
    const bool needs_corpus = std::any_of(systems.begin(), systems.end(), [](const std::string& s) {
        return s == "hybrid" || s == "vector" || s == "fullcorpus";
    });

    std::optional<StructuredStore> store;
    if (needs_schema) {
        if (!fs::exists(paths.db))
            throw Error(ErrorKind::Config, "no ingested table at " + paths.db.string() + "; run ingest first");
        store.emplace(StructuredStore::open(paths.db));
    }

    std::vector<Document> corpus;
    HashingEmbedder embedder(cfg.embedding_dim, cfg.seed);
    std::optional<VectorIndex> index;
    if (needs_corpus) {
        if (cfg.corpus_dir.empty()) throw Error(ErrorKind::Config, "this system set requires corpus_dir");
        corpus = fs::exists(paths.corpus_manifest)
                     ? load_manifest(paths.corpus_manifest, cfg.corpus_dir)
                     : load_corpus(cfg.corpus_dir).documents;
        if (corpus.empty()) throw Error(ErrorKind::Config, "corpus has no documents");
        bool wants_index = std::any_of(systems.begin(), systems.end(), [](const std::string& s) {
            return s == "hybrid" || s == "vector";
        });
        if (wants_index) {
            if (fs::exists(paths.index)) {
                index.emplace(VectorIndex::load(paths.index));
            } else {
                index.emplace(VectorIndex::build(corpus, embedder, cfg.chunk_tokens));
                index->save(paths.index);
            }
        }
    }

    InferenceOptions inference_opts;
    inference_opts.model_id = cfg.model_id;
    inference_opts.verbalization =
        cfg.verbalization == "direct" ? Verbalization::Direct : Verbalization::Llm;
    BaselineOptions baseline_opts;
    baseline_opts.model_id = cfg.model_id;
    EvalOptions eval_opts;
    eval_opts.model_id = cfg.judge_model_id.empty() ? cfg.model_id : cfg.judge_model_id;
    eval_opts.parallelism = cfg.parallelism;

    std::optional<FullCorpusContext> full_context;

    BenchResult result;
    for (const auto& system : systems) {
        try {
            std::vector<AnswerBundle> answers;
            answers.reserve(questions.size());
            for (const auto& q : questions) {
                if (system == "srag") {
                    answers.push_back(InferenceEngine(*store, *provider, inference_opts).answer(q));
                } else if (system == "hybrid") {
                    answers.push_back(InferenceEngine(*store, *provider, inference_opts)
                                          .hybrid_answer(q, *index, embedder, cfg.retrieval_k,
                                                         baseline_opts));
                } else if (system == "vector") {
                    answers.push_back(vector_rag_answer(*provider, *index, embedder, q,
                                                        cfg.retrieval_k, baseline_opts));
                } else {  // fullcorpus
                    if (!full_context)
                        full_context =
                            build_full_corpus_context(corpus, cfg.per_doc_cap, cfg.context_budget);
                    answers.push_back(full_corpus_answer(*provider, corpus, q, cfg.per_doc_cap,
                                                         cfg.context_budget, baseline_opts));
                }
            }
            save_answer_bundles(paths.answers(system), answers);
            const auto& [label, schema_column] = system_labels().at(system);
            std::string ingestion = schema_column == "schema"
                                        ? (cfg.schema_mode == "import" ? "gold schema" : "predicted schema")
                                        : "-";
            result.reports.push_back(
                evaluate_run(*judge, answers, gold, label, ingestion, eval_opts));
        } catch (const std::exception& e) {
            result.failures[system] = e.what();
        }
    }

    json report_json = json::array();
    for (const auto& r : result.reports) report_json.push_back(report_to_json(r));
    json failures_json = json::object();
    for (const auto& [system, message] : result.failures) failures_json[system] = message;
    write_text_file(paths.report_json,
                    json{{"reports", report_json}, {"failures", failures_json}}.dump(2) + "\n");
    std::string markdown = reports_to_markdown(result.reports);
    for (const auto& [system, message] : result.failures)
        markdown += "\nFAILED " + system + ": " + message + "\n";
    write_text_file(paths.report_markdown, markdown);
    log.save(paths.bench_calls);
    return result;
}

}  // namespace srag
