// srag: command-line front end tying ingestion, inference, baselines, the
// dataset forge and the judge harness into reproducible run directories.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 pipeline stage
// failure, 4 judge failure.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "srag/forge.hpp"
#include "srag/pipeline.hpp"

namespace {

using namespace srag;

double mean_null_rate(const ExtractionReport& report) {
    if (report.null_rate.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [attr, rate] : report.null_rate) sum += rate;
    return sum / static_cast<double>(report.null_rate.size());
}

std::vector<Question> questions_from_flags(const std::string& question_text,
                                           const std::string& question_file) {
    if (!question_text.empty() && !question_file.empty())
        throw Error(ErrorKind::Config, "pass --question or --file, not both");
    if (!question_text.empty()) return {Question{"q1", question_text}};
    if (!question_file.empty()) return load_questions(question_file);
    throw Error(ErrorKind::Config, "pass --question <text> or --file <questions.jsonl>");
}

std::vector<Document> corpus_for(const PipelineConfig& cfg, const RunPaths& paths) {
    if (cfg.corpus_dir.empty()) throw Error(ErrorKind::Config, "config needs corpus_dir");
    std::vector<Document> corpus = fs::exists(paths.corpus_manifest)
                                       ? load_manifest(paths.corpus_manifest, cfg.corpus_dir)
                                       : load_corpus(cfg.corpus_dir).documents;
    if (corpus.empty()) throw Error(ErrorKind::Config, "corpus has no documents");
    return corpus;
}

VectorIndex index_for(const PipelineConfig& cfg, const RunPaths& paths, Embedder& embedder) {
    if (fs::exists(paths.index)) return VectorIndex::load(paths.index);
    VectorIndex index = VectorIndex::build(corpus_for(cfg, paths), embedder, cfg.chunk_tokens);
    fs::create_directories(cfg.run_dir);
    index.save(paths.index);
    return index;
}

void emit_answers(const std::vector<AnswerBundle>& answers, const std::string& out_path) {
    if (!out_path.empty()) {
        save_answer_bundles(out_path, answers);
        std::cout << "wrote " << answers.size() << " answers to " << out_path << "\n";
        return;
    }
    for (const auto& a : answers) {
        std::cout << a.question_id << ": " << a.answer_text << "\n";
        if (a.sql) std::cout << "  sql: " << a.sql->sql_text << "\n";
        if (a.hybrid_fallback) std::cout << "  (narrowing empty; fell back to full-corpus retrieval)\n";
    }
}

int dispatch_ingest(const std::string& config_path) {
    PipelineConfig cfg = load_pipeline_config(config_path);
    IngestArtifacts artifacts = run_ingest(cfg);
    std::cout << "ingested " << artifacts.document_count << " documents into " << cfg.run_dir.string()
              << "\n"
              << "schema: " << artifacts.schema.attributes.size() << " attributes\n"
              << "records: " << artifacts.records.size() << " (" << artifacts.report.failed_documents
              << " failed, null rate " << mean_null_rate(artifacts.report) << ")\n"
              << "table: " << artifacts.db_path.string() << "\n";
    return 0;
}

int dispatch_schema_induce(const std::string& config_path, const std::string& out_path) {
    PipelineConfig cfg = load_pipeline_config(config_path);
    if (cfg.corpus_dir.empty()) throw Error(ErrorKind::Config, "config needs corpus_dir");
    LoadResult loaded = load_corpus(cfg.corpus_dir);
    if (loaded.documents.empty()) throw Error(ErrorKind::Config, "corpus has no documents");
    std::vector<std::string> question_texts;
    if (!cfg.questions_path.empty())
        for (const auto& q : load_questions(cfg.questions_path)) question_texts.push_back(q.text);
    CorpusSample sample = draw_sample(loaded.documents, question_texts,
                                      std::min<size_t>(cfg.sample_docs, loaded.documents.size()),
                                      cfg.sample_questions, cfg.seed);
    std::unique_ptr<ChatProvider> provider = make_provider(cfg.provider);
    InductionOptions opts;
    opts.iterations = cfg.induction_iterations;
    opts.model_id = cfg.model_id;
    InductionResult result = induce(*provider, sample, opts);
    fs::path out = out_path.empty() ? run_paths(cfg.run_dir).schema : fs::path(out_path);
    fs::create_directories(out.parent_path());
    save_schema(out, result.schema);
    std::cout << "induced schema \"" << result.schema.title << "\" with "
              << result.schema.attributes.size() << " attributes -> " << out.string() << "\n";
    for (const auto& a : result.schema.attributes)
        std::cout << "  - " << a.name << " (" << value_type_name(a.type) << ")\n";
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int dispatch_schema_import(const std::string& schema_path, const std::string& out_path) {
    Schema schema = load_schema(schema_path);
    fs::path out(out_path);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    save_schema(out, schema);
    std::cout << "imported schema \"" << schema.title << "\" with " << schema.attributes.size()
              << " attributes -> " << out.string() << "\n";
    return 0;
}

int dispatch_extract(const std::string& config_path) {
    PipelineConfig cfg = load_pipeline_config(config_path);
    RunPaths paths = run_paths(cfg.run_dir);
    if (!fs::exists(paths.schema))
        throw Error(ErrorKind::Config,
                    "no schema at " + paths.schema.string() + "; run `srag schema` or `srag ingest` first");
    Schema schema = load_schema(paths.schema);
    std::vector<Document> corpus = corpus_for(cfg, paths);
    std::unique_ptr<ChatProvider> provider = make_provider(cfg.provider);
    ExtractionOptions opts;
    opts.model_id = cfg.model_id;
    CorpusExtraction out = extract_corpus(*provider, corpus, schema, cfg.parallelism, opts);
    fs::create_directories(cfg.run_dir);
    save_records(paths.records, out.records, schema);
    std::cout << "extracted " << out.records.size() << " records (" << out.report.failed_documents
              << " failed, null rate " << mean_null_rate(out.report) << ") -> " << paths.records.string()
              << "\n";
    return 0;
}

int dispatch_stats(const std::string& db_path) {
    StructuredStore store = StructuredStore::open(db_path);
    std::cout << statistics_block(store.compute_statistics(), store.row_count());
    return 0;
}

int dispatch_query(const std::string& config_path, const std::string& question_text,
                   const std::string& question_file, const std::string& out_path, bool hybrid) {
    PipelineConfig cfg = load_pipeline_config(config_path);
    RunPaths paths = run_paths(cfg.run_dir);
    if (!fs::exists(paths.db))
        throw Error(ErrorKind::Config, "no table at " + paths.db.string() + "; run `srag ingest` first");
    StructuredStore store = StructuredStore::open(paths.db);
    std::unique_ptr<ChatProvider> provider = make_provider(cfg.provider);
    InferenceOptions opts;
    opts.model_id = cfg.model_id;
    opts.verbalization = cfg.verbalization == "direct" ? Verbalization::Direct : Verbalization::Llm;
    InferenceEngine engine(store, *provider, opts);
    std::vector<Question> questions = questions_from_flags(question_text, question_file);

    std::vector<AnswerBundle> answers;
    if (hybrid) {
        HashingEmbedder embedder(cfg.embedding_dim, cfg.seed);
        VectorIndex index = index_for(cfg, paths, embedder);
        BaselineOptions gen_opts;
        gen_opts.model_id = cfg.model_id;
        for (const auto& q : questions)
            answers.push_back(engine.hybrid_answer(q, index, embedder, cfg.retrieval_k, gen_opts));
    } else {
        for (const auto& q : questions) answers.push_back(engine.answer(q));
    }
    emit_answers(answers, out_path);
    return 0;
}

int dispatch_baseline(const std::string& kind, const std::string& config_path,
                      const std::string& question_text, const std::string& question_file,
                      const std::string& out_path) {
    if (kind != "vector" && kind != "fullcorpus")
        throw Error(ErrorKind::Config, "baseline kind must be vector or fullcorpus, got " + kind);
    PipelineConfig cfg = load_pipeline_config(config_path);
    RunPaths paths = run_paths(cfg.run_dir);
    std::unique_ptr<ChatProvider> provider = make_provider(cfg.provider);
    std::vector<Question> questions = questions_from_flags(question_text, question_file);
    BaselineOptions opts;
    opts.model_id = cfg.model_id;

    std::vector<AnswerBundle> answers;
    if (kind == "vector") {
        HashingEmbedder embedder(cfg.embedding_dim, cfg.seed);
        VectorIndex index = index_for(cfg, paths, embedder);
        for (const auto& q : questions)
            answers.push_back(vector_rag_answer(*provider, index, embedder, q, cfg.retrieval_k, opts));
    } else {
        std::vector<Document> corpus = corpus_for(cfg, paths);
        for (const auto& q : questions)
            answers.push_back(
                full_corpus_answer(*provider, corpus, q, cfg.per_doc_cap, cfg.context_budget, opts));
    }
    emit_answers(answers, out_path);
    return 0;
}

int dispatch_forge(const std::string& spec_path, bool use_example, const std::string& out_dir,
                   uint64_t seed, bool seed_given, int n_records, int n_questions,
                   const std::string& config_path) {
    if (spec_path.empty() == !use_example)
        throw Error(ErrorKind::Config, "pass exactly one of --spec <file> or --example");
    ForgeSpec spec = use_example ? example_hotels_spec()
                                 : forge_spec_from_json(json::parse(read_text_file(spec_path)));
    if (seed_given) spec.seed = seed;
    if (n_records > 0) spec.n_records = n_records;
    validate_forge_spec(spec);

    std::vector<Record> records = forge_records(spec);
    std::vector<VerbalizedDocument> docs;
    if (spec.verbalization_mode == "llm") {
        if (config_path.empty())
            throw Error(ErrorKind::Config, "llm verbalization needs --config with a provider block");
        PipelineConfig cfg = load_pipeline_config(config_path);
        std::unique_ptr<ChatProvider> provider = make_provider(cfg.provider);
        docs.reserve(records.size());
        for (const auto& rec : records)
            docs.push_back(verbalize_record_llm(spec, rec, *provider, cfg.model_id));
    } else {
        docs = verbalize_corpus(spec, records);
    }
    std::vector<ForgedQA> qa = forge_questions(spec, records, n_questions, splitmix64(spec.seed));
    DatasetPaths paths = export_dataset(spec, records, docs, qa, out_dir);
    std::cout << "forged " << records.size() << " documents and " << qa.size() << " questions -> "
              << paths.root.string() << "\n"
              << "  gold schema: " << paths.schema().string() << "\n"
              << "  scripts: " << paths.extraction_script().string() << ", "
              << paths.translation_script().string() << "\n";
    return 0;
}

int dispatch_eval(const std::string& config_path, const std::string& answers_path,
                  const std::string& gold_path, const std::string& report_path,
                  const std::string& system_label, const std::string& ingestion) {
    PipelineConfig cfg = load_pipeline_config(config_path);
    std::unique_ptr<ChatProvider> judge =
        make_provider(cfg.judge.is_object() && !cfg.judge.empty() ? cfg.judge : cfg.provider);
    std::vector<AnswerBundle> answers = load_answer_bundles(answers_path);
    std::vector<GoldAnswer> gold = load_gold_answers(gold_path);
    EvalOptions opts;
    opts.model_id = cfg.judge_model_id.empty() ? cfg.model_id : cfg.judge_model_id;
    opts.parallelism = cfg.parallelism;
    RunReport report = evaluate_run(*judge, answers, gold, system_label, ingestion, opts);
    if (!report_path.empty()) {
        fs::path out(report_path);
        if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
        write_text_file(out, report_to_json(report).dump(2) + "\n");
    }
    std::cout << reports_to_markdown({report});
    if (report.judge_errors > 0) {
        std::cerr << "judge errors on " << report.judge_errors << " judgments\n";
        return 4;
    }
    return 0;
}

int dispatch_bench(const std::string& config_path, const std::vector<std::string>& systems) {
    PipelineConfig cfg = load_pipeline_config(config_path);
    BenchResult result = run_bench(cfg, systems);
    std::cout << reports_to_markdown(result.reports);
    for (const auto& [system, message] : result.failures)
        std::cerr << "FAILED " << system << ": " << message << "\n";
    if (result.reports.empty() && !result.failures.empty()) return 3;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"srag: relational retrieval-augmented generation over single-entity corpora"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand(
        "ingest", "Load corpus, induce or import a schema, extract records, build table + statistics");
    std::string ingest_config;
    ingest->add_option("--config", ingest_config, "pipeline config JSON")->required();

    auto* schema_cmd = app.add_subcommand("schema", "Schema induction and import");
    schema_cmd->require_subcommand(1);
    auto* schema_induce = schema_cmd->add_subcommand("induce", "Induce a schema from a corpus sample");
    std::string si_config, si_out;
    schema_induce->add_option("--config", si_config, "pipeline config JSON")->required();
    schema_induce->add_option("--out", si_out, "schema output path (default <run_dir>/schema.json)");
    auto* schema_import = schema_cmd->add_subcommand("import", "Validate and install an existing schema");
    std::string imp_schema, imp_out;
    schema_import->add_option("--schema", imp_schema, "schema JSON to import")->required();
    schema_import->add_option("--out", imp_out, "where to install it")->required();

    auto* extract = app.add_subcommand("extract", "Extract records using the run directory's schema");
    std::string ex_config;
    extract->add_option("--config", ex_config, "pipeline config JSON")->required();

    auto* stats = app.add_subcommand("stats", "Print attribute statistics for an ingested table");
    std::string stats_db;
    stats->add_option("--db", stats_db, "SQLite table built by ingest")->required();

    auto* query = app.add_subcommand("query", "Answer questions over the ingested table");
    std::string q_config, q_text, q_file, q_out;
    bool q_hybrid = false;
    query->add_option("--config", q_config, "pipeline config JSON")->required();
    query->add_option("--question", q_text, "single question text");
    query->add_option("--file", q_file, "questions JSONL (question_id, text)");
    query->add_option("--out", q_out, "answers JSONL output (default: print)");
    query->add_flag("--hybrid", q_hybrid, "narrow with SQL, then answer over retrieved chunks");

    auto* baseline = app.add_subcommand("baseline", "Run a retrieval baseline");
    std::string b_kind, b_config, b_text, b_file, b_out;
    baseline->add_option("kind", b_kind, "vector | fullcorpus")->required();
    baseline->add_option("--config", b_config, "pipeline config JSON")->required();
    baseline->add_option("--question", b_text, "single question text");
    baseline->add_option("--file", b_file, "questions JSONL");
    baseline->add_option("--out", b_out, "answers JSONL output (default: print)");

    auto* forge_cmd = app.add_subcommand("forge", "Generate a synthetic corpus with oracle gold answers");
    std::string f_spec, f_out, f_config;
    uint64_t f_seed = 0;
    int f_records = 0, f_questions = 20;
    bool f_example = false;
    forge_cmd->add_option("--spec", f_spec, "forge spec JSON");
    forge_cmd->add_flag("--example", f_example, "use the built-in Hotels spec");
    forge_cmd->add_option("--out", f_out, "dataset output directory")->required();
    auto* seed_opt = forge_cmd->add_option("--seed", f_seed, "override the spec seed");
    forge_cmd->add_option("--records", f_records, "override the spec record count");
    forge_cmd->add_option("--questions", f_questions, "number of questions to forge (default 20)");
    forge_cmd->add_option("--config", f_config, "pipeline config (needed for llm verbalization)");

    auto* eval_cmd = app.add_subcommand("eval", "Judge saved answers against gold answers");
    std::string e_config, e_answers, e_gold, e_report, e_system = "system", e_ingestion = "-";
    eval_cmd->add_option("--config", e_config, "pipeline config JSON (judge provider)")->required();
    eval_cmd->add_option("--answers", e_answers, "answers JSONL")->required();
    eval_cmd->add_option("--gold", e_gold, "gold JSONL (question_id, question, gold_answer)")->required();
    eval_cmd->add_option("--report", e_report, "report JSON output");
    eval_cmd->add_option("--system", e_system, "system label for the report row");
    eval_cmd->add_option("--ingestion", e_ingestion, "ingestion-type label for the report row");

    auto* bench = app.add_subcommand("bench", "Answer and evaluate several systems in one run");
    std::string bench_config;
    std::vector<std::string> bench_systems;
    bench->add_option("--config", bench_config, "pipeline config JSON")->required();
    bench->add_option("--systems", bench_systems, "subset of srag,hybrid,vector,fullcorpus")
        ->required()
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ingest) return dispatch_ingest(ingest_config);
        if (*schema_induce) return dispatch_schema_induce(si_config, si_out);
        if (*schema_import) return dispatch_schema_import(imp_schema, imp_out);
        if (*extract) return dispatch_extract(ex_config);
        if (*stats) return dispatch_stats(stats_db);
        if (*query) return dispatch_query(q_config, q_text, q_file, q_out, q_hybrid);
        if (*baseline) return dispatch_baseline(b_kind, b_config, b_text, b_file, b_out);
        if (*forge_cmd)
            return dispatch_forge(f_spec, f_example, f_out, f_seed, seed_opt->count() > 0, f_records,
                                  f_questions, f_config);
        if (*eval_cmd) return dispatch_eval(e_config, e_answers, e_gold, e_report, e_system, e_ingestion);
        if (*bench) return dispatch_bench(bench_config, bench_systems);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const srag::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case srag::ErrorKind::Config: return 2;
            case srag::ErrorKind::Eval: return 4;
            default: return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
