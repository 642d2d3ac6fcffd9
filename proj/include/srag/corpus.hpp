#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "srag/error.hpp"
#include "srag/tokenizer.hpp"
#include "srag/util.hpp"
#include "srag/value.hpp"

namespace srag {

namespace fs = std::filesystem;

struct Document {
    std::string doc_id;
    std::string source_path;
    std::string text;
    size_t token_count = 0;
};

// Sample used to drive schema induction. Kept around so the sampled items can
// be excluded from later evaluation runs.
struct CorpusSample {
    std::vector<Document> documents;
    std::vector<std::string> questions;

    std::vector<std::string> doc_ids() const {
        std::vector<std::string> ids;
        ids.reserve(documents.size());
        for (const auto& d : documents) ids.push_back(d.doc_id);
        return ids;
    }
};

struct FileError {
    std::string path;
    std::string message;
};

struct LoadResult {
    std::vector<Document> documents;
    std::vector<FileError> errors;
};

inline std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    // the only normalization applied: strip a UTF-8 BOM
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);
    return text;
}

inline void write_text_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

// Loads every file under `root` whose extension is in `extensions` (no dot,
// e.g. {"html","txt"}; empty set = all files). Documents are keyed by filename
// stem; stem collisions get a content-hash suffix so ids stay stable across
// machines. Per-file read errors are collected, an empty result is fatal.
inline LoadResult load_corpus(const fs::path& root, const std::set<std::string>& extensions = {"html", "txt", "md"}) {
    if (!fs::exists(root) || !fs::is_directory(root))
        throw Error(ErrorKind::Io, "corpus root not readable: " + root.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = to_lower(entry.path().extension().string());
        if (!ext.empty() && ext[0] == '.') ext.erase(0, 1);
        if (!extensions.empty() && extensions.count(ext) == 0) continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [&](const fs::path& a, const fs::path& b) {
                  return a.lexically_relative(root).generic_string() < b.lexically_relative(root).generic_string();
              });

    LoadResult result;
    std::map<std::string, int> stem_uses;
    for (const auto& path : files) stem_uses[path.stem().string()]++;

    for (const auto& path : files) {
        std::string text;
        try {
            text = read_text_file(path);
        } catch (const Error& e) {
            result.errors.push_back({path.string(), e.what()});
            continue;
        }
        std::string stem = path.stem().string();
        std::string doc_id = stem;
        if (stem_uses[stem] > 1)
            doc_id += "-" + to_hex(fnv1a64(text)).substr(0, 8);
        result.documents.push_back(Document{
            doc_id,
            path.lexically_relative(root).generic_string(),
            std::move(text),
            0,
        });
        result.documents.back().token_count = count_tokens(result.documents.back().text);
    }

    std::sort(result.documents.begin(), result.documents.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    for (size_t i = 1; i < result.documents.size(); ++i) {
        if (result.documents[i].doc_id == result.documents[i - 1].doc_id)
            throw Error(ErrorKind::Io, "duplicate doc_id after disambiguation: " + result.documents[i].doc_id);
    }

    if (result.documents.empty()) throw Error(ErrorKind::Io, "empty corpus: " + root.string());
    return result;
}

// Uniform sample without replacement, reproducible for a given seed. Sampled
// questions beyond the available pool are silently clamped; asking for more
// documents than the corpus holds is an error.
inline CorpusSample draw_sample(const std::vector<Document>& corpus,
                                const std::vector<std::string>& questions,
                                size_t n_docs, size_t n_questions, uint64_t rng_seed) {
    if (n_docs > corpus.size())
        throw Error(ErrorKind::Config, "sample size " + std::to_string(n_docs) +
                                           " exceeds corpus size " + std::to_string(corpus.size()));
    Rng rng(rng_seed);
    CorpusSample sample;
    Rng doc_rng = rng.fork(1);
    for (size_t i : doc_rng.sample_indices(corpus.size(), n_docs)) sample.documents.push_back(corpus[i]);
    std::sort(sample.documents.begin(), sample.documents.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });

    Rng q_rng = rng.fork(2);
    size_t nq = std::min(n_questions, questions.size());
    for (size_t i : q_rng.sample_indices(questions.size(), nq)) sample.questions.push_back(questions[i]);
    std::sort(sample.questions.begin(), sample.questions.end());
    return sample;
}

// --- corpus manifest (JSON lines: doc_id, source_path, token_count) ---

inline void save_manifest(const fs::path& manifest_path, const std::vector<Document>& docs) {
    std::ostringstream out;
    for (const auto& d : docs) {
        json line = {{"doc_id", d.doc_id}, {"source_path", d.source_path}, {"token_count", d.token_count}};
        out << line.dump() << "\n";
    }
    write_text_file(manifest_path, out.str());
}

// Reloads documents listed in a manifest; source paths resolve against
// `docs_root` (usually the corpus directory the manifest was built from).
inline std::vector<Document> load_manifest(const fs::path& manifest_path, const fs::path& docs_root) {
    std::ifstream in(manifest_path);
    if (!in) throw Error(ErrorKind::Io, "cannot read manifest " + manifest_path.string());
    std::vector<Document> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorKind::Parse, "bad manifest line: " + line);
        Document d;
        d.doc_id = j.at("doc_id").get<std::string>();
        d.source_path = j.at("source_path").get<std::string>();
        d.text = read_text_file(docs_root / d.source_path);
        d.token_count = count_tokens(d.text);
        size_t recorded = j.at("token_count").get<size_t>();
        if (recorded != d.token_count)
            throw Error(ErrorKind::Parse, "token_count drift for " + d.doc_id + " (manifest " +
                                              std::to_string(recorded) + ", recomputed " +
                                              std::to_string(d.token_count) + ")");
        docs.push_back(std::move(d));
    }
    return docs;
}

}  // namespace srag
