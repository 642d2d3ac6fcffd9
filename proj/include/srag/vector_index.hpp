#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "srag/chunking.hpp"

namespace srag {

inline constexpr int kRetrievalK = 40;
inline constexpr const char* kIndexFormatVersion = "srag-index v1";

struct ScoredChunk {
    std::string chunk_id;
    double score = 0.0;
    size_t index = 0;  // position in the index's chunk list
};

struct RetrievalResult {
    std::string query;
    std::vector<ScoredChunk> scored;  // descending score, ties by (doc_id, ordinal)
    int k = 0;
};

// Exact-search vector index over document chunks. No approximate structures:
// corpora here are hundreds of documents, so a full cosine scan is cheap,
// deterministic and serves as its own ground truth.
class VectorIndex {
public:
    VectorIndex() = default;

    static VectorIndex build(const std::vector<Document>& corpus, Embedder& embedder,
                             int chunk_tokens = kChunkTokens) {
        if (corpus.empty()) throw Error(ErrorKind::Config, "cannot index an empty corpus");
        VectorIndex index;
        index.chunk_tokens_ = chunk_tokens;
        index.dimension_ = embedder.dimension();
        for (const auto& doc : corpus) {
            for (Chunk& c : chunk_document(doc, chunk_tokens)) {
                c.embedding = embedder.embed(c.text);
                index.chunks_.push_back(std::move(c));
            }
        }
        if (index.chunks_.empty()) throw Error(ErrorKind::Config, "corpus produced no chunks");
        std::sort(index.chunks_.begin(), index.chunks_.end(), [](const Chunk& a, const Chunk& b) {
            return std::tie(a.doc_id, a.ordinal) < std::tie(b.doc_id, b.ordinal);
        });
        return index;
    }

    const std::vector<Chunk>& chunks() const { return chunks_; }
    const Chunk& chunk(size_t i) const { return chunks_.at(i); }
    size_t size() const { return chunks_.size(); }
    int chunk_tokens() const { return chunk_tokens_; }

    // Exact cosine top-k. `doc_filter` restricts candidates to the given
    // documents (hybrid narrowing); ties resolve by (doc_id, ordinal).
    RetrievalResult retrieve(Embedder& embedder, const std::string& query, int k = kRetrievalK,
                             const std::optional<std::set<std::string>>& doc_filter = std::nullopt) const {
        if (chunks_.empty()) throw Error(ErrorKind::Config, "index is empty");
        if (k < 1) throw Error(ErrorKind::Config, "k must be positive");
        EmbeddingVector q = embedder.embed(query);

        std::vector<size_t> candidates;
        candidates.reserve(chunks_.size());
        for (size_t i = 0; i < chunks_.size(); ++i) {
            if (doc_filter && !doc_filter->count(chunks_[i].doc_id)) continue;
            candidates.push_back(i);
        }
        std::vector<double> scores(chunks_.size(), 0.0);
        for (size_t i : candidates) scores[i] = cosine_similarity(q, chunks_[i].embedding);

        // Chunks are stored sorted by (doc_id, ordinal), so index order is the tie rule.
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](size_t a, size_t b) { return scores[a] > scores[b]; });
        if (candidates.size() > static_cast<size_t>(k)) candidates.resize(static_cast<size_t>(k));

        RetrievalResult result;
        result.query = query;
        result.k = k;
        for (size_t i : candidates) result.scored.push_back({chunks_[i].chunk_id, scores[i], i});
        return result;
    }

    void save(const fs::path& path) const {
        std::ostringstream out;
        out << json{{"format", kIndexFormatVersion},
                    {"dimension", dimension_},
                    {"chunk_tokens", chunk_tokens_},
                    {"chunks", chunks_.size()}}
                   .dump()
            << "\n";
        for (const auto& c : chunks_) {
            json j = {{"chunk_id", c.chunk_id}, {"doc_id", c.doc_id},   {"ordinal", c.ordinal},
                      {"text", c.text},         {"token_count", c.token_count}};
            j["embedding"] = c.embedding.values;
            out << j.dump() << "\n";
        }
        write_text_file(path, out.str());
    }

    static VectorIndex load(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorKind::Io, "cannot read index " + path.string());
        std::string line;
        if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "index file is empty");
        json header = json::parse(line);
        if (header.value("format", "") != kIndexFormatVersion)
            throw Error(ErrorKind::Parse, "unsupported index format in " + path.string());
        VectorIndex index;
        index.dimension_ = header.at("dimension").get<size_t>();
        index.chunk_tokens_ = header.at("chunk_tokens").get<int>();
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            json j = json::parse(line);
            Chunk c;
            c.chunk_id = j.at("chunk_id").get<std::string>();
            c.doc_id = j.at("doc_id").get<std::string>();
            c.ordinal = j.at("ordinal").get<int>();
            c.text = j.at("text").get<std::string>();
            c.token_count = j.at("token_count").get<int>();
            c.embedding.values = j.at("embedding").get<std::vector<double>>();
            if (c.embedding.dimension() != index.dimension_)
                throw Error(ErrorKind::Parse, "chunk " + c.chunk_id + " has wrong embedding dimension");
            index.chunks_.push_back(std::move(c));
        }
        if (index.chunks_.size() != header.at("chunks").get<size_t>())
            throw Error(ErrorKind::Parse, "index chunk count mismatch in " + path.string());
        return index;
    }

private:
    std::vector<Chunk> chunks_;
    size_t dimension_ = 0;
    int chunk_tokens_ = kChunkTokens;
};

}  // namespace srag
