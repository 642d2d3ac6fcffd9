#pragma once

#include <string>
#include <vector>

#include "srag/corpus.hpp"
#include "srag/gateway.hpp"
#include "srag/tokenizer.hpp"

namespace srag {

inline constexpr int kChunkTokens = 500;

struct Chunk {
    std::string chunk_id;  // "<doc_id>#<ordinal>"
    std::string doc_id;
    int ordinal = 0;
    std::string text;
    int token_count = 0;
    EmbeddingVector embedding;  // filled at index build time
};

// Splits on token boundaries into non-overlapping chunks of `chunk_tokens`
// tokens (only the final chunk may be shorter). Chunk texts partition the
// document bytes exactly: chunk 0 starts at byte 0, each later chunk starts at
// its first token, every chunk runs to the next chunk's start (the last to the
// end), so concatenating them reproduces the document byte for byte.
inline std::vector<Chunk> chunk_document(const Document& doc, int chunk_tokens = kChunkTokens) {
    if (chunk_tokens < 1) throw Error(ErrorKind::Config, "chunk size must be positive");
    std::vector<Chunk> chunks;
    if (doc.text.empty()) return chunks;

    std::vector<TokenSpan> spans = tokenize_spans(doc.text);
    const size_t n = static_cast<size_t>(chunk_tokens);
    size_t chunk_count = spans.empty() ? 1 : (spans.size() + n - 1) / n;

    for (size_t k = 0; k < chunk_count; ++k) {
        size_t begin_byte = k == 0 ? 0 : spans[k * n].begin;
        size_t end_byte = (k + 1) * n < spans.size() ? spans[(k + 1) * n].begin : doc.text.size();
        Chunk c;
        c.doc_id = doc.doc_id;
        c.ordinal = static_cast<int>(k);
        c.chunk_id = doc.doc_id + "#" + std::to_string(k);
        c.text = doc.text.substr(begin_byte, end_byte - begin_byte);
        c.token_count = static_cast<int>(std::min(spans.size(), (k + 1) * n) - k * n);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

}  // namespace srag
