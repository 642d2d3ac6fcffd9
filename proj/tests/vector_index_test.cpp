#include <catch2/catch_amalgamated.hpp>

#include "srag/vector_index.hpp"
#include "test_support.hpp"

using namespace srag;
using test_support::fresh_dir;

namespace {

std::string random_words(Rng& rng, int n_words) {
    static const std::vector<std::string> pool = {
        "hotel",  "plaza",   "pool",   "rating", "breakfast", "city",  "garden", "suite",
        "nights", "station", "quiet",  "river",  "downtown",  "spa",   "old",    "grand",
        "rooms",  "stars",   "central","annex"};
    std::string out;
    for (int i = 0; i < n_words; ++i) {
        if (i) out += ' ';
        out += pool[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
    }
    return out;
}

std::vector<Document> random_corpus(Rng& rng, int n_docs, int words_per_doc) {
    std::vector<Document> docs;
    for (int i = 0; i < n_docs; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "doc-%03d", i);
        docs.push_back({id, std::string(id) + ".html", random_words(rng, words_per_doc), 0});
    }
    return docs;
}

// Independent oracle: score every candidate, stable-sort by descending score
// (index order breaks ties), truncate to k.
std::vector<ScoredChunk> brute_force_topk(const VectorIndex& index, Embedder& embedder,
                                          const std::string& query, int k,
                                          const std::optional<std::set<std::string>>& filter = {}) {
    EmbeddingVector q = embedder.embed(query);
    std::vector<size_t> order;
    std::vector<double> scores(index.size(), 0.0);
    for (size_t i = 0; i < index.size(); ++i) {
        if (filter && !filter->count(index.chunk(i).doc_id)) continue;
        scores[i] = cosine_similarity(q, index.chunk(i).embedding);
        order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    if (order.size() > static_cast<size_t>(k)) order.resize(static_cast<size_t>(k));
    std::vector<ScoredChunk> out;
    for (size_t i : order) out.push_back({index.chunk(i).chunk_id, scores[i], i});
    return out;
}

void check_same(const std::vector<ScoredChunk>& got, const std::vector<ScoredChunk>& want) {
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
        INFO("rank " << i);
        CHECK(got[i].chunk_id == want[i].chunk_id);
        CHECK(got[i].score == want[i].score);  // identical arithmetic: bitwise equal
        CHECK(got[i].index == want[i].index);
    }
}

}  // namespace

TEST_CASE("retrieval equals brute-force cosine top-k", "[vector_index]") {
    Rng rng(0x1d3);
    HashingEmbedder embedder(64, 0x5eed);
    // ~100 tokens per doc, chunked at 10 tokens -> ~10 chunks per doc.
    auto corpus = random_corpus(rng, 60, 100);
    VectorIndex index = VectorIndex::build(corpus, embedder, 10);
    REQUIRE(index.size() >= 500);

    for (int probe = 0; probe < 40; ++probe) {
        std::string query = random_words(rng, rng.uniform_int(2, 8));
        int k = rng.uniform_int(1, 50);
        INFO("probe " << probe << " query '" << query << "' k " << k);
        RetrievalResult got = index.retrieve(embedder, query, k);
        CHECK(got.k == k);
        CHECK(got.query == query);
        check_same(got.scored, brute_force_topk(index, embedder, query, k));
    }
}

TEST_CASE("score ties resolve by document id then ordinal", "[vector_index]") {
    HashingEmbedder embedder(64, 1);
    // Three identical documents: every chunk embeds identically, so all scores
    // tie and the published order must be (doc_id, ordinal).
    std::vector<Document> corpus = {{"b", "b.html", "same words here", 0},
                                    {"a", "a.html", "same words here", 0},
                                    {"c", "c.html", "same words here", 0}};
    VectorIndex index = VectorIndex::build(corpus, embedder);
    RetrievalResult r = index.retrieve(embedder, "same words here", 3);
    REQUIRE(r.scored.size() == 3);
    CHECK(r.scored[0].chunk_id == "a#0");
    CHECK(r.scored[1].chunk_id == "b#0");
    CHECK(r.scored[2].chunk_id == "c#0");
    CHECK(r.scored[0].score == r.scored[1].score);
}

TEST_CASE("index chunks are stored in (doc_id, ordinal) order", "[vector_index]") {
    Rng rng(9);
    HashingEmbedder embedder(32, 2);
    auto corpus = random_corpus(rng, 10, 40);
    std::reverse(corpus.begin(), corpus.end());  // build order must not matter
    VectorIndex index = VectorIndex::build(corpus, embedder, 8);
    for (size_t i = 1; i < index.size(); ++i) {
        const Chunk& prev = index.chunk(i - 1);
        const Chunk& cur = index.chunk(i);
        CHECK(std::tie(prev.doc_id, prev.ordinal) < std::tie(cur.doc_id, cur.ordinal));
    }
}

TEST_CASE("doc_filter narrows the candidate set", "[vector_index]") {
    Rng rng(11);
    HashingEmbedder embedder(64, 3);
    auto corpus = random_corpus(rng, 12, 60);
    VectorIndex index = VectorIndex::build(corpus, embedder, 10);

    std::set<std::string> keep = {"doc-003", "doc-007"};
    RetrievalResult r = index.retrieve(embedder, "hotel pool", 1000, keep);
    REQUIRE_FALSE(r.scored.empty());
    size_t candidate_count = 0;
    for (size_t i = 0; i < index.size(); ++i)
        if (keep.count(index.chunk(i).doc_id)) ++candidate_count;
    CHECK(r.scored.size() == candidate_count);  // k exceeds candidates: all returned
    for (const auto& s : r.scored) {
        const Chunk& c = index.chunk(s.index);
        CHECK(keep.count(c.doc_id) == 1);
    }
    check_same(r.scored, brute_force_topk(index, embedder, "hotel pool", 1000, keep));

    // A filter matching nothing yields an empty result, not an error.
    CHECK(index.retrieve(embedder, "hotel", 5, std::set<std::string>{"ghost"}).scored.empty());
}

TEST_CASE("retrieval is unchanged after a save/load round trip", "[vector_index]") {
    Rng rng(21);
    HashingEmbedder embedder(64, 4);
    auto corpus = random_corpus(rng, 15, 80);
    VectorIndex index = VectorIndex::build(corpus, embedder, 10);

    auto dir = fresh_dir("vector_index");
    fs::path path = dir / "index.jsonl";
    index.save(path);
    VectorIndex loaded = VectorIndex::load(path);
    REQUIRE(loaded.size() == index.size());
    CHECK(loaded.chunk_tokens() == index.chunk_tokens());

    for (int probe = 0; probe < 10; ++probe) {
        std::string query = random_words(rng, 4);
        RetrievalResult before = index.retrieve(embedder, query, 25);
        RetrievalResult after = loaded.retrieve(embedder, query, 25);
        check_same(after.scored, before.scored);
    }
}

TEST_CASE("index load rejects unrelated or corrupt files", "[vector_index]") {
    auto dir = fresh_dir("vector_index_bad");
    CHECK_THROWS_AS(VectorIndex::load(dir / "missing.jsonl"), Error);

    fs::path empty = dir / "empty.jsonl";
    write_text_file(empty, "");
    CHECK_THROWS_AS(VectorIndex::load(empty), Error);

    fs::path wrong = dir / "wrong.jsonl";
    write_text_file(wrong, json{{"format", "other v9"}}.dump() + "\n");
    CHECK_THROWS_AS(VectorIndex::load(wrong), Error);

    // Header promises more chunks than the file carries.
    fs::path short_file = dir / "short.jsonl";
    write_text_file(short_file, json{{"format", kIndexFormatVersion},
                                     {"dimension", 2},
                                     {"chunk_tokens", 500},
                                     {"chunks", 2}}
                                        .dump() +
                                    "\n" +
                                    json{{"chunk_id", "a#0"},
                                         {"doc_id", "a"},
                                         {"ordinal", 0},
                                         {"text", "t"},
                                         {"token_count", 1},
                                         {"embedding", {1.0, 0.0}}}
                                        .dump() +
                                    "\n");
    CHECK_THROWS_AS(VectorIndex::load(short_file), Error);

    // Embedding dimension disagrees with the header.
    fs::path bad_dim = dir / "bad_dim.jsonl";
    write_text_file(bad_dim, json{{"format", kIndexFormatVersion},
                                  {"dimension", 3},
                                  {"chunk_tokens", 500},
                                  {"chunks", 1}}
                                     .dump() +
                                 "\n" +
                                 json{{"chunk_id", "a#0"},
                                      {"doc_id", "a"},
                                      {"ordinal", 0},
                                      {"text", "t"},
                                      {"token_count", 1},
                                      {"embedding", {1.0, 0.0}}}
                                     .dump() +
                                 "\n");
    CHECK_THROWS_AS(VectorIndex::load(bad_dim), Error);
}

TEST_CASE("degenerate index inputs are rejected", "[vector_index]") {
    HashingEmbedder embedder(16, 5);
    CHECK_THROWS_AS(VectorIndex::build({}, embedder), Error);
    std::vector<Document> empties = {{"a", "a.html", "", 0}};
    CHECK_THROWS_AS(VectorIndex::build(empties, embedder), Error);

    std::vector<Document> one = {{"a", "a.html", "hello world", 0}};
    VectorIndex index = VectorIndex::build(one, embedder);
    CHECK_THROWS_AS(index.retrieve(embedder, "hello", 0), Error);
    CHECK_THROWS_AS(VectorIndex().retrieve(embedder, "hello", 5), Error);
}
