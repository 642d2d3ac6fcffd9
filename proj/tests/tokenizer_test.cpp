#include <catch2/catch_amalgamated.hpp>

#include "srag/tokenizer.hpp"
#include "srag/util.hpp"

using namespace srag;

TEST_CASE("count_tokens on plain words", "[tokenizer]") {
    CHECK(count_tokens("a b c") == 3);
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("   \n\t ") == 0);
    CHECK(count_tokens("single") == 1);
}

TEST_CASE("punctuation counts one token per byte", "[tokenizer]") {
    CHECK(count_tokens("Hello, world!") == 4);  // Hello , world !
    CHECK(count_tokens("a.b") == 3);
    CHECK(count_tokens("...") == 3);
    CHECK(count_tokens("<p>hi</p>") == 8);  // < p > hi < / p >
}

TEST_CASE("multi-byte UTF-8 never splits", "[tokenizer]") {
    // é is two bytes >= 0x80 and glues into the surrounding run.
    CHECK(count_tokens("café au lait") == 3);
    CHECK(count_tokens("日本語") == 1);  // one run of high bytes
}

TEST_CASE("tokenize_spans partitions consistently with count_tokens", "[tokenizer]") {
    Rng rng(404);
    const std::string alphabet = "ab XY.,!?\n\t-09é";
    for (int round = 0; round < 50; ++round) {
        std::string text;
        int len = static_cast<int>(rng.uniform_int(0, 200));
        for (int i = 0; i < len; ++i)
            text += alphabet[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(alphabet.size()) - 1))];
        auto spans = tokenize_spans(text);
        CHECK(spans.size() == count_tokens(text));
        size_t prev_end = 0;
        for (const auto& s : spans) {
            REQUIRE(s.begin >= prev_end);   // ascending, non-overlapping
            REQUIRE(s.end > s.begin);       // non-empty
            REQUIRE(s.end <= text.size());  // in bounds
            prev_end = s.end;
        }
    }
}

TEST_CASE("token_prefix cuts at token boundaries", "[tokenizer]") {
    CHECK(token_prefix("a b c", 0) == "");
    CHECK(token_prefix("a b c", 2) == "a b");
    CHECK(token_prefix("a b c", 3) == "a b c");
    CHECK(token_prefix("a b c", 99) == "a b c");  // fewer tokens than requested

    // The prefix always contains exactly min(n, total) tokens.
    const std::string text = "The quick, brown fox; jumps!";
    size_t total = count_tokens(text);
    for (size_t n = 0; n <= total + 2; ++n) {
        auto prefix = token_prefix(text, n);
        CHECK(count_tokens(prefix) == std::min(n, total));
    }
}
