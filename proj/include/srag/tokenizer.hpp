#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace srag {

// Deterministic whitespace+punctuation tokenizer behind every token budget in
// the pipeline (chunk sizes, document truncation, context windows). A token is
// either a maximal run of alphanumeric bytes or a single non-alphanumeric,
// non-whitespace byte. Bytes >= 0x80 count as alphanumeric so multi-byte UTF-8
// sequences are never split.
struct TokenSpan {
    size_t begin = 0;
    size_t end = 0;  // one past the last byte
};

inline bool is_token_byte(unsigned char c) {
    return c >= 0x80 || std::isalnum(c) != 0;
}

inline bool is_space_byte(unsigned char c) {
    return c < 0x80 && std::isspace(c) != 0;
}

inline std::vector<TokenSpan> tokenize_spans(std::string_view text) {
    std::vector<TokenSpan> spans;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
            continue;
        }
        if (is_token_byte(c)) {
            size_t begin = i;
            while (i < n && is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
            spans.push_back({begin, i});
        } else {
            spans.push_back({i, i + 1});
            ++i;
        }
    }
    return spans;
}

inline size_t count_tokens(std::string_view text) {
    size_t count = 0;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
        } else if (is_token_byte(c)) {
            while (i < n && is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
            ++count;
        } else {
            ++i;
            ++count;
        }
    }
    return count;
}

// Prefix of `text` containing at most `n` tokens (cut at the end of the nth
// token). The whole text when it has <= n tokens.
inline std::string_view token_prefix(std::string_view text, size_t n) {
    if (n == 0) return text.substr(0, 0);
    size_t count = 0;
    size_t i = 0;
    const size_t len = text.size();
    size_t last_end = 0;
    while (i < len && count < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
        } else if (is_token_byte(c)) {
            while (i < len && is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
            ++count;
            last_end = i;
        } else {
            ++i;
            ++count;
            last_end = i;
        }
    }
    if (count < n) return text;  // fewer tokens than requested
    return text.substr(0, last_end);
}

}  // namespace srag
