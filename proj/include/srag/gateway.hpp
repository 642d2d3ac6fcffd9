#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "srag/corpus.hpp"
#include "srag/error.hpp"
#include "srag/tokenizer.hpp"
#include "srag/util.hpp"
#include "srag/value.hpp"

namespace srag {

// ---------------------------------------------------------------------------
// Chat completion surface
// ---------------------------------------------------------------------------

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;
    std::string model_id;
    double temperature = 0.0;  // extraction/translation/judging run at 0
    int max_output_tokens = 4096;
};

// Stable fingerprint of what the provider sees. Script matchers and the call
// log key on this.
inline std::string request_fingerprint(const ChatRequest& req) {
    uint64_t h = fnv1a64(req.system_prompt);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(req.user_prompt, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(req.model_id, h);
    return to_hex(h);
}

struct CallRecord {
    std::string request_hash;
    double latency_ms = 0.0;
    size_t prompt_tokens = 0;
    size_t response_tokens = 0;
    std::string response;
};

// Append-only log of provider calls. Replaying a saved log through a
// ScriptedProvider reproduces a run byte-identically.
class CallLog {
public:
    void record(CallRecord rec) {
        std::lock_guard<std::mutex> lock(mutex_);
        records_.push_back(std::move(rec));
    }

    std::vector<CallRecord> snapshot() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return records_;
    }

    size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return records_.size();
    }

    void save(const fs::path& path) const {
        std::ostringstream out;
        for (const auto& r : snapshot()) {
            json j = {{"request_hash", r.request_hash},
                      {"latency_ms", r.latency_ms},
                      {"prompt_tokens", r.prompt_tokens},
                      {"response_tokens", r.response_tokens},
                      {"response", r.response}};
            out << j.dump() << "\n";
        }
        write_text_file(path, out.str());
    }

    static std::vector<CallRecord> load(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorKind::Io, "cannot read call log " + path.string());
        std::vector<CallRecord> records;
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            json j = json::parse(line);
            CallRecord r;
            r.request_hash = j.at("request_hash").get<std::string>();
            r.latency_ms = j.at("latency_ms").get<double>();
            r.prompt_tokens = j.at("prompt_tokens").get<size_t>();
            r.response_tokens = j.at("response_tokens").get<size_t>();
            r.response = j.at("response").get<std::string>();
            records.push_back(std::move(r));
        }
        return records;
    }

private:
    mutable std::mutex mutex_;
    std::vector<CallRecord> records_;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;

    void attach_log(CallLog* log) { log_ = log; }

protected:
    void log_call(const ChatRequest& req, const std::string& response, double latency_ms) {
        if (!log_) return;
        log_->record(CallRecord{request_fingerprint(req), latency_ms,
                                count_tokens(req.system_prompt) + count_tokens(req.user_prompt),
                                count_tokens(response), response});
    }

private:
    CallLog* log_ = nullptr;
};

// ---------------------------------------------------------------------------
// Scripted provider: deterministic canned exchanges for offline runs
// ---------------------------------------------------------------------------

struct ScriptedExchange {
    enum class Match { Hash, Substring };
    Match match = Match::Substring;
    std::string value;     // fingerprint hex or substring of "system\n\nuser"
    std::string response;
};

class ScriptedProvider : public ChatProvider {
public:
    ScriptedProvider() = default;
    explicit ScriptedProvider(std::vector<ScriptedExchange> exchanges)
        : exchanges_(std::move(exchanges)) {}

    std::string complete(const ChatRequest& request) override {
        const std::string fingerprint = request_fingerprint(request);
        const std::string haystack = request.system_prompt + "\n\n" + request.user_prompt;
        const ScriptedExchange* hit = nullptr;
        for (const auto& ex : exchanges_) {
            bool matched = ex.match == ScriptedExchange::Match::Hash
                               ? ex.value == fingerprint
                               : haystack.find(ex.value) != std::string::npos;
            if (!matched) continue;
            if (hit)
                throw Error(ErrorKind::ScriptMiss,
                            "ambiguous script: multiple exchanges match request " + fingerprint);
            hit = &ex;
        }
        if (!hit)
            throw Error(ErrorKind::ScriptMiss,
                        "no scripted exchange for request " + fingerprint + " (prompt head: \"" +
                            haystack.substr(0, std::min<size_t>(haystack.size(), 120)) + "\")");
        log_call(request, hit->response, 0.0);
        return hit->response;
    }

    std::string name() const override { return "scripted"; }

    size_t exchange_count() const { return exchanges_.size(); }

private:
    std::vector<ScriptedExchange> exchanges_;
};

inline json script_to_json(const std::vector<ScriptedExchange>& exchanges) {
    json arr = json::array();
    for (const auto& ex : exchanges) {
        arr.push_back({{"match",
                        {{"kind", ex.match == ScriptedExchange::Match::Hash ? "hash" : "substring"},
                         {"value", ex.value}}},
                       {"response", ex.response}});
    }
    return arr;
}

inline std::vector<ScriptedExchange> script_from_json(const json& arr) {
    if (!arr.is_array()) throw Error(ErrorKind::Parse, "script file must be a JSON array");
    std::vector<ScriptedExchange> exchanges;
    for (const auto& item : arr) {
        ScriptedExchange ex;
        std::string kind = item.at("match").at("kind").get<std::string>();
        if (kind == "hash")
            ex.match = ScriptedExchange::Match::Hash;
        else if (kind == "substring")
            ex.match = ScriptedExchange::Match::Substring;
        else
            throw Error(ErrorKind::Parse, "unknown script matcher kind: " + kind);
        ex.value = item.at("match").at("value").get<std::string>();
        ex.response = item.at("response").get<std::string>();
        exchanges.push_back(std::move(ex));
    }
    return exchanges;
}

inline void save_script(const fs::path& path, const std::vector<ScriptedExchange>& exchanges) {
    write_text_file(path, script_to_json(exchanges).dump(2) + "\n");
}

inline std::vector<ScriptedExchange> load_script(const fs::path& path) {
    return script_from_json(json::parse(read_text_file(path)));
}

// Script built from a saved call log: every logged request replays to its
// logged response, keyed by request hash.
inline std::vector<ScriptedExchange> script_from_call_log(const std::vector<CallRecord>& records) {
    std::vector<ScriptedExchange> exchanges;
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (!seen.insert(r.request_hash).second) continue;
        exchanges.push_back({ScriptedExchange::Match::Hash, r.request_hash, r.response});
    }
    return exchanges;
}

// First fenced code block if present (tolerating a language tag), otherwise
// the trimmed text. LLMs routinely wrap JSON and SQL answers in fences.
inline std::string strip_code_fence(std::string_view text) {
    size_t open = text.find("```");
    if (open == std::string_view::npos) return trim(text);
    size_t content_start = open + 3;
    size_t eol = text.find('\n', content_start);
    if (eol == std::string_view::npos) return trim(text);
    std::string_view tag = text.substr(content_start, eol - content_start);
    bool is_tag = true;
    for (char c : tag)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != ' ' && c != '\r') is_tag = false;
    size_t body_start = is_tag ? eol + 1 : content_start;
    size_t close = text.find("```", body_start);
    if (close == std::string_view::npos) return trim(text.substr(body_start));
    return trim(text.substr(body_start, close - body_start));
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

struct EmbeddingVector {
    std::vector<double> values;
    size_t dimension() const { return values.size(); }
};

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension())
        throw Error(ErrorKind::Config, "embedding dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(std::string_view text) = 0;
    virtual size_t dimension() const = 0;
};

// Seeded feature-hashing embedder: each lowercased token hashes to a signed
// coordinate, counts accumulate, the result is L2-normalized. Deterministic
// and offline; it stands in for a neural embedder so retrieval logic stays
// testable.
class HashingEmbedder : public Embedder {
public:
    explicit HashingEmbedder(size_t dim = 256, uint64_t seed = 0x5eed)
        : dim_(dim), seed_(seed) {
        if (dim_ == 0) throw Error(ErrorKind::Config, "embedder dimension must be positive");
    }

    EmbeddingVector embed(std::string_view text) override {
        if (trim(text).empty()) throw Error(ErrorKind::Config, "cannot embed empty text");
        EmbeddingVector vec;
        vec.values.assign(dim_, 0.0);
        for (const auto& span : tokenize_spans(text)) {
            std::string token = to_lower(text.substr(span.begin, span.end - span.begin));
            uint64_t h = fnv1a64(token, splitmix64(seed_));
            size_t idx = static_cast<size_t>(h % dim_);
            double sign = (h >> 63) ? -1.0 : 1.0;
            vec.values[idx] += sign;
        }
        double norm = 0.0;
        for (double v : vec.values) norm += v * v;
        if (norm == 0.0) {
            // all-cancelling token multiset: fall back to a unit basis vector
            vec.values[static_cast<size_t>(fnv1a64(text) % dim_)] = 1.0;
            norm = 1.0;
        }
        norm = std::sqrt(norm);
        for (double& v : vec.values) v /= norm;
        return vec;
    }

    size_t dimension() const override { return dim_; }

private:
    size_t dim_;
    uint64_t seed_;
};

}  // namespace srag
