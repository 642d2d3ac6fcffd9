#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace srag {

// 64-bit FNV-1a. Used for request fingerprints, doc-id disambiguation and the
// hashing embedder; the constants must never change or persisted fingerprints
// become unreadable.
inline uint64_t fnv1a64(std::string_view data, uint64_t seed = 14695981039346656037ull) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::string to_hex(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// Deterministic RNG on a splitmix64 stream. Distribution helpers are
// hand-rolled so sequences are identical across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ = splitmix64(state_ + 0x632be59bd9b4e019ull);
        return state_;
    }

    // Inclusive range [lo, hi].
    int64_t uniform_int(int64_t lo, int64_t hi) {
        if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
        return lo + static_cast<int64_t>(next_u64() % span);
    }

    // Half-open [lo, hi) with 53 bits of resolution.
    double uniform_real(double lo, double hi) {
        double unit = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return lo + unit * (hi - lo);
    }

    bool bernoulli(double p_true) { return uniform_real(0.0, 1.0) < p_true; }

    template <class T>
    const T& choice(const std::vector<T>& items) {
        if (items.empty()) throw std::invalid_argument("choice: empty vector");
        return items[static_cast<size_t>(uniform_int(0, static_cast<int64_t>(items.size()) - 1))];
    }

    // Derived substream, independent of draws made on this one.
    Rng fork(uint64_t stream) const { return Rng(splitmix64(state_ ^ splitmix64(stream + 1))); }

    // First n indices of a seeded shuffle of [0, count): sampling without
    // replacement via partial Fisher-Yates.
    std::vector<size_t> sample_indices(size_t count, size_t n) {
        if (n > count) throw std::invalid_argument("sample_indices: n > count");
        std::vector<size_t> idx(count);
        for (size_t i = 0; i < count; ++i) idx[i] = i;
        for (size_t i = 0; i < n; ++i) {
            size_t j = i + static_cast<size_t>(uniform_int(0, static_cast<int64_t>(count - i) - 1));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(n);
        return idx;
    }

private:
    uint64_t state_;
};

inline std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// Lowercase snake_case identifier: ASCII alnum kept, every other run becomes
// a single underscore, leading digit prefixed. Idempotent.
inline std::string snake_case(std::string_view name) {
    std::string out;
    bool pending_sep = false;
    for (size_t i = 0; i < name.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(name[i]);
        if (std::isalnum(c)) {
            // lowerCamel boundary becomes an underscore
            if (!out.empty() && std::isupper(c) && std::islower(static_cast<unsigned char>(name[i - 1])))
                pending_sep = true;
            if (pending_sep && !out.empty()) out += '_';
            pending_sep = false;
            out += static_cast<char>(std::tolower(c));
        } else {
            pending_sep = true;
        }
    }
    if (!out.empty() && std::isdigit(static_cast<unsigned char>(out[0]))) out = "a_" + out;
    return out;
}

}  // namespace srag
