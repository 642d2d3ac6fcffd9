#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"
#include "srag/error.hpp"

namespace srag {

using json = nlohmann::ordered_json;

// Attribute value types. Flat scalars only; list/object shapes are rejected at
// schema validation time.
enum class ValueType { String, Integer, Number, Boolean };

inline const char* value_type_name(ValueType t) {
    switch (t) {
        case ValueType::String: return "string";
        case ValueType::Integer: return "integer";
        case ValueType::Number: return "number";
        case ValueType::Boolean: return "boolean";
    }
    return "string";
}

inline std::optional<ValueType> value_type_from_name(std::string_view name) {
    if (name == "string") return ValueType::String;
    if (name == "integer") return ValueType::Integer;
    if (name == "number") return ValueType::Number;
    if (name == "boolean") return ValueType::Boolean;
    return std::nullopt;
}

// Shortest round-trip decimal form ("3" for 3.0, "123.63636363636364", ...).
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// One table cell / record field. Monostate is SQL NULL.
class Value {
public:
    using Storage = std::variant<std::monostate, bool, int64_t, double, std::string>;

    Value() = default;

    static Value null() { return Value(); }
    static Value boolean(bool b) { return Value(Storage(b)); }
    static Value integer(int64_t i) { return Value(Storage(i)); }
    static Value number(double d) { return Value(Storage(d)); }
    static Value text(std::string s) { return Value(Storage(std::move(s))); }

    bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_int() const { return std::holds_alternative<int64_t>(v_); }
    bool is_double() const { return std::holds_alternative<double>(v_); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }

    bool as_bool() const { return std::get<bool>(v_); }
    int64_t as_int() const { return std::get<int64_t>(v_); }
    double as_double() const { return std::get<double>(v_); }
    const std::string& as_string() const { return std::get<std::string>(v_); }

    // Numeric view regardless of integer/double storage.
    double numeric() const {
        if (is_int()) return static_cast<double>(as_int());
        if (is_double()) return as_double();
        if (is_bool()) return as_bool() ? 1.0 : 0.0;
        throw Error(ErrorKind::Store, "value is not numeric");
    }

    // Canonical display form, also used for gold answers and result previews.
    std::string to_display() const {
        if (is_null()) return "NULL";
        if (is_bool()) return as_bool() ? "true" : "false";
        if (is_int()) return std::to_string(as_int());
        if (is_double()) return format_double(as_double());
        return as_string();
    }

    json to_json() const {
        if (is_null()) return nullptr;
        if (is_bool()) return as_bool();
        if (is_int()) return as_int();
        if (is_double()) return as_double();
        return as_string();
    }

    static Value from_json(const json& j) {
        if (j.is_null()) return null();
        if (j.is_boolean()) return boolean(j.get<bool>());
        if (j.is_number_integer()) return integer(j.get<int64_t>());
        if (j.is_number_unsigned()) return integer(static_cast<int64_t>(j.get<uint64_t>()));
        if (j.is_number_float()) return number(j.get<double>());
        if (j.is_string()) return text(j.get<std::string>());
        throw Error(ErrorKind::Parse, "non-scalar JSON value");
    }

    bool operator==(const Value& other) const { return v_ == other.v_; }
    bool operator!=(const Value& other) const { return !(*this == other); }

    const Storage& storage() const { return v_; }

private:
    explicit Value(Storage v) : v_(std::move(v)) {}
    Storage v_;
};

// Outcome of checking a raw JSON scalar against an attribute type.
enum class Coercion { Exact, Coerced, Rejected };

struct CoercionResult {
    Coercion outcome = Coercion::Rejected;
    Value value;  // null when rejected
};

namespace detail {

// Numeric string parser for coercions: optional sign, digits with optional
// thousands commas, optional decimal part. Anything else fails.
inline std::optional<double> parse_numeric_string(std::string_view raw, bool* integral) {
    std::string cleaned;
    cleaned.reserve(raw.size());
    size_t b = raw.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return std::nullopt;
    size_t e = raw.find_last_not_of(" \t\r\n");
    bool seen_digit = false, seen_dot = false;
    for (size_t i = b; i <= e; ++i) {
        char c = raw[i];
        if (c == ',' && seen_digit && !seen_dot) continue;  // thousands separator
        if ((c == '+' || c == '-') && cleaned.empty()) {
            cleaned += c;
            continue;
        }
        if (c == '.') {
            if (seen_dot) return std::nullopt;
            seen_dot = true;
            cleaned += c;
            continue;
        }
        if (c >= '0' && c <= '9') {
            seen_digit = true;
            cleaned += c;
            continue;
        }
        return std::nullopt;
    }
    if (!seen_digit) return std::nullopt;
    double value = 0.0;
    auto res = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), value);
    if (res.ec != std::errc() || res.ptr != cleaned.data() + cleaned.size()) return std::nullopt;
    if (integral) *integral = !seen_dot;
    return value;
}

inline bool is_integral(double d) {
    return d == static_cast<int64_t>(d) && d >= -9.2e18 && d <= 9.2e18;
}

}  // namespace detail

// Exact type matches pass untouched; a fixed set of coercions is applied
// (numeric string -> number, "true"/"false" -> boolean, integer-valued float
// -> integer); everything else is rejected.
inline CoercionResult coerce_scalar(const json& raw, ValueType type) {
    if (raw.is_null()) return {Coercion::Exact, Value::null()};
    switch (type) {
        case ValueType::String:
            if (raw.is_string()) return {Coercion::Exact, Value::text(raw.get<std::string>())};
            return {Coercion::Rejected, Value::null()};
        case ValueType::Boolean: {
            if (raw.is_boolean()) return {Coercion::Exact, Value::boolean(raw.get<bool>())};
            if (raw.is_string()) {
                std::string s;
                for (char c : raw.get<std::string>()) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                size_t b = s.find_first_not_of(" \t\r\n");
                size_t e = s.find_last_not_of(" \t\r\n");
                if (b != std::string::npos) s = s.substr(b, e - b + 1);
                if (s == "true") return {Coercion::Coerced, Value::boolean(true)};
                if (s == "false") return {Coercion::Coerced, Value::boolean(false)};
            }
            return {Coercion::Rejected, Value::null()};
        }
        case ValueType::Integer: {
            if (raw.is_number_integer()) return {Coercion::Exact, Value::integer(raw.get<int64_t>())};
            if (raw.is_number_unsigned())
                return {Coercion::Exact, Value::integer(static_cast<int64_t>(raw.get<uint64_t>()))};
            if (raw.is_number_float()) {
                double d = raw.get<double>();
                if (detail::is_integral(d)) return {Coercion::Coerced, Value::integer(static_cast<int64_t>(d))};
                return {Coercion::Rejected, Value::null()};
            }
            if (raw.is_string()) {
                bool integral = false;
                if (auto d = detail::parse_numeric_string(raw.get<std::string>(), &integral);
                    d && integral && detail::is_integral(*d))
                    return {Coercion::Coerced, Value::integer(static_cast<int64_t>(*d))};
            }
            return {Coercion::Rejected, Value::null()};
        }
        case ValueType::Number: {
            if (raw.is_number_float()) return {Coercion::Exact, Value::number(raw.get<double>())};
            if (raw.is_number_integer()) return {Coercion::Exact, Value::number(static_cast<double>(raw.get<int64_t>()))};
            if (raw.is_number_unsigned())
                return {Coercion::Exact, Value::number(static_cast<double>(raw.get<uint64_t>()))};
            if (raw.is_string()) {
                if (auto d = detail::parse_numeric_string(raw.get<std::string>(), nullptr))
                    return {Coercion::Coerced, Value::number(*d)};
            }
            return {Coercion::Rejected, Value::null()};
        }
    }
    return {Coercion::Rejected, Value::null()};
}

}  // namespace srag
