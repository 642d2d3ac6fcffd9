#pragma once

#include <stdexcept>
#include <string>

namespace srag {

enum class ErrorKind {
    Config,       // bad configuration / CLI usage
    Io,           // filesystem failures
    Provider,     // transport failures after retries, malformed provider replies
    ScriptMiss,   // scripted provider had no (or multiple) matching exchange
    Parse,        // unparseable JSON / SQL / file formats
    Induction,    // schema induction gave up
    Extraction,   // corpus-level extraction failure
    Store,        // relational store build/query failure
    Translation,  // text-to-SQL repair budget exhausted
    Eval          // judge failures
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
        case ErrorKind::Provider: return "provider";
        case ErrorKind::ScriptMiss: return "script-miss";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Induction: return "induction";
        case ErrorKind::Extraction: return "extraction";
        case ErrorKind::Store: return "store";
        case ErrorKind::Translation: return "translation";
        case ErrorKind::Eval: return "eval";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace srag
