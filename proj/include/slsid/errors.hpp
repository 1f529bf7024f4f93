#pragma once

#include <stdexcept>
#include <string>

namespace slsid {

enum class Errc {
    InvalidArgument,  // malformed input or precondition violated
    LabelOutOfRange,
    ConfigError,
    NotStable,
    ProbMismatch,
    NoOccurrences,
    OrderTooLarge,
    DegenerateProbability,
    HorizonTooLong,
    FormatError,
    IoError,
};

constexpr const char* errc_name(Errc c) noexcept {
    switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NotStable: return "NotStable";
    case Errc::ProbMismatch: return "ProbMismatch";
    case Errc::NoOccurrences: return "NoOccurrences";
    case Errc::OrderTooLarge: return "OrderTooLarge";
    case Errc::DegenerateProbability: return "DegenerateProbability";
    case Errc::HorizonTooLong: return "HorizonTooLong";
    case Errc::FormatError: return "FormatError";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

// Validation errors are caller mistakes (bad flags, bad config, bad shapes);
// everything else is a runtime failure of the numerics or the filesystem.
constexpr bool is_validation_error(Errc c) noexcept {
    return c == Errc::InvalidArgument || c == Errc::LabelOutOfRange || c == Errc::ConfigError;
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }
    // message without the code prefix
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace slsid
