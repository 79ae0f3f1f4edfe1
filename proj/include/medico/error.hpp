#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medico {

enum class ErrorCode {
    InvalidArgument,
    BackendUnavailable,
    IndexMissing,
    UnsupportedFormat,
    ExtractionFailure,
    DuplicatePageId,
    ScorerUnavailable,
    EmptyEvidence,
    OutputEmpty,
    ScoringUnsupported,
    LabelParse,
    DegenerateDataset,
    Untrained,
    EmptyOriginal,
    NoSpans,
    ParseError,
    LengthMismatch,
    ConfigError,
    BindFailure,
    NotFound,
    IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a stable code;
// callers that need to branch on the kind of failure switch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace medico
