#include "medico/error.hpp"

namespace medico {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::IndexMissing: return "IndexMissing";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::ExtractionFailure: return "ExtractionFailure";
        case ErrorCode::DuplicatePageId: return "DuplicatePageId";
        case ErrorCode::ScorerUnavailable: return "ScorerUnavailable";
        case ErrorCode::EmptyEvidence: return "EmptyEvidence";
        case ErrorCode::OutputEmpty: return "OutputEmpty";
        case ErrorCode::ScoringUnsupported: return "ScoringUnsupported";
        case ErrorCode::LabelParse: return "LabelParse";
        case ErrorCode::DegenerateDataset: return "DegenerateDataset";
        case ErrorCode::Untrained: return "Untrained";
        case ErrorCode::EmptyOriginal: return "EmptyOriginal";
        case ErrorCode::NoSpans: return "NoSpans";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::BindFailure: return "BindFailure";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace medico
