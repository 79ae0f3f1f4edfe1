#pragma once

#include "medico/correction/levenshtein.hpp"
#include "medico/detection/detection.hpp"
#include "medico/error.hpp"
#include "medico/fusion/fusion.hpp"
#include "medico/llm/gateway.hpp"
#include "medico/prompts.hpp"

#include <optional>
#include <string>
#include <vector>

namespace medico {

inline constexpr std::size_t kMaxCorrectionRounds = 5;
inline constexpr double kDefaultDelta = 0.5;

/// Byte range [start, end) of the candidate text plus the span as quoted.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string reason;
};

struct SpanList {
    std::vector<Span> spans;  // sorted by start, non-overlapping
    std::vector<std::string> dropped;  // quoted text that could not be located
};

/// Parses `SPAN: "<text>"` lines (falling back to any double-quoted text)
/// and locates each span's first non-overlapping occurrence in candidate.
SpanList parse_spans(const std::string& candidate, const std::string& reply);

/// Prompt context shared by the span and revision calls of one round.
struct RevisionContext {
    std::string query;
    std::string rationale;
    std::string evidence_block;  // rendered evidence section, or empty
    std::string history;         // rendered list of rejected candidates, or empty
    std::string constraint;      // minimize-edits instruction, or empty
};

/// Asks the corrector which spans to edit. Throws NoSpans when no quoted
/// span can be located in the candidate.
SpanList identify_spans(LlmBackend& corrector, const std::string& candidate, const RevisionContext& context,
                        const PromptCatalog& prompts = PromptCatalog::defaults());

/// One corrector call per span; replacements are spliced right-to-left so
/// earlier offsets stay valid. With no spans the whole-text revision prompt
/// is used and its reply becomes the new candidate.
std::string revise(LlmBackend& corrector, const std::string& candidate, const SpanList& spans,
                   const RevisionContext& context, const PromptCatalog& prompts = PromptCatalog::defaults());

enum class RoundRejection { None, StillFalse, LowPreservation };
enum class CorrectionOutcome { Approved, RoundLimit };

std::string_view rejection_name(RoundRejection rejection);
std::string_view outcome_name(CorrectionOutcome outcome);

struct CorrectionRound {
    std::size_t index = 0;  // 1-based
    std::string candidate;
    VeracityVerdict verdict;
    double preservation = 0.0;
    bool accepted = false;
    RoundRejection rejection = RoundRejection::None;
    std::vector<std::string> spans;  // span texts edited this round
    bool whole_text_revision = false;
    bool minimize_edits = false;     // round was prompted with the minimize-edits instruction
};

struct CorrectionSession {
    std::string original;
    std::string rationale;
    double delta = kDefaultDelta;
    std::vector<CorrectionRound> rounds;
    std::string final_text;
    CorrectionOutcome outcome = CorrectionOutcome::RoundLimit;
    std::vector<std::string> notes;
};

struct CorrectionOptions {
    double delta = kDefaultDelta;
    std::size_t max_rounds = kMaxCorrectionRounds;
    bool include_evidence = false;  // add the fused evidence to corrector prompts
};

/// Raised when a backend fails mid-loop; carries the rounds completed so far.
class CorrectionAborted : public Error {
public:
    CorrectionAborted(const Error& cause, CorrectionSession partial)
        : Error(cause.code(), cause.what()), partial_(std::move(partial)) {}
    const CorrectionSession& partial() const { return partial_; }

private:
    CorrectionSession partial_;
};

/// Iterative correction of content the detector labelled False. Each round
/// identifies spans, revises them, and re-detects. A False verdict carries
/// the candidate into the next round. A True verdict is approved when
/// preservation(o, o') >= delta; otherwise it is rejected and the next
/// round revises it again under a minimize-edits instruction. After
/// max_rounds the best True candidate (highest preservation) is returned,
/// or the original when none was True.
CorrectionSession correct_loop(const Query& q, const GeneratedContent& o, const std::string& rationale,
                               const FusedEvidence& fused, LlmBackend& detector, LlmBackend& corrector,
                               const CorrectionOptions& options = {},
                               const PromptCatalog& prompts = PromptCatalog::defaults());

}  // namespace medico
