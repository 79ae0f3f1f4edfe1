#include "medico/correction/correction.hpp"

#include "medico/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace medico {

std::string_view rejection_name(RoundRejection rejection) {
    switch (rejection) {
        case RoundRejection::None: return "none";
        case RoundRejection::StillFalse: return "still_false";
        case RoundRejection::LowPreservation: return "low_preservation";
    }
    return "?";
}

std::string_view outcome_name(CorrectionOutcome outcome) {
    return outcome == CorrectionOutcome::Approved ? "Approved" : "RoundLimit";
}

namespace {

struct QuotedSpan {
    std::string text;
    std::string reason;
};

std::vector<QuotedSpan> quoted_spans(const std::string& reply) {
    std::vector<QuotedSpan> out;
    std::size_t line_start = 0;
    while (line_start <= reply.size()) {
        auto line_end = reply.find('\n', line_start);
        if (line_end == std::string::npos) line_end = reply.size();
        const std::string_view line(reply.data() + line_start, line_end - line_start);
        const auto marker = to_lower_ascii(line).find("span:");
        if (marker != std::string::npos) {
            const auto open = line.find('"', marker);
            const auto close = line.rfind('"');
            if (open != std::string_view::npos && close > open) {
                auto reason = trim(line.substr(close + 1));
                reason.erase(0, reason.find_first_not_of("-:;,"));
                out.push_back(QuotedSpan{std::string(line.substr(open + 1, close - open - 1)), trim(reason)});
            }
        }
        line_start = line_end + 1;
    }
    if (!out.empty()) return out;

    // Lenient fallback: every double-quoted run anywhere in the reply.
    std::size_t pos = 0;
    while (true) {
        const auto open = reply.find('"', pos);
        if (open == std::string::npos) break;
        const auto close = reply.find('"', open + 1);
        if (close == std::string::npos) break;
        out.push_back(QuotedSpan{reply.substr(open + 1, close - open - 1), {}});
        pos = close + 1;
    }
    return out;
}

bool overlaps(const std::vector<Span>& spans, std::size_t start, std::size_t end) {
    return std::any_of(spans.begin(), spans.end(), [&](const Span& s) { return start < s.end && s.start < end; });
}

std::string strip_reply(std::string reply) {
    reply = trim(reply);
    if (reply.size() >= 2 && reply.front() == '"' && reply.back() == '"') reply = reply.substr(1, reply.size() - 2);
    return reply;
}

std::map<std::string, std::string> context_slots(const RevisionContext& context, const std::string& candidate) {
    return {{"query", context.query},
            {"answer", candidate},
            {"rationale", context.rationale},
            {"evidence_block", context.evidence_block},
            {"history", context.history},
            {"constraint", context.constraint}};
}

std::string render_history(const PromptCatalog& prompts, const std::vector<std::pair<std::string, std::string>>& items) {
    if (items.empty()) return {};
    std::string out = prompts.get("history_header");
    for (const auto& [candidate, reason] : items)
        out += prompts.render("history_item", {{"candidate", candidate}, {"reason", reason}});
    return out;
}

}  // namespace

SpanList parse_spans(const std::string& candidate, const std::string& reply) {
    SpanList list;
    for (auto& quoted : quoted_spans(reply)) {
        if (quoted.text.empty()) continue;
        std::size_t from = 0;
        bool placed = false;
        while (true) {
            const auto at = candidate.find(quoted.text, from);
            if (at == std::string::npos) break;
            const auto end = at + quoted.text.size();
            if (!overlaps(list.spans, at, end)) {
                list.spans.push_back(Span{at, end, quoted.reason});
                placed = true;
                break;
            }
            from = at + 1;
        }
        if (!placed) list.dropped.push_back(quoted.text);
    }
    std::sort(list.spans.begin(), list.spans.end(), [](const Span& a, const Span& b) { return a.start < b.start; });
    return list;
}

SpanList identify_spans(LlmBackend& corrector, const std::string& candidate, const RevisionContext& context,
                        const PromptCatalog& prompts) {
    const auto prompt = prompts.render("span_identify", context_slots(context, candidate));
    const auto reply = corrector.chat(ChatRequest::make(prompt));
    auto list = parse_spans(candidate, reply);
    for (const auto& text : list.dropped) spdlog::warn("corrector span not found in candidate: \"{}\"", text);
    if (list.spans.empty()) throw Error(ErrorCode::NoSpans, "corrector reply names no locatable span");
    return list;
}

std::string revise(LlmBackend& corrector, const std::string& candidate, const SpanList& spans,
                   const RevisionContext& context, const PromptCatalog& prompts) {
    if (spans.spans.empty()) {
        const auto prompt = prompts.render("whole_revise", context_slots(context, candidate));
        return strip_reply(corrector.chat(ChatRequest::make(prompt)));
    }
    std::vector<std::string> replacements;
    replacements.reserve(spans.spans.size());
    for (const auto& span : spans.spans) {
        auto slots = context_slots(context, candidate);
        slots["span"] = candidate.substr(span.start, span.end - span.start);
        replacements.push_back(strip_reply(corrector.chat(ChatRequest::make(prompts.render("span_revise", slots)))));
    }
    std::string revised = candidate;
    for (std::size_t i = spans.spans.size(); i-- > 0;) {
        const auto& span = spans.spans[i];
        revised.replace(span.start, span.end - span.start, replacements[i]);
    }
    return revised;
}

CorrectionSession correct_loop(const Query& q, const GeneratedContent& o, const std::string& rationale,
                               const FusedEvidence& fused, LlmBackend& detector, LlmBackend& corrector,
                               const CorrectionOptions& options, const PromptCatalog& prompts) {
    if (options.delta < 0.0 || options.delta > 1.0)
        throw Error(ErrorCode::InvalidArgument, "delta must lie in [0,1]");
    if (trim(o.text).empty()) throw Error(ErrorCode::EmptyOriginal, "nothing to correct");

    CorrectionSession session;
    session.original = o.text;
    session.rationale = rationale;
    session.delta = options.delta;
    session.final_text = o.text;

    const std::string evidence_block =
        options.include_evidence ? prompts.render("evidence_block", {{"evidence", fused.text}}) : std::string{};
    const std::string constraint = prompts.render("minimize_edits", {{"original", o.text}});

    std::string candidate = o.text;
    std::string current_rationale = rationale;
    bool minimize = false;
    std::vector<std::pair<std::string, std::string>> rejected;

    try {
        const auto rounds = std::min(options.max_rounds, kMaxCorrectionRounds);
        for (std::size_t i = 1; i <= rounds; ++i) {
            const RevisionContext context{q.text, current_rationale, evidence_block, render_history(prompts, rejected),
                                          minimize ? constraint : std::string{}};
            CorrectionRound round;
            round.index = i;
            round.minimize_edits = minimize;

            SpanList spans;
            try {
                spans = identify_spans(corrector, candidate, context, prompts);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoSpans) throw;
                round.whole_text_revision = true;
                session.notes.push_back("round " + std::to_string(i) + ": no locatable spans, revised whole text");
            }
            for (const auto& span : spans.spans) round.spans.push_back(candidate.substr(span.start, span.end - span.start));

            round.candidate = revise(corrector, candidate, spans, context, prompts);
            round.verdict = detect_with_evidence(detector, q, GeneratedContent{round.candidate, o.query_id}, fused, prompts);
            round.preservation = preservation(o.text, round.candidate);

            if (!round.verdict.label) {
                round.rejection = RoundRejection::StillFalse;
                rejected.emplace_back(round.candidate, "still contradicts the evidence");
                current_rationale = round.verdict.rationale;
                candidate = round.candidate;
                session.rounds.push_back(std::move(round));
                continue;
            }
            if (round.preservation >= options.delta) {
                round.accepted = true;
                session.final_text = round.candidate;
                session.outcome = CorrectionOutcome::Approved;
                session.rounds.push_back(std::move(round));
                return session;
            }
            round.rejection = RoundRejection::LowPreservation;
            rejected.emplace_back(round.candidate, "changed too much of the original answer");
            candidate = round.candidate;
            minimize = true;
            session.notes.push_back("round " + std::to_string(i) + ": preservation below delta, retrying with minimal edits");
            session.rounds.push_back(std::move(round));
        }
    } catch (const CorrectionAborted&) {
        throw;
    } catch (const Error& e) {
        session.notes.push_back(std::string("aborted: ") + e.what());
        throw CorrectionAborted(e, std::move(session));
    }

    session.outcome = CorrectionOutcome::RoundLimit;
    const CorrectionRound* best = nullptr;
    for (const auto& round : session.rounds) {
        if (!round.verdict.label) continue;
        if (best == nullptr || round.preservation > best->preservation) best = &round;
    }
    session.final_text = best ? best->candidate : o.text;
    return session;
}

}  // namespace medico
