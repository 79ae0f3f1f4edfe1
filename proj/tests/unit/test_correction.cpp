#include "medico/correction/correction.hpp"
#include "medico/correction/levenshtein.hpp"
#include "medico/text.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace medico;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

const Query kQ{"q", "When did Kurt Weill die?"};
const GeneratedContent kO{"Kurt Weill died in 1955.", "q"};

FusedEvidence evidence() {
    FusedEvidence fused;
    fused.provenance = {EvidenceItem::make("Kurt Weill died in 1950.", SourceTag::KB, KbProvenance{"w", 0})};
    fused.text = render_numbered(fused.provenance);
    return fused;
}

}  // namespace

TEST_CASE("levenshtein known values") {
    CHECK(levenshtein(std::string_view("kitten"), std::string_view("sitting")) == 3);
    CHECK(levenshtein(std::string_view(""), std::string_view("abc")) == 3);
    CHECK(levenshtein(std::string_view("abc"), std::string_view("abc")) == 0);
    CHECK(levenshtein(std::string_view("flaw"), std::string_view("lawn")) == 2);
    CHECK(levenshtein(std::string_view("caf\xC3\xA9"), std::string_view("cafe")) == 1);
    CHECK(levenshtein(std::u32string_view(U"\U0001F600x"), std::u32string_view(U"x")) == 1);
}

TEST_CASE("levenshtein agrees with the full matrix and is a metric") {
    std::mt19937_64 rng(29);
    for (int i = 0; i < 300; ++i) {
        const auto a = testing_support::random_u32(rng, 20, 4);
        const auto b = testing_support::random_u32(rng, 20, 4);
        const auto c = testing_support::random_u32(rng, 20, 4);
        const auto ab = levenshtein(a, b);
        CHECK(ab == testing_support::oracle_levenshtein(a, b));
        CHECK(ab == levenshtein(b, a));
        CHECK(levenshtein(a, a) == 0);
        CHECK(levenshtein(a, c) <= ab + levenshtein(b, c));
        CHECK(ab >= (a.size() > b.size() ? a.size() - b.size() : b.size() - a.size()));
        CHECK(ab <= std::max(a.size(), b.size()));
    }
}

TEST_CASE("preservation") {
    CHECK(preservation("kitten", "sitting") == doctest::Approx(0.5));
    CHECK(preservation("abc", "abc") == 1.0);
    CHECK(preservation("ab", "xyzuvw") == 0.0);
    CHECK(preservation("Kurt Weill passed away in 1955.", "Kurt Weill passed away in 1950.") ==
          doctest::Approx(30.0 / 31.0));
    CHECK(code_of([] { preservation("", "x"); }) == ErrorCode::EmptyOriginal);
    std::mt19937_64 rng(31);
    for (int i = 0; i < 200; ++i) {
        const auto a = utf8_encode(testing_support::random_u32(rng, 15));
        const auto b = utf8_encode(testing_support::random_u32(rng, 15));
        if (a.empty()) continue;
        const double p = preservation(a, b);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("span parsing") {
    const std::string candidate = "Kurt Weill died in 1955 in 1955.";
    auto list = parse_spans(candidate, "SPAN: \"1955\" - wrong year\nSPAN: \"1955\"\nSPAN: \"Berlin\"");
    REQUIRE(list.spans.size() == 2);
    CHECK(list.spans[0].start == 19);
    CHECK(list.spans[0].reason == "wrong year");
    CHECK(list.spans[1].start == 27);
    CHECK(list.dropped == std::vector<std::string>{"Berlin"});

    list = parse_spans(candidate, "I would change \"Kurt Weill\" and \"1955\"");
    REQUIRE(list.spans.size() == 2);
    CHECK(list.spans[0].start == 0);
    CHECK(parse_spans(candidate, "nothing quoted").spans.empty());
}

TEST_CASE("revise only touches the named spans") {
    ScriptedMock corrector(ScriptedMock::parse_script(R"(
{"match": ["Span: \"1955\""], "reply": "1950"}
{"match": ["Span: \"Kurt\""], "reply": "\"K.\""}
{"match": ["Corrected answer:"], "reply": "Whole new text."}
)"),
                           Role::Corrector);
    const std::string candidate = "Kurt Weill died in 1955.";
    const auto spans = parse_spans(candidate, "SPAN: \"1955\"\nSPAN: \"Kurt\"");
    const auto revised = revise(corrector, candidate, spans, RevisionContext{});
    CHECK(revised == "K. Weill died in 1950.");
    CHECK(revised.substr(2, 16) == candidate.substr(4, 16));
    CHECK(revise(corrector, candidate, SpanList{}, RevisionContext{}) == "Whole new text.");
}

TEST_CASE("correction approves a close True candidate") {
    const auto rules = ScriptedMock::parse_script(R"(
{"role": "corrector", "match": ["Spans:"], "reply": "SPAN: \"1955\""}
{"role": "corrector", "match": ["Replacement:"], "reply": "1950"}
{"role": "detector", "match": ["Reply with exactly", "Answer: Kurt Weill died in 1950."], "reply": "True"}
)");
    ScriptedMock detector(rules, Role::Detector), corrector(rules, Role::Corrector);
    const auto session = correct_loop(kQ, kO, "year is wrong", evidence(), detector, corrector);
    REQUIRE(session.rounds.size() == 1);
    CHECK(session.outcome == CorrectionOutcome::Approved);
    CHECK(session.final_text == "Kurt Weill died in 1950.");
    CHECK(session.rounds[0].accepted);
    CHECK(session.rounds[0].spans == std::vector<std::string>{"1955"});
    CHECK(session.rounds[0].preservation == doctest::Approx(23.0 / 24.0));
}

TEST_CASE("correction hits the round limit and keeps the best True candidate") {
    // Every revision is True but rewrites too much; delta 0.9 rejects them all.
    const auto rules = ScriptedMock::parse_script(R"(
{"role": "corrector", "match": ["Spans:", "Answer to correct: Kurt Weill died in 1955."], "reply": "SPAN: \"Kurt Weill died in 1955.\""}
{"role": "corrector", "match": ["Replacement:", "Answer to correct: Kurt Weill died in 1955."], "reply": "Weill died in 1950."}
{"role": "corrector", "match": ["Spans:"], "reply": "no idea"}
{"role": "corrector", "match": ["Corrected answer:"], "reply": "The composer Weill died in 1950."}
{"role": "detector", "match": ["Reply with exactly"], "reply": "True"}
)");
    ScriptedMock detector(rules, Role::Detector), corrector(rules, Role::Corrector);
    CorrectionOptions options;
    options.delta = 0.9;
    const auto session = correct_loop(kQ, kO, "r", evidence(), detector, corrector, options);
    REQUIRE(session.rounds.size() == kMaxCorrectionRounds);
    CHECK(session.outcome == CorrectionOutcome::RoundLimit);
    CHECK(session.rounds[0].rejection == RoundRejection::LowPreservation);
    CHECK_FALSE(session.rounds[0].minimize_edits);
    CHECK(session.rounds[1].minimize_edits);
    CHECK(session.rounds[1].whole_text_revision);
    CHECK(session.final_text == "Weill died in 1950.");
    CHECK(preservation(kO.text, "Weill died in 1950.") > preservation(kO.text, "The composer Weill died in 1950."));

    options.max_rounds = 2;
    CHECK(correct_loop(kQ, kO, "r", evidence(), detector, corrector, options).rounds.size() == 2);
}

TEST_CASE("correction returns the original when nothing turns True") {
    const auto rules = ScriptedMock::parse_script(R"(
{"role": "corrector", "match": ["Spans:"], "reply": "SPAN: \"1955\""}
{"role": "corrector", "match": ["Replacement:"], "reply": "1956"}
{"role": "detector", "match": ["Reply with exactly"], "reply": "False"}
{"role": "detector", "match": ["Explain which"], "reply": "Still wrong per [1]."}
)");
    ScriptedMock detector(rules, Role::Detector), corrector(rules, Role::Corrector);
    const auto session = correct_loop(kQ, kO, "r", evidence(), detector, corrector);
    CHECK(session.rounds.size() == kMaxCorrectionRounds);
    CHECK(session.final_text == kO.text);
    for (const auto& round : session.rounds) CHECK(round.rejection == RoundRejection::StillFalse);
}

TEST_CASE("backend failure aborts with the partial session") {
    const auto rules = ScriptedMock::parse_script(R"(
{"role": "corrector", "match": ["Spans:"], "reply": "SPAN: \"1955\""}
{"role": "corrector", "match": ["Replacement:"], "reply": "1956"}
)");
    ScriptedMock detector(rules, Role::Detector), corrector(rules, Role::Corrector);
    try {
        correct_loop(kQ, kO, "r", evidence(), detector, corrector);
        FAIL("expected CorrectionAborted");
    } catch (const CorrectionAborted& e) {
        CHECK(e.code() == ErrorCode::LabelParse);
        CHECK(e.partial().rounds.empty());
        CHECK(e.partial().original == kO.text);
    }
    CorrectionOptions bad;
    bad.delta = 1.5;
    CHECK(code_of([&] { correct_loop(kQ, kO, "r", evidence(), detector, corrector, bad); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { correct_loop(kQ, GeneratedContent{" ", "q"}, "r", evidence(), detector, corrector); }) ==
          ErrorCode::EmptyOriginal);
}
