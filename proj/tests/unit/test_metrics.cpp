#include "medico/error.hpp"
#include "medico/eval/harness.hpp"
#include "medico/eval/metrics.hpp"
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

RankedJudgment ranked(std::initializer_list<int> flags) {
    RankedJudgment j;
    for (int f : flags) j.golden.push_back(f != 0);
    return j;
}

CorrectionSession session_at(std::optional<std::size_t> accepted_round, std::size_t total_rounds) {
    CorrectionSession s;
    for (std::size_t i = 1; i <= total_rounds; ++i) {
        CorrectionRound r;
        r.index = i;
        r.accepted = accepted_round && *accepted_round == i;
        s.rounds.push_back(r);
    }
    s.outcome = accepted_round ? CorrectionOutcome::Approved : CorrectionOutcome::RoundLimit;
    return s;
}

}  // namespace

TEST_CASE("hit rate and mrr") {
    const std::vector<RankedJudgment> one{ranked({0, 1, 0})};
    CHECK(hit_rate_at_k(one, 1) == 0.0);
    CHECK(hit_rate_at_k(one, 3) == 1.0);
    CHECK(mrr_at_k(one, 3) == 0.5);
    CHECK(mrr_at_k(one, 1) == 0.0);

    const std::vector<RankedJudgment> mixed{ranked({1, 0}), ranked({0, 0, 1}), ranked({0, 0, 0}), ranked({})};
    CHECK(hit_rate_at_k(mixed, 1) == 0.25);
    CHECK(hit_rate_at_k(mixed, 5) == 0.5);
    CHECK(mrr_at_k(mixed, 5) == doctest::Approx((1.0 + 1.0 / 3.0) / 4.0));
    CHECK(mrr_at_k(mixed, 2) == 0.25);
    CHECK(hit_rate_at_k({}, 3) == 0.0);
    CHECK(code_of([&] { hit_rate_at_k(mixed, 0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { mrr_at_k(mixed, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("detection precision, recall and f1 treat False as positive") {
    // predictions / gold: true = consistent
    const std::vector<bool> pred{false, false, true, true, false};
    const std::vector<bool> gold{false, true, false, true, false};
    const auto s = detection_prf(pred, gold);
    CHECK(s.tp == 2);
    CHECK(s.fp == 1);
    CHECK(s.fn == 1);
    CHECK(s.tn == 1);
    CHECK(s.precision == doctest::Approx(2.0 / 3.0));
    CHECK(s.recall == doctest::Approx(2.0 / 3.0));
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0));

    const auto none = detection_prf({true, true}, {true, true});
    CHECK(none.precision == 0.0);
    CHECK(none.f1 == 0.0);
    CHECK(code_of([] { detection_prf({true}, {}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("approval rate by round is cumulative") {
    CorrectionSession passed;
    passed.outcome = CorrectionOutcome::Approved;
    const std::vector<CorrectionSession> sessions{passed, session_at(1, 1), session_at(3, 3), session_at({}, 5)};
    const auto rates = approval_rate_by_round(sessions);
    REQUIRE(rates.size() == kApprovalRounds + 1);
    CHECK(rates.at(0) == 0.25);
    CHECK(rates.at(1) == 0.5);
    CHECK(rates.at(2) == 0.5);
    CHECK(rates.at(3) == 0.75);
    CHECK(rates.at(5) == 0.75);
    for (std::size_t r = 1; r <= kApprovalRounds; ++r) CHECK(rates.at(r) >= rates.at(r - 1));
    CHECK(approval_rate_by_round({}).at(5) == 0.0);
}

TEST_CASE("dataset loading and sampling") {
    testing_support::TempDir dir;
    std::string text;
    for (int i = 0; i < 10; ++i)
        text += R"({"question": "q)" + std::to_string(i) + R"(", "right_answer": "r", "hallucinated_answer": "h"})" + "\n";
    write_file(dir.path() / "d.jsonl", text);
    const auto all = load_dataset(dir.path() / "d.jsonl");
    CHECK(all.size() == 10);
    const auto a = load_dataset(dir.path() / "d.jsonl", 4, 7);
    const auto b = load_dataset(dir.path() / "d.jsonl", 4, 7);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].question == b[i].question);
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(std::stoi(a[i - 1].question.substr(1)) < std::stoi(a[i].question.substr(1)));
    CHECK(load_dataset(dir.path() / "d.jsonl", 50).size() == 10);

    write_file(dir.path() / "bad.jsonl", text + "{\"question\": \"x\"}\n");
    try {
        load_dataset(dir.path() / "bad.jsonl");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        CHECK(std::string(e.what()).find("line 11") != std::string::npos);
    }
}

TEST_CASE("golden proxy and annotations") {
    const EvalTriplet t{"Who?", "King Charles III", "Queen Elizabeth II"};
    const std::vector<std::string> evidence{"The Queen died.", "king charles iii, head of state", "Kingdom"};
    CHECK(label_golden_proxy(t, evidence).golden == std::vector<bool>{false, true, false});

    GoldenAnnotations ann;
    ann.set("Who?", "kb", {true, false, false});
    CHECK(label_golden_proxy(t, evidence, &ann, "kb").golden == std::vector<bool>{true, false, false});
    CHECK(label_golden_proxy(t, evidence, &ann, "kg").golden == std::vector<bool>{false, true, false});
    ann.set("Who?", "kg", {true});
    CHECK(label_golden_proxy(t, evidence, &ann, "kg").golden == std::vector<bool>{false, true, false});

    testing_support::TempDir dir;
    write_file(dir.path() / "a.jsonl", R"({"question": "Who?", "list": "fuse", "golden": [false, false, true]})");
    const auto loaded = GoldenAnnotations::load(dir.path() / "a.jsonl");
    REQUIRE(loaded.find("Who?", "fuse"));
    CHECK(loaded.find("Who?", "fuse")->at(2));
    CHECK_FALSE(loaded.find("Who?", "web"));
}

TEST_CASE("evaluation on the mini corpus") {
    PipelineConfig cfg;
    const auto resources = PipelineResources::from_fixtures(testing_support::source_dir() / "data" / "mini", cfg);
    const auto triplets = load_dataset(testing_support::source_dir() / "data" / "mini" / "halueval_mini.jsonl");
    const auto report = run_evaluation(triplets, cfg, resources);
    CHECK(report.triplets == 20);
    CHECK(report.failed_runs == 0);
    CHECK(report.detection.tp == 19);
    CHECK(report.detection.fp == 1);
    CHECK(report.detection.fn == 1);
    CHECK(report.detection.tn == 19);
    CHECK(report.approval_by_round.at(0) == doctest::Approx(0.05));
    CHECK(report.approval_by_round.at(1) == doctest::Approx(0.80));
    CHECK(report.approval_by_round.at(2) == doctest::Approx(0.90));
    CHECK(report.approval_by_round.at(5) == doctest::Approx(0.90));
    CHECK(report.retrieval.at("web").hr.at(1) == doctest::Approx(0.85));
    CHECK(report.retrieval.at("kb").hr.at(5) == 1.0);

    const auto table = render_report_table(report);
    CHECK(table.find("approval rate by round") != std::string::npos);
    CHECK(table == render_report_table(run_evaluation(triplets, cfg, resources)));
    const auto doc = report_to_json(report);
    CHECK(doc["detection"]["tp"] == 19);

    EvalOptions no_fix;
    no_fix.run_correction = false;
    const auto detect_only = run_evaluation(triplets, cfg, resources, no_fix);
    CHECK(detect_only.detection.tp == 19);
}
