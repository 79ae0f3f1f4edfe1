#include "medico/error.hpp"
#include "medico/fusion/fusion.hpp"
#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace medico;
using nlohmann::json;

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

EvidenceItem item(SourceTag tag, const std::string& text) {
    switch (tag) {
        case SourceTag::Web: return EvidenceItem::make(text, tag, WebProvenance{"https://x/" + text, 1});
        case SourceTag::KB: return EvidenceItem::make(text, tag, KbProvenance{text, 0});
        case SourceTag::KG: return EvidenceItem::make(text, tag, KgProvenance{text});
        case SourceTag::UF: return EvidenceItem::make(text, tag, FileProvenance{"f.txt", 0});
    }
    return EvidenceItem::make(text, tag, KgProvenance{text});
}

const Query kQ{"q", "Who is the head of the Commonwealth?"};
const GeneratedContent kO{"Queen Elizabeth II is the head.", "q"};

}  // namespace

TEST_CASE("combine orders sources S, B, G, U and keeps inner order") {
    PerSourceEvidence sets;
    sets[SourceTag::UF] = {item(SourceTag::UF, "u1")};
    sets[SourceTag::KG] = {item(SourceTag::KG, "g1"), item(SourceTag::KG, "g2")};
    sets[SourceTag::Web] = {item(SourceTag::Web, "s1")};
    const auto combined = combine(sets);
    CHECK(combined.stage == EvidenceStage::Combined);
    std::vector<std::string> texts;
    for (const auto& e : combined.items) texts.push_back(e.text);
    CHECK(texts == std::vector<std::string>{"s1", "g1", "g2", "u1"});
    CHECK(combine({}).items.empty());

    PerSourceEvidence wrong;
    wrong[SourceTag::KB] = {item(SourceTag::KG, "g")};
    CHECK(code_of([&] { combine(wrong); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("lexical scorer is a binary cosine") {
    LexicalScorer s;
    CHECK(s.score("a b c", "c b a") == doctest::Approx(1.0));
    CHECK(s.score("a b", "c d") == 0.0);
    CHECK(s.score("a b c d", "a") == doctest::Approx(1.0 / 2.0));
    CHECK(s.score("a a b", "a b b") == doctest::Approx(1.0));
    CHECK(s.score("", "a") == 0.0);
}

TEST_CASE("rerank breaks ties by source then position") {
    EvidenceSet combined;
    combined.items = {item(SourceTag::Web, "s"), item(SourceTag::KB, "b1"), item(SourceTag::KB, "b2"), item(SourceTag::KG, "g")};
    testing_support::TableScorer scorer({{"s", 0.5}, {"b1", 0.9}, {"b2", 0.5}, {"g", 0.9}});
    const auto out = rerank(scorer, kQ, kO, combined, 3);
    REQUIRE(out.items.size() == 3);
    CHECK(out.stage == EvidenceStage::Reranked);
    CHECK(out.items[0].text == "b1");
    CHECK(out.items[1].text == "g");
    CHECK(out.items[2].text == "s");
    CHECK(out.items[0].score == 0.9);

    CHECK(rerank(scorer, kQ, kO, combined, 50).items.size() == 4);
    CHECK(code_of([&] { rerank(scorer, kQ, kO, combined, 0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { rerank(scorer, kQ, kO, out, 2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("rerank equals a full sort on random sets") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        EvidenceSet combined;
        std::map<std::string, double> table;
        std::vector<double> scores;
        const auto n = std::uniform_int_distribution<int>(0, 25)(rng);
        for (int i = 0; i < n; ++i) {
            const auto tag = static_cast<SourceTag>(rng() % 4);
            const auto text = "e" + std::to_string(i);
            const double score = static_cast<double>(rng() % 5) / 4.0;  // coarse, many ties
            combined.items.push_back(item(tag, text));
            table[text] = score;
            scores.push_back(score);
        }
        const std::size_t l = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
        testing_support::TableScorer scorer(table);
        CHECK(rerank(scorer, kQ, kO, combined, l).items == testing_support::oracle_rerank(combined.items, scores, l));
    }
}

TEST_CASE("rerank scores against query plus answer") {
    std::string seen_query;
    struct Spy final : Scorer {
        std::string* seen;
        double score(const std::string& q, const std::string&) override {
            *seen = q;
            return 0.1;
        }
    } spy;
    spy.seen = &seen_query;
    EvidenceSet combined;
    combined.items = {item(SourceTag::KB, "x")};
    rerank(spy, kQ, kO, combined, 1);
    CHECK(seen_query == kQ.text + " " + kO.text);
    CHECK(score_relevance(spy, kQ, combined.items[0]) == 0.1);
    CHECK(seen_query == kQ.text);
}

TEST_CASE("remote reranker") {
    json last;
    bool fail = false;
    testing_support::LocalServer server([&](httplib::Server& s) {
        s.Post("/rerank", [&](const httplib::Request& req, httplib::Response& res) {
            last = json::parse(req.body);
            if (fail) {
                res.status = 400;
                return;
            }
            json out = json::array();
            for (std::size_t i = 0; i < last["texts"].size(); ++i)
                out.push_back(json{{"index", i}, {"score", i == 1 ? 1.7 : 0.1 * static_cast<double>(i)}});
            res.set_content(out.dump(), "application/json");
        });
    });
    RemoteReranker reranker(Endpoint::parse(server.url("/rerank")), "", RetryPolicy{0, std::chrono::milliseconds(1)});
    const auto scores = reranker.score_batch("q", {"a", "b", "c"});
    CHECK(scores == std::vector<double>{0.0, 1.0, 0.2});
    CHECK(last["query"] == "q");
    CHECK(last["texts"].size() == 3);
    fail = true;
    CHECK(code_of([&] { reranker.score("q", "a"); }) == ErrorCode::ScorerUnavailable);

    RemoteReranker down(Endpoint::parse("http://127.0.0.1:1/rerank"), "", RetryPolicy{0, std::chrono::milliseconds(1)});
    CHECK(code_of([&] { down.score("q", "a"); }) == ErrorCode::ScorerUnavailable);
}

TEST_CASE("fuse by concatenation and by summarization") {
    EvidenceSet reranked;
    reranked.stage = EvidenceStage::Reranked;
    reranked.items = {item(SourceTag::KB, "first"), item(SourceTag::KG, "second")};
    const auto fused = fuse(reranked, FuseMode::Concatenation, kQ);
    CHECK(fused.text == "[1] first\n[2] second");
    CHECK(fused.provenance == reranked.items);

    ScriptedMock summarizer(ScriptedMock::parse_script(R"({"match": ["Summary:", "[2] second"], "reply": "A short summary."})"),
                            Role::Detector);
    const auto summary = fuse(reranked, FuseMode::Summarization, kQ, &summarizer);
    CHECK(summary.text == "A short summary.");
    CHECK(summary.mode == FuseMode::Summarization);
    CHECK(summary.provenance.size() == 2);

    CHECK(code_of([&] { fuse(reranked, FuseMode::Summarization, kQ, nullptr); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { fuse(EvidenceSet{{}, EvidenceStage::Reranked}, FuseMode::Concatenation, kQ); }) ==
          ErrorCode::EmptyEvidence);
    CHECK(parse_fuse_mode("summarization") == FuseMode::Summarization);
    CHECK(fuse_mode_name(FuseMode::Concatenation) == "concatenation");
}
