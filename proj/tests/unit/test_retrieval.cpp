#include "medico/error.hpp"
#include "medico/retrieval/lexical_index.hpp"
#include "medico/retrieval/sources.hpp"
#include "medico/retrieval/web.hpp"
#include "medico/text.hpp"
#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace medico;
using testing_support::TempDir;

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

const Query kQuery{"q1", "When did Kurt Weill die?"};
const GeneratedContent kAnswer{"Kurt Weill died in 1955.", "q1"};

}  // namespace

TEST_CASE("query and answer validation") {
    CHECK_THROWS_AS(Query::make("x", "  "), Error);
    CHECK_THROWS_AS(GeneratedContent::make("", "x"), Error);
    CHECK(retrieval_key(kQuery, kAnswer) == "When did Kurt Weill die? Kurt Weill died in 1955.");
}

TEST_CASE("source names and symbols") {
    CHECK(source_name(SourceTag::KG) == "kg");
    CHECK(source_symbol(SourceTag::Web) == "S");
    CHECK(parse_source("B") == SourceTag::KB);
    CHECK(parse_source("UF") == SourceTag::UF);
    CHECK_FALSE(parse_source("wiki"));
}

TEST_CASE("evidence items validate their provenance") {
    CHECK_NOTHROW(EvidenceItem::make("t", SourceTag::KB, KbProvenance{"p", 0}));
    CHECK_THROWS_AS(EvidenceItem::make("t", SourceTag::KB, WebProvenance{"u", 1}), Error);
    CHECK_THROWS_AS(EvidenceItem::make("", SourceTag::KG, KgProvenance{"t"}), Error);
    CHECK_THROWS_AS(EvidenceItem::make("t", SourceTag::KG, KgProvenance{"t"}, 1.5), Error);
}

TEST_CASE("bm25 matches a brute-force oracle") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> vocab{"weill", "composer", "died", "1950", "berlin", "opera", "jazz", "gil", "evans", "the"};
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<std::string> passages(std::uniform_int_distribution<int>(1, 12)(rng));
        for (auto& p : passages) {
            const auto len = std::uniform_int_distribution<int>(1, 15)(rng);
            for (int w = 0; w < len; ++w) p += vocab[rng() % vocab.size()] + (w + 1 < len ? " " : "");
        }
        std::string query;
        for (int w = 0; w < 4; ++w) query += vocab[rng() % vocab.size()] + " ";
        Bm25Index index(passages);
        const auto results = index.search(query, passages.size());
        REQUIRE(results.size() == passages.size());
        for (std::size_t i = 0; i < results.size(); ++i) {
            const double expected = testing_support::oracle_bm25(passages, query, results[i].index);
            CHECK(results[i].raw_score == doctest::Approx(expected).epsilon(1e-12));
            CHECK(results[i].score == doctest::Approx(expected / (expected + 1)));
            if (i > 0) {
                CHECK(results[i - 1].raw_score >= results[i].raw_score);
                if (results[i - 1].raw_score == results[i].raw_score) CHECK(results[i - 1].index < results[i].index);
            }
        }
    }
}

TEST_CASE("bm25 limits and empty index") {
    Bm25Index index({"a b", "c d", "a a"});
    CHECK(index.search("a", 1).size() == 1);
    CHECK(index.search("a", 1)[0].index == 2);
    CHECK(index.search("zzz", 10).size() == 3);
    CHECK(Bm25Index(std::vector<std::string>{}).search("a", 5).empty());
}

TEST_CASE("linearized triples") {
    CHECK(linearize_triple(Triple{" Kurt Weill ", "date of death", "1950"}) == "Kurt Weill date of death 1950.");
    CHECK(linearize_triple(Triple{"A", "r", "B"}, "({subject}, {relation}, {object})") == "(A, r, B)");
}

TEST_CASE("knowledge base build, retrieve, save and load") {
    const std::vector<KbPage> pages{{"weill", "Kurt Weill was a German composer who died in 1950 in New York."},
                                    {"evans", "Gil Evans was a jazz arranger."},
                                    {"long", std::string("filler ") + std::string(10, 'x')}};
    const auto kb = KnowledgeBase::build(pages, 4);
    CHECK(kb.page_count() == 3);
    CHECK(kb.chunks().size() > 3);
    const auto items = retrieve_kb(&kb, kQuery, kAnswer, 2);
    REQUIRE(items.size() == 2);
    CHECK(items[0].source == SourceTag::KB);
    CHECK(std::get<KbProvenance>(items[0].provenance).page_id == "weill");
    CHECK(items[0].score.has_value());

    TempDir dir;
    kb.save(dir.path() / "kb");
    const auto loaded = KnowledgeBase::load(dir.path() / "kb");
    CHECK(loaded.chunks().size() == kb.chunks().size());
    CHECK(loaded.max_tokens() == 4);
    CHECK(retrieve_kb(&loaded, kQuery, kAnswer, 2) == items);
}

TEST_CASE("knowledge base errors") {
    CHECK(code_of([] { KnowledgeBase::build({{"a", "x"}, {"a", "y"}}); }) == ErrorCode::DuplicatePageId);
    CHECK(code_of([] { retrieve_kb(nullptr, kQuery, kAnswer, 3); }) == ErrorCode::IndexMissing);
    const auto empty = KnowledgeBase::build({});
    CHECK(code_of([&] { retrieve_kb(&empty, kQuery, kAnswer, 3); }) == ErrorCode::IndexMissing);
    TempDir dir;
    CHECK_THROWS_AS(KnowledgeBase::load(dir.path() / "nothing"), Error);
}

TEST_CASE("kb corpus loader reports the bad line") {
    TempDir dir;
    write_file(dir.path() / "kb.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\"}\n");
    try {
        load_kb_corpus(dir.path() / "kb.jsonl");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("knowledge graph retrieval and persistence") {
    const auto kg = KnowledgeGraph::build({{"t1", {"Kurt Weill", "date of death", "1950"}},
                                           {"t2", {"Gil Evans", "occupation", "arranger"}}});
    CHECK(kg.passages()[0] == "Kurt Weill date of death 1950.");
    const auto items = retrieve_kg(&kg, kQuery, kAnswer, 5);
    REQUIRE(items.size() == 2);
    CHECK(std::get<KgProvenance>(items[0].provenance).triple_id == "t1");

    TempDir dir;
    kg.save(dir.path() / "kg");
    const auto loaded = KnowledgeGraph::load(dir.path() / "kg");
    CHECK(retrieve_kg(&loaded, kQuery, kAnswer, 5) == items);

    CHECK(code_of([] { retrieve_kg(nullptr, kQuery, kAnswer, 1); }) == ErrorCode::IndexMissing);
    const auto empty = KnowledgeGraph::build({});
    CHECK(retrieve_kg(&empty, kQuery, kAnswer, 3).empty());
}

TEST_CASE("uploaded files are chunked per request") {
    CHECK(retrieve_uf(kQuery, kAnswer, 3, {}).empty());
    const std::vector<UploadedDocument> docs{{"f1", "notes.txt", "Kurt Weill died in New York in 1950."},
                                             {"f2", "other.md", "Unrelated text about cooking."}};
    const auto items = retrieve_uf(kQuery, kAnswer, 1, docs);
    REQUIRE(items.size() == 1);
    CHECK(items[0].source == SourceTag::UF);
    CHECK(std::get<FileProvenance>(items[0].provenance).file_name == "notes.txt");
}

TEST_CASE("fixture web backend") {
    FixtureWebBackend web(std::map<std::string, std::vector<WebSnippet>>{
        {kQuery.text, {{"one", "https://a"}, {"two", "https://b"}, {"three", ""}}}});
    const auto items = search_web(web, kQuery, kAnswer, 2);
    REQUIRE(items.size() == 2);
    CHECK(items[0].text == "one");
    CHECK(std::get<WebProvenance>(items[1].provenance).rank == 2);
    CHECK(search_web(web, Query{"x", "unknown"}, kAnswer, 5).empty());
}

TEST_CASE("serper backend against a local server") {
    std::string seen_key, seen_body;
    testing_support::LocalServer server([&](httplib::Server& s) {
        s.Post("/search", [&](const httplib::Request& req, httplib::Response& res) {
            seen_key = req.get_header_value("X-API-KEY");
            seen_body = req.body;
            if (seen_key != "secret") {
                res.status = 403;
                return;
            }
            res.set_content(R"({"organic":[{"snippet":"Weill died in 1950.","link":"https://w"},{"title":"no snippet"},{"snippet":"Second.","link":"https://s"}]})",
                            "application/json");
        });
    });
    SerperWebBackend web(Endpoint::parse(server.url("/search")), "secret", RetryPolicy{0, std::chrono::milliseconds(1)});
    const auto items = search_web(web, kQuery, kAnswer, 5);
    REQUIRE(items.size() == 2);
    CHECK(items[0].text == "Weill died in 1950.");
    CHECK(std::get<WebProvenance>(items[1].provenance).url == "https://s");
    const auto body = nlohmann::json::parse(seen_body);
    CHECK(body["q"] == kQuery.text);
    CHECK(body["num"] == 10);  // one result page at minimum

    SerperWebBackend bad(Endpoint::parse(server.url("/search")), "wrong", RetryPolicy{0, std::chrono::milliseconds(1)});
    CHECK(code_of([&] { search_web(bad, kQuery, kAnswer, 5); }) == ErrorCode::BackendUnavailable);
}

TEST_CASE("endpoint parsing") {
    const auto e = Endpoint::parse("https://api.example.com/v1/chat/completions");
    CHECK(e.scheme == "https");
    CHECK(e.port == 443);
    CHECK(e.path == "/v1/chat/completions");
    CHECK(Endpoint::parse("http://localhost:8081").path == "/");
    CHECK(Endpoint::parse("http://localhost:8081").port == 8081);
    CHECK(code_of([] { Endpoint::parse("ftp://x"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { Endpoint::parse("not a url"); }) == ErrorCode::ConfigError);
}
