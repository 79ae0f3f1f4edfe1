#include "medico/text.hpp"
#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <sys/wait.h>

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

// Runs the CLI with stderr discarded; arguments are single-quoted.
CliResult run_cli(const std::vector<std::string>& args) {
    std::string cmd = "'" MEDICO_CLI_PATH "'";
    for (const auto& a : args) {
        std::string quoted;
        for (char c : a) quoted += c == '\'' ? std::string("'\\''") : std::string(1, c);
        cmd += " '" + quoted + "'";
    }
    cmd += " 2>/dev/null";
    CliResult result;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) result.out.append(buf, n);
    const int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string fixtures() { return testing_support::fixture_dir("case_studies").string(); }

}  // namespace

TEST_CASE("cli verify prints a report and exits 0") {
    const auto& c = testing_support::case_study("weill");
    const auto r = run_cli({"verify", "--fixtures", fixtures(), "--config", fixtures() + "/config.json", "--query", c.query,
                            "--answer", c.answer});
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("Final answer: Kurt Weill passed away in 1950.") != std::string::npos);
}

TEST_CASE("cli verify --json emits the record and --store persists it") {
    testing_support::TempDir dir;
    const auto& c = testing_support::case_study("eiffel");
    const auto r = run_cli({"verify", "--fixtures", fixtures(), "--query", c.query, "--answer", c.answer, "--json", "--store",
                            dir.path().string()});
    REQUIRE(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["verdict"]["label"] == "True");
    CHECK(std::filesystem::exists(dir.path() / "runs" / (doc["run_id"].get<std::string>() + ".json")));
}

TEST_CASE("cli exit codes for bad usage and failed runs") {
    CHECK(run_cli({"verify", "--query", "x"}).exit_code == 2);
    CHECK(run_cli({"verify", "--fixtures", fixtures(), "--query", "q", "--answer", "a", "--l", "0"}).exit_code == 2);
    CHECK(run_cli({"--no-such-flag"}).exit_code == 2);
    CHECK(run_cli({"verify", "--fixtures", fixtures(), "--sources", "web", "--query", "Unknown?", "--answer", "a"}).exit_code == 1);
}

TEST_CASE("cli index build, train-ensemble and a verify from the built indices") {
    testing_support::TempDir dir;
    const auto data = (dir.path() / "idx").string();
    REQUIRE(run_cli({"index", "build", "--kb", fixtures() + "/kb.jsonl", "--kg", fixtures() + "/kg.jsonl", "--data-dir", data})
                .exit_code == 0);
    CHECK(std::filesystem::exists(dir.path() / "idx" / "kb" / "manifest.json"));
    CHECK(std::filesystem::exists(dir.path() / "idx" / "kg" / "manifest.json"));

    std::string samples;
    for (int i = 0; i < 40; ++i) {
        const double v = i % 2 ? 0.8 + 0.004 * i : 0.2 - 0.004 * i;
        samples += "{\"p_s\":" + std::to_string(v) + ",\"p_b\":" + std::to_string(v) + ",\"p_g\":0.5,\"p_u\":0.5,\"p_f\":" +
                   std::to_string(v) + ",\"label\":" + std::to_string(i % 2) + "}\n";
    }
    medico::write_file(dir.path() / "train.jsonl", samples);
    const auto clf = (dir.path() / "clf.json").string();
    REQUIRE(run_cli({"train-ensemble", "--dataset", (dir.path() / "train.jsonl").string(), "--out", clf}).exit_code == 0);
    CHECK(nlohmann::json::parse(medico::read_file(clf))["weights"].size() == 5);

    medico::write_file(dir.path() / "cfg.json", nlohmann::json{{"llm", {{"both", {{"kind", "mock"}, {"script", fixtures() + "/llm.jsonl"}}}}},
                                                               {"sources", "kb,kg"}}
                                                    .dump());
    const auto& c = testing_support::case_study("commonwealth");
    const auto r = run_cli({"verify", "--config", (dir.path() / "cfg.json").string(), "--data-dir", data, "--query", c.query,
                            "--answer", c.answer});
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("Final answer: King Charles III") != std::string::npos);
}
