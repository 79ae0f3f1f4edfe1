#include "medico/error.hpp"
#include "medico/eval/harness.hpp"
#include "medico/retrieval/ingest.hpp"
#include "medico/service/http_server.hpp"
#include "medico/service/pipeline.hpp"
#include "medico/text.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>

using namespace medico;

namespace {

constexpr int kExitPipelineError = 1;
constexpr int kExitUsage = 2;

struct PipelineFlags {
    std::optional<std::size_t> n, m, k, j, l;
    std::optional<double> tau, delta;
    std::optional<std::string> fuse_mode, detection_mode, sources, classifier;
    std::string config_path;
    std::string data_dir;
    std::string fixtures;
    bool correction_evidence = false;

    void attach(CLI::App& cmd) {
        cmd.add_option("--n", n, "web snippets");
        cmd.add_option("--m", m, "knowledge-base chunks");
        cmd.add_option("--k", k, "knowledge-graph triples");
        cmd.add_option("--j", j, "uploaded-file chunks");
        cmd.add_option("--l", l, "evidence kept after reranking");
        cmd.add_option("--tau", tau, "likelihood temperature");
        cmd.add_option("--delta", delta, "preservation threshold");
        cmd.add_option("--fuse-mode", fuse_mode, "concatenation | summarization");
        cmd.add_option("--detection-mode", detection_mode, "fused | ensemble");
        cmd.add_option("--sources", sources, "comma list of web,kb,kg,uf");
        cmd.add_option("--classifier", classifier, "trained ensemble classifier");
        cmd.add_flag("--correction-evidence", correction_evidence, "show fused evidence to the corrector");
        cmd.add_option("--config", config_path, "config file (default $MEDICO_CONFIG)");
        cmd.add_option("--data-dir", data_dir, "index directory");
        cmd.add_option("--fixtures", fixtures, "fixture directory (kb/kg/web/llm jsonl)");
    }

    PipelineConfig build() const {
        auto cfg = load_config(config_path);
        nlohmann::json overrides = nlohmann::json::object();
        if (n) overrides["n"] = *n;
        if (m) overrides["m"] = *m;
        if (k) overrides["k"] = *k;
        if (j) overrides["j"] = *j;
        if (l) overrides["l"] = *l;
        if (tau) overrides["tau"] = *tau;
        if (delta) overrides["delta"] = *delta;
        if (fuse_mode) overrides["fuse_mode"] = *fuse_mode;
        if (detection_mode) overrides["detection_mode"] = *detection_mode;
        if (sources) overrides["sources"] = *sources;
        if (classifier) overrides["classifier"] = *classifier;
        if (correction_evidence) overrides["correction_uses_evidence"] = true;
        apply_config_json(cfg, overrides);
        if (!data_dir.empty()) cfg.data_dir = data_dir;
        cfg.validate();
        return cfg;
    }

    PipelineResources resources(const PipelineConfig& cfg) const {
        if (!fixtures.empty()) return PipelineResources::from_fixtures(fixtures, cfg);
        return PipelineResources::from_config(cfg);
    }
};

std::vector<UploadedDocument> read_uploads(const std::vector<std::string>& paths) {
    std::vector<UploadedDocument> docs;
    for (const auto& path : paths) {
        const auto name = std::filesystem::path(path).filename().string();
        const auto format = format_from_filename(name);
        if (!format) throw Error(ErrorCode::UnsupportedFormat, "unsupported file type: " + name);
        docs.push_back(UploadedDocument{"file-" + std::to_string(docs.size() + 1), name,
                                        ingest_file(std::string_view(read_file(path)), *format)});
    }
    return docs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evidence-fused hallucination detection and correction"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");

    // verify
    auto* verify = app.add_subcommand("verify", "check one answer and correct it if needed");
    PipelineFlags verify_flags;
    verify_flags.attach(*verify);
    std::string query, answer, store_dir;
    std::vector<std::string> files;
    bool as_json = false;
    verify->add_option("--query", query, "user query")->required();
    verify->add_option("--answer", answer, "generated answer to check")->required();
    verify->add_option("--file", files, "uploaded document (txt, docx, pdf, md)");
    verify->add_option("--store", store_dir, "persist the run record under this directory");
    verify->add_flag("--json", as_json, "print the run record as JSON");

    // index build
    auto* index = app.add_subcommand("index", "manage local indices");
    index->require_subcommand(1);
    auto* build = index->add_subcommand("build", "build KB and/or KG indices");
    std::string kb_corpus, kg_corpus, index_dir = "medico-data";
    std::size_t chunk_tokens = 256;
    build->add_option("--kb", kb_corpus, "KB pages, JSON lines {id, text}");
    build->add_option("--kg", kg_corpus, "KG triples, JSON lines {id, subject, relation, object}");
    build->add_option("--data-dir", index_dir, "output directory");
    build->add_option("--chunk-tokens", chunk_tokens, "max tokens per KB chunk")->check(CLI::PositiveNumber);

    // train-ensemble
    auto* train = app.add_subcommand("train-ensemble", "fit the likelihood ensemble classifier");
    std::string train_data, model_out;
    std::size_t epochs = 500;
    double step = 0.5, train_tau = 1.0;
    train->add_option("--dataset", train_data, "JSON lines {p_s,p_b,p_g,p_u,p_f,label}")->required();
    train->add_option("--out", model_out, "classifier output path")->required();
    train->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
    train->add_option("--step", step)->check(CLI::PositiveNumber);
    train->add_option("--tau", train_tau, "temperature the likelihoods were computed with")->check(CLI::PositiveNumber);

    // eval
    auto* eval = app.add_subcommand("eval", "run the evaluation harness");
    PipelineFlags eval_flags;
    eval_flags.attach(*eval);
    std::string dataset, json_out, annotations_path;
    std::optional<std::size_t> sample;
    std::uint64_t seed = 0;
    bool no_correction = false;
    eval->add_option("--dataset", dataset, "JSON lines {question, right_answer, hallucinated_answer}")->required();
    eval->add_option("--sample", sample, "evaluate a seeded random subset of this size");
    eval->add_option("--seed", seed);
    eval->add_option("--json-out", json_out, "also write the report as JSON");
    eval->add_option("--annotations", annotations_path, "golden-evidence annotations overriding the proxy");
    eval->add_flag("--no-correction", no_correction);

    // serve
    auto* serve = app.add_subcommand("serve", "run the HTTP API");
    PipelineFlags serve_flags;
    serve_flags.attach(*serve);
    std::string host = "127.0.0.1", serve_store = "medico-runs";
    int port = 8080;
    serve->add_option("--host", host);
    serve->add_option("--port", port)->check(CLI::Range(0, 65535));
    serve->add_option("--store", serve_store, "run store directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    spdlog::set_default_logger(spdlog::stderr_color_mt("medico"));
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

    try {
        if (*verify) {
            const auto cfg = verify_flags.build();
            const auto resources = verify_flags.resources(cfg);
            RunOptions options;
            options.uploads = read_uploads(files);
            const auto record = run_pipeline(Query::make("cli", query), GeneratedContent::make(answer, "cli"), cfg,
                                             resources, options);
            if (!store_dir.empty()) RunStore(store_dir).append(record);
            std::cout << (as_json ? to_json(record).dump(2) + "\n" : render_report(record));
            return record.failed() ? kExitPipelineError : 0;
        }
        if (*build) {
            if (kb_corpus.empty() && kg_corpus.empty()) {
                std::cerr << "index build: give --kb and/or --kg\n";
                return kExitUsage;
            }
            if (!kb_corpus.empty()) {
                const auto kb = KnowledgeBase::build(load_kb_corpus(kb_corpus), chunk_tokens);
                kb.save(std::filesystem::path(index_dir) / "kb");
                std::cout << "kb: " << kb.page_count() << " pages, " << kb.chunks().size() << " chunks\n";
            }
            if (!kg_corpus.empty()) {
                const auto kg = KnowledgeGraph::build(load_kg_corpus(kg_corpus));
                kg.save(std::filesystem::path(index_dir) / "kg");
                std::cout << "kg: " << kg.triples().size() << " triples\n";
            }
            return 0;
        }
        if (*train) {
            auto result = train_classifier(load_training_dataset(train_data), epochs, step);
            result.classifier.tau = train_tau;
            result.classifier.save(model_out);
            std::cout << "trained on " << train_data << ", final mean BCE " << result.epoch_loss.back() << "\n";
            return 0;
        }
        if (*eval) {
            const auto cfg = eval_flags.build();
            const auto resources = eval_flags.resources(cfg);
            std::optional<GoldenAnnotations> annotations;
            if (!annotations_path.empty()) annotations = GoldenAnnotations::load(annotations_path);
            EvalOptions options;
            options.run_correction = !no_correction;
            options.annotations = annotations ? &*annotations : nullptr;
            const auto report = run_evaluation(load_dataset(dataset, sample, seed), cfg, resources, options);
            std::cout << render_report_table(report);
            if (!json_out.empty()) write_file(json_out, report_to_json(report).dump(2) + "\n");
            return 0;
        }
        if (*serve) {
            const auto cfg = serve_flags.build();
            HttpService service(cfg, serve_flags.resources(cfg), serve_store);
            service.serve(host, port);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? kExitUsage : kExitPipelineError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipelineError;
    }
    return 0;
}
