#include "medico/service/pipeline.hpp"

#include "medico/error.hpp"
#include "medico/text.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace medico {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::shared_ptr<Scorer> make_scorer(const ScorerConfig& cfg) {
    if (cfg.kind == ScorerKind::Remote) return std::make_shared<RemoteReranker>(Endpoint::parse(cfg.endpoint), cfg.api_key);
    return std::make_shared<LexicalScorer>();
}

std::shared_ptr<const PromptCatalog> make_prompts(const PipelineConfig& cfg) {
    if (cfg.prompts_path.empty()) return std::make_shared<PromptCatalog>(PromptCatalog::defaults());
    return std::make_shared<PromptCatalog>(PromptCatalog::load(cfg.prompts_path));
}

std::shared_ptr<const EnsembleClassifier> make_classifier(const PipelineConfig& cfg) {
    if (cfg.classifier_path.empty()) return nullptr;
    return std::make_shared<EnsembleClassifier>(EnsembleClassifier::load(cfg.classifier_path));
}

struct SourceOutcome {
    std::vector<EvidenceItem> items;
    std::optional<Error> error;
};

// Runs one retrieval on a detached thread so a hung backend cannot stall the
// run past the per-source timeout. The task owns copies of everything it uses.
class SourceTask {
public:
    template <typename Fn>
    explicit SourceTask(Fn fn) : state_(std::make_shared<State>()) {
        std::thread([state = state_, fn = std::move(fn)]() mutable {
            SourceOutcome outcome;
            try {
                outcome.items = fn();
            } catch (const Error& e) {
                outcome.error = e;
            } catch (const std::exception& e) {
                outcome.error = Error(ErrorCode::BackendUnavailable, e.what());
            }
            std::lock_guard lock(state->mutex);
            state->outcome = std::move(outcome);
            state->cv.notify_all();
        }).detach();
    }

    SourceOutcome wait(std::chrono::milliseconds timeout) {
        std::unique_lock lock(state_->mutex);
        if (!state_->cv.wait_for(lock, timeout, [&] { return state_->outcome.has_value(); }))
            return SourceOutcome{{}, Error(ErrorCode::BackendUnavailable, "timed out")};
        return std::move(*state_->outcome);
    }

private:
    struct State {
        std::mutex mutex;
        std::condition_variable cv;
        std::optional<SourceOutcome> outcome;
    };
    std::shared_ptr<State> state_;
};

void fail(RunRecord& record, const std::string& stage, const Error& e) {
    record.errors.push_back(StageError{stage, e.code(), e.what()});
    record.status = "failed";
}

}  // namespace

PipelineResources PipelineResources::from_config(const PipelineConfig& cfg) {
    PipelineResources r;
    if (fs::exists(cfg.data_dir / "kb" / "manifest.json"))
        r.kb = std::make_shared<KnowledgeBase>(KnowledgeBase::load(cfg.data_dir / "kb"));
    if (fs::exists(cfg.data_dir / "kg" / "manifest.json"))
        r.kg = std::make_shared<KnowledgeGraph>(KnowledgeGraph::load(cfg.data_dir / "kg"));
    switch (cfg.web.kind) {
        case WebBackendKind::None: break;
        case WebBackendKind::Fixture: r.web = std::make_shared<FixtureWebBackend>(cfg.web.fixture_path); break;
        case WebBackendKind::Serper:
            r.web = std::make_shared<SerperWebBackend>(Endpoint::parse(cfg.web.endpoint), cfg.web.api_key);
            break;
    }
    r.scorer = make_scorer(cfg.scorer);
    r.gateway.detector = make_backend(cfg.detector, Role::Detector);
    r.gateway.corrector = make_backend(cfg.corrector, Role::Corrector);
    r.classifier = make_classifier(cfg);
    r.prompts = make_prompts(cfg);
    return r;
}

PipelineResources PipelineResources::from_fixtures(const fs::path& dir, const PipelineConfig& cfg) {
    PipelineResources r;
    if (fs::exists(dir / "kb.jsonl"))
        r.kb = std::make_shared<KnowledgeBase>(KnowledgeBase::build(load_kb_corpus(dir / "kb.jsonl"), cfg.chunk_tokens));
    if (fs::exists(dir / "kg.jsonl"))
        r.kg = std::make_shared<KnowledgeGraph>(KnowledgeGraph::build(load_kg_corpus(dir / "kg.jsonl")));
    if (fs::exists(dir / "web.jsonl")) r.web = std::make_shared<FixtureWebBackend>(dir / "web.jsonl");
    r.scorer = make_scorer(cfg.scorer);
    if (fs::exists(dir / "llm.jsonl")) {
        r.gateway.detector = ScriptedMock::from_file(dir / "llm.jsonl", Role::Detector);
        r.gateway.corrector = ScriptedMock::from_file(dir / "llm.jsonl", Role::Corrector);
    } else {
        r.gateway.detector = make_backend(cfg.detector, Role::Detector);
        r.gateway.corrector = make_backend(cfg.corrector, Role::Corrector);
    }
    r.classifier = make_classifier(cfg);
    r.prompts = make_prompts(cfg);
    return r;
}

RunRecord run_pipeline(const Query& q, const GeneratedContent& o, const PipelineConfig& cfg,
                       const PipelineResources& resources, const RunOptions& options) {
    RunRecord record;
    record.run_id = new_run_id();
    record.created_at = utc_timestamp();
    record.query = q;
    record.answer = o;
    record.config = config_snapshot(cfg);
    for (const auto& doc : options.uploads) record.uploaded_files.push_back(doc.file_name);
    const auto run_start = Clock::now();
    const PromptCatalog& prompts = resources.prompts ? *resources.prompts : PromptCatalog::defaults();

    try {
        cfg.validate();
    } catch (const Error& e) {
        fail(record, "config", e);
        return record;
    }

    // Step I: retrieval fan-out.
    auto t = Clock::now();
    std::vector<std::pair<SourceTag, SourceTask>> tasks;
    const bool has_uploads = !options.uploads.empty();
    for (const auto tag : cfg.enabled_sources) {
        switch (tag) {
            case SourceTag::Web:
                tasks.emplace_back(tag, SourceTask([web = resources.web, q, o, n = cfg.n] {
                    if (!web) throw Error(ErrorCode::BackendUnavailable, "no web search backend configured");
                    return search_web(*web, q, o, n);
                }));
                break;
            case SourceTag::KB:
                tasks.emplace_back(tag, SourceTask([kb = resources.kb, q, o, m = cfg.m] { return retrieve_kb(kb.get(), q, o, m); }));
                break;
            case SourceTag::KG:
                tasks.emplace_back(tag, SourceTask([kg = resources.kg, q, o, k = cfg.k] { return retrieve_kg(kg.get(), q, o, k); }));
                break;
            case SourceTag::UF:
                if (!has_uploads) break;
                tasks.emplace_back(tag, SourceTask([files = options.uploads, q, o, j = cfg.j, tokens = cfg.chunk_tokens] {
                    return retrieve_uf(q, o, j, files, tokens);
                }));
                break;
        }
    }
    for (auto& [tag, task] : tasks) {
        auto outcome = task.wait(cfg.source_timeout);
        const auto stage = "retrieve." + std::string(source_name(tag));
        if (outcome.error) {
            record.errors.push_back(StageError{stage, outcome.error->code(), outcome.error->what()});
            record.warnings.push_back(stage + ": " + outcome.error->what());
            continue;
        }
        record.evidence[tag] = std::move(outcome.items);
    }
    record.timings_ms["retrieve"] = elapsed_ms(t);

    // Step II: combine, rerank, fuse.
    t = Clock::now();
    try {
        const auto combined = combine(record.evidence);
        if (combined.items.empty()) throw Error(ErrorCode::EmptyEvidence, "no evidence retrieved from any enabled source");
        if (!resources.scorer) throw Error(ErrorCode::ScorerUnavailable, "no relevance scorer configured");
        record.reranked = rerank(*resources.scorer, q, o, combined, cfg.l);
        record.timings_ms["rerank"] = elapsed_ms(t);
        t = Clock::now();
        record.fused = fuse(*record.reranked, cfg.fuse_mode, q, resources.gateway.detector.get(), prompts);
        record.timings_ms["fuse"] = elapsed_ms(t);
    } catch (const Error& e) {
        fail(record, record.reranked ? "fuse" : "rerank", e);
        record.timings_ms["total"] = elapsed_ms(run_start);
        return record;
    }

    // Step III: detection.
    t = Clock::now();
    try {
        if (!resources.gateway.detector) throw Error(ErrorCode::BackendUnavailable, "no detector backend configured");
        if (cfg.detection_mode == DetectionMode::Ensemble) {
            if (!resources.classifier) throw Error(ErrorCode::Untrained, "ensemble detection needs a trained classifier");
            auto clf = *resources.classifier;
            if (clf.tau != cfg.tau)
                record.warnings.push_back("detect: classifier was trained at tau=" + std::to_string(clf.tau) +
                                          ", scoring at tau=" + std::to_string(cfg.tau));
            clf.tau = cfg.tau;
            auto detection = detect_with_ensemble(*resources.gateway.detector, q, o, record.evidence, *record.fused,
                                                  clf, prompts);
            record.verdict = detection.verdict;
            record.likelihoods = detection.likelihoods;
            record.ensemble_probability = detection.probability;
        } else {
            record.verdict = detect_with_evidence(*resources.gateway.detector, q, o, *record.fused, prompts);
        }
    } catch (const Error& e) {
        fail(record, "detect", e);
        record.timings_ms["total"] = elapsed_ms(run_start);
        return record;
    }
    record.timings_ms["detect"] = elapsed_ms(t);

    // Step IV: correction of False verdicts.
    record.corrected_text = o.text;
    if (!record.verdict->label && options.run_correction) {
        t = Clock::now();
        try {
            if (!resources.gateway.corrector) throw Error(ErrorCode::BackendUnavailable, "no corrector backend configured");
            CorrectionOptions copts;
            copts.delta = cfg.delta;
            copts.include_evidence = cfg.correction_uses_evidence;
            record.correction = correct_loop(q, o, record.verdict->rationale, *record.fused,
                                             *resources.gateway.detector, *resources.gateway.corrector, copts, prompts);
            record.corrected_text = record.correction->final_text;
        } catch (const CorrectionAborted& e) {
            record.correction = e.partial();
            fail(record, "correct", e);
        } catch (const Error& e) {
            fail(record, "correct", e);
        }
        record.timings_ms["correct"] = elapsed_ms(t);
    }
    record.timings_ms["total"] = elapsed_ms(run_start);
    return record;
}

ReplayResult replay_detection(const RunRecord& record, const PipelineConfig& cfg, const PipelineResources& resources) {
    if (!record.fused) throw Error(ErrorCode::EmptyEvidence, "record has no fused evidence to replay");
    if (!resources.gateway.detector) throw Error(ErrorCode::BackendUnavailable, "no detector backend configured");
    const PromptCatalog& prompts = resources.prompts ? *resources.prompts : PromptCatalog::defaults();
    ReplayResult result;
    if (cfg.detection_mode == DetectionMode::Ensemble) {
        if (!resources.classifier) throw Error(ErrorCode::Untrained, "ensemble detection needs a trained classifier");
        auto clf = *resources.classifier;
        clf.tau = cfg.tau;
        result.verdict = detect_with_ensemble(*resources.gateway.detector, record.query, record.answer, record.evidence,
                                              *record.fused, clf, prompts)
                             .verdict;
    } else {
        result.verdict = detect_with_evidence(*resources.gateway.detector, record.query, record.answer, *record.fused, prompts);
    }
    if (!result.verdict.label) {
        if (!resources.gateway.corrector) throw Error(ErrorCode::BackendUnavailable, "no corrector backend configured");
        CorrectionOptions copts;
        copts.delta = cfg.delta;
        copts.include_evidence = cfg.correction_uses_evidence;
        result.correction = correct_loop(record.query, record.answer, result.verdict.rationale, *record.fused,
                                         *resources.gateway.detector, *resources.gateway.corrector, copts, prompts);
    }
    return result;
}

std::string new_run_id() {
    static std::mutex mutex;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mutex);
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << rng();
    return out.str();
}

RunStore::RunStore(fs::path dir) : dir_(std::move(dir)) {}

namespace {

bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

}  // namespace

void RunStore::append(const RunRecord& record) {
    if (!valid_id(record.run_id)) throw Error(ErrorCode::InvalidArgument, "invalid run id: " + record.run_id);
    std::lock_guard lock(mutex_);
    const auto path = dir_ / "runs" / (record.run_id + ".json");
    if (fs::exists(path)) throw Error(ErrorCode::IoError, "run already stored: " + record.run_id);
    const auto tmp = path.string() + ".tmp";
    write_file(tmp, to_json(record).dump(2) + "\n");
    fs::rename(tmp, path);
}

std::optional<json> RunStore::find(const std::string& run_id) const {
    if (!valid_id(run_id)) return std::nullopt;
    std::lock_guard lock(mutex_);
    const auto path = dir_ / "runs" / (run_id + ".json");
    if (!fs::exists(path)) return std::nullopt;
    return json::parse(read_file(path));
}

UploadedDocument UploadStore::add(std::string file_name, std::string text) {
    std::lock_guard lock(mutex_);
    char id[32];
    std::snprintf(id, sizeof id, "file-%04zu", next_++);
    UploadedDocument doc{id, std::move(file_name), std::move(text)};
    documents_[doc.file_id] = doc;
    return doc;
}

std::optional<UploadedDocument> UploadStore::get(const std::string& file_id) const {
    std::lock_guard lock(mutex_);
    const auto it = documents_.find(file_id);
    if (it == documents_.end()) return std::nullopt;
    return it->second;
}

std::size_t UploadStore::size() const {
    std::lock_guard lock(mutex_);
    return documents_.size();
}

std::string render_report(const RunRecord& record) {
    std::ostringstream out;
    out << "Run " << record.run_id << " (" << record.status << ")\n";
    out << "Query:  " << record.query.text << "\n";
    out << "Answer: " << record.answer.text << "\n\n";
    for (const auto& [tag, items] : record.evidence) {
        out << "Evidence [" << source_name(tag) << "]: " << items.size() << " item(s)\n";
        for (const auto& item : items) out << "  - " << item.text << "  <" << describe_provenance(item.provenance) << ">\n";
    }
    if (record.fused) out << "\nFused evidence (" << fuse_mode_name(record.fused->mode) << "):\n" << record.fused->text << "\n";
    if (record.verdict) {
        out << "\nVerdict: " << (record.verdict->label ? "True" : "False");
        if (record.ensemble_probability) out << " (p=" << *record.ensemble_probability << ")";
        out << "\nRationale: " << record.verdict->rationale << "\n";
    }
    if (record.correction) {
        const auto& s = *record.correction;
        out << "\nCorrection (" << outcome_name(s.outcome) << ", delta=" << s.delta << "):\n";
        for (const auto& round : s.rounds) {
            out << "  round " << round.index << ": " << (round.verdict.label ? "True" : "False")
                << " prev=" << round.preservation << (round.accepted ? " accepted" : "");
            if (round.rejection != RoundRejection::None) out << " rejected(" << rejection_name(round.rejection) << ")";
            out << "\n    " << round.candidate << "\n";
        }
    }
    if (record.verdict) out << "\nFinal answer: " << record.corrected_text << "\n";
    for (const auto& w : record.warnings) out << "warning: " << w << "\n";
    for (const auto& e : record.errors)
        if (record.failed()) out << "error [" << e.stage << "] " << to_string(e.code) << ": " << e.message << "\n";
    return out.str();
}

}  // namespace medico
