#pragma once

#include "medico/correction/correction.hpp"
#include "medico/detection/detection.hpp"
#include "medico/fusion/fusion.hpp"
#include "medico/llm/gateway.hpp"
#include "medico/prompts.hpp"
#include "medico/retrieval/sources.hpp"
#include "medico/retrieval/web.hpp"
#include "medico/service/config.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace medico {

/// Long-lived, shared read-only state a pipeline run draws on.
struct PipelineResources {
    std::shared_ptr<const KnowledgeBase> kb;
    std::shared_ptr<const KnowledgeGraph> kg;
    std::shared_ptr<WebSearchBackend> web;
    std::shared_ptr<Scorer> scorer;
    LlmGateway gateway;
    std::shared_ptr<const EnsembleClassifier> classifier;
    std::shared_ptr<const PromptCatalog> prompts;

    /// Loads indices from cfg.data_dir (missing ones stay null) and builds
    /// every backend named in the config.
    static PipelineResources from_config(const PipelineConfig& cfg);

    /// Builds everything from a fixture directory holding kb.jsonl, kg.jsonl,
    /// web.jsonl and llm.jsonl (scripted mock for both roles); absent files
    /// leave the matching resource unset.
    static PipelineResources from_fixtures(const std::filesystem::path& dir, const PipelineConfig& cfg);
};

struct StageError {
    std::string stage;
    ErrorCode code = ErrorCode::InvalidArgument;
    std::string message;
};

struct RunRecord {
    std::string run_id;
    std::string created_at;
    Query query;
    GeneratedContent answer;
    std::vector<std::string> uploaded_files;
    PerSourceEvidence evidence;
    std::optional<EvidenceSet> reranked;
    std::optional<FusedEvidence> fused;
    std::optional<VeracityVerdict> verdict;
    std::optional<LikelihoodVector> likelihoods;
    std::optional<double> ensemble_probability;
    std::optional<CorrectionSession> correction;
    std::string corrected_text;
    std::string status = "completed";  // "completed" or "failed"
    std::vector<std::string> warnings;
    std::vector<StageError> errors;
    std::map<std::string, double> timings_ms;
    nlohmann::json config;

    bool failed() const { return status != "completed"; }
};

nlohmann::json to_json(const EvidenceItem& item);
EvidenceItem evidence_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const FusedEvidence& fused);
FusedEvidence fused_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const VeracityVerdict& verdict);
VeracityVerdict verdict_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const CorrectionSession& session);
CorrectionSession session_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& doc);

struct RunOptions {
    bool run_correction = true;
    std::vector<UploadedDocument> uploads;
};

/// Retrieval, fusion, detection and (when the verdict is False) correction
/// for one (query, answer) pair. Source failures become warnings as long as
/// some evidence remains; other stage failures end the run with status
/// "failed" and a partial record. Never throws for stage failures.
RunRecord run_pipeline(const Query& q, const GeneratedContent& o, const PipelineConfig& cfg,
                       const PipelineResources& resources, const RunOptions& options = {});

struct ReplayResult {
    VeracityVerdict verdict;
    std::optional<CorrectionSession> correction;
};

/// Re-runs fused-evidence detection and correction from a stored record's
/// evidence (no retrieval).
ReplayResult replay_detection(const RunRecord& record, const PipelineConfig& cfg, const PipelineResources& resources);

std::string new_run_id();

/// Append-only store: one JSON document per run under <dir>/runs/.
class RunStore {
public:
    explicit RunStore(std::filesystem::path dir);

    /// Throws IoError if a record with the same id already exists.
    void append(const RunRecord& record);
    std::optional<nlohmann::json> find(const std::string& run_id) const;

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

/// Uploaded documents by file id; shared across requests.
class UploadStore {
public:
    UploadedDocument add(std::string file_name, std::string text);
    std::optional<UploadedDocument> get(const std::string& file_id) const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, UploadedDocument> documents_;
    std::size_t next_ = 1;
};

/// Plain-text report of a run for terminals.
std::string render_report(const RunRecord& record);

}  // namespace medico
