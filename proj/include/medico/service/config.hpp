#pragma once

#include "medico/detection/detection.hpp"
#include "medico/fusion/fusion.hpp"
#include "medico/llm/gateway.hpp"
#include "medico/retrieval/types.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <set>
#include <string>

namespace medico {

/// Upper bound on per-source and rerank counts accepted from callers.
inline constexpr std::size_t kMaxEvidenceCount = 50;

enum class WebBackendKind { None, Fixture, Serper };
enum class ScorerKind { Lexical, Remote };

struct WebConfig {
    WebBackendKind kind = WebBackendKind::None;
    std::filesystem::path fixture_path;
    std::string endpoint = "https://google.serper.dev/search";
    std::string api_key;
};

struct ScorerConfig {
    ScorerKind kind = ScorerKind::Lexical;
    std::string endpoint;
    std::string api_key;
};

struct PipelineConfig {
    std::size_t n = 5;  // web snippets
    std::size_t m = 5;  // KB chunks
    std::size_t k = 5;  // KG triples
    std::size_t j = 5;  // uploaded-file chunks
    std::size_t l = 5;  // kept after reranking
    double tau = 1.0;
    double delta = 0.5;
    FuseMode fuse_mode = FuseMode::Concatenation;
    DetectionMode detection_mode = DetectionMode::FusedDirect;
    std::set<SourceTag> enabled_sources{SourceTag::Web, SourceTag::KB, SourceTag::KG, SourceTag::UF};
    bool correction_uses_evidence = false;
    std::filesystem::path classifier_path;
    std::chrono::milliseconds source_timeout{30000};
    std::size_t chunk_tokens = 256;

    std::filesystem::path data_dir = "medico-data";
    std::filesystem::path prompts_path;
    WebConfig web;
    ScorerConfig scorer;
    BackendConfig detector;
    BackendConfig corrector;

    /// Throws ConfigError describing the first violated constraint.
    void validate() const;
};

/// Parses "web,kb,kg" (names or S/B/G/U symbols).
std::set<SourceTag> parse_source_list(std::string_view text);

/// Applies the keys present in a JSON object onto cfg (the same keys the
/// config file uses). Unknown keys are a ConfigError.
void apply_config_json(PipelineConfig& cfg, const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// MEDICO_DATA_DIR, MEDICO_LLM_ENDPOINT and MEDICO_LLM_KEY. Setting an LLM
/// endpoint switches both roles to the remote backend.
void apply_env_overrides(PipelineConfig& cfg);

/// Reads the config file named by `path` (or $MEDICO_CONFIG when path is
/// empty; defaults when neither is set), then applies env overrides.
PipelineConfig load_config(const std::filesystem::path& path = {});

/// Snapshot of the caller-visible knobs, stored with every run.
nlohmann::json config_snapshot(const PipelineConfig& cfg);

}  // namespace medico
