#include "medico/service/config.hpp"

#include "medico/error.hpp"
#include "medico/text.hpp"

#include <cstdlib>

namespace medico {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    std::filesystem::path p(value);
    if (p.is_relative() && !base.empty()) return base / p;
    return p;
}

std::size_t read_count(const json& doc, const char* key) {
    const auto& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1)
        throw Error(ErrorCode::ConfigError, std::string(key) + " must be a positive integer");
    return v.get<std::size_t>();
}

double read_real(const json& doc, const char* key) {
    const auto& v = doc.at(key);
    if (!v.is_number()) throw Error(ErrorCode::ConfigError, std::string(key) + " must be a number");
    return v.get<double>();
}

void apply_backend_json(BackendConfig& backend, const json& doc, const std::filesystem::path& base) {
    for (const auto& [key, value] : doc.items()) {
        if (key == "kind") {
            const auto kind = to_lower_ascii(value.get<std::string>());
            if (kind == "mock" || kind == "scripted" || kind == "scripted_mock") backend.kind = BackendKind::ScriptedMock;
            else if (kind == "remote" || kind == "remote_api") backend.kind = BackendKind::RemoteApi;
            else throw Error(ErrorCode::ConfigError, "unknown LLM backend kind: " + kind);
        } else if (key == "script") {
            backend.script_path = resolve(base, value.get<std::string>());
        } else if (key == "endpoint") {
            backend.remote.endpoint = value.get<std::string>();
        } else if (key == "api_key") {
            backend.remote.api_key = value.get<std::string>();
        } else if (key == "model") {
            backend.remote.model = value.get<std::string>();
        } else if (key == "supports_logprobs") {
            backend.remote.supports_logprobs = value.get<bool>();
        } else if (key == "top_logprobs") {
            backend.remote.top_logprobs = value.get<int>();
        } else if (key == "timeout_s") {
            backend.remote.timeout = std::chrono::seconds(value.get<int>());
        } else {
            throw Error(ErrorCode::ConfigError, "unknown LLM backend key: " + key);
        }
    }
}

}  // namespace

std::set<SourceTag> parse_source_list(std::string_view text) {
    std::set<SourceTag> sources;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos) comma = text.size();
        const auto part = trim(text.substr(start, comma - start));
        if (!part.empty()) {
            const auto tag = parse_source(part);
            if (!tag) throw Error(ErrorCode::ConfigError, "unknown retrieval source: " + part);
            sources.insert(*tag);
        }
        start = comma + 1;
    }
    return sources;
}

void PipelineConfig::validate() const {
    const std::pair<const char*, std::size_t> counts[] = {{"n", n}, {"m", m}, {"k", k}, {"j", j}, {"l", l}};
    for (const auto& [name, value] : counts) {
        if (value < 1 || value > kMaxEvidenceCount)
            throw Error(ErrorCode::ConfigError,
                        std::string(name) + " must lie in [1, " + std::to_string(kMaxEvidenceCount) + "]");
    }
    if (!(tau > 0.0)) throw Error(ErrorCode::ConfigError, "tau must be positive");
    if (!(delta >= 0.0 && delta <= 1.0)) throw Error(ErrorCode::ConfigError, "delta must lie in [0,1]");
    if (enabled_sources.empty()) throw Error(ErrorCode::ConfigError, "at least one retrieval source must be enabled");
    if (detection_mode == DetectionMode::Ensemble && classifier_path.empty())
        throw Error(ErrorCode::ConfigError, "ensemble detection needs a trained classifier path");
    if (chunk_tokens < 1) throw Error(ErrorCode::ConfigError, "chunk_tokens must be >= 1");
}

void apply_config_json(PipelineConfig& cfg, const json& doc, const std::filesystem::path& base) {
    if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "n") cfg.n = read_count(doc, "n");
            else if (key == "m") cfg.m = read_count(doc, "m");
            else if (key == "k") cfg.k = read_count(doc, "k");
            else if (key == "j") cfg.j = read_count(doc, "j");
            else if (key == "l") cfg.l = read_count(doc, "l");
            else if (key == "tau") cfg.tau = read_real(doc, "tau");
            else if (key == "delta") cfg.delta = read_real(doc, "delta");
            else if (key == "fuse_mode") cfg.fuse_mode = parse_fuse_mode(value.get<std::string>());
            else if (key == "detection_mode") cfg.detection_mode = parse_detection_mode(value.get<std::string>());
            else if (key == "sources") {
                if (value.is_string()) {
                    cfg.enabled_sources = parse_source_list(value.get<std::string>());
                } else {
                    cfg.enabled_sources.clear();
                    for (const auto& s : value) {
                        const auto tag = parse_source(s.get<std::string>());
                        if (!tag) throw Error(ErrorCode::ConfigError, "unknown retrieval source: " + s.get<std::string>());
                        cfg.enabled_sources.insert(*tag);
                    }
                }
            } else if (key == "correction_uses_evidence") cfg.correction_uses_evidence = value.get<bool>();
            else if (key == "classifier") cfg.classifier_path = resolve(base, value.get<std::string>());
            else if (key == "source_timeout_ms") cfg.source_timeout = std::chrono::milliseconds(value.get<long long>());
            else if (key == "chunk_tokens") cfg.chunk_tokens = read_count(doc, "chunk_tokens");
            else if (key == "data_dir") cfg.data_dir = resolve(base, value.get<std::string>());
            else if (key == "prompts") cfg.prompts_path = resolve(base, value.get<std::string>());
            else if (key == "web") {
                for (const auto& [wk, wv] : value.items()) {
                    if (wk == "kind") {
                        const auto kind = to_lower_ascii(wv.get<std::string>());
                        if (kind == "none") cfg.web.kind = WebBackendKind::None;
                        else if (kind == "fixture") cfg.web.kind = WebBackendKind::Fixture;
                        else if (kind == "serper") cfg.web.kind = WebBackendKind::Serper;
                        else throw Error(ErrorCode::ConfigError, "unknown web backend: " + kind);
                    } else if (wk == "fixture") cfg.web.fixture_path = resolve(base, wv.get<std::string>());
                    else if (wk == "endpoint") cfg.web.endpoint = wv.get<std::string>();
                    else if (wk == "api_key") cfg.web.api_key = wv.get<std::string>();
                    else throw Error(ErrorCode::ConfigError, "unknown web key: " + wk);
                }
            } else if (key == "scorer") {
                for (const auto& [sk, sv] : value.items()) {
                    if (sk == "kind") {
                        const auto kind = to_lower_ascii(sv.get<std::string>());
                        if (kind == "lexical") cfg.scorer.kind = ScorerKind::Lexical;
                        else if (kind == "remote") cfg.scorer.kind = ScorerKind::Remote;
                        else throw Error(ErrorCode::ConfigError, "unknown scorer kind: " + kind);
                    } else if (sk == "endpoint") cfg.scorer.endpoint = sv.get<std::string>();
                    else if (sk == "api_key") cfg.scorer.api_key = sv.get<std::string>();
                    else throw Error(ErrorCode::ConfigError, "unknown scorer key: " + sk);
                }
            } else if (key == "llm") {
                for (const auto& [role, backend] : value.items()) {
                    if (role == "detector") apply_backend_json(cfg.detector, backend, base);
                    else if (role == "corrector") apply_backend_json(cfg.corrector, backend, base);
                    else if (role == "both") {
                        apply_backend_json(cfg.detector, backend, base);
                        apply_backend_json(cfg.corrector, backend, base);
                    } else throw Error(ErrorCode::ConfigError, "unknown LLM role: " + role);
                }
            } else {
                throw Error(ErrorCode::ConfigError, "unknown config key: " + key);
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad config value: ") + e.what());
    }
}

void apply_env_overrides(PipelineConfig& cfg) {
    if (const char* dir = std::getenv("MEDICO_DATA_DIR"); dir && *dir) cfg.data_dir = dir;
    if (const char* endpoint = std::getenv("MEDICO_LLM_ENDPOINT"); endpoint && *endpoint) {
        for (auto* backend : {&cfg.detector, &cfg.corrector}) {
            backend->kind = BackendKind::RemoteApi;
            backend->remote.endpoint = endpoint;
        }
    }
    if (const char* key = std::getenv("MEDICO_LLM_KEY"); key && *key) {
        cfg.detector.remote.api_key = key;
        cfg.corrector.remote.api_key = key;
    }
}

PipelineConfig load_config(const std::filesystem::path& path) {
    PipelineConfig cfg;
    std::filesystem::path file = path;
    if (file.empty()) {
        if (const char* env = std::getenv("MEDICO_CONFIG"); env && *env) file = env;
    }
    if (!file.empty()) {
        json doc;
        try {
            doc = json::parse(read_file(file));
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::ConfigError, file.string() + ": " + e.what());
        }
        apply_config_json(cfg, doc, file.parent_path());
    }
    apply_env_overrides(cfg);
    return cfg;
}

json config_snapshot(const PipelineConfig& cfg) {
    json sources = json::array();
    for (auto tag : cfg.enabled_sources) sources.push_back(source_name(tag));
    return json{{"n", cfg.n},
                {"m", cfg.m},
                {"k", cfg.k},
                {"j", cfg.j},
                {"l", cfg.l},
                {"tau", cfg.tau},
                {"delta", cfg.delta},
                {"fuse_mode", fuse_mode_name(cfg.fuse_mode)},
                {"detection_mode", detection_mode_name(cfg.detection_mode)},
                {"sources", sources},
                {"correction_uses_evidence", cfg.correction_uses_evidence}};
}

}  // namespace medico
