#pragma once

#include "medico/service/config.hpp"
#include "medico/service/pipeline.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace medico {

/// JSON API over run_pipeline:
///   POST /verify   {query, answer, query_id?, config?, files?} -> RunRecord
///   POST /upload   multipart field "file"                     -> {file_id, ...}
///   GET  /runs/ID                                              -> RunRecord
///   GET  /sources                                              -> enabled sources, index stats
///   GET  /health
class HttpService {
public:
    HttpService(PipelineConfig cfg, PipelineResources resources, std::filesystem::path store_dir);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds host:port (port 0 picks a free one) and returns the bound port.
    /// Throws BindFailure.
    int bind(const std::string& host, int port);

    /// Serves until stop(); call after bind().
    void listen();
    /// Blocks until listen() is accepting connections.
    void wait_until_ready() const;
    void stop();

    /// Blocking bind + listen.
    void serve(const std::string& host, int port);

private:
    void install_routes();

    PipelineConfig cfg_;
    PipelineResources resources_;
    RunStore runs_;
    UploadStore uploads_;
    std::unique_ptr<httplib::Server> server_;
};

/// Request-level overrides accepted by POST /verify: the retrieval counts,
/// tau, delta, fuse/detection mode, sources and correction_uses_evidence.
/// Anything else (backends, paths) is rejected with ConfigError.
void apply_request_overrides(PipelineConfig& cfg, const nlohmann::json& overrides);

}  // namespace medico
