#include "medico/service/http_server.hpp"

#include "medico/error.hpp"
#include "medico/retrieval/ingest.hpp"
#include "medico/text.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace medico {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxUploadBytes = 20 * 1024 * 1024;

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, ErrorCode code, const std::string& message,
                const std::string& field = {}) {
    json err{{"code", to_string(code)}, {"message", message}};
    if (!field.empty()) err["field"] = field;
    send_json(res, status, json{{"error", err}});
}

std::string required_text(const json& body, const char* field) {
    if (!body.contains(field)) throw Error(ErrorCode::InvalidArgument, std::string("missing field: ") + field);
    const auto& value = body[field];
    if (!value.is_string() || trim(value.get<std::string>()).empty())
        throw Error(ErrorCode::InvalidArgument, std::string(field) + " must be a non-empty string");
    return value.get<std::string>();
}

}  // namespace

void apply_request_overrides(PipelineConfig& cfg, const json& overrides) {
    static const std::set<std::string> allowed{"n",         "m",          "k",      "j",
                                               "l",         "tau",        "delta",  "fuse_mode",
                                               "detection_mode", "sources", "correction_uses_evidence"};
    if (!overrides.is_object()) throw Error(ErrorCode::ConfigError, "config must be an object");
    for (const auto& [key, value] : overrides.items())
        if (!allowed.count(key)) throw Error(ErrorCode::ConfigError, "config key not overridable per request: " + key);
    apply_config_json(cfg, overrides);
    cfg.validate();
}

HttpService::HttpService(PipelineConfig cfg, PipelineResources resources, std::filesystem::path store_dir)
    : cfg_(std::move(cfg)), resources_(std::move(resources)), runs_(std::move(store_dir)),
      server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

HttpService::~HttpService() = default;

void HttpService::install_routes() {
    auto& srv = *server_;
    srv.set_payload_max_length(kMaxUploadBytes);
    // No SO_REUSEPORT: a second server on a busy port must fail to bind.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });

    srv.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, json{{"status", "ok"}}); });

    srv.Get("/sources", [this](const httplib::Request&, httplib::Response& res) {
        json enabled = json::array();
        for (auto tag : cfg_.enabled_sources) enabled.push_back(source_name(tag));
        json body{{"enabled", enabled},
                  {"web", {{"available", resources_.web != nullptr}}},
                  {"kb", {{"available", resources_.kb != nullptr}}},
                  {"kg", {{"available", resources_.kg != nullptr}}},
                  {"uf", {{"uploaded", uploads_.size()}}}};
        if (resources_.kb) {
            body["kb"]["pages"] = resources_.kb->page_count();
            body["kb"]["chunks"] = resources_.kb->chunks().size();
        }
        if (resources_.kg) body["kg"]["triples"] = resources_.kg->triples().size();
        send_json(res, 200, body);
    });

    srv.Get(R"(/runs/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto record = runs_.find(req.matches[1]);
        if (!record) return send_error(res, 404, ErrorCode::NotFound, "unknown run id");
        send_json(res, 200, *record);
    });

    srv.Post("/upload", [this](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_file("file")) return send_error(res, 400, ErrorCode::InvalidArgument, "missing multipart field", "file");
        const auto file = req.get_file_value("file");
        const auto format = format_from_filename(file.filename);
        if (!format)
            return send_error(res, 415, ErrorCode::UnsupportedFormat, "unsupported file type: " + file.filename, "file");
        try {
            auto text = ingest_file(std::string_view(file.content), *format);
            const auto chars = utf8_length(text);
            const auto doc = uploads_.add(file.filename, std::move(text));
            send_json(res, 200,
                      json{{"file_id", doc.file_id},
                           {"file_name", doc.file_name},
                           {"format", format_name(*format)},
                           {"characters", chars}});
        } catch (const Error& e) {
            send_error(res, 422, e.code(), e.what(), "file");
        }
    });

    srv.Post("/verify", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::parse_error& e) {
            return send_error(res, 400, ErrorCode::ParseError, e.what());
        }
        if (!body.is_object()) return send_error(res, 400, ErrorCode::InvalidArgument, "body must be a JSON object");

        PipelineConfig cfg = cfg_;
        Query q;
        GeneratedContent o;
        RunOptions options;
        try {
            const auto query_id = body.value("query_id", std::string{});
            q = Query::make(query_id, required_text(body, "query"));
            o = GeneratedContent::make(required_text(body, "answer"), query_id);
        } catch (const Error& e) {
            const std::string field = std::string(e.what()).find("query") != std::string::npos ? "query" : "answer";
            return send_error(res, 400, e.code(), e.what(), field);
        }
        try {
            if (body.contains("config")) apply_request_overrides(cfg, body["config"]);
        } catch (const Error& e) {
            return send_error(res, 400, e.code(), e.what(), "config");
        }
        if (body.contains("files")) {
            if (!body["files"].is_array()) return send_error(res, 400, ErrorCode::InvalidArgument, "files must be an array", "files");
            for (const auto& id : body["files"]) {
                const auto doc = id.is_string() ? uploads_.get(id.get<std::string>()) : std::nullopt;
                if (!doc) return send_error(res, 400, ErrorCode::NotFound, "unknown file id: " + id.dump(), "files");
                options.uploads.push_back(*doc);
            }
        }

        const auto record = run_pipeline(q, o, cfg, resources_, options);
        try {
            runs_.append(record);
        } catch (const std::exception& e) {
            spdlog::error("could not persist run {}: {}", record.run_id, e.what());
        }
        send_json(res, record.failed() ? 502 : 200, to_json(record));
    });

    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
            if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            message = e.what();
        }
        send_error(res, 500, ErrorCode::InvalidArgument, message);
    });
}

int HttpService::bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::BindFailure, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpService::listen() { server_->listen_after_bind(); }

void HttpService::wait_until_ready() const { server_->wait_until_ready(); }

void HttpService::stop() { server_->stop(); }

void HttpService::serve(const std::string& host, int port) {
    const int bound = bind(host, port);
    spdlog::info("listening on {}:{}", host, bound);
    listen();
}

}  // namespace medico
