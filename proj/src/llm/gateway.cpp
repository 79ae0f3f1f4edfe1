#include "medico/llm/gateway.hpp"

#include "medico/error.hpp"
#include "medico/text.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

namespace medico {

using nlohmann::json;

ChatRequest ChatRequest::make(std::string prompt, int max_output_tokens, bool deterministic) {
    if (trim(prompt).empty()) throw Error(ErrorCode::InvalidArgument, "chat prompt is empty");
    if (max_output_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_output_tokens must be positive");
    return ChatRequest{std::move(prompt), max_output_tokens, deterministic};
}

std::string_view role_name(Role role) { return role == Role::Detector ? "detector" : "corrector"; }

// ---------------------------------------------------------------------------
// ScriptedMock
// ---------------------------------------------------------------------------

ScriptedMock::ScriptedMock(std::vector<ScriptRule> rules, Role role) : rules_(std::move(rules)), role_(role) {}

std::vector<ScriptRule> ScriptedMock::parse_script(const std::string& jsonl, const std::string& origin) {
    std::vector<ScriptRule> rules;
    std::istringstream in(jsonl);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto trimmed = trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto where = origin + ":" + std::to_string(number);
        json record;
        try {
            record = json::parse(trimmed);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::ParseError, where + ": " + e.what());
        }
        ScriptRule rule;
        if (record.contains("role")) {
            const auto role = record["role"].get<std::string>();
            if (role == "detector") rule.role = Role::Detector;
            else if (role == "corrector") rule.role = Role::Corrector;
            else if (role != "any") throw Error(ErrorCode::ParseError, where + ": unknown role " + role);
        }
        const auto& match = record.value("match", json(""));
        if (match.is_string()) {
            rule.match.push_back(match.get<std::string>());
        } else if (match.is_array()) {
            for (const auto& m : match) rule.match.push_back(m.get<std::string>());
        } else {
            throw Error(ErrorCode::ParseError, where + ": match must be a string or array of strings");
        }
        if (record.contains("reply")) rule.reply = record["reply"].get<std::string>();
        if (record.contains("scores")) {
            const auto& scores = record["scores"];
            if (!scores.is_array() || scores.size() != 2)
                throw Error(ErrorCode::ParseError, where + ": scores must be [true_score, false_score]");
            rule.scores = LabelScores{scores[0].get<double>(), scores[1].get<double>()};
        }
        if (!rule.reply && !rule.scores) throw Error(ErrorCode::ParseError, where + ": rule needs reply or scores");
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::shared_ptr<ScriptedMock> ScriptedMock::from_file(const std::filesystem::path& path, Role role) {
    return std::make_shared<ScriptedMock>(parse_script(read_file(path), path.string()), role);
}

const ScriptRule* ScriptedMock::find(const std::string& prompt, bool want_scores) const {
    for (const auto& rule : rules_) {
        if (rule.role && *rule.role != role_) continue;
        if (want_scores ? !rule.scores : !rule.reply) continue;
        bool all = true;
        for (const auto& needle : rule.match) {
            if (prompt.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) return &rule;
    }
    return nullptr;
}

std::string ScriptedMock::chat(const ChatRequest& request) {
    const auto* rule = find(request.prompt, false);
    std::string reply = rule ? *rule->reply : std::string(kUnscriptedReply);
    if (trim(reply).empty()) throw Error(ErrorCode::OutputEmpty, "scripted reply is empty");
    std::lock_guard lock(mutex_);
    transcript_.push_back(TranscriptEntry{"chat", request.prompt, reply});
    return reply;
}

LabelScores ScriptedMock::label_scores(const std::string& prompt) {
    const auto* rule = find(prompt, true);
    if (!rule) throw Error(ErrorCode::ScoringUnsupported, "no scripted label scores for prompt");
    std::ostringstream out;
    out.precision(17);
    out << rule->scores->score_true << "," << rule->scores->score_false;
    std::lock_guard lock(mutex_);
    transcript_.push_back(TranscriptEntry{"label_scores", prompt, out.str()});
    return *rule->scores;
}

std::string ScriptedMock::describe() const {
    return "scripted-mock(" + std::string(role_name(role_)) + ", " + std::to_string(rules_.size()) + " rules)";
}

std::vector<TranscriptEntry> ScriptedMock::transcript() const {
    std::lock_guard lock(mutex_);
    return transcript_;
}

void ScriptedMock::clear_transcript() {
    std::lock_guard lock(mutex_);
    transcript_.clear();
}

// ---------------------------------------------------------------------------
// RemoteApiBackend
// ---------------------------------------------------------------------------

RemoteApiBackend::RemoteApiBackend(RemoteApiConfig config)
    : config_(std::move(config)), endpoint_(Endpoint::parse(config_.endpoint)) {}

namespace {

json call_completion(const Endpoint& endpoint, const RemoteApiConfig& config, const json& request) {
    std::map<std::string, std::string> headers{{"Accept", "application/json"}};
    if (!config.api_key.empty()) headers["Authorization"] = "Bearer " + config.api_key;
    const auto response = post_json(endpoint, request.dump(), headers, config.retry, config.timeout);
    if (response.status != 200)
        throw Error(ErrorCode::BackendUnavailable,
                    "LLM endpoint returned HTTP " + std::to_string(response.status) + ": " + response.body.substr(0, 200));
    try {
        return json::parse(response.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::BackendUnavailable, std::string("LLM endpoint returned invalid JSON: ") + e.what());
    }
}

json user_message(const std::string& prompt) {
    return json::array({json{{"role", "user"}, {"content", prompt}}});
}

}  // namespace

std::string RemoteApiBackend::chat(const ChatRequest& request) {
    json body{{"model", config_.model},
              {"messages", user_message(request.prompt)},
              {"max_tokens", request.max_output_tokens}};
    if (request.deterministic) body["temperature"] = 0.0;
    const auto response = call_completion(endpoint_, config_, body);
    std::string text;
    try {
        const auto& content = response.at("choices").at(0).at("message").at("content");
        if (content.is_string()) text = content.get<std::string>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::OutputEmpty, "LLM response has no choices[0].message.content");
    }
    if (trim(text).empty()) throw Error(ErrorCode::OutputEmpty, "LLM returned an empty completion");
    return text;
}

LabelScores RemoteApiBackend::label_scores(const std::string& prompt) {
    if (!config_.supports_logprobs)
        throw Error(ErrorCode::ScoringUnsupported, "backend " + config_.model + " does not expose log-probabilities");
    json body{{"model", config_.model},
              {"messages", user_message(prompt)},
              {"max_tokens", 1},
              {"temperature", 0.0},
              {"logprobs", true},
              {"top_logprobs", config_.top_logprobs}};
    const auto response = call_completion(endpoint_, config_, body);
    json candidates;
    try {
        candidates = response.at("choices").at(0).at("logprobs").at("content").at(0).at("top_logprobs");
    } catch (const json::exception&) {
        throw Error(ErrorCode::ScoringUnsupported, "LLM response carries no top_logprobs");
    }
    std::optional<double> true_score;
    std::optional<double> false_score;
    double floor = 0.0;
    for (const auto& candidate : candidates) {
        const auto token = trim(candidate.value("token", std::string{}));
        const double logprob = candidate.value("logprob", -1e9);
        floor = std::min(floor, logprob);
        if (!true_score && token == kTrueLabel) true_score = logprob;
        if (!false_score && token == kFalseLabel) false_score = logprob;
    }
    if (!true_score && !false_score)
        throw Error(ErrorCode::ScoringUnsupported, "neither label appears among the top log-probabilities");
    // A label outside the top list is at most as likely as the least likely listed token.
    return LabelScores{true_score.value_or(floor), false_score.value_or(floor)};
}

std::string RemoteApiBackend::describe() const { return "remote(" + config_.model + " @ " + config_.endpoint + ")"; }

std::shared_ptr<LlmBackend> make_backend(const BackendConfig& config, Role role) {
    if (config.kind == BackendKind::ScriptedMock) {
        if (config.script_path.empty()) throw Error(ErrorCode::ConfigError, "scripted mock needs a script path");
        return ScriptedMock::from_file(config.script_path, role);
    }
    if (config.remote.endpoint.empty())
        throw Error(ErrorCode::ConfigError, "remote LLM backend needs an endpoint (MEDICO_LLM_ENDPOINT)");
    return std::make_shared<RemoteApiBackend>(config.remote);
}

LlmBackend& LlmGateway::for_role(Role role) const {
    const auto& backend = role == Role::Detector ? detector : corrector;
    if (!backend) throw Error(ErrorCode::ConfigError, "no LLM backend configured for " + std::string(role_name(role)));
    return *backend;
}

}  // namespace medico
