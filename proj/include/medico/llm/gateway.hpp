#pragma once

#include "medico/http_client.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace medico {

/// Label continuations scored by label_scores().
inline constexpr std::string_view kTrueLabel = "True";
inline constexpr std::string_view kFalseLabel = "False";

struct ChatRequest {
    std::string prompt;
    int max_output_tokens = 512;
    bool deterministic = true;

    static ChatRequest make(std::string prompt, int max_output_tokens = 512, bool deterministic = true);
};

/// Unnormalized model scores (log-probabilities or logits) of the two labels.
struct LabelScores {
    double score_true = 0.0;
    double score_false = 0.0;
};

enum class Role { Detector, Corrector };

std::string_view role_name(Role role);

class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    /// Non-empty completion text. Throws BackendUnavailable or OutputEmpty.
    virtual std::string chat(const ChatRequest& request) = 0;

    /// Scores of "True" and "False" as the continuation of prompt.
    /// Throws ScoringUnsupported when the backend cannot produce them.
    virtual LabelScores label_scores(const std::string& prompt) = 0;

    virtual std::string describe() const = 0;
};

/// One line of a mock script: {"role"?, "match": str | [str...], "reply"? , "scores"?: [t, f]}.
struct ScriptRule {
    std::optional<Role> role;             // unset: applies to every role
    std::vector<std::string> match;       // all substrings must occur in the prompt
    std::optional<std::string> reply;
    std::optional<LabelScores> scores;
};

struct TranscriptEntry {
    std::string kind;  // "chat" or "label_scores"
    std::string prompt;
    std::string output;
};

/// Deterministic backend driven by a rule script. The first rule (in file
/// order) whose role fits and whose substrings all occur in the prompt wins.
/// Prompts matching no chat rule get the reply "UNSCRIPTED".
class ScriptedMock final : public LlmBackend {
public:
    static constexpr std::string_view kUnscriptedReply = "UNSCRIPTED";

    ScriptedMock(std::vector<ScriptRule> rules, Role role);
    static std::shared_ptr<ScriptedMock> from_file(const std::filesystem::path& path, Role role);
    static std::vector<ScriptRule> parse_script(const std::string& jsonl, const std::string& origin = "<script>");

    std::string chat(const ChatRequest& request) override;
    LabelScores label_scores(const std::string& prompt) override;
    std::string describe() const override;

    std::vector<TranscriptEntry> transcript() const;
    void clear_transcript();

private:
    const ScriptRule* find(const std::string& prompt, bool want_scores) const;

    std::vector<ScriptRule> rules_;
    Role role_;
    mutable std::mutex mutex_;
    std::vector<TranscriptEntry> transcript_;
};

struct RemoteApiConfig {
    std::string endpoint;  // full chat-completions URL
    std::string api_key;
    std::string model;
    bool supports_logprobs = true;
    int top_logprobs = 20;
    RetryPolicy retry{};
    std::chrono::seconds timeout{60};
};

/// OpenAI-compatible chat-completions client. Label scores come from the
/// top log-probabilities of the first generated token.
class RemoteApiBackend final : public LlmBackend {
public:
    explicit RemoteApiBackend(RemoteApiConfig config);

    std::string chat(const ChatRequest& request) override;
    LabelScores label_scores(const std::string& prompt) override;
    std::string describe() const override;

private:
    RemoteApiConfig config_;
    Endpoint endpoint_;
};

enum class BackendKind { RemoteApi, ScriptedMock };

struct BackendConfig {
    BackendKind kind = BackendKind::ScriptedMock;
    RemoteApiConfig remote;
    std::filesystem::path script_path;
};

std::shared_ptr<LlmBackend> make_backend(const BackendConfig& config, Role role);

/// Per-role backend pair; detector and corrector may be different models.
struct LlmGateway {
    std::shared_ptr<LlmBackend> detector;
    std::shared_ptr<LlmBackend> corrector;

    LlmBackend& for_role(Role role) const;
};

}  // namespace medico
