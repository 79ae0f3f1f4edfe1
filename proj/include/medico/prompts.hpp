#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace medico {

/// Named prompt templates with {slot} placeholders. "{{" and "}}" render as
/// literal braces.
class PromptCatalog {
public:
    /// The catalog shipped in data/prompts.json, compiled in.
    static const PromptCatalog& defaults();
    static PromptCatalog load(const std::filesystem::path& path);
    static PromptCatalog parse(const std::string& json_text);

    const std::string& version() const { return version_; }
    const std::string& get(std::string_view name) const;
    const std::vector<std::string>& rationale_examples() const { return rationale_examples_; }

    /// Renders a named template. Throws ConfigError when the template uses a
    /// slot that is not supplied.
    std::string render(std::string_view name, const std::map<std::string, std::string>& slots) const;

private:
    std::string version_;
    std::map<std::string, std::string, std::less<>> templates_;
    std::vector<std::string> rationale_examples_;
};

std::string render_template(std::string_view text, const std::map<std::string, std::string>& slots);

}  // namespace medico
