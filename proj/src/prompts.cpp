#include "medico/prompts.hpp"

#include "default_prompts.inc"
#include "medico/error.hpp"
#include "medico/text.hpp"

#include <nlohmann/json.hpp>

namespace medico {

namespace {

constexpr const char* kRequiredTemplates[] = {"summarize",    "detect_label", "rationale_icl",
                                              "support_note", "span_identify", "span_revise",
                                              "whole_revise", "evidence_block", "history_header",
                                              "history_item", "minimize_edits"};

}  // namespace

std::string render_template(std::string_view text, const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(text.size() * 2);
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
            out.push_back('{');
            ++i;
        } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
            out.push_back('}');
            ++i;
        } else if (c == '{') {
            const auto close = text.find('}', i);
            if (close == std::string_view::npos) throw Error(ErrorCode::ConfigError, "unterminated template slot");
            const std::string name(text.substr(i + 1, close - i - 1));
            const auto it = slots.find(name);
            if (it == slots.end()) throw Error(ErrorCode::ConfigError, "template slot {" + name + "} has no value");
            out += it->second;
            i = close;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

PromptCatalog PromptCatalog::parse(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("prompt catalog is not valid JSON: ") + e.what());
    }
    PromptCatalog catalog;
    catalog.version_ = doc.value("version", std::string("unversioned"));
    const auto templates = doc.value("templates", nlohmann::json::object());
    const auto examples = doc.value("rationale_examples", nlohmann::json::array());
    try {
        for (const auto& [name, text] : templates.items()) catalog.templates_[name] = text.get<std::string>();
        for (const auto& example : examples) catalog.rationale_examples_.push_back(example.get<std::string>());
    } catch (const nlohmann::json::type_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("prompt catalog entries must be strings: ") + e.what());
    }
    for (const auto* name : kRequiredTemplates) {
        if (!catalog.templates_.contains(name))
            throw Error(ErrorCode::ConfigError, std::string("prompt catalog lacks template \"") + name + "\"");
    }
    return catalog;
}

PromptCatalog PromptCatalog::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const PromptCatalog& PromptCatalog::defaults() {
    static const PromptCatalog catalog = parse(kDefaultPromptCatalog);
    return catalog;
}

const std::string& PromptCatalog::get(std::string_view name) const {
    const auto it = templates_.find(name);
    if (it == templates_.end()) throw Error(ErrorCode::ConfigError, "unknown prompt template: " + std::string(name));
    return it->second;
}

std::string PromptCatalog::render(std::string_view name, const std::map<std::string, std::string>& slots) const {
    return render_template(get(name), slots);
}

}  // namespace medico
