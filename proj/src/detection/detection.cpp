#include "medico/detection/detection.hpp"

#include "medico/error.hpp"
#include "medico/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace medico {

using nlohmann::json;

std::string_view detection_mode_name(DetectionMode mode) {
    return mode == DetectionMode::FusedDirect ? "fused" : "ensemble";
}

DetectionMode parse_detection_mode(std::string_view text) {
    const auto lowered = to_lower_ascii(trim(text));
    if (lowered == "fused" || lowered == "fused-direct" || lowered == "fuseddirect" || lowered == "direct")
        return DetectionMode::FusedDirect;
    if (lowered == "ensemble" || lowered == "ensb") return DetectionMode::Ensemble;
    throw Error(ErrorCode::ConfigError, "unknown detection mode: " + std::string(text));
}

bool parse_veracity_label(std::string_view reply) {
    std::size_t i = 0;
    while (i < reply.size()) {
        while (i < reply.size() && !std::isalnum(static_cast<unsigned char>(reply[i]))) ++i;
        const auto start = i;
        while (i < reply.size() && std::isalnum(static_cast<unsigned char>(reply[i]))) ++i;
        const auto word = to_lower_ascii(reply.substr(start, i - start));
        if (word == "true") return true;
        if (word == "false") return false;
    }
    throw Error(ErrorCode::LabelParse, "detector reply has no True/False label: \"" +
                                           std::string(reply.substr(0, 120)) + "\"");
}

std::vector<std::size_t> cited_indices(std::string_view text) {
    std::vector<std::size_t> out;
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '[') continue;
        std::size_t j = i + 1;
        std::size_t value = 0;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])) && j - i < 6)
            value = value * 10 + static_cast<std::size_t>(text[j++] - '0');
        if (j > i + 1 && j < text.size() && text[j] == ']' && value > 0 && seen.insert(value).second)
            out.push_back(value);
    }
    return out;
}

std::string render_label_prompt(const PromptCatalog& prompts, const Query& q, const GeneratedContent& o,
                                const std::string& evidence) {
    return prompts.render("detect_label", {{"query", q.text}, {"answer", o.text}, {"evidence", evidence}});
}

std::string generate_rationale(LlmBackend& detector, const Query& q, const GeneratedContent& o,
                               const std::string& evidence, const PromptCatalog& prompts) {
    std::string examples;
    for (const auto& example : prompts.rationale_examples()) {
        if (!examples.empty()) examples += "\n\n";
        examples += example;
    }
    const auto prompt = prompts.render(
        "rationale_icl", {{"examples", examples}, {"query", q.text}, {"answer", o.text}, {"evidence", evidence}});
    return trim(detector.chat(ChatRequest::make(prompt)));
}

std::string support_note(const std::string& detector_reply, std::size_t evidence_count,
                         const PromptCatalog& prompts) {
    auto indices = cited_indices(detector_reply);
    std::erase_if(indices, [&](std::size_t i) { return i > evidence_count; });
    if (indices.empty())
        for (std::size_t i = 1; i <= evidence_count; ++i) indices.push_back(i);
    std::string list;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i > 0) list += ", ";
        list += "[" + std::to_string(indices[i]) + "]";
    }
    if (list.empty()) list = "(none)";
    return prompts.render("support_note", {{"indices", list}});
}

VeracityVerdict detect_with_evidence(LlmBackend& detector, const Query& q, const GeneratedContent& o,
                                     const FusedEvidence& fused, const PromptCatalog& prompts) {
    const auto reply = detector.chat(ChatRequest::make(render_label_prompt(prompts, q, o, fused.text), 16));
    VeracityVerdict verdict;
    verdict.source_mode = DetectionMode::FusedDirect;
    verdict.label = parse_veracity_label(reply);
    verdict.rationale = verdict.label ? support_note(reply, fused.provenance.size(), prompts)
                                      : generate_rationale(detector, q, o, fused.text, prompts);
    if (!verdict.label && verdict.rationale.empty())
        throw Error(ErrorCode::OutputEmpty, "detector produced an empty rationale");
    return verdict;
}

// ---------------------------------------------------------------------------
// Ensemble
// ---------------------------------------------------------------------------

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double compute_likelihood(const LabelScores& scores, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
    if (!std::isfinite(scores.score_true) || !std::isfinite(scores.score_false))
        throw Error(ErrorCode::InvalidArgument, "label scores must be finite");
    // Dividing through by the numerator turns the softmax into a sigmoid of
    // the scaled score gap.
    const double p = sigmoid((scores.score_true - scores.score_false) / tau);
    return std::clamp(p, 1e-15, 1.0 - 1e-15);
}

double compute_likelihood(LlmBackend& detector, const Query& q, const GeneratedContent& o,
                          const std::string& evidence, double tau, const PromptCatalog& prompts) {
    return compute_likelihood(detector.label_scores(render_label_prompt(prompts, q, o, evidence)), tau);
}

LikelihoodSlot slot_for(SourceTag tag) { return static_cast<LikelihoodSlot>(static_cast<int>(tag)); }

std::string_view slot_name(LikelihoodSlot slot) {
    static constexpr std::string_view names[] = {"S", "B", "G", "U", "F"};
    return names[static_cast<std::size_t>(slot)];
}

LikelihoodVector build_likelihood_vector(LlmBackend& detector, const Query& q, const GeneratedContent& o,
                                         const PerSourceEvidence& per_source, const FusedEvidence& fused, double tau,
                                         const PromptCatalog& prompts) {
    if (trim(fused.text).empty()) throw Error(ErrorCode::EmptyEvidence, "likelihood vector needs fused evidence");
    LikelihoodVector p;
    for (auto tag : kAllSources) {
        const auto it = per_source.find(tag);
        if (it == per_source.end() || it->second.empty()) continue;
        const auto slot = static_cast<std::size_t>(slot_for(tag));
        p.entries[slot] = compute_likelihood(detector, q, o, render_numbered(it->second), tau, prompts);
        p.present[slot] = true;
    }
    const auto f = static_cast<std::size_t>(LikelihoodSlot::F);
    p.entries[f] = compute_likelihood(detector, q, o, fused.text, tau, prompts);
    p.present[f] = true;
    return p;
}

void EnsembleClassifier::save(const std::filesystem::path& path) const {
    if (!trained) throw Error(ErrorCode::Untrained, "refusing to save an untrained classifier");
    const json record{{"weights", weights}, {"bias", bias}, {"tau", tau}, {"mask_policy", mask_policy}};
    write_file(path, record.dump(2) + "\n");
}

EnsembleClassifier EnsembleClassifier::load(const std::filesystem::path& path) {
    json record;
    try {
        record = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    EnsembleClassifier clf;
    const auto weights = record.at("weights");
    if (!weights.is_array() || weights.size() != kLikelihoodDims)
        throw Error(ErrorCode::ParseError, path.string() + ": weights must hold 5 reals in S,B,G,U,F order");
    for (std::size_t i = 0; i < kLikelihoodDims; ++i) clf.weights[i] = weights[i].get<double>();
    clf.bias = record.at("bias").get<double>();
    clf.tau = record.value("tau", 1.0);
    clf.mask_policy = record.value("mask_policy", std::string("impute-0.5"));
    clf.trained = true;
    return clf;
}

std::vector<TrainingSample> load_training_dataset(const std::filesystem::path& path) {
    static constexpr const char* keys[] = {"p_s", "p_b", "p_g", "p_u", "p_f"};
    std::vector<TrainingSample> samples;
    for_each_line(path, [&](const std::string& text, std::size_t line) {
        const auto where = path.string() + ":" + std::to_string(line);
        try {
            const auto record = json::parse(text);
            TrainingSample sample;
            for (std::size_t i = 0; i < kLikelihoodDims; ++i) sample.features[i] = record.at(keys[i]).get<double>();
            const auto& label = record.at("label");
            sample.label = label.is_boolean() ? (label.get<bool>() ? 1 : 0) : label.get<int>();
            if (sample.label != 0 && sample.label != 1) throw Error(ErrorCode::ParseError, where + ": label must be 0/1");
            samples.push_back(sample);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, where + ": " + e.what());
        }
    });
    return samples;
}

double bce_loss(double y, double y_hat) {
    double loss = 0.0;
    if (y > 0.0) loss -= y * std::log(y_hat);
    if (y < 1.0) loss -= (1.0 - y) * std::log(1.0 - y_hat);
    return loss;
}

namespace {

double logit(const std::array<double, kLikelihoodDims>& x, const std::array<double, kLikelihoodDims>& w, double b) {
    double z = b;
    for (std::size_t i = 0; i < kLikelihoodDims; ++i) z += w[i] * x[i];
    return z;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

double mean_bce(const std::vector<TrainingSample>& data, const std::array<double, kLikelihoodDims>& weights,
                double bias) {
    if (data.empty()) return 0.0;
    double total = 0.0;
    for (const auto& sample : data) {
        const double z = logit(sample.features, weights, bias);
        // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
        total += softplus(z) - static_cast<double>(sample.label) * z;
    }
    return total / static_cast<double>(data.size());
}

BceGradient mean_bce_gradient(const std::vector<TrainingSample>& data,
                              const std::array<double, kLikelihoodDims>& weights, double bias) {
    BceGradient grad;
    if (data.empty()) return grad;
    for (const auto& sample : data) {
        const double residual = sigmoid(logit(sample.features, weights, bias)) - static_cast<double>(sample.label);
        for (std::size_t i = 0; i < kLikelihoodDims; ++i) grad.weights[i] += residual * sample.features[i];
        grad.bias += residual;
    }
    const double n = static_cast<double>(data.size());
    for (auto& g : grad.weights) g /= n;
    grad.bias /= n;
    return grad;
}

TrainingResult train_classifier(const std::vector<TrainingSample>& data, std::size_t epochs, double step_size) {
    const auto positives = std::count_if(data.begin(), data.end(), [](const auto& s) { return s.label == 1; });
    if (data.empty() || positives == 0 || positives == static_cast<std::ptrdiff_t>(data.size()))
        throw Error(ErrorCode::DegenerateDataset, "training needs samples from both classes");
    if (!(step_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "step size must be positive");

    TrainingResult result;
    auto& clf = result.classifier;
    result.epoch_loss.reserve(epochs);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const auto grad = mean_bce_gradient(data, clf.weights, clf.bias);
        for (std::size_t i = 0; i < kLikelihoodDims; ++i) clf.weights[i] -= step_size * grad.weights[i];
        clf.bias -= step_size * grad.bias;
        result.epoch_loss.push_back(mean_bce(data, clf.weights, clf.bias));
    }
    clf.trained = true;
    return result;
}

Classification classify(const std::array<double, kLikelihoodDims>& features, const EnsembleClassifier& clf) {
    if (!clf.trained) throw Error(ErrorCode::Untrained, "classifier has not been trained");
    const double p = sigmoid(logit(features, clf.weights, clf.bias));
    return Classification{p, p >= 0.5};
}

Classification classify(const LikelihoodVector& p, const EnsembleClassifier& clf) { return classify(p.entries, clf); }

EnsembleDetection detect_with_ensemble(LlmBackend& detector, const Query& q, const GeneratedContent& o,
                                       const PerSourceEvidence& per_source, const FusedEvidence& fused,
                                       const EnsembleClassifier& clf, const PromptCatalog& prompts) {
    EnsembleDetection out;
    out.likelihoods = build_likelihood_vector(detector, q, o, per_source, fused, clf.tau, prompts);
    const auto result = classify(out.likelihoods, clf);
    out.probability = result.probability;
    out.verdict.source_mode = DetectionMode::Ensemble;
    out.verdict.label = result.label;
    out.verdict.rationale = result.label ? support_note({}, fused.provenance.size(), prompts)
                                         : generate_rationale(detector, q, o, fused.text, prompts);
    return out;
}

}  // namespace medico
