#pragma once

#include "medico/fusion/fusion.hpp"
#include "medico/llm/gateway.hpp"
#include "medico/prompts.hpp"
#include "medico/retrieval/types.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace medico {

enum class DetectionMode { FusedDirect, Ensemble };

std::string_view detection_mode_name(DetectionMode mode);
DetectionMode parse_detection_mode(std::string_view text);

struct VeracityVerdict {
    bool label = true;  // true: consistent with evidence; false: hallucination
    std::string rationale;
    DetectionMode source_mode = DetectionMode::FusedDirect;
};

/// Case-insensitive first standalone "true"/"false" in a detector reply.
/// Throws LabelParse when neither word occurs.
bool parse_veracity_label(std::string_view reply);

/// Bracketed evidence indices cited in text, in first-mention order.
std::vector<std::size_t> cited_indices(std::string_view text);

std::string render_label_prompt(const PromptCatalog& prompts, const Query& q, const GeneratedContent& o,
                                const std::string& evidence);

/// Few-shot rationale explaining the conflict between o and the evidence.
std::string generate_rationale(LlmBackend& detector, const Query& q, const GeneratedContent& o,
                               const std::string& evidence, const PromptCatalog& prompts = PromptCatalog::defaults());

/// Support note for a True verdict: cites the indices the detector named,
/// otherwise every index of the fused evidence.
std::string support_note(const std::string& detector_reply, std::size_t evidence_count,
                         const PromptCatalog& prompts = PromptCatalog::defaults());

/// Asks the detector for a label against the fused evidence; on False a
/// second call produces the rationale.
VeracityVerdict detect_with_evidence(LlmBackend& detector, const Query& q, const GeneratedContent& o,
                                     const FusedEvidence& fused,
                                     const PromptCatalog& prompts = PromptCatalog::defaults());

// ---------------------------------------------------------------------------
// Self-consistency ensemble
// ---------------------------------------------------------------------------

/// Temperature-scaled two-way softmax: exp(sT/tau) / (exp(sT/tau) + exp(sF/tau)),
/// clamped into [1e-15, 1 - 1e-15] so the result stays strictly inside (0,1).
double compute_likelihood(const LabelScores& scores, double tau);

/// Scores the label prompt for (q, o, evidence) and applies compute_likelihood.
double compute_likelihood(LlmBackend& detector, const Query& q, const GeneratedContent& o,
                          const std::string& evidence, double tau,
                          const PromptCatalog& prompts = PromptCatalog::defaults());

/// Entry order of the likelihood vector.
enum class LikelihoodSlot { S = 0, B = 1, G = 2, U = 3, F = 4 };
inline constexpr std::size_t kLikelihoodDims = 5;
inline constexpr double kMaskedLikelihood = 0.5;

LikelihoodSlot slot_for(SourceTag tag);
std::string_view slot_name(LikelihoodSlot slot);

struct LikelihoodVector {
    std::array<double, kLikelihoodDims> entries{0.5, 0.5, 0.5, 0.5, 0.5};
    std::array<bool, kLikelihoodDims> present{false, false, false, false, false};

    double at(LikelihoodSlot slot) const { return entries[static_cast<std::size_t>(slot)]; }
    bool has(LikelihoodSlot slot) const { return present[static_cast<std::size_t>(slot)]; }
};

/// One likelihood per source with evidence plus one for the fused evidence;
/// sources without evidence hold 0.5 and stay out of the mask.
LikelihoodVector build_likelihood_vector(LlmBackend& detector, const Query& q, const GeneratedContent& o,
                                         const PerSourceEvidence& per_source, const FusedEvidence& fused, double tau,
                                         const PromptCatalog& prompts = PromptCatalog::defaults());

struct EnsembleClassifier {
    std::array<double, kLikelihoodDims> weights{};
    double bias = 0.0;
    bool trained = false;
    double tau = 1.0;
    std::string mask_policy = "impute-0.5";

    void save(const std::filesystem::path& path) const;
    static EnsembleClassifier load(const std::filesystem::path& path);
};

struct TrainingSample {
    std::array<double, kLikelihoodDims> features{};
    int label = 0;  // 1: content is true, 0: hallucinated
};

/// JSON lines {"p_s", "p_b", "p_g", "p_u", "p_f", "label"}.
std::vector<TrainingSample> load_training_dataset(const std::filesystem::path& path);

/// -(y log p + (1-y) log(1-p)), taking 0 * log 0 as 0.
double bce_loss(double y, double y_hat);

double sigmoid(double z);

/// Mean BCE of a logistic model over the dataset, computed from logits in
/// a numerically stable form.
double mean_bce(const std::vector<TrainingSample>& data, const std::array<double, kLikelihoodDims>& weights,
                double bias);

struct BceGradient {
    std::array<double, kLikelihoodDims> weights{};
    double bias = 0.0;
};

BceGradient mean_bce_gradient(const std::vector<TrainingSample>& data,
                              const std::array<double, kLikelihoodDims>& weights, double bias);

struct TrainingResult {
    EnsembleClassifier classifier;
    std::vector<double> epoch_loss;  // mean BCE after each epoch
};

/// Full-batch gradient descent on mean BCE starting from zero weights.
/// Throws DegenerateDataset for an empty or single-class dataset.
TrainingResult train_classifier(const std::vector<TrainingSample>& data, std::size_t epochs = 500,
                                double step_size = 0.5);

struct Classification {
    double probability = 0.5;
    bool label = true;  // probability >= 0.5
};

Classification classify(const std::array<double, kLikelihoodDims>& features, const EnsembleClassifier& clf);
Classification classify(const LikelihoodVector& p, const EnsembleClassifier& clf);

struct EnsembleDetection {
    VeracityVerdict verdict;
    LikelihoodVector likelihoods;
    double probability = 0.5;
};

/// Label from the ensemble; the rationale (on False) still comes from the
/// detector reading the fused evidence.
EnsembleDetection detect_with_ensemble(LlmBackend& detector, const Query& q, const GeneratedContent& o,
                                       const PerSourceEvidence& per_source, const FusedEvidence& fused,
                                       const EnsembleClassifier& clf,
                                       const PromptCatalog& prompts = PromptCatalog::defaults());

}  // namespace medico
