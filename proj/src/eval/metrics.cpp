#include "medico/eval/metrics.hpp"

#include "medico/error.hpp"
#include "medico/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>
#include <random>

namespace medico {

using nlohmann::json;

namespace {

std::string required_field(const json& doc, const char* key, std::size_t line) {
    if (!doc.contains(key) || !doc[key].is_string() || trim(doc[key].get<std::string>()).empty())
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": missing or empty field " + key);
    return doc[key].get<std::string>();
}

}  // namespace

std::vector<EvalTriplet> load_dataset(const std::filesystem::path& path, std::optional<std::size_t> sample_size,
                                      std::uint64_t seed) {
    std::vector<EvalTriplet> triplets;
    for_each_line(path, [&](const std::string& line, std::size_t number) {
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(number) + ": " + e.what());
        }
        if (!doc.is_object()) throw Error(ErrorCode::ParseError, "line " + std::to_string(number) + ": not an object");
        triplets.push_back(EvalTriplet{required_field(doc, "question", number), required_field(doc, "right_answer", number),
                                       required_field(doc, "hallucinated_answer", number)});
    });
    if (!sample_size || *sample_size >= triplets.size()) return triplets;

    std::vector<std::size_t> order(triplets.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates with modulo draws keeps the subset identical across
    // standard library implementations.
    for (std::size_t i = 0; i < *sample_size; ++i) {
        const auto pick = i + static_cast<std::size_t>(rng() % (order.size() - i));
        std::swap(order[i], order[pick]);
    }
    order.resize(*sample_size);
    std::sort(order.begin(), order.end());
    std::vector<EvalTriplet> sample;
    for (auto i : order) sample.push_back(triplets[i]);
    return sample;
}

double hit_rate_at_k(const std::vector<RankedJudgment>& judgments, std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    if (judgments.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& j : judgments) {
        const auto top = std::min(k, j.golden.size());
        if (std::any_of(j.golden.begin(), j.golden.begin() + static_cast<std::ptrdiff_t>(top), [](bool g) { return g; }))
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(judgments.size());
}

double mrr_at_k(const std::vector<RankedJudgment>& judgments, std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    if (judgments.empty()) return 0.0;
    double total = 0.0;
    for (const auto& j : judgments) {
        const auto top = std::min(k, j.golden.size());
        for (std::size_t i = 0; i < top; ++i) {
            if (j.golden[i]) {
                total += 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
    }
    return total / static_cast<double>(judgments.size());
}

DetectionScores detection_prf(const std::vector<bool>& predictions, const std::vector<bool>& gold) {
    if (predictions.size() != gold.size())
        throw Error(ErrorCode::LengthMismatch, "predictions and gold labels differ in length");
    DetectionScores s;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool predicted_positive = !predictions[i];
        const bool actual_positive = !gold[i];
        if (predicted_positive && actual_positive) ++s.tp;
        else if (predicted_positive) ++s.fp;
        else if (actual_positive) ++s.fn;
        else ++s.tn;
    }
    if (s.tp + s.fp > 0) s.precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
    if (s.tp + s.fn > 0) s.recall = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
    if (s.precision + s.recall > 0) s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

std::map<std::size_t, double> approval_rate_by_round(const std::vector<CorrectionSession>& sessions) {
    std::vector<std::size_t> approved_at(kApprovalRounds + 1, 0);
    for (const auto& s : sessions) {
        if (s.outcome != CorrectionOutcome::Approved) continue;
        std::size_t round = 0;
        for (const auto& r : s.rounds)
            if (r.accepted) round = r.index;
        if (round <= kApprovalRounds) ++approved_at[round];
    }
    std::map<std::size_t, double> rates;
    std::size_t cumulative = 0;
    for (std::size_t i = 0; i <= kApprovalRounds; ++i) {
        cumulative += approved_at[i];
        rates[i] = sessions.empty() ? 0.0 : static_cast<double>(cumulative) / static_cast<double>(sessions.size());
    }
    return rates;
}

GoldenAnnotations GoldenAnnotations::load(const std::filesystem::path& path) {
    GoldenAnnotations out;
    for_each_line(path, [&](const std::string& line, std::size_t number) {
        try {
            const auto doc = json::parse(line);
            out.set(doc.at("question").get<std::string>(), doc.at("list").get<std::string>(),
                    doc.at("golden").get<std::vector<bool>>());
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    });
    return out;
}

void GoldenAnnotations::set(const std::string& question, const std::string& list, std::vector<bool> flags) {
    flags_[{question, list}] = std::move(flags);
}

const std::vector<bool>* GoldenAnnotations::find(const std::string& question, const std::string& list) const {
    const auto it = flags_.find({question, list});
    return it == flags_.end() ? nullptr : &it->second;
}

RankedJudgment label_golden_proxy(const EvalTriplet& triplet, const std::vector<std::string>& evidence,
                                  const GoldenAnnotations* annotations, const std::string& list) {
    if (annotations) {
        if (const auto* flags = annotations->find(triplet.question, list); flags && flags->size() == evidence.size())
            return RankedJudgment{*flags};
    }
    RankedJudgment judgment;
    const auto needle = trim(normalize_for_match(triplet.right_answer));
    for (const auto& text : evidence) {
        const auto hay = " " + normalize_for_match(text) + " ";
        judgment.golden.push_back(!needle.empty() && hay.find(" " + needle + " ") != std::string::npos);
    }
    return judgment;
}

}  // namespace medico
