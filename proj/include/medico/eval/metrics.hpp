#pragma once

#include "medico/correction/correction.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace medico {

struct EvalTriplet {
    std::string question;
    std::string right_answer;
    std::string hallucinated_answer;
};

/// JSON lines {question, right_answer, hallucinated_answer}, file order.
/// With sample_size set, keeps a seeded random subset (still in file order).
/// Throws ParseError naming the offending line.
std::vector<EvalTriplet> load_dataset(const std::filesystem::path& path, std::optional<std::size_t> sample_size = {},
                                      std::uint64_t seed = 0);

/// Golden flags aligned one-to-one with a ranked evidence list.
struct RankedJudgment {
    std::vector<bool> golden;
};

/// Fraction of judgments with a golden item in the top k. Throws
/// InvalidArgument for k == 0; 0 for an empty judgment list.
double hit_rate_at_k(const std::vector<RankedJudgment>& judgments, std::size_t k);

/// Mean reciprocal rank of the first golden item within the top k (0 when absent).
double mrr_at_k(const std::vector<RankedJudgment>& judgments, std::size_t k);

struct DetectionScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Verdict labels (true = consistent with evidence). The positive class is
/// "hallucination present", i.e. a False label. Undefined ratios are 0.
/// Throws LengthMismatch.
DetectionScores detection_prf(const std::vector<bool>& predictions, const std::vector<bool>& gold);

inline constexpr std::size_t kApprovalRounds = 5;

/// Cumulative approval rate for rounds 0..5. A session with no rounds and
/// outcome Approved counts as approved at round 0 (passed without correction);
/// otherwise the index of its accepted round counts.
std::map<std::size_t, double> approval_rate_by_round(const std::vector<CorrectionSession>& sessions);

/// Human golden-evidence flags keyed by (question, list name); list name is a
/// source name or "fuse". JSON lines {question, list, golden: [bool...]}.
class GoldenAnnotations {
public:
    static GoldenAnnotations load(const std::filesystem::path& path);
    void set(const std::string& question, const std::string& list, std::vector<bool> flags);
    const std::vector<bool>* find(const std::string& question, const std::string& list) const;
    bool empty() const { return flags_.empty(); }

private:
    std::map<std::pair<std::string, std::string>, std::vector<bool>> flags_;
};

/// Golden flag per item: the normalized right answer occurs in the normalized
/// item text. An annotation for (question, list) replaces the proxy when its
/// length matches the list.
RankedJudgment label_golden_proxy(const EvalTriplet& triplet, const std::vector<std::string>& evidence,
                                  const GoldenAnnotations* annotations = nullptr, const std::string& list = {});

}  // namespace medico
