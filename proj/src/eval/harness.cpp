#include "medico/eval/harness.hpp"

#include <fmt/format.h>

namespace medico {

using nlohmann::json;

namespace {

constexpr std::size_t kCutoffs[] = {1, 3, 5};

std::vector<std::string> texts(const std::vector<EvidenceItem>& items) {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(item.text);
    return out;
}

RetrievalMetrics score_lists(const std::vector<RankedJudgment>& judgments) {
    RetrievalMetrics m;
    m.judged = judgments.size();
    for (auto k : kCutoffs) {
        m.hr[k] = hit_rate_at_k(judgments, k);
        m.mrr[k] = mrr_at_k(judgments, k);
    }
    return m;
}

}  // namespace

MetricsReport run_evaluation(const std::vector<EvalTriplet>& triplets, const PipelineConfig& cfg,
                             const PipelineResources& resources, const EvalOptions& options) {
    MetricsReport report;
    report.triplets = triplets.size();
    std::map<std::string, std::vector<RankedJudgment>> judgments;
    std::vector<bool> predictions, gold;
    std::vector<CorrectionSession> sessions;

    for (std::size_t i = 0; i < triplets.size(); ++i) {
        const auto& t = triplets[i];
        const auto q = Query::make("q" + std::to_string(i + 1), t.question);

        RunOptions hallucinated_run;
        hallucinated_run.run_correction = options.run_correction;
        const auto bad = run_pipeline(q, GeneratedContent::make(t.hallucinated_answer, q.id), cfg, resources, hallucinated_run);
        RunOptions right_run;
        right_run.run_correction = false;
        const auto good = run_pipeline(q, GeneratedContent::make(t.right_answer, q.id), cfg, resources, right_run);

        for (const auto& [tag, items] : bad.evidence) {
            const std::string list(source_name(tag));
            judgments[list].push_back(label_golden_proxy(t, texts(items), options.annotations, list));
        }
        if (bad.reranked) {
            const std::string list(kFuseList);
            judgments[list].push_back(label_golden_proxy(t, texts(bad.reranked->items), options.annotations, list));
        }

        for (const auto* record : {&bad, &good}) {
            if (!record->verdict) {
                ++report.failed_runs;
                continue;
            }
            predictions.push_back(record->verdict->label);
            gold.push_back(record == &good);
        }

        if (bad.verdict) {
            if (bad.verdict->label) {
                CorrectionSession passed;
                passed.original = t.hallucinated_answer;
                passed.final_text = t.hallucinated_answer;
                passed.outcome = CorrectionOutcome::Approved;
                sessions.push_back(std::move(passed));
            } else if (bad.correction) {
                sessions.push_back(*bad.correction);
            } else if (!options.run_correction) {
                CorrectionSession skipped;
                skipped.original = t.hallucinated_answer;
                skipped.final_text = t.hallucinated_answer;
                sessions.push_back(std::move(skipped));
            }
        }
    }

    for (const auto& [list, js] : judgments) report.retrieval[list] = score_lists(js);
    report.detection = detection_prf(predictions, gold);
    report.approval_by_round = approval_rate_by_round(sessions);
    return report;
}

std::string render_report_table(const MetricsReport& report) {
    std::string out;
    out += fmt::format("triplets: {}  failed runs: {}\n\n", report.triplets, report.failed_runs);
    out += fmt::format("{:<10}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}\n", "list", "n", "HR@1", "HR@3", "HR@5", "MRR@1", "MRR@3",
                       "MRR@5");
    // Fixed row order: sources first, then the reranked list.
    for (const char* list : {"web", "kb", "kg", "uf", "fuse"}) {
        const auto it = report.retrieval.find(list);
        if (it == report.retrieval.end()) continue;
        const auto& m = it->second;
        out += fmt::format("{:<10}{:>8}{:>8.3f}{:>8.3f}{:>8.3f}{:>8.3f}{:>8.3f}{:>8.3f}\n", list, m.judged, m.hr.at(1),
                           m.hr.at(3), m.hr.at(5), m.mrr.at(1), m.mrr.at(3), m.mrr.at(5));
    }
    const auto& d = report.detection;
    out += fmt::format("\ndetection (positive = hallucination)\n{:>8}{:>8}{:>8}{:>6}{:>6}{:>6}{:>6}\n", "Prec", "Recall",
                       "F1", "TP", "FP", "FN", "TN");
    out += fmt::format("{:>8.3f}{:>8.3f}{:>8.3f}{:>6}{:>6}{:>6}{:>6}\n", d.precision, d.recall, d.f1, d.tp, d.fp, d.fn, d.tn);
    out += "\napproval rate by round\n";
    for (const auto& [round, rate] : report.approval_by_round) out += fmt::format("{:>8}", round);
    out += "\n";
    for (const auto& [round, rate] : report.approval_by_round) out += fmt::format("{:>8.3f}", rate);
    out += "\n";
    return out;
}

json report_to_json(const MetricsReport& report) {
    json retrieval = json::object();
    for (const auto& [list, m] : report.retrieval) {
        json hr = json::object(), mrr = json::object();
        for (const auto& [k, v] : m.hr) hr[std::to_string(k)] = v;
        for (const auto& [k, v] : m.mrr) mrr[std::to_string(k)] = v;
        retrieval[list] = json{{"judged", m.judged}, {"hr", hr}, {"mrr", mrr}};
    }
    json approval = json::object();
    for (const auto& [round, rate] : report.approval_by_round) approval[std::to_string(round)] = rate;
    const auto& d = report.detection;
    return json{{"triplets", report.triplets},
                {"failed_runs", report.failed_runs},
                {"retrieval", retrieval},
                {"detection",
                 {{"precision", d.precision}, {"recall", d.recall}, {"f1", d.f1}, {"tp", d.tp}, {"fp", d.fp}, {"fn", d.fn}, {"tn", d.tn}}},
                {"approval_by_round", approval}};
}

}  // namespace medico
