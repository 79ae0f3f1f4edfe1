#pragma once

#include "medico/eval/metrics.hpp"
#include "medico/service/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace medico {

/// Retrieval lists scored in the report: each source plus the reranked set.
inline constexpr std::string_view kFuseList = "fuse";

struct RetrievalMetrics {
    std::map<std::size_t, double> hr;   // k in {1,3,5}
    std::map<std::size_t, double> mrr;
    std::size_t judged = 0;
};

struct MetricsReport {
    std::size_t triplets = 0;
    std::size_t failed_runs = 0;
    std::map<std::string, RetrievalMetrics> retrieval;  // web, kb, kg, uf, fuse
    DetectionScores detection;
    std::map<std::size_t, double> approval_by_round;
};

struct EvalOptions {
    bool run_correction = true;
    const GoldenAnnotations* annotations = nullptr;
};

/// Runs the pipeline on both answers of every triplet. Retrieval metrics
/// come from the hallucinated-answer run; detection counts both runs; the
/// approval rate counts hallucinated answers only. Failed runs are counted
/// and left out of the metrics.
MetricsReport run_evaluation(const std::vector<EvalTriplet>& triplets, const PipelineConfig& cfg,
                             const PipelineResources& resources, const EvalOptions& options = {});

std::string render_report_table(const MetricsReport& report);
nlohmann::json report_to_json(const MetricsReport& report);

}  // namespace medico
