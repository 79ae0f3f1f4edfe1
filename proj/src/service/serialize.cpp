#include "medico/error.hpp"
#include "medico/service/pipeline.hpp"

namespace medico {

using nlohmann::json;

namespace {

ErrorCode error_code_from_string(const std::string& text) {
    for (int i = 0; i <= static_cast<int>(ErrorCode::IoError); ++i) {
        const auto code = static_cast<ErrorCode>(i);
        if (to_string(code) == text) return code;
    }
    return ErrorCode::InvalidArgument;
}

SourceTag source_from_json(const json& value) {
    const auto tag = parse_source(value.get<std::string>());
    if (!tag) throw Error(ErrorCode::ParseError, "unknown source tag " + value.dump());
    return *tag;
}

json evidence_list(const std::vector<EvidenceItem>& items) {
    json out = json::array();
    for (const auto& item : items) out.push_back(to_json(item));
    return out;
}

std::vector<EvidenceItem> evidence_list_from_json(const json& doc) {
    std::vector<EvidenceItem> items;
    for (const auto& entry : doc) items.push_back(evidence_from_json(entry));
    return items;
}

json round_to_json(const CorrectionRound& round) {
    return json{{"index", round.index},
                {"candidate", round.candidate},
                {"verdict", to_json(round.verdict)},
                {"preservation", round.preservation},
                {"accepted", round.accepted},
                {"rejection", rejection_name(round.rejection)},
                {"spans", round.spans},
                {"whole_text_revision", round.whole_text_revision},
                {"minimize_edits", round.minimize_edits}};
}

CorrectionRound round_from_json(const json& doc) {
    CorrectionRound round;
    round.index = doc.at("index").get<std::size_t>();
    round.candidate = doc.at("candidate").get<std::string>();
    round.verdict = verdict_from_json(doc.at("verdict"));
    round.preservation = doc.at("preservation").get<double>();
    round.accepted = doc.at("accepted").get<bool>();
    const auto rejection = doc.value("rejection", std::string("none"));
    round.rejection = rejection == "still_false"        ? RoundRejection::StillFalse
                      : rejection == "low_preservation" ? RoundRejection::LowPreservation
                                                        : RoundRejection::None;
    round.spans = doc.value("spans", std::vector<std::string>{});
    round.whole_text_revision = doc.value("whole_text_revision", false);
    round.minimize_edits = doc.value("minimize_edits", false);
    return round;
}

}  // namespace

json to_json(const EvidenceItem& item) {
    struct Visitor {
        json operator()(const WebProvenance& p) const { return {{"url", p.url}, {"rank", p.rank}}; }
        json operator()(const KbProvenance& p) const { return {{"page_id", p.page_id}, {"chunk_index", p.chunk_index}}; }
        json operator()(const KgProvenance& p) const { return {{"triple_id", p.triple_id}}; }
        json operator()(const FileProvenance& p) const {
            return {{"file_name", p.file_name}, {"chunk_index", p.chunk_index}};
        }
    };
    return json{{"text", item.text},
                {"source", source_name(item.source)},
                {"provenance", std::visit(Visitor{}, item.provenance)},
                {"score", item.score ? json(*item.score) : json(nullptr)}};
}

EvidenceItem evidence_from_json(const json& doc) {
    const auto source = source_from_json(doc.at("source"));
    const auto& p = doc.at("provenance");
    Provenance provenance;
    switch (source) {
        case SourceTag::Web: provenance = WebProvenance{p.value("url", ""), p.value("rank", std::size_t{0})}; break;
        case SourceTag::KB:
            provenance = KbProvenance{p.value("page_id", ""), p.value("chunk_index", std::size_t{0})};
            break;
        case SourceTag::KG: provenance = KgProvenance{p.value("triple_id", "")}; break;
        case SourceTag::UF:
            provenance = FileProvenance{p.value("file_name", ""), p.value("chunk_index", std::size_t{0})};
            break;
    }
    std::optional<double> score;
    if (doc.contains("score") && doc["score"].is_number()) score = doc["score"].get<double>();
    return EvidenceItem::make(doc.at("text").get<std::string>(), source, std::move(provenance), score);
}

json to_json(const FusedEvidence& fused) {
    return json{{"text", fused.text}, {"mode", fuse_mode_name(fused.mode)}, {"provenance", evidence_list(fused.provenance)}};
}

FusedEvidence fused_from_json(const json& doc) {
    return FusedEvidence{doc.at("text").get<std::string>(), parse_fuse_mode(doc.at("mode").get<std::string>()),
                         evidence_list_from_json(doc.at("provenance"))};
}

json to_json(const VeracityVerdict& verdict) {
    return json{{"label", verdict.label ? "True" : "False"},
                {"rationale", verdict.rationale},
                {"mode", detection_mode_name(verdict.source_mode)}};
}

VeracityVerdict verdict_from_json(const json& doc) {
    VeracityVerdict verdict;
    verdict.label = doc.at("label").get<std::string>() == "True";
    verdict.rationale = doc.value("rationale", std::string{});
    verdict.source_mode = parse_detection_mode(doc.value("mode", std::string("fused")));
    return verdict;
}

json to_json(const CorrectionSession& session) {
    json rounds = json::array();
    for (const auto& round : session.rounds) rounds.push_back(round_to_json(round));
    return json{{"original", session.original},
                {"rationale", session.rationale},
                {"delta", session.delta},
                {"rounds", rounds},
                {"final", session.final_text},
                {"outcome", outcome_name(session.outcome)},
                {"notes", session.notes}};
}

CorrectionSession session_from_json(const json& doc) {
    CorrectionSession session;
    session.original = doc.at("original").get<std::string>();
    session.rationale = doc.value("rationale", std::string{});
    session.delta = doc.value("delta", kDefaultDelta);
    for (const auto& round : doc.at("rounds")) session.rounds.push_back(round_from_json(round));
    session.final_text = doc.at("final").get<std::string>();
    session.outcome = doc.at("outcome").get<std::string>() == "Approved" ? CorrectionOutcome::Approved
                                                                        : CorrectionOutcome::RoundLimit;
    session.notes = doc.value("notes", std::vector<std::string>{});
    return session;
}

json to_json(const RunRecord& record) {
    json evidence = json::object();
    for (const auto& [tag, items] : record.evidence) evidence[std::string(source_name(tag))] = evidence_list(items);
    json errors = json::array();
    for (const auto& e : record.errors)
        errors.push_back(json{{"stage", e.stage}, {"code", to_string(e.code)}, {"message", e.message}});
    json likelihoods = nullptr;
    if (record.likelihoods) {
        likelihoods = json::object();
        json present = json::array();
        for (std::size_t i = 0; i < kLikelihoodDims; ++i) {
            const auto name = std::string(slot_name(static_cast<LikelihoodSlot>(i)));
            likelihoods["entries"][name] = record.likelihoods->entries[i];
            if (record.likelihoods->present[i]) present.push_back(name);
        }
        likelihoods["present"] = present;
    }
    return json{{"run_id", record.run_id},
                {"created_at", record.created_at},
                {"query", {{"id", record.query.id}, {"text", record.query.text}}},
                {"answer", {{"text", record.answer.text}}},
                {"uploaded_files", record.uploaded_files},
                {"evidence", evidence},
                {"reranked", record.reranked ? evidence_list(record.reranked->items) : json(nullptr)},
                {"fused", record.fused ? to_json(*record.fused) : json(nullptr)},
                {"verdict", record.verdict ? to_json(*record.verdict) : json(nullptr)},
                {"likelihoods", likelihoods},
                {"ensemble_probability", record.ensemble_probability ? json(*record.ensemble_probability) : json(nullptr)},
                {"correction", record.correction ? to_json(*record.correction) : json(nullptr)},
                {"corrected_text", record.corrected_text},
                {"status", record.status},
                {"warnings", record.warnings},
                {"errors", errors},
                {"timings_ms", record.timings_ms},
                {"config", record.config}};
}

RunRecord record_from_json(const json& doc) {
    RunRecord record;
    try {
        record.run_id = doc.at("run_id").get<std::string>();
        record.created_at = doc.value("created_at", std::string{});
        record.query = Query{doc.at("query").value("id", std::string{}), doc.at("query").at("text").get<std::string>()};
        record.answer = GeneratedContent{doc.at("answer").at("text").get<std::string>(), record.query.id};
        record.uploaded_files = doc.value("uploaded_files", std::vector<std::string>{});
        for (const auto& [name, items] : doc.at("evidence").items()) {
            const auto tag = parse_source(name);
            if (!tag) throw Error(ErrorCode::ParseError, "unknown evidence source " + name);
            record.evidence[*tag] = evidence_list_from_json(items);
        }
        if (!doc.at("reranked").is_null())
            record.reranked = EvidenceSet{evidence_list_from_json(doc["reranked"]), EvidenceStage::Reranked};
        if (!doc.at("fused").is_null()) record.fused = fused_from_json(doc["fused"]);
        if (!doc.at("verdict").is_null()) record.verdict = verdict_from_json(doc["verdict"]);
        if (doc.contains("likelihoods") && !doc["likelihoods"].is_null()) {
            LikelihoodVector p;
            const auto& l = doc["likelihoods"];
            for (std::size_t i = 0; i < kLikelihoodDims; ++i) {
                const auto name = std::string(slot_name(static_cast<LikelihoodSlot>(i)));
                p.entries[i] = l.at("entries").at(name).get<double>();
                for (const auto& present : l.at("present"))
                    if (present.get<std::string>() == name) p.present[i] = true;
            }
            record.likelihoods = p;
        }
        if (doc.contains("ensemble_probability") && doc["ensemble_probability"].is_number())
            record.ensemble_probability = doc["ensemble_probability"].get<double>();
        if (!doc.at("correction").is_null()) record.correction = session_from_json(doc["correction"]);
        record.corrected_text = doc.value("corrected_text", std::string{});
        record.status = doc.value("status", std::string("completed"));
        record.warnings = doc.value("warnings", std::vector<std::string>{});
        for (const auto& e : doc.value("errors", json::array()))
            record.errors.push_back(StageError{e.at("stage").get<std::string>(),
                                               error_code_from_string(e.at("code").get<std::string>()),
                                               e.at("message").get<std::string>()});
        record.timings_ms = doc.value("timings_ms", std::map<std::string, double>{});
        record.config = doc.value("config", json::object());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed run record: ") + e.what());
    }
    return record;
}

}  // namespace medico
