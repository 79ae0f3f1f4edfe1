#pragma once

#include "medico/fusion/fusion.hpp"
#include "medico/retrieval/types.hpp"

#include <httplib.h>

#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace testing_support {

std::filesystem::path source_dir();
std::filesystem::path fixture_dir(const std::string& name);

class TempDir {
public:
    TempDir();
    ~TempDir();
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Random string of up to max_len scalars drawn from ASCII, Latin-1, Greek,
/// CJK and astral-plane ranges, UTF-8 encoded.
std::string random_unicode(std::mt19937_64& rng, std::size_t max_len);
std::u32string random_u32(std::mt19937_64& rng, std::size_t max_len, std::size_t alphabet = 0);

/// Full-matrix Wagner-Fischer distance over scalars.
std::size_t oracle_levenshtein(const std::u32string& a, const std::u32string& b);

/// Textbook BM25 recomputed from scratch for one passage.
double oracle_bm25(const std::vector<std::string>& passages, const std::string& query, std::size_t index,
                   double k1 = 1.2, double b = 0.75);

/// Sorts every item with the documented rule (score desc, source order, index)
/// and keeps the first l.
std::vector<medico::EvidenceItem> oracle_rerank(const std::vector<medico::EvidenceItem>& items,
                                                const std::vector<double>& scores, std::size_t l);

/// Scorer returning a fixed value per passage text.
class TableScorer final : public medico::Scorer {
public:
    explicit TableScorer(std::map<std::string, double> table) : table_(std::move(table)) {}
    double score(const std::string&, const std::string& passage) override { return table_.at(passage); }

private:
    std::map<std::string, double> table_;
};

/// Minimal ZIP writer; each entry is stored or raw-deflated.
std::string make_zip(const std::vector<std::pair<std::string, std::string>>& entries, bool deflate);
std::string make_docx(const std::vector<std::string>& paragraphs, bool deflate = true);
/// Single-page PDF whose content stream shows each line with Tj.
std::string make_pdf(const std::vector<std::string>& lines, bool flate);

struct CaseStudy {
    std::string name;
    std::string query;
    std::string answer;
};

/// The (query, answer) pairs scripted in fixtures/case_studies.
const std::vector<CaseStudy>& case_studies();
const CaseStudy& case_study(const std::string& name);

/// httplib server on an ephemeral loopback port, running on its own thread.
class LocalServer {
public:
    explicit LocalServer(const std::function<void(httplib::Server&)>& routes);
    ~LocalServer();
    int port() const { return port_; }
    std::string url(const std::string& path) const;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace testing_support
