#include "support.hpp"

#include "medico/text.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace testing_support {

namespace fs = std::filesystem;

fs::path source_dir() { return MEDICO_SOURCE_DIR; }

fs::path fixture_dir(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }

TempDir::TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = fs::temp_directory_path() / ("medico-test-" + std::to_string(rng()));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

namespace {

char32_t random_scalar(std::mt19937_64& rng) {
    static const std::pair<char32_t, char32_t> ranges[] = {
        {U'a', U'z'}, {U'A', U'Z'}, {U'0', U'9'}, {0x00E0, 0x00FF}, {0x03B1, 0x03C9}, {0x4E00, 0x4E2F}, {0x1F600, 0x1F60F},
    };
    const auto& [lo, hi] = ranges[std::uniform_int_distribution<std::size_t>(0, std::size(ranges) - 1)(rng)];
    return static_cast<char32_t>(std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng));
}

}  // namespace

std::u32string random_u32(std::mt19937_64& rng, std::size_t max_len, std::size_t alphabet) {
    const auto len = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
    std::u32string out;
    for (std::size_t i = 0; i < len; ++i) {
        if (alphabet > 0) out.push_back(static_cast<char32_t>(U'a' + std::uniform_int_distribution<std::size_t>(0, alphabet - 1)(rng)));
        else out.push_back(random_scalar(rng));
    }
    return out;
}

std::string random_unicode(std::mt19937_64& rng, std::size_t max_len) {
    return medico::utf8_encode(random_u32(rng, max_len));
}

std::size_t oracle_levenshtein(const std::u32string& a, const std::u32string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

double oracle_bm25(const std::vector<std::string>& passages, const std::string& query, std::size_t index, double k1,
                   double b) {
    std::vector<std::vector<std::string>> docs;
    for (const auto& p : passages) docs.push_back(medico::index_terms(p));
    double avg = 0;
    for (const auto& d : docs) avg += static_cast<double>(d.size());
    avg /= static_cast<double>(docs.size());
    const double n = static_cast<double>(docs.size());
    const auto& doc = docs[index];
    double total = 0;
    for (const auto& term : medico::index_terms(query)) {
        const double tf = static_cast<double>(std::count(doc.begin(), doc.end(), term));
        if (tf == 0) continue;
        double df = 0;
        for (const auto& d : docs)
            if (std::find(d.begin(), d.end(), term) != d.end()) df += 1;
        const double idf = std::log(1 + (n - df + 0.5) / (df + 0.5));
        total += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * static_cast<double>(doc.size()) / avg));
    }
    return total;
}

std::vector<medico::EvidenceItem> oracle_rerank(const std::vector<medico::EvidenceItem>& items,
                                                const std::vector<double>& scores, std::size_t l) {
    std::vector<std::tuple<double, int, std::size_t>> keys;
    for (std::size_t i = 0; i < items.size(); ++i) keys.emplace_back(-scores[i], static_cast<int>(items[i].source), i);
    std::sort(keys.begin(), keys.end());
    std::vector<medico::EvidenceItem> out;
    for (std::size_t i = 0; i < std::min(l, keys.size()); ++i) {
        auto item = items[std::get<2>(keys[i])];
        item.score = -std::get<0>(keys[i]);
        out.push_back(item);
    }
    return out;
}

namespace {

void put16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
    put16(out, static_cast<std::uint16_t>(v & 0xFFFF));
    put16(out, static_cast<std::uint16_t>(v >> 16));
}

std::string deflate_raw(const std::string& data, int window_bits) {
    z_stream s{};
    if (deflateInit2(&s, Z_BEST_COMPRESSION, Z_DEFLATED, window_bits, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw std::runtime_error("deflateInit2");
    std::string out(deflateBound(&s, static_cast<uLong>(data.size())), '\0');
    s.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    s.avail_in = static_cast<uInt>(data.size());
    s.next_out = reinterpret_cast<Bytef*>(out.data());
    s.avail_out = static_cast<uInt>(out.size());
    deflate(&s, Z_FINISH);
    out.resize(s.total_out);
    deflateEnd(&s);
    return out;
}

}  // namespace

std::string make_zip(const std::vector<std::pair<std::string, std::string>>& entries, bool deflate) {
    std::string out, central;
    for (const auto& [name, data] : entries) {
        const auto crc = static_cast<std::uint32_t>(crc32(0, reinterpret_cast<const Bytef*>(data.data()),
                                                          static_cast<uInt>(data.size())));
        const auto payload = deflate ? deflate_raw(data, -MAX_WBITS) : data;
        const auto offset = static_cast<std::uint32_t>(out.size());
        const std::uint16_t method = deflate ? 8 : 0;
        put32(out, 0x04034b50);
        put16(out, 20);
        put16(out, 0);
        put16(out, method);
        put16(out, 0);
        put16(out, 0);
        put32(out, crc);
        put32(out, static_cast<std::uint32_t>(payload.size()));
        put32(out, static_cast<std::uint32_t>(data.size()));
        put16(out, static_cast<std::uint16_t>(name.size()));
        put16(out, 0);
        out += name;
        out += payload;

        put32(central, 0x02014b50);
        put16(central, 20);
        put16(central, 20);
        put16(central, 0);
        put16(central, method);
        put16(central, 0);
        put16(central, 0);
        put32(central, crc);
        put32(central, static_cast<std::uint32_t>(payload.size()));
        put32(central, static_cast<std::uint32_t>(data.size()));
        put16(central, static_cast<std::uint16_t>(name.size()));
        put16(central, 0);
        put16(central, 0);
        put16(central, 0);
        put16(central, 0);
        put32(central, 0);
        put32(central, offset);
        central += name;
    }
    const auto cd_offset = static_cast<std::uint32_t>(out.size());
    out += central;
    put32(out, 0x06054b50);
    put16(out, 0);
    put16(out, 0);
    put16(out, static_cast<std::uint16_t>(entries.size()));
    put16(out, static_cast<std::uint16_t>(entries.size()));
    put32(out, static_cast<std::uint32_t>(central.size()));
    put32(out, cd_offset);
    put16(out, 0);
    return out;
}

std::string make_docx(const std::vector<std::string>& paragraphs, bool deflate) {
    std::string body;
    for (const auto& p : paragraphs) body += "<w:p><w:r><w:t xml:space=\"preserve\">" + p + "</w:t></w:r></w:p>";
    const std::string document =
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>"
        "<w:document xmlns:w=\"http://schemas.openxmlformats.org/wordprocessingml/2006/main\"><w:body>" +
        body + "</w:body></w:document>";
    return make_zip({{"[Content_Types].xml", "<Types/>"}, {"word/document.xml", document}}, deflate);
}

std::string make_pdf(const std::vector<std::string>& lines, bool flate) {
    std::string content = "BT /F1 12 Tf 72 720 Td 14 TL\n";
    for (const auto& line : lines) content += "(" + line + ") Tj T*\n";
    content += "ET\n";
    const auto payload = flate ? deflate_raw(content, MAX_WBITS) : content;
    std::string pdf = "%PDF-1.4\n";
    pdf += "1 0 obj << /Type /Catalog /Pages 2 0 R >> endobj\n";
    pdf += "2 0 obj << /Type /Pages /Kids [3 0 R] /Count 1 >> endobj\n";
    pdf += "3 0 obj << /Type /Page /Parent 2 0 R /Contents 4 0 R >> endobj\n";
    pdf += "4 0 obj << /Length " + std::to_string(payload.size()) + (flate ? " /Filter /FlateDecode" : "") +
           " >>\nstream\n" + payload + "\nendstream\nendobj\n";
    pdf += "trailer << /Root 1 0 R >>\n%%EOF\n";
    return pdf;
}

LocalServer::LocalServer(const std::function<void(httplib::Server&)>& routes) {
    routes(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("cannot bind test server");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
}

LocalServer::~LocalServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
}

std::string LocalServer::url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
}

const std::vector<CaseStudy>& case_studies() {
    static const std::vector<CaseStudy> cases{
        {"weill", "What year did the German composer whose compositions are in The Individualism of Gil Evans die?",
         "Kurt Weill passed away in 1955."},
        {"gran_torino",
         "What is the stage name of the young female actress who starred in the 2008 American drama Gran Torino "
         "directed and produced by Clint Eastwood?",
         "The actress who starred in the 2008 movie directed by Clint Eastwood and co-starred Christopher Carley and "
         "Bee Vang is Whitney Cua Her."},
        {"baiada",
         "Which American restaurant chain and international franchise founded in 1958 that Baiada Poultry is a "
         "provider of?",
         "Baiada Poultry is a provider of Subway."},
        {"commonwealth", "Who is the head of the Commonwealth?", "Queen Elizabeth II is the head of the Commonwealth realm."},
        {"eiffel", "Where is the Eiffel Tower?", "The Eiffel Tower is in Paris."},
    };
    return cases;
}

const CaseStudy& case_study(const std::string& name) {
    for (const auto& c : case_studies())
        if (c.name == name) return c;
    throw std::out_of_range("no case study " + name);
}

}  // namespace testing_support
