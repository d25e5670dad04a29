#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "text.hpp"

namespace fgf {

enum class DocumentSource { arxiv, offline };

inline std::string to_string(DocumentSource s) { return s == DocumentSource::arxiv ? "arxiv" : "offline"; }

struct Document {
    std::string id;
    std::string title;
    std::string abstract;
    std::string pdf_url;
    DocumentSource source = DocumentSource::offline;
    std::optional<bool> relevant;

    friend bool operator==(const Document&, const Document&) = default;
};

// ---------------------------------------------------------------------------
// offline corpus records: one JSON object per line

inline nlohmann::ordered_json to_json(const Document& d)
{
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["title"] = d.title;
    j["abstract"] = d.abstract;
    j["pdf_url"] = d.pdf_url;
    if (d.relevant) {
        j["relevant"] = *d.relevant;
    }
    return j;
}

namespace detail {

inline std::string required_string(const nlohmann::json& j, const char* field, std::size_t line_no)
{
    const auto it = j.find(field);
    if (it == j.end() || !it->is_string()) {
        throw ParseError("line " + std::to_string(line_no) + ": missing or non-string field '" + field + "'");
    }
    return it->get<std::string>();
}

} // namespace detail

inline std::vector<Document> parse_offline(std::string_view content)
{
    std::vector<Document> docs;
    std::unordered_set<std::string> ids;
    std::size_t line_no = 0;
    for (const auto& raw : text::split(content, '\n')) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object()) {
            throw ParseError("line " + std::to_string(line_no) + ": record is not a JSON object");
        }
        Document d;
        d.id = detail::required_string(j, "id", line_no);
        d.title = detail::required_string(j, "title", line_no);
        d.abstract = detail::required_string(j, "abstract", line_no);
        if (const auto it = j.find("pdf_url"); it != j.end() && it->is_string()) {
            d.pdf_url = it->get<std::string>();
        }
        if (const auto it = j.find("relevant"); it != j.end() && !it->is_null()) {
            if (!it->is_boolean()) {
                throw ParseError("line " + std::to_string(line_no) + ": 'relevant' must be a boolean");
            }
            d.relevant = it->get<bool>();
        }
        if (text::trim(d.title).empty()) {
            throw ParseError("line " + std::to_string(line_no) + ": empty title");
        }
        if (!ids.insert(d.id).second) {
            throw ParseError("line " + std::to_string(line_no) + ": duplicate id '" + d.id + "'");
        }
        d.source = DocumentSource::offline;
        docs.push_back(std::move(d));
    }
    return docs;
}

inline std::vector<Document> load_offline(const std::string& path) { return parse_offline(text::read_file(path)); }

inline std::string serialize_offline(std::span<const Document> docs)
{
    std::string out;
    for (const auto& d : docs) {
        out += to_json(d).dump();
        out += '\n';
    }
    return out;
}

/// Applies `id<TAB>0|1` (or `id,true|false`) labels onto documents by id.
inline void apply_labels(std::vector<Document>& docs, std::string_view label_file)
{
    std::unordered_map<std::string, bool> labels;
    std::size_t line_no = 0;
    for (const auto& raw : text::split(label_file, '\n')) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto sep = line.find_first_of("\t,");
        if (sep == std::string_view::npos) {
            throw ParseError("label line " + std::to_string(line_no) + ": expected 'id<TAB>label'");
        }
        const auto value = text::casefold(text::trim(line.substr(sep + 1)));
        bool rel = false;
        if (value == "1" || value == "true") {
            rel = true;
        } else if (value != "0" && value != "false") {
            throw ParseError("label line " + std::to_string(line_no) + ": bad label '" + value + "'");
        }
        labels[std::string(text::trim(line.substr(0, sep)))] = rel;
    }
    for (auto& d : docs) {
        if (const auto it = labels.find(d.id); it != labels.end()) {
            d.relevant = it->second;
        }
    }
}

// ---------------------------------------------------------------------------
// deduplication

/// Casefold + whitespace collapse of (title, abstract), joined by a unit separator.
inline std::string dedup_key(const Document& d)
{
    return text::casefold(text::collapse_whitespace(d.title)) + '\x1f' + text::casefold(text::collapse_whitespace(d.abstract));
}

struct DedupResult {
    std::vector<Document> kept;
    std::size_t removed = 0;

    /// Fraction of the input that was dropped as duplicates.
    double duplication_rate() const
    {
        const auto total = kept.size() + removed;
        return total == 0 ? 0.0 : static_cast<double>(removed) / static_cast<double>(total);
    }
};

inline DedupResult dedup_report(std::span<const Document> docs)
{
    DedupResult out;
    std::unordered_map<std::uint64_t, std::vector<std::string>> seen;
    for (const auto& d : docs) {
        auto key = dedup_key(d);
        auto& bucket = seen[text::fnv1a64(key)];
        if (std::find(bucket.begin(), bucket.end(), key) != bucket.end()) {
            ++out.removed;
            continue;
        }
        bucket.push_back(std::move(key));
        out.kept.push_back(d);
    }
    return out;
}

inline std::vector<Document> dedup(std::span<const Document> docs) { return dedup_report(docs).kept; }

// ---------------------------------------------------------------------------
// keyword matching

/// Keyword-by-document occurrence counts over title + abstract.
struct MatchProfile {
    std::size_t n_keywords = 0;
    std::size_t n_docs = 0;
    std::vector<double> counts; // row-major: keyword i, document j

    double at(std::size_t keyword, std::size_t doc) const { return counts[keyword * n_docs + doc]; }
    std::span<const double> row(std::size_t keyword) const { return {counts.data() + keyword * n_docs, n_docs}; }

    /// Total occurrences of each keyword across the corpus.
    std::vector<double> keyword_totals() const
    {
        std::vector<double> out(n_keywords, 0.0);
        for (std::size_t i = 0; i < n_keywords; ++i) {
            for (double c : row(i)) {
                out[i] += c;
            }
        }
        return out;
    }
};

/// Occurrences of the word sequence `needle` in `hay` (overlapping starts counted).
inline std::size_t count_phrase(std::span<const std::string> hay, std::span<const std::string> needle)
{
    if (needle.empty() || needle.size() > hay.size()) {
        return 0;
    }
    std::size_t n = 0;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
        if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) {
            ++n;
        }
    }
    return n;
}

inline MatchProfile match_counts(std::span<const Document> docs, std::span<const std::string> pool)
{
    if (pool.empty()) {
        throw ConfigError("keyword pool is empty");
    }
    MatchProfile p;
    p.n_keywords = pool.size();
    p.n_docs = docs.size();
    p.counts.assign(p.n_keywords * p.n_docs, 0.0);
    std::vector<std::vector<std::string>> needles;
    needles.reserve(pool.size());
    for (const auto& k : pool) {
        needles.push_back(text::words(k));
    }
    for (std::size_t j = 0; j < docs.size(); ++j) {
        const auto hay = text::words(docs[j].title + " " + docs[j].abstract);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            p.counts[i * p.n_docs + j] = static_cast<double>(count_phrase(hay, needles[i]));
        }
    }
    return p;
}

} // namespace fgf
