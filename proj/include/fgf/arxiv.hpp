#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "text.hpp"

namespace fgf::arxiv {

inline constexpr const char* default_host = "http://export.arxiv.org";
inline constexpr int max_results_limit = 2000;

/// Parses an arXiv Atom feed. At most `max_results` entries are returned, in feed order.
inline std::vector<Document> parse_atom(const std::string& xml, std::size_t max_results = max_results_limit)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(xml);
        pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError(std::string("malformed Atom feed: ") + e.what());
    }
    const auto feed = tree.get_child_optional("feed");
    if (!feed) {
        throw ParseError("Atom document has no <feed> root");
    }

    std::vector<Document> docs;
    std::size_t entry_no = 0;
    for (const auto& [name, entry] : *feed) {
        if (name != "entry") {
            continue;
        }
        ++entry_no;
        if (docs.size() >= max_results) {
            break;
        }
        Document d;
        d.source = DocumentSource::arxiv;
        const auto raw_id = entry.get<std::string>("id", "");
        const auto abs = raw_id.find("/abs/");
        d.id = abs == std::string::npos ? raw_id : raw_id.substr(abs + 5);
        const auto label = "entry " + std::to_string(entry_no) + (d.id.empty() ? "" : " (" + d.id + ")");
        if (d.id.empty()) {
            throw ParseError(label + " has no <id>");
        }
        d.title = text::collapse_whitespace(entry.get<std::string>("title", ""));
        if (d.title.empty()) {
            throw ParseError(label + " has no <title>");
        }
        const auto summary = entry.get_optional<std::string>("summary");
        if (!summary) {
            throw ParseError(label + " has no <summary>");
        }
        d.abstract = text::collapse_whitespace(*summary);
        for (const auto& [child_name, child] : entry) {
            if (child_name != "link") {
                continue;
            }
            const auto title = child.get<std::string>("<xmlattr>.title", "");
            const auto type = child.get<std::string>("<xmlattr>.type", "");
            if (title == "pdf" || type == "application/pdf") {
                d.pdf_url = child.get<std::string>("<xmlattr>.href", "");
                break;
            }
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

inline std::string url_encode(std::string_view s)
{
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' || c == '~' || c == ':') {
            out.push_back(static_cast<char>(c));
        } else if (c == ' ') {
            out.push_back('+');
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

inline std::string normalize_query(std::string_view query) { return text::collapse_whitespace(query); }

inline std::string request_path(std::string_view query, int max_results, int start = 0)
{
    return "/api/query?search_query=" + url_encode(normalize_query(query)) + "&start=" + std::to_string(start)
        + "&max_results=" + std::to_string(max_results);
}

struct HttpResponse {
    int status = 0; // 0 = connection failure
    std::string body;
};

/// Performs one GET of `path` against the API host.
using Transport = std::function<HttpResponse(const std::string& path)>;

struct FetchPolicy {
    std::chrono::milliseconds spacing{3000};
    std::chrono::milliseconds backoff{3000};
    int attempts = 3;
};

/// Cached, rate-limited client for the Atom query API.
///
/// Responses are stored under `cache_dir` keyed by the normalized query and
/// the result limit; a warm cache answers without touching the transport.
class Client {
public:
    Client(Transport transport, std::filesystem::path cache_dir, FetchPolicy policy = {})
        : transport_(std::move(transport)), cache_dir_(std::move(cache_dir)), policy_(policy),
          sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
    {
    }

    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleep_ = std::move(sleeper); }

    std::filesystem::path cache_path(std::string_view query, int max_results) const
    {
        const auto key = normalize_query(query) + "\x1f" + std::to_string(max_results);
        return cache_dir_ / ("arxiv_" + text::hex64(text::fnv1a64(key)) + ".xml");
    }

    std::vector<Document> fetch(std::string_view query, int max_results)
    {
        if (max_results < 1 || max_results > max_results_limit) {
            throw ConfigError("max_results must be in [1, 2000], got " + std::to_string(max_results));
        }
        const auto path = cache_path(query, max_results);
        std::string body;
        if (std::filesystem::exists(path)) {
            body = text::read_file(path.string());
        } else {
            body = request(request_path(query, max_results));
            std::filesystem::create_directories(cache_dir_);
            text::write_file(path.string(), body);
        }
        return parse_atom(body, static_cast<std::size_t>(max_results));
    }

    std::size_t requests_made() const noexcept { return requests_; }

private:
    std::string request(const std::string& path)
    {
        std::string last_error;
        for (int attempt = 0; attempt < policy_.attempts; ++attempt) {
            if (attempt > 0) {
                sleep_(policy_.backoff * (1 << (attempt - 1)));
            } else if (requests_ > 0) {
                sleep_(policy_.spacing);
            }
            ++requests_;
            const auto resp = transport_(path);
            if (resp.status == 200) {
                return resp.body;
            }
            last_error = resp.status == 0 ? "connection failed" : "HTTP " + std::to_string(resp.status);
        }
        throw TransportError(last_error + " after " + std::to_string(policy_.attempts) + " attempts: " + path);
    }

    Transport transport_;
    std::filesystem::path cache_dir_;
    FetchPolicy policy_;
    std::function<void(std::chrono::milliseconds)> sleep_;
    std::size_t requests_ = 0;
};

/// Cache directory: `FGF_CACHE_DIR` when set, otherwise `fallback`.
inline std::filesystem::path cache_dir(const std::filesystem::path& fallback = ".fgf_cache")
{
    if (const char* env = std::getenv("FGF_CACHE_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return fallback;
}

} // namespace fgf::arxiv
