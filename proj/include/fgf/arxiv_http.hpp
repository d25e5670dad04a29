#pragma once

// Live transport for the arXiv client. Kept apart from arxiv.hpp so that
// only the command line tool pulls in the HTTP stack.

#include <httplib.h>

#include "arxiv.hpp"

namespace fgf::arxiv {

inline Transport http_transport(std::string host = default_host)
{
    return [host = std::move(host)](const std::string& path) {
        httplib::Client cli(host);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(60);
        cli.set_follow_location(true);
        auto res = cli.Get(path);
        if (!res) {
            return HttpResponse{0, httplib::to_string(res.error())};
        }
        return HttpResponse{res->status, res->body};
    };
}

inline std::vector<Document> fetch_arxiv(std::string_view query, int max_results, const std::filesystem::path& cache)
{
    Client client(http_transport(), cache);
    return client.fetch(query, max_results);
}

} // namespace fgf::arxiv
