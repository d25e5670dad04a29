#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "text.hpp"

namespace fgf {

struct KeywordGroup {
    std::string base;
    std::vector<std::string> synonyms;
};

/// Base keywords with their synonym groups and the flattened search pool.
///
/// Tokens are trimmed and case-folded. A token listed in more than one group
/// belongs to the first group that lists it; later occurrences are dropped.
class KeywordTaxonomy {
public:
    KeywordTaxonomy() = default;

    static KeywordTaxonomy from_groups(std::vector<KeywordGroup> groups);

    /// Parses the `base: syn1, syn2, ...` table format, one group per line.
    /// Blank lines and lines starting with `#` are skipped.
    static KeywordTaxonomy parse(std::string_view content);
    static KeywordTaxonomy load(const std::string& path) { return parse(text::read_file(path)); }

    const std::vector<KeywordGroup>& groups() const noexcept { return groups_; }
    const std::vector<std::string>& pool() const noexcept { return pool_; }
    std::size_t size() const noexcept { return pool_.size(); }

    std::size_t group_of(const std::string& token) const;
    std::size_t index_of(const std::string& token) const;
    bool contains(const std::string& token) const { return index_.count(token) != 0; }

    /// Pool indices of the base keywords, in group order.
    std::vector<std::size_t> base_indices() const;

    std::string to_text() const;

private:
    std::vector<KeywordGroup> groups_;
    std::vector<std::string> pool_;
    std::vector<std::size_t> group_of_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Flattens groups into a deduplicated, order-stable pool (base before synonyms).
inline std::vector<std::string> expand_keywords(std::span<const KeywordGroup> groups)
{
    if (groups.empty()) {
        throw ConfigError("keyword taxonomy has no groups");
    }
    std::vector<std::string> pool;
    std::unordered_map<std::string, bool> seen;
    auto add = [&](const std::string& raw) {
        std::string tok = text::casefold(text::collapse_whitespace(raw));
        if (tok.empty()) {
            throw ConfigError("empty keyword token");
        }
        if (seen.emplace(tok, true).second) {
            pool.push_back(std::move(tok));
        }
    };
    for (const auto& g : groups) {
        add(g.base);
        for (const auto& s : g.synonyms) {
            add(s);
        }
    }
    return pool;
}

inline std::vector<std::string> expand_keywords(const KeywordTaxonomy& taxonomy)
{
    return expand_keywords(taxonomy.groups());
}

inline KeywordTaxonomy KeywordTaxonomy::from_groups(std::vector<KeywordGroup> groups)
{
    KeywordTaxonomy t;
    t.pool_ = expand_keywords(groups);
    for (auto& g : groups) {
        g.base = text::casefold(text::collapse_whitespace(g.base));
        for (auto& s : g.synonyms) {
            s = text::casefold(text::collapse_whitespace(s));
        }
    }
    t.groups_ = std::move(groups);
    t.group_of_.assign(t.pool_.size(), 0);
    for (std::size_t i = 0; i < t.pool_.size(); ++i) {
        t.index_.emplace(t.pool_[i], i);
    }
    std::vector<bool> assigned(t.pool_.size(), false);
    for (std::size_t g = 0; g < t.groups_.size(); ++g) {
        auto claim = [&](const std::string& tok) {
            const auto idx = t.index_.at(tok);
            if (!assigned[idx]) {
                assigned[idx] = true;
                t.group_of_[idx] = g;
            }
        };
        claim(t.groups_[g].base);
        for (const auto& s : t.groups_[g].synonyms) {
            claim(s);
        }
    }
    return t;
}

inline KeywordTaxonomy KeywordTaxonomy::parse(std::string_view content)
{
    std::vector<KeywordGroup> groups;
    std::size_t line_no = 0;
    for (const auto& raw : text::split(content, '\n')) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto colon = line.find(':');
        KeywordGroup g;
        g.base = std::string(text::trim(line.substr(0, colon)));
        if (g.base.empty()) {
            throw ConfigError("taxonomy line " + std::to_string(line_no) + " has an empty base keyword");
        }
        if (colon != std::string_view::npos) {
            for (const auto& syn : text::split(line.substr(colon + 1), ',')) {
                const auto t = text::trim(syn);
                if (!t.empty()) {
                    g.synonyms.emplace_back(t);
                }
            }
        }
        groups.push_back(std::move(g));
    }
    return from_groups(std::move(groups));
}

inline std::size_t KeywordTaxonomy::index_of(const std::string& token) const
{
    const auto it = index_.find(text::casefold(text::collapse_whitespace(token)));
    if (it == index_.end()) {
        throw ConfigError("keyword '" + token + "' is not in the taxonomy");
    }
    return it->second;
}

inline std::size_t KeywordTaxonomy::group_of(const std::string& token) const
{
    return group_of_[index_of(token)];
}

inline std::vector<std::size_t> KeywordTaxonomy::base_indices() const
{
    std::vector<std::size_t> out;
    for (const auto& g : groups_) {
        const auto idx = index_.at(g.base);
        if (std::find(out.begin(), out.end(), idx) == out.end()) {
            out.push_back(idx);
        }
    }
    return out;
}

inline std::string KeywordTaxonomy::to_text() const
{
    std::string out;
    for (const auto& g : groups_) {
        out += g.base + ":";
        for (std::size_t i = 0; i < g.synonyms.size(); ++i) {
            out += (i == 0 ? " " : ", ") + g.synonyms[i];
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// dynamic weights

/// Normalized frequencies; all-zero input yields uniform weights.
inline std::vector<double> normalize_frequencies(std::span<const double> freqs)
{
    std::vector<double> w(freqs.size(), 0.0);
    if (freqs.empty()) {
        return w;
    }
    const double total = std::accumulate(freqs.begin(), freqs.end(), 0.0);
    if (total <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(freqs.size()));
        return w;
    }
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        w[i] = freqs[i] / total;
    }
    return w;
}

struct KeywordWeights {
    std::map<std::string, double> weights;

    double at(const std::string& token) const { return weights.at(token); }

    /// Weights laid out in pool order; tokens missing from the map get 0.
    std::vector<double> aligned(std::span<const std::string> pool) const
    {
        std::vector<double> out;
        out.reserve(pool.size());
        for (const auto& tok : pool) {
            const auto it = weights.find(tok);
            out.push_back(it == weights.end() ? 0.0 : it->second);
        }
        return out;
    }
};

inline KeywordWeights update_weights(const std::map<std::string, double>& frequencies)
{
    std::vector<double> f;
    f.reserve(frequencies.size());
    for (const auto& [tok, count] : frequencies) {
        if (count < 0.0) {
            throw DomainError("negative frequency for keyword '" + tok + "'");
        }
        f.push_back(count);
    }
    const auto w = normalize_frequencies(f);
    KeywordWeights out;
    std::size_t i = 0;
    for (const auto& [tok, count] : frequencies) {
        out.weights.emplace(tok, w[i++]);
    }
    return out;
}

} // namespace fgf
