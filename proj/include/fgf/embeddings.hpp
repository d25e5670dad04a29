#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "random.hpp"
#include "text.hpp"

namespace fgf {

// ---------------------------------------------------------------------------
// tables

/// Vectors keyed by token or record id. Keys keep insertion order.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t dim, std::string field) : dim_(dim), field_(std::move(field))
    {
        if (dim_ == 0) {
            throw ConfigError("embedding dimension must be positive");
        }
    }

    std::size_t dim() const noexcept { return dim_; }
    const std::string& field() const noexcept { return field_; }
    std::size_t size() const noexcept { return keys_.size(); }
    const std::vector<std::string>& keys() const noexcept { return keys_; }

    bool contains(const std::string& key) const { return index_.count(key) != 0; }

    void add(const std::string& key, std::span<const double> v)
    {
        if (v.size() != dim_) {
            throw ConfigError("vector for '" + key + "' has length " + std::to_string(v.size()) + ", expected " + std::to_string(dim_));
        }
        if (!index_.emplace(key, keys_.size()).second) {
            throw ConfigError("duplicate embedding key '" + key + "'");
        }
        keys_.push_back(key);
        data_.insert(data_.end(), v.begin(), v.end());
    }

    std::span<const double> at(const std::string& key) const
    {
        const auto it = index_.find(key);
        if (it == index_.end()) {
            throw ConfigError("no embedding for '" + key + "' in field '" + field_ + "'");
        }
        return row(it->second);
    }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

    friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b)
    {
        return a.dim_ == b.dim_ && a.field_ == b.field_ && a.keys_ == b.keys_ && a.data_ == b.data_;
    }

private:
    std::size_t dim_ = 0;
    std::string field_;
    std::vector<std::string> keys_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> data_;
};

/// Token lookup used by aggregation; unknown tokens map to the zero vector.
struct TokenEmbedder {
    std::size_t dim = 0;
    std::function<std::vector<double>(const std::string&)> lookup;

    std::vector<double> operator()(const std::string& token) const { return lookup(token); }

    static TokenEmbedder from_table(const EmbeddingTable& table)
    {
        return {table.dim(), [&table](const std::string& tok) {
                    if (!table.contains(tok)) {
                        return std::vector<double>(table.dim(), 0.0);
                    }
                    const auto v = table.at(tok);
                    return std::vector<double>(v.begin(), v.end());
                }};
    }
};

// ---------------------------------------------------------------------------
// file format: "#dim=<D> field=<tag>" then "<key>\t<v1> ... <vD>"

inline std::string serialize_embeddings(const EmbeddingTable& table)
{
    std::string out = "#dim=" + std::to_string(table.dim()) + " field=" + table.field() + "\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& key = table.keys()[i];
        if (key.find_first_of("\t\n\r") != std::string::npos) {
            throw ConfigError("embedding key contains a tab or newline: '" + key + "'");
        }
        out += key;
        out += '\t';
        const auto v = table.row(i);
        for (std::size_t d = 0; d < v.size(); ++d) {
            if (d != 0) {
                out += ' ';
            }
            out += text::format_double(v[d]);
        }
        out += '\n';
    }
    return out;
}

inline EmbeddingTable parse_embeddings(std::string_view content)
{
    const auto lines = text::split(content, '\n');
    if (lines.empty() || !lines.front().starts_with("#dim=")) {
        throw ParseError("embedding file: missing '#dim=<D> field=<tag>' header");
    }
    const auto header = text::trim(lines.front());
    const auto space = header.find(' ');
    const auto dim_text = header.substr(5, space == std::string_view::npos ? std::string_view::npos : space - 5);
    std::size_t dim = 0;
    try {
        dim = static_cast<std::size_t>(std::stoul(std::string(dim_text)));
    } catch (const std::exception&) {
        throw ParseError("embedding file: bad dimension '" + std::string(dim_text) + "'");
    }
    std::string field;
    if (space != std::string_view::npos) {
        const auto rest = text::trim(header.substr(space + 1));
        if (!rest.starts_with("field=")) {
            throw ParseError("embedding file: expected 'field=<tag>' in header");
        }
        field = std::string(rest.substr(6));
    }
    if (dim == 0) {
        throw ParseError("embedding file: dimension must be positive");
    }
    EmbeddingTable table(dim, field);
    std::vector<double> v;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (text::trim(line).empty()) {
            continue;
        }
        const auto row = std::to_string(i + 1);
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) {
            throw ParseError("embedding file row " + row + ": missing tab after key");
        }
        v.clear();
        for (const auto& tok : text::split(line.substr(tab + 1), ' ')) {
            if (!tok.empty()) {
                try {
                    v.push_back(text::parse_double(tok));
                } catch (const ParseError&) {
                    throw ParseError("embedding file row " + row + ": not a number: '" + tok + "'");
                }
            }
        }
        if (v.size() != dim) {
            throw ParseError("embedding file row " + row + ": " + std::to_string(v.size()) + " values, header says " + std::to_string(dim));
        }
        const std::string key(line.substr(0, tab));
        if (table.contains(key)) {
            throw ParseError("embedding file row " + row + ": duplicate key '" + key + "'");
        }
        table.add(key, v);
    }
    return table;
}

inline EmbeddingTable read_embeddings(const std::string& path) { return parse_embeddings(text::read_file(path)); }

inline void write_embeddings(const EmbeddingTable& table, const std::string& path)
{
    text::write_file(path, serialize_embeddings(table));
}

// ---------------------------------------------------------------------------
// vector helpers

inline double dot(std::span<const double> a, std::span<const double> b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Cosine similarity; 0 when either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b)
{
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot(a, b) / (na * nb);
}

inline std::vector<double> softmax(std::span<const double> v)
{
    std::vector<double> out(v.size());
    if (v.empty()) {
        return out;
    }
    const double mx = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        total += out[i];
    }
    for (auto& x : out) {
        x /= total;
    }
    return out;
}

// ---------------------------------------------------------------------------
// n-grams and TF-IDF

using Gram = std::vector<std::string>;

/// Sliding windows of n tokens; a sequence shorter than n is one gram.
inline std::vector<Gram> ngrams(std::span<const std::string> tokens, std::size_t n)
{
    if (n == 0) {
        throw ConfigError("n-gram size must be positive");
    }
    std::vector<Gram> out;
    if (tokens.empty()) {
        return out;
    }
    if (tokens.size() < n) {
        out.emplace_back(tokens.begin(), tokens.end());
        return out;
    }
    for (std::size_t j = 0; j + n <= tokens.size(); ++j) {
        out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(j), tokens.begin() + static_cast<std::ptrdiff_t>(j + n));
    }
    return out;
}

struct TfidfStats {
    std::map<std::string, std::size_t> doc_freq;
    std::size_t n_docs = 0;

    std::size_t df(const std::string& token) const
    {
        const auto it = doc_freq.find(token);
        return it == doc_freq.end() ? 0 : it->second;
    }
};

/// Document frequencies over tokenized samples.
inline TfidfStats tfidf_stats(std::span<const std::vector<std::string>> samples)
{
    TfidfStats s;
    s.n_docs = samples.size();
    for (const auto& sample : samples) {
        std::vector<std::string> uniq(sample.begin(), sample.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (const auto& t : uniq) {
            ++s.doc_freq[t];
        }
    }
    return s;
}

/// tf * ln(N / (df + 1)).
inline double tfidf(double tf, std::size_t df, std::size_t n_docs)
{
    return tf * std::log(static_cast<double>(n_docs) / (static_cast<double>(df) + 1.0));
}

inline std::map<std::string, double> term_freq(std::span<const std::string> tokens)
{
    std::map<std::string, double> tf;
    for (const auto& t : tokens) {
        tf[t] += 1.0;
    }
    return tf;
}

/// TF-IDF weighted mean of bigram vectors, then softmax (unless disabled).
///
/// A gram's vector and weight are the means over its member tokens. If the
/// total weight is not positive the plain mean of the gram vectors is used.
inline std::vector<double> aggregate_subcom(std::span<const std::string> tokens, const TokenEmbedder& embedder,
                                            const TfidfStats& stats, bool apply_softmax = true, std::size_t n = 2)
{
    const auto grams = ngrams(tokens, n);
    if (grams.empty()) {
        throw ConfigError("cannot aggregate an empty token sequence");
    }
    const auto tf = term_freq(tokens);
    std::vector<double> weighted(embedder.dim, 0.0);
    std::vector<double> plain(embedder.dim, 0.0);
    double total = 0.0;
    for (const auto& g : grams) {
        std::vector<double> gv(embedder.dim, 0.0);
        double gw = 0.0;
        for (const auto& tok : g) {
            const auto v = embedder(tok);
            for (std::size_t d = 0; d < gv.size(); ++d) {
                gv[d] += v[d];
            }
            gw += tfidf(tf.at(tok), stats.df(tok), stats.n_docs);
        }
        const double m = static_cast<double>(g.size());
        gw /= m;
        for (std::size_t d = 0; d < gv.size(); ++d) {
            gv[d] /= m;
            weighted[d] += gw * gv[d];
            plain[d] += gv[d];
        }
        total += gw;
    }
    std::vector<double> h(embedder.dim);
    for (std::size_t d = 0; d < h.size(); ++d) {
        h[d] = total > 0.0 ? weighted[d] / total : plain[d] / static_cast<double>(grams.size());
    }
    return apply_softmax ? softmax(h) : h;
}

// ---------------------------------------------------------------------------
// hash embedder

/// Unit vector drawn from a token-seeded Gaussian stream.
inline std::vector<double> hash_embed(std::string_view token, std::size_t dim, std::uint64_t seed = 0)
{
    if (dim == 0) {
        throw ConfigError("embedding dimension must be positive");
    }
    Rng rng(derive_seed(text::fnv1a64(token), seed));
    std::vector<double> v(dim);
    double nn = 0.0;
    do {
        for (auto& x : v) {
            x = rng.normal();
        }
        nn = norm(v);
    } while (nn == 0.0);
    for (auto& x : v) {
        x /= nn;
    }
    return v;
}

inline TokenEmbedder hash_embedder(std::size_t dim, std::uint64_t seed = 0)
{
    return {dim, [dim, seed](const std::string& tok) { return hash_embed(tok, dim, seed); }};
}

/// Bag-of-words text vector: normalized mean of token vectors. Text without
/// word characters gives the zero vector.
inline std::vector<double> embed_text(std::string_view text_in, const TokenEmbedder& embedder)
{
    std::vector<double> v(embedder.dim, 0.0);
    const auto words = text::words(text_in);
    for (const auto& w : words) {
        const auto e = embedder(w);
        for (std::size_t d = 0; d < v.size(); ++d) {
            v[d] += e[d];
        }
    }
    const double nn = norm(v);
    if (nn > 0.0) {
        for (auto& x : v) {
            x /= nn;
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// skip-gram with negative sampling

struct SgnsConfig {
    std::size_t dim = 100;
    std::size_t window = 5;
    std::size_t min_count = 1;
    std::size_t epochs = 5;
    std::size_t negative = 5;
    double learning_rate = 0.025;
    std::uint64_t seed = 0;
};

/// Word2Vec-style skip-gram trainer. Single-threaded, so a fixed seed gives
/// an identical table.
inline EmbeddingTable train_sgns(std::span<const std::vector<std::string>> corpus, const SgnsConfig& cfg,
                                 const std::string& field = "tokens")
{
    if (cfg.dim == 0 || cfg.window == 0 || cfg.epochs == 0) {
        throw ConfigError("sgns: dim, window and epochs must be positive");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& s : corpus) {
        for (const auto& t : s) {
            ++counts[t];
        }
    }
    std::vector<std::string> vocab;
    std::vector<double> freq;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& [tok, c] : counts) {
        if (c >= cfg.min_count) {
            index.emplace(tok, vocab.size());
            vocab.push_back(tok);
            freq.push_back(static_cast<double>(c));
        }
    }
    if (vocab.empty()) {
        throw DomainError("sgns: empty vocabulary after min_count filtering");
    }
    const std::size_t V = vocab.size();
    const std::size_t D = cfg.dim;

    // unigram^0.75 noise distribution as a cumulative table
    std::vector<double> cdf(V);
    double acc = 0.0;
    for (std::size_t i = 0; i < V; ++i) {
        acc += std::pow(freq[i], 0.75);
        cdf[i] = acc;
    }
    Rng rng(derive_seed(cfg.seed, 11));
    auto noise = [&] {
        const double u = rng.uniform() * acc;
        return static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) % V;
    };

    std::vector<double> in(V * D);
    std::vector<double> out(V * D, 0.0);
    for (auto& x : in) {
        x = (rng.uniform() - 0.5) / static_cast<double>(D);
    }

    std::vector<std::vector<std::size_t>> sentences;
    std::size_t total_tokens = 0;
    for (const auto& s : corpus) {
        std::vector<std::size_t> ids;
        for (const auto& t : s) {
            if (const auto it = index.find(t); it != index.end()) {
                ids.push_back(it->second);
            }
        }
        total_tokens += ids.size();
        sentences.push_back(std::move(ids));
    }
    const double total_steps = static_cast<double>(cfg.epochs * std::max<std::size_t>(total_tokens, 1));
    std::size_t step = 0;
    std::vector<double> grad(D);
    auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& sent : sentences) {
            for (std::size_t pos = 0; pos < sent.size(); ++pos, ++step) {
                const double lr = std::max(cfg.learning_rate * 1e-4, cfg.learning_rate * (1.0 - static_cast<double>(step) / total_steps));
                const std::size_t shrink = rng.index(cfg.window);
                const std::size_t w = cfg.window - shrink;
                const std::size_t lo = pos >= w ? pos - w : 0;
                const std::size_t hi = std::min(sent.size() - 1, pos + w);
                for (std::size_t c = lo; c <= hi; ++c) {
                    if (c == pos) {
                        continue;
                    }
                    double* vin = &in[sent[c] * D];
                    std::fill(grad.begin(), grad.end(), 0.0);
                    for (std::size_t k = 0; k <= cfg.negative; ++k) {
                        std::size_t target = sent[pos];
                        double label = 1.0;
                        if (k > 0) {
                            target = noise();
                            if (target == sent[pos]) {
                                continue;
                            }
                            label = 0.0;
                        }
                        double* vout = &out[target * D];
                        double f = 0.0;
                        for (std::size_t d = 0; d < D; ++d) {
                            f += vin[d] * vout[d];
                        }
                        const double g = (label - sigmoid(f)) * lr;
                        for (std::size_t d = 0; d < D; ++d) {
                            grad[d] += g * vout[d];
                            vout[d] += g * vin[d];
                        }
                    }
                    for (std::size_t d = 0; d < D; ++d) {
                        vin[d] += grad[d];
                    }
                }
            }
        }
    }

    EmbeddingTable table(D, field);
    for (std::size_t i = 0; i < V; ++i) {
        table.add(vocab[i], std::span<const double>(in.data() + i * D, D));
    }
    return table;
}

// ---------------------------------------------------------------------------
// dimension sweep statistic

struct SimilaritySpread {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t pairs = 0;
};

/// Mean and population standard deviation of all-pairs cosine similarity.
inline SimilaritySpread similarity_spread(std::span<const std::vector<double>> vectors)
{
    SimilaritySpread s;
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (std::size_t j = i + 1; j < vectors.size(); ++j) {
            const double c = cosine(vectors[i], vectors[j]);
            sum += c;
            sq += c * c;
            ++s.pairs;
        }
    }
    if (s.pairs > 0) {
        const double n = static_cast<double>(s.pairs);
        s.mean = sum / n;
        s.stddev = std::sqrt(std::max(0.0, sq / n - s.mean * s.mean));
    }
    return s;
}

} // namespace fgf
