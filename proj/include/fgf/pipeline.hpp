#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "arxiv.hpp"
#include "corpus.hpp"
#include "embeddings.hpp"
#include "error.hpp"
#include "frontier.hpp"
#include "fusion.hpp"
#include "graphset.hpp"
#include "keywords.hpp"
#include "optimizer.hpp"
#include "text.hpp"
#include "validate.hpp"

namespace fgf::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Reference values quoted from the published study, printed beside ours.
namespace reference {
inline constexpr double hv_hncsa = 0.153;
inline constexpr double hv_csa = 0.147;
inline constexpr double hv_nsga2 = 0.145;
inline constexpr double silhouette = 0.641;
inline constexpr std::size_t kpca_k = 121;
inline constexpr std::size_t nodes = 1262;
inline constexpr std::size_t edges = 6150;
inline constexpr std::size_t classes = 12;
inline constexpr std::size_t features = 1210;
inline constexpr double duplication_rate = 0.008;

inline json retrieval()
{
    return {{"keyword_search", {{"R", 0.52}, {"P", 0.48}, {"F1", 0.49}}},
            {"nsga2", {{"R", 0.54}, {"P", 0.56}, {"F1", 0.55}}},
            {"csa", {{"R", 0.60}, {"P", 0.58}, {"F1", 0.58}}},
            {"hncsa", {{"R", 0.64}, {"P", 0.59}, {"F1", 0.61}}}};
}

inline json similarity() { return {{"subsystem|component", 0.72}, {"mode|reason", 0.65}, {"effect|decision", 0.68}}; }

inline double hypervolume(Algorithm a)
{
    switch (a) {
    case Algorithm::hncsa: return hv_hncsa;
    case Algorithm::csa: return hv_csa;
    default: return hv_nsga2;
    }
}
} // namespace reference

// ---------------------------------------------------------------------------
// configuration

struct EmbedSpec {
    std::string backend = "hash"; // hash | sgns | file
    std::size_t dim = 384;
    std::string path;             // file backend
    std::size_t epochs = 20;      // sgns backend
};

struct PipelineConfig {
    fs::path base_dir = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = default_threads();
    fs::path out = "out";

    std::string taxonomy;
    std::string corpus_source = "offline";
    std::string corpus_path;
    std::string labels_path;
    int max_results = 200;

    RunConfig optimizer;
    std::vector<Algorithm> algorithms{Algorithm::hncsa, Algorithm::csa, Algorithm::nsga2};
    std::size_t runs = 1;

    std::string records;
    std::string records_format; // empty: by extension
    bool strict = true;
    std::string edges;

    std::map<std::string, EmbedSpec> embeddings{
        {"sub_com", {"sgns", 100, "", 20}},
        {"mode", {"hash", 64, "", 0}},
        {"reason", {"hash", 64, "", 0}},
        {"decision", {"hash", 384, "", 0}},
        {"effect", {"hash", 384, "", 0}},
    };
    std::vector<std::size_t> sweep_dims{50, 100, 150, 200, 250, 300};
    bool subcom_softmax = true;

    Kernel kernel = Kernel::rbf;
    double target_variance = 0.95;
    double d_sub = 1.0;
    double d_com = 2.0;
    AttentionNorm attention = AttentionNorm::global;
    ClassWeightMode class_weights = ClassWeightMode::fusion;
    LossMix loss_mix;
    std::string verbs;
    std::string verb_vectors;

    SplitSpec split;
    bool undirected = false;
    std::size_t clusters = 12;

    fs::path resolve(const std::string& p) const
    {
        const fs::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }

    std::uint64_t require_seed() const
    {
        if (!seed) {
            throw ConfigError("a seed is required (set \"seed\" in the config or pass --seed)");
        }
        return *seed;
    }
};

inline const std::vector<std::string>& field_names()
{
    static const std::vector<std::string> names{"sub_com", "mode", "reason", "decision", "effect"};
    return names;
}

/// The effective configuration, with every default spelled out. Paths are
/// echoed as written so artifacts do not depend on the working directory.
inline json to_json(const PipelineConfig& c)
{
    json j;
    j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
    j["taxonomy"] = c.taxonomy;
    j["corpus"] = {{"source", c.corpus_source}, {"path", c.corpus_path}, {"labels", c.labels_path}, {"max_results", c.max_results}};
    auto opt = fgf::to_json(c.optimizer);
    opt.erase("seed");
    opt.erase("algo");
    json algos = json::array();
    for (auto a : c.algorithms) {
        algos.push_back(to_string(a));
    }
    opt["algorithms"] = std::move(algos);
    opt["runs"] = c.runs;
    j["optimizer"] = std::move(opt);
    j["records"] = {{"path", c.records}, {"format", c.records_format}, {"strict", c.strict}};
    j["edges"] = c.edges;
    json emb = json::object();
    for (const auto& f : field_names()) {
        const auto& e = c.embeddings.at(f);
        emb[f] = {{"backend", e.backend}, {"dim", e.dim}, {"path", e.path}, {"epochs", e.epochs}};
    }
    j["embeddings"] = std::move(emb);
    j["sweep_dims"] = c.sweep_dims;
    j["fusion"] = {{"kernel", to_string(c.kernel)},
                   {"target_variance", c.target_variance},
                   {"d_sub", c.d_sub},
                   {"d_com", c.d_com},
                   {"attention", c.attention == AttentionNorm::global ? "global" : "row"},
                   {"subcom_softmax", c.subcom_softmax},
                   {"class_weights", c.class_weights == ClassWeightMode::fusion ? "fusion" : "frequency"},
                   {"loss_alpha", c.loss_mix.alpha},
                   {"loss_beta", c.loss_mix.beta},
                   {"loss_gamma", c.loss_mix.gamma},
                   {"verbs", c.verbs},
                   {"verb_vectors", c.verb_vectors}};
    j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
    j["undirected"] = c.undirected;
    j["clusters"] = c.clusters;
    return j;
}

inline std::string config_hash(const PipelineConfig& c) { return text::hex64(text::fnv1a64(to_json(c).dump())); }

namespace detail {

template <class T>
T get(const nlohmann::json& j, const char* key, const T& fallback)
{
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return fallback;
    }
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
            throw ConfigError("unknown key '" + k + "' in " + where);
        }
    }
}

} // namespace detail

inline PipelineConfig parse_config(const std::string& content, const fs::path& base_dir)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    using detail::get;
    detail::check_keys(j, {"seed", "threads", "out", "taxonomy", "corpus", "optimizer", "records", "edges", "embeddings", "sweep_dims",
                           "fusion", "split", "undirected", "clusters"},
                       "config");
    PipelineConfig c;
    c.base_dir = base_dir;
    if (j.contains("seed") && !j["seed"].is_null()) {
        c.seed = get<std::uint64_t>(j, "seed", 0);
    }
    c.threads = get<unsigned>(j, "threads", c.threads);
    c.out = get<std::string>(j, "out", c.out.string());
    c.taxonomy = get<std::string>(j, "taxonomy", c.taxonomy);
    if (j.contains("corpus")) {
        const auto& k = j["corpus"];
        detail::check_keys(k, {"source", "path", "labels", "max_results"}, "corpus");
        c.corpus_source = get<std::string>(k, "source", c.corpus_source);
        c.corpus_path = get<std::string>(k, "path", "");
        c.labels_path = get<std::string>(k, "labels", "");
        c.max_results = get<int>(k, "max_results", c.max_results);
    }
    if (c.corpus_source != "offline" && c.corpus_source != "live") {
        throw ConfigError("corpus.source must be 'offline' or 'live'");
    }
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        detail::check_keys(o, {"algorithms", "runs", "n_nests", "iterations", "pa", "alpha", "beta", "hncsa_gamma", "hncsa_eps",
                               "min_keywords", "crossover_rate"},
                           "optimizer");
        auto& r = c.optimizer;
        r.n_nests = get<std::size_t>(o, "n_nests", r.n_nests);
        r.iterations = get<std::size_t>(o, "iterations", r.iterations);
        r.pa = get<double>(o, "pa", r.pa);
        r.alpha = get<double>(o, "alpha", r.alpha);
        r.beta = get<double>(o, "beta", r.beta);
        r.hncsa_gamma = get<double>(o, "hncsa_gamma", r.hncsa_gamma);
        r.hncsa_eps = get<double>(o, "hncsa_eps", r.hncsa_eps);
        r.min_keywords = get<std::size_t>(o, "min_keywords", r.min_keywords);
        r.crossover_rate = get<double>(o, "crossover_rate", r.crossover_rate);
        c.runs = get<std::size_t>(o, "runs", c.runs);
        if (o.contains("algorithms")) {
            c.algorithms.clear();
            for (const auto& a : get<std::vector<std::string>>(o, "algorithms", {})) {
                c.algorithms.push_back(parse_algorithm(a));
            }
        }
        r.validate();
    }
    if (c.runs < 1) {
        throw ConfigError("optimizer.runs must be >= 1");
    }
    if (j.contains("records")) {
        const auto& r = j["records"];
        detail::check_keys(r, {"path", "format", "strict"}, "records");
        c.records = get<std::string>(r, "path", "");
        c.records_format = get<std::string>(r, "format", "");
        c.strict = get<bool>(r, "strict", true);
        if (!c.records_format.empty()) {
            parse_record_format(c.records_format);
        }
    }
    c.edges = get<std::string>(j, "edges", "");
    if (j.contains("embeddings")) {
        const auto& e = j["embeddings"];
        if (!e.is_object()) {
            throw ConfigError("embeddings must be an object");
        }
        for (const auto& [field, spec] : e.items()) {
            if (!c.embeddings.count(field)) {
                throw ConfigError("unknown embedding field '" + field + "'");
            }
            detail::check_keys(spec, {"backend", "dim", "path", "epochs"}, "embeddings." + field);
            auto& s = c.embeddings[field];
            s.backend = get<std::string>(spec, "backend", s.backend);
            s.dim = get<std::size_t>(spec, "dim", s.dim);
            s.path = get<std::string>(spec, "path", "");
            s.epochs = get<std::size_t>(spec, "epochs", s.epochs);
            if (s.backend != "hash" && s.backend != "sgns" && s.backend != "file") {
                throw ConfigError("embeddings." + field + ".backend must be hash, sgns or file");
            }
            if (s.backend == "file" && s.path.empty()) {
                throw ConfigError("embeddings." + field + " uses the file backend but has no path");
            }
            if (s.dim == 0) {
                throw ConfigError("embeddings." + field + ".dim must be positive");
            }
        }
    }
    if (c.embeddings.at("sub_com").backend == "file") {
        throw ConfigError("embeddings.sub_com is aggregated from token vectors; use the sgns or hash backend");
    }
    if (c.embeddings.at("mode").dim != c.embeddings.at("reason").dim) {
        throw ConfigError("mode and reason embeddings must have the same dimension");
    }
    c.sweep_dims = get<std::vector<std::size_t>>(j, "sweep_dims", c.sweep_dims);
    if (j.contains("fusion")) {
        const auto& f = j["fusion"];
        detail::check_keys(f, {"kernel", "target_variance", "d_sub", "d_com", "attention", "subcom_softmax", "class_weights", "loss_alpha",
                               "loss_beta", "loss_gamma", "verbs", "verb_vectors"},
                           "fusion");
        c.kernel = parse_kernel(get<std::string>(f, "kernel", "rbf"));
        c.target_variance = get<double>(f, "target_variance", c.target_variance);
        c.d_sub = get<double>(f, "d_sub", c.d_sub);
        c.d_com = get<double>(f, "d_com", c.d_com);
        c.attention = parse_attention_norm(get<std::string>(f, "attention", "global"));
        c.subcom_softmax = get<bool>(f, "subcom_softmax", c.subcom_softmax);
        c.class_weights = parse_class_weight_mode(get<std::string>(f, "class_weights", "fusion"));
        c.loss_mix.alpha = get<double>(f, "loss_alpha", c.loss_mix.alpha);
        c.loss_mix.beta = get<double>(f, "loss_beta", c.loss_mix.beta);
        c.loss_mix.gamma = get<double>(f, "loss_gamma", c.loss_mix.gamma);
        c.verbs = get<std::string>(f, "verbs", "");
        c.verb_vectors = get<std::string>(f, "verb_vectors", "");
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        detail::check_keys(s, {"train", "val", "test"}, "split");
        c.split.train = get<double>(s, "train", c.split.train);
        c.split.val = get<double>(s, "val", c.split.val);
        c.split.test = get<double>(s, "test", c.split.test);
    }
    c.split.validate();
    c.undirected = get<bool>(j, "undirected", c.undirected);
    c.clusters = get<std::size_t>(j, "clusters", c.clusters);
    if (c.clusters < 2) {
        throw ConfigError("clusters must be >= 2");
    }
    return c;
}

/// Every path the config names must exist.
inline void check_paths(const PipelineConfig& c)
{
    std::vector<std::pair<std::string, std::string>> named{{"taxonomy", c.taxonomy}, {"corpus.path", c.corpus_path},
                                                           {"corpus.labels", c.labels_path}, {"records.path", c.records},
                                                           {"edges", c.edges}, {"fusion.verbs", c.verbs},
                                                           {"fusion.verb_vectors", c.verb_vectors}};
    for (const auto& [f, e] : c.embeddings) {
        named.emplace_back("embeddings." + f + ".path", e.path);
    }
    for (const auto& [key, p] : named) {
        if (!p.empty() && !fs::exists(c.resolve(p))) {
            throw ConfigError(key + " names " + c.resolve(p).string() + ", which does not exist");
        }
    }
}

inline PipelineConfig load_config(const fs::path& path)
{
    if (!fs::exists(path)) {
        throw ConfigError("config file " + path.string() + " does not exist");
    }
    return parse_config(text::read_file(path.string()), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// ---------------------------------------------------------------------------
// stage manifests

struct StageInput {
    fs::path path;
    std::string label;    // how the path appears in the manifest
    std::string producer; // command that creates it, or empty for user-supplied files
};

inline std::string file_hash(const fs::path& p) { return text::hex64(text::fnv1a64(text::read_file(p.string()))); }

class Workspace {
public:
    Workspace(PipelineConfig cfg, std::ostream* log = nullptr) : cfg_(std::move(cfg)), log_(log) {}

    const PipelineConfig& config() const noexcept { return cfg_; }
    fs::path out() const { return cfg_.out.is_absolute() ? cfg_.out : cfg_.base_dir / cfg_.out; }
    fs::path artifact(const std::string& rel) const { return out() / rel; }

    StageInput user_file(const std::string& path, const std::string& what) const
    {
        if (path.empty()) {
            throw ConfigError(what + " path is not set in the config");
        }
        return {cfg_.resolve(path), path, ""};
    }

    StageInput upstream(const std::string& rel, const std::string& producer) const { return {artifact(rel), rel, producer}; }

    /// Runs `body` unless the stage manifest shows identical inputs, config
    /// and outputs. Returns false when the stage was skipped as up to date.
    bool run(const std::string& stage, const std::vector<StageInput>& inputs, const std::function<std::vector<std::string>()>& body,
             bool force = false)
    {
        json in = json::object();
        for (const auto& i : inputs) {
            if (!fs::exists(i.path)) {
                if (!i.producer.empty()) {
                    throw MissingInputError(i.label + " not found in " + out().string() + "; run '" + i.producer + "' first");
                }
                throw MissingInputError(i.label + " (" + i.path.string() + ") does not exist");
            }
            in[i.label] = file_hash(i.path);
        }
        const auto manifest_path = artifact("manifests/" + stage + ".json");
        const auto hash = config_hash(cfg_);
        if (!force && fs::exists(manifest_path)) {
            try {
                const auto old = nlohmann::json::parse(text::read_file(manifest_path.string()));
                bool same = old.at("config_hash") == hash && old.at("inputs") == nlohmann::json(in);
                for (const auto& [rel, h] : old.at("outputs").items()) {
                    same = same && fs::exists(artifact(rel)) && file_hash(artifact(rel)) == h.get<std::string>();
                }
                if (same) {
                    say(stage + ": up to date");
                    return false;
                }
            } catch (const nlohmann::json::exception&) {
                // unreadable manifest: rebuild
            }
        }
        fs::create_directories(out());
        const auto outputs = body();
        json o = json::object();
        for (const auto& rel : outputs) {
            o[rel] = file_hash(artifact(rel));
        }
        json m;
        m["stage"] = stage;
        m["config_hash"] = hash;
        m["seed"] = cfg_.seed ? json(*cfg_.seed) : json(nullptr);
        m["inputs"] = std::move(in);
        m["outputs"] = std::move(o);
        fs::create_directories(manifest_path.parent_path());
        text::write_file(manifest_path.string(), m.dump(2) + "\n");
        say(stage + ": wrote " + std::to_string(outputs.size()) + " artifact(s)");
        return true;
    }

    void write(const std::string& rel, const std::string& content) const
    {
        const auto p = artifact(rel);
        fs::create_directories(p.parent_path());
        text::write_file(p.string(), content);
    }

    void write_json(const std::string& rel, const json& j) const { write(rel, j.dump(2) + "\n"); }

    json stamp() const { return {{"config_hash", config_hash(cfg_)}, {"seed", cfg_.seed ? json(*cfg_.seed) : json(nullptr)}}; }

    void say(const std::string& msg) const
    {
        if (log_ != nullptr) {
            *log_ << msg << '\n';
        }
    }

private:
    PipelineConfig cfg_;
    std::ostream* log_;
};

// ---------------------------------------------------------------------------
// shared loaders

inline std::vector<FailureRecord> load_records(const Workspace& ws)
{
    const auto& c = ws.config();
    const auto path = ws.user_file(c.records, "records").path.string();
    if (!fs::exists(path)) {
        throw MissingInputError("records file " + path + " does not exist");
    }
    const auto fmt = c.records_format.empty() ? record_format_for(path) : parse_record_format(c.records_format);
    auto res = ingest_records(path, fmt, c.strict);
    for (const auto& e : res.errors) {
        ws.say("skipped " + e);
    }
    if (res.records.empty()) {
        throw ValidationError("no usable failure records in " + path);
    }
    return std::move(res.records);
}

inline std::vector<std::string> load_verbs(const Workspace& ws)
{
    const auto& c = ws.config();
    if (c.verbs.empty()) {
        return {"inspect", "replace", "repair", "switch", "restart", "monitor", "isolate", "test", "weld", "adjust", "record", "dispatch"};
    }
    std::vector<std::string> out;
    for (const auto& line : text::split(text::read_file(c.resolve(c.verbs).string()), '\n')) {
        const auto t = text::trim(line);
        if (!t.empty() && t.front() != '#') {
            out.push_back(text::casefold(t));
        }
    }
    if (out.empty()) {
        throw ConfigError("verb lexicon " + c.verbs + " is empty");
    }
    return out;
}

inline std::vector<std::string> subcom_tokens(const FailureRecord& r) { return text::words(r.subsystem + " " + r.component); }

inline const std::string& field_text(const FailureRecord& r, const std::string& field)
{
    if (field == "mode") return r.failure_mode;
    if (field == "reason") return r.failure_reason;
    if (field == "decision") return r.emergency_measure;
    if (field == "effect") return r.failure_effect;
    throw ConfigError("field '" + field + "' has no single text column");
}

inline std::uint64_t hash_seed(const PipelineConfig& c) { return derive_seed(c.seed.value_or(0), 7); }

inline SgnsConfig sgns_config(const PipelineConfig& c, std::size_t dim)
{
    SgnsConfig s;
    s.dim = dim;
    s.window = 5;
    s.min_count = 1;
    s.epochs = c.embeddings.at("sub_com").epochs;
    s.seed = derive_seed(c.seed.value_or(0), 9);
    return s;
}

inline EmbeddingTable subcom_table(std::span<const FailureRecord> records, const TokenEmbedder& tokens, bool softmax_on)
{
    std::vector<std::vector<std::string>> samples;
    for (const auto& r : records) {
        samples.push_back(subcom_tokens(r));
    }
    const auto stats = tfidf_stats(samples);
    EmbeddingTable t(tokens.dim, "sub_com");
    for (std::size_t i = 0; i < records.size(); ++i) {
        t.add(records[i].key(), aggregate_subcom(samples[i], tokens, stats, softmax_on));
    }
    return t;
}

inline std::vector<std::vector<std::string>> subcom_corpus(std::span<const FailureRecord> records)
{
    std::vector<std::vector<std::string>> out;
    for (const auto& r : records) {
        out.push_back(subcom_tokens(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// stages

/// Live mode needs a transport; the command line tool passes the HTTP one.
inline bool fetch(Workspace& ws, arxiv::Transport transport = {}, bool force = false)
{
    const auto& c = ws.config();
    std::vector<StageInput> inputs{ws.user_file(c.taxonomy, "taxonomy")};
    if (c.corpus_source == "offline") {
        inputs.push_back(ws.user_file(c.corpus_path, "corpus"));
    }
    if (!c.labels_path.empty()) {
        inputs.push_back(ws.user_file(c.labels_path, "labels"));
    }
    return ws.run("fetch", inputs, [&] {
        std::vector<Document> docs;
        if (c.corpus_source == "offline") {
            docs = load_offline(c.resolve(c.corpus_path).string());
        } else {
            const auto tax = KeywordTaxonomy::load(c.resolve(c.taxonomy).string());
            if (!transport) {
                throw ConfigError("live corpus source requested but no network transport is available");
            }
            arxiv::Client client(transport, arxiv::cache_dir(ws.artifact("cache")));
            for (const auto& g : tax.groups()) {
                std::string q = "all:\"" + g.base + "\"";
                for (const auto& s : g.synonyms) {
                    q += " OR all:\"" + s + "\"";
                }
                for (auto& d : client.fetch(q, c.max_results)) {
                    docs.push_back(std::move(d));
                }
            }
        }
        if (!c.labels_path.empty()) {
            apply_labels(docs, text::read_file(c.resolve(c.labels_path).string()));
        }
        const auto dd = dedup_report(docs);
        ws.write("corpus.jsonl", serialize_offline(dd.kept));
        std::size_t labeled = 0, relevant = 0;
        for (const auto& d : dd.kept) {
            labeled += d.relevant.has_value();
            relevant += d.relevant.value_or(false);
        }
        auto rep = ws.stamp();
        rep["source"] = c.corpus_source;
        rep["documents_in"] = docs.size();
        rep["duplicates_removed"] = dd.removed;
        rep["duplication_rate"] = dd.duplication_rate();
        rep["duplication_rate_reference"] = reference::duplication_rate;
        rep["documents"] = dd.kept.size();
        rep["labeled"] = labeled;
        rep["relevant"] = relevant;
        ws.write_json("fetch.json", rep);
        return std::vector<std::string>{"corpus.jsonl", "fetch.json"};
    }, force);
}

inline std::string run_file(Algorithm a, std::uint64_t seed) { return "runs/" + to_string(a) + "-s" + std::to_string(seed) + ".json"; }

inline bool optimize(Workspace& ws, bool force = false)
{
    const auto& c = ws.config();
    const auto seed = c.require_seed();
    return ws.run("optimize", {ws.user_file(c.taxonomy, "taxonomy"), ws.upstream("corpus.jsonl", "fgf fetch")}, [&] {
        const auto tax = KeywordTaxonomy::load(c.resolve(c.taxonomy).string());
        const auto docs = load_offline(ws.artifact("corpus.jsonl").string());
        const auto problem = Problem::from_corpus(docs, tax);
        std::vector<std::string> outputs;
        for (std::size_t r = 0; r < c.runs; ++r) {
            for (auto a : c.algorithms) {
                RunConfig rc = c.optimizer;
                rc.algo = a;
                rc.seed = seed + r;
                rc.threads = c.threads;
                const auto h = run_optimizer(rc, problem);
                auto j = ws.stamp();
                j.update(fgf::to_json(h));
                const auto rel = run_file(a, rc.seed);
                ws.write_json(rel, j);
                outputs.push_back(rel);
                ws.say("  " + to_string(a) + " seed " + std::to_string(rc.seed) + ": " + std::to_string(h.final_front.size())
                       + " front points");
            }
        }
        return outputs;
    }, force);
}

/// Run files listed by the optimize manifest.
inline std::vector<std::string> optimize_outputs(const Workspace& ws)
{
    const auto m = ws.artifact("manifests/optimize.json");
    if (!fs::exists(m)) {
        throw MissingInputError("no optimizer runs in " + ws.out().string() + "; run 'fgf optimize' first");
    }
    std::vector<std::string> out;
    const auto manifest = nlohmann::json::parse(text::read_file(m.string()));
    for (const auto& [rel, h] : manifest.at("outputs").items()) {
        out.push_back(rel);
    }
    return out;
}

struct RunMetrics {
    Algorithm algo = Algorithm::hncsa;
    std::uint64_t seed = 0;
    std::vector<FrontPoint> front;
    RepresentativeHypervolume hv_repr;
    double hv_exact = 0.0;
    std::optional<RetrievalMetrics> retrieval;
    std::size_t retrieved = 0;
    std::string best_keywords;
};

/// Normalizes every run's front with bounds shared by all runs of the same
/// seed, then scores hypervolume and retrieval.
inline std::vector<RunMetrics> score_runs(std::span<const RunHistory> runs, std::span<const Document> docs)
{
    std::map<std::uint64_t, std::vector<ObjectivePair>> per_seed;
    for (const auto& h : runs) {
        for (const auto& m : h.final_front) {
            per_seed[h.config.seed].push_back({m.obj.f1, m.obj.f2, ""});
        }
    }
    std::optional<MatchProfile> profile;
    std::size_t relevant_total = 0;
    for (const auto& d : docs) {
        relevant_total += d.relevant.value_or(false);
    }
    std::vector<RunMetrics> out;
    for (const auto& h : runs) {
        RunMetrics m;
        m.algo = h.config.algo;
        m.seed = h.config.seed;
        std::vector<ObjectivePair> pts;
        for (const auto& f : h.final_front) {
            pts.push_back({f.obj.f1, f.obj.f2, combo_string(f.combo, h.pool)});
        }
        m.front = normalize_objectives(pts, objective_bounds(per_seed.at(h.config.seed)));
        m.hv_repr = hypervolume_representative_detail(m.front);
        m.hv_exact = hypervolume_exact2d(m.front);
        const auto& best = h.last().best_combo;
        m.best_keywords = combo_string(best, h.pool);
        if (!docs.empty()) {
            if (!profile) {
                profile = match_counts(docs, h.pool);
            }
            const auto got = retrieved_documents(*profile, best);
            m.retrieved = got.size();
            if (relevant_total > 0 && !got.empty()) {
                std::size_t hits = 0;
                for (auto j : got) {
                    hits += docs[j].relevant.value_or(false);
                }
                m.retrieval = retrieval_metrics(hits, relevant_total, got.size());
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

inline bool evaluate(Workspace& ws, bool force = false)
{
    std::vector<StageInput> inputs{ws.upstream("corpus.jsonl", "fgf fetch")};
    for (const auto& rel : optimize_outputs(ws)) {
        inputs.push_back(ws.upstream(rel, "fgf optimize"));
    }
    return ws.run("evaluate", inputs, [&] {
        const auto docs = load_offline(ws.artifact("corpus.jsonl").string());
        std::vector<RunHistory> runs;
        for (const auto& rel : optimize_outputs(ws)) {
            runs.push_back(history_from_json(nlohmann::json::parse(text::read_file(ws.artifact(rel).string()))));
        }
        const auto scored = score_runs(runs, docs);
        auto j = ws.stamp();
        json list = json::array();
        std::map<Algorithm, std::vector<const RunMetrics*>> by_algo;
        for (const auto& m : scored) {
            by_algo[m.algo].push_back(&m);
            json pts = json::array();
            for (const auto& p : m.front) {
                pts.push_back({{"g1", p.g1}, {"g2", p.g2}, {"keywords", p.origin}});
            }
            json e;
            e["algo"] = to_string(m.algo);
            e["seed"] = m.seed;
            e["hypervolume_representative"] = m.hv_repr.value;
            e["hypervolume_exact"] = m.hv_exact;
            e["front_points"] = std::move(pts);
            e["fit_params"] = m.hv_repr.fit ? json{{"A1", m.hv_repr.fit->a1},
                                                    {"t1", m.hv_repr.fit->t1},
                                                    {"y0", m.hv_repr.fit->y0},
                                                    {"rmse", m.hv_repr.fit->rmse},
                                                    {"converged", m.hv_repr.fit->converged}}
                                             : json(nullptr);
            e["best_keywords"] = m.best_keywords;
            e["retrieved"] = m.retrieved;
            e["R"] = m.retrieval ? json(m.retrieval->recall) : json(nullptr);
            e["P"] = m.retrieval ? json(m.retrieval->precision) : json(nullptr);
            e["F1"] = m.retrieval ? json(m.retrieval->f1) : json(nullptr);
            list.push_back(std::move(e));
        }
        j["runs"] = std::move(list);
        json summary = json::object();
        for (const auto& [a, ms] : by_algo) {
            double hp = 0, he = 0, f1 = 0;
            std::size_t nf = 0;
            for (const auto* m : ms) {
                hp += m->hv_repr.value;
                he += m->hv_exact;
                if (m->retrieval) {
                    f1 += m->retrieval->f1;
                    ++nf;
                }
            }
            const double n = static_cast<double>(ms.size());
            summary[to_string(a)] = {{"runs", ms.size()},
                                     {"mean_hypervolume_representative", hp / n},
                                     {"mean_hypervolume_exact", he / n},
                                     {"mean_F1", nf ? json(f1 / static_cast<double>(nf)) : json(nullptr)},
                                     {"reference_hypervolume", reference::hypervolume(a)}};
        }
        j["summary"] = std::move(summary);
        j["reference_retrieval"] = reference::retrieval();
        ws.write_json("metrics.json", j);
        return std::vector<std::string>{"metrics.json"};
    }, force);
}

inline std::vector<StageInput> embed_inputs(const Workspace& ws)
{
    const auto& c = ws.config();
    std::vector<StageInput> in{ws.user_file(c.records, "records")};
    for (const auto& f : field_names()) {
        const auto& s = c.embeddings.at(f);
        if (s.backend == "file") {
            in.push_back(ws.user_file(s.path, "embeddings." + f));
        }
    }
    return in;
}

/// Writes one table per field; `only` restricts the run to a subset.
inline bool embed(Workspace& ws, std::vector<std::string> only = {}, bool force = false)
{
    const auto& c = ws.config();
    for (const auto& f : only) {
        if (std::find(field_names().begin(), field_names().end(), f) == field_names().end()) {
            throw ConfigError("unknown field '" + f + "'; expected one of sub_com, mode, reason, decision, effect");
        }
    }
    if (only.empty()) {
        only = field_names();
    }
    auto wanted = [&](const std::string& f) { return std::find(only.begin(), only.end(), f) != only.end(); };
    const std::string stage = only == field_names() ? "embed" : "embed-" + text::join(only, "-");
    return ws.run(stage, embed_inputs(ws), [&] {
        const auto records = load_records(ws);
        std::vector<std::string> outputs;
        const auto& sc = c.embeddings.at("sub_com");
        if (!wanted("sub_com")) {
        } else if (sc.backend == "sgns") {
            const auto tokens = train_sgns(subcom_corpus(records), sgns_config(c, sc.dim), "tokens");
            ws.write("emb/tokens.emb", serialize_embeddings(tokens));
            outputs.push_back("emb/tokens.emb");
            ws.write("emb/sub_com.emb", serialize_embeddings(subcom_table(records, TokenEmbedder::from_table(tokens), c.subcom_softmax)));
        } else {
            ws.write("emb/sub_com.emb", serialize_embeddings(subcom_table(records, hash_embedder(sc.dim, hash_seed(c)), c.subcom_softmax)));
        }
        if (wanted("sub_com")) {
            outputs.push_back("emb/sub_com.emb");
        }
        for (const std::string f : {"mode", "reason", "decision", "effect"}) {
            if (!wanted(f)) {
                continue;
            }
            const auto& s = c.embeddings.at(f);
            EmbeddingTable t;
            if (s.backend == "file") {
                t = read_embeddings(c.resolve(s.path).string());
            } else {
                t = EmbeddingTable(s.dim, f);
                const TokenEmbedder e = s.backend == "sgns" ? TokenEmbedder{} : hash_embedder(s.dim, hash_seed(c));
                if (s.backend == "sgns") {
                    throw ConfigError("embeddings." + f + ": sgns backend is only available for sub_com");
                }
                for (const auto& r : records) {
                    t.add(r.key(), embed_text(field_text(r, f), e));
                }
            }
            const auto rel = "emb/" + f + ".emb";
            ws.write(rel, serialize_embeddings(t));
            outputs.push_back(rel);
        }
        return outputs;
    }, force);
}

/// Similarity spread of sub_com vectors across word-vector dimensions.
inline bool sweep(Workspace& ws, bool force = false)
{
    const auto& c = ws.config();
    return ws.run("sweep", {ws.user_file(c.records, "records")}, [&] {
        const auto records = load_records(ws);
        const auto corpus = subcom_corpus(records);
        auto j = ws.stamp();
        json rows = json::array();
        for (auto dim : c.sweep_dims) {
            const auto tokens = train_sgns(corpus, sgns_config(c, dim), "tokens");
            const auto t = subcom_table(records, TokenEmbedder::from_table(tokens), false);
            std::vector<std::vector<double>> vecs;
            for (std::size_t i = 0; i < t.size(); ++i) {
                vecs.emplace_back(t.row(i).begin(), t.row(i).end());
            }
            const auto s = similarity_spread(vecs);
            rows.push_back({{"dim", dim}, {"mean_similarity", s.mean}, {"std_similarity", s.stddev}, {"pairs", s.pairs}});
            ws.say("  dim " + std::to_string(dim) + ": std " + text::format_double(s.stddev));
        }
        j["sweep"] = std::move(rows);
        j["selected_dim"] = c.embeddings.at("sub_com").dim;
        ws.write_json("emb/dim_sweep.json", j);
        return std::vector<std::string>{"emb/dim_sweep.json"};
    }, force);
}

inline std::string features_csv(const FusedFeatureMatrix& m)
{
    std::string out = "id";
    for (std::size_t d = 0; d < m.d_total(); ++d) {
        out += ",f" + std::to_string(d);
    }
    out += '\n';
    for (std::size_t i = 0; i < m.ids.size(); ++i) {
        out += m.ids[i];
        for (Eigen::Index d = 0; d < m.rows.cols(); ++d) {
            out += ',' + text::format_double(m.rows(static_cast<Eigen::Index>(i), d));
        }
        out += '\n';
    }
    return out;
}

inline FusedFeatureMatrix read_features_csv(const fs::path& p)
{
    const auto rows = parse_csv(text::read_file(p.string()));
    if (rows.empty() || rows.front().empty() || rows.front().front() != "id") {
        throw ParseError(p.string() + ": missing 'id' header");
    }
    FusedFeatureMatrix m;
    const auto d = rows.front().size() - 1;
    m.rows.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(d));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != d + 1) {
            throw ParseError(p.string() + " row " + std::to_string(r + 1) + ": wrong column count");
        }
        m.ids.push_back(rows[r][0]);
        for (std::size_t k = 0; k < d; ++k) {
            m.rows(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(k)) = text::parse_double(rows[r][k + 1]);
        }
    }
    m.standardized = true;
    return m;
}

inline EmbeddingTable load_field(const Workspace& ws, const std::string& field)
{
    const auto p = ws.artifact("emb/" + field + ".emb");
    if (!fs::exists(p)) {
        throw MissingInputError("embedding table for field '" + field + "' (emb/" + field + ".emb) not found; run 'fgf embed' first");
    }
    return read_embeddings(p.string());
}

struct FusionOutcome {
    FusedFeatureMatrix fused; // standardized
    KpcaModel kpca;
    FusionWeights weights;
    std::vector<double> class_weights;
};

inline FusionOutcome compute_fusion(const Workspace& ws, std::span<const FailureRecord> records)
{
    const auto& c = ws.config();
    std::map<std::string, EmbeddingTable> tables;
    for (const auto& f : field_names()) {
        tables.emplace(f, load_field(ws, f));
    }
    FeatureBlocks b;
    for (const auto& r : records) {
        b.ids.push_back(r.key());
    }
    b.sub_com = gather_block(tables.at("sub_com"), b.ids, "sub_com");
    const Matrix mode_raw = gather_block(tables.at("mode"), b.ids, "mode");
    const Matrix reason_raw = gather_block(tables.at("reason"), b.ids, "reason");
    b.decision = gather_block(tables.at("decision"), b.ids, "decision");
    b.effect = gather_block(tables.at("effect"), b.ids, "effect");
    if (mode_raw.cols() != reason_raw.cols()) {
        throw AssemblyError("mode and reason tables differ in dimension");
    }

    FusionOutcome out;
    Matrix stacked(mode_raw.rows() * 2, mode_raw.cols());
    stacked << mode_raw, reason_raw;
    std::vector<std::string> keys;
    for (const auto& id : b.ids) keys.push_back("mode:" + id);
    for (const auto& id : b.ids) keys.push_back("reason:" + id);
    out.kpca = kpca_fit(stacked, c.kernel, c.target_variance, 0.0, keys);
    b.mode = kpca_project(out.kpca, mode_raw);
    b.reason = kpca_project(out.kpca, reason_raw);

    out.weights.w1 = weight_hierarchy(c.d_sub, c.d_com);
    out.weights.w2 = weight_attention(b.mode, b.reason, c.attention);
    std::vector<std::string> decisions;
    for (const auto& r : records) {
        decisions.push_back(r.emergency_measure);
    }
    const auto verbs = load_verbs(ws);
    std::optional<EmbeddingTable> verb_table;
    TokenEmbedder verb_embedder;
    if (!c.verb_vectors.empty()) {
        verb_table = read_embeddings(c.resolve(c.verb_vectors).string());
        verb_embedder = TokenEmbedder::from_table(*verb_table);
    } else {
        verb_embedder = hash_embedder(static_cast<std::size_t>(b.decision.cols()), hash_seed(c));
    }
    out.weights.w3 = weight_verbs(decisions, b.decision, b.effect, verbs, verb_embedder);
    out.fused = standardize(fuse(b, out.weights));

    std::map<std::string, std::size_t> label_index;
    for (const auto& r : records) label_index.emplace(r.label(), 0);
    std::size_t li = 0;
    for (auto& [l, i] : label_index) i = li++;
    std::vector<std::size_t> labels;
    for (const auto& r : records) labels.push_back(label_index.at(r.label()));
    out.class_weights = c.class_weights == ClassWeightMode::fusion
                            ? fusion_class_weights(labels, label_index.size(), out.weights.w1, out.weights.w2, out.weights.w3, c.loss_mix)
                            : frequency_class_weights(labels, label_index.size());
    return out;
}

inline bool fuse(Workspace& ws, bool force = false)
{
    const auto& c = ws.config();
    c.require_seed();
    std::vector<StageInput> inputs{ws.user_file(c.records, "records")};
    for (const auto& f : field_names()) {
        inputs.push_back(ws.upstream("emb/" + f + ".emb", "fgf embed"));
    }
    if (!c.verbs.empty()) inputs.push_back(ws.user_file(c.verbs, "verbs"));
    if (!c.verb_vectors.empty()) inputs.push_back(ws.user_file(c.verb_vectors, "verb_vectors"));
    // name the first missing table before anything else
    for (const auto& f : field_names()) {
        load_field(ws, f);
    }
    return ws.run("fuse", inputs, [&] {
        const auto records = load_records(ws);
        const auto res = compute_fusion(ws, records);
        ws.write("fused/features.csv", features_csv(res.fused));
        auto km = ws.stamp();
        km.update(fgf::to_json(res.kpca));
        ws.write_json("fused/kpca.json", km);

        auto j = ws.stamp();
        j["records"] = records.size();
        j["kernel"] = to_string(res.kpca.kernel);
        j["gamma"] = res.kpca.gamma;
        j["k"] = res.kpca.k;
        j["variance_ratio"] = res.kpca.variance_ratio();
        j["variance_ratio_previous"] = res.kpca.k > 1 ? json(res.kpca.explained[res.kpca.k - 2]) : json(nullptr);
        json layout = json::array();
        for (const auto& [name, width] : res.fused.layout) {
            layout.push_back({{"block", name}, {"width", width}});
        }
        j["layout"] = std::move(layout);
        j["d_total"] = res.fused.d_total();
        j["d_total_formula"] = "sub_com + 2k + decision + effect";
        j["reference_k"] = reference::kpca_k;
        j["reference_d_total_from_formula"] = fused_width(reference::kpca_k);
        j["reference_d_total_published"] = reference::features;
        j["note"] = "with k = 121 the layout gives 100 + 2*121 + 768 = 1110 columns; the published dataset table lists 1210";
        j["w1"] = res.weights.w1;
        json w2 = json::object(), w3 = json::object();
        for (std::size_t i = 0; i < res.fused.ids.size(); ++i) {
            w2[res.fused.ids[i]] = res.weights.w2[i];
            w3[res.fused.ids[i]] = res.weights.w3[i];
        }
        j["w2"] = std::move(w2);
        j["w3"] = std::move(w3);
        j["attention"] = c.attention == AttentionNorm::global ? "global" : "row";
        j["class_weight_mode"] = c.class_weights == ClassWeightMode::fusion ? "fusion" : "frequency";
        j["class_weights"] = res.class_weights;
        j["standardized"] = true;
        ws.write_json("fused/fusion.json", j);
        return std::vector<std::string>{"fused/features.csv", "fused/kpca.json", "fused/fusion.json"};
    }, force);
}

inline bool build_graph(Workspace& ws, bool force = false)
{
    const auto& c = ws.config();
    const auto seed = c.require_seed();
    return ws.run("build-graph",
                  {ws.user_file(c.records, "records"), ws.user_file(c.edges, "edges"), ws.upstream("fused/features.csv", "fgf fuse")},
                  [&] {
                      const auto records = load_records(ws);
                      const auto fused = read_features_csv(ws.artifact("fused/features.csv"));
                      const auto edges = ingest_edges(c.resolve(c.edges).string());
                      const auto g = assemble(records, fused, edges, c.split, seed, c.undirected);
                      auto echo = ws.stamp();
                      echo["records"] = c.records;
                      echo["edges"] = c.edges;
                      export_dataset(g, ws.artifact("graph"), echo, seed, c.split);
                      return std::vector<std::string>{"graph/nodes.csv", "graph/edges.csv", "graph/meta.json"};
                  },
                  force);
}

struct ValidationOutcome {
    SimilarityReport similarity;
    KMeansResult clusters;
    double cluster_silhouette = 0.0;
    SilhouetteResult label_silhouette;
    std::vector<std::string> labels;
};

inline Matrix token_mean_rows(std::span<const FailureRecord> records, const TokenEmbedder& e, bool subsystem)
{
    Matrix m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(e.dim));
    for (std::size_t i = 0; i < records.size(); ++i) {
        Vector acc = Vector::Zero(static_cast<Eigen::Index>(e.dim));
        const auto words = text::words(subsystem ? records[i].subsystem : records[i].component);
        for (const auto& w : words) {
            const auto v = e(w);
            acc += Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
        if (!words.empty()) {
            acc /= static_cast<double>(words.size());
        }
        m.row(static_cast<Eigen::Index>(i)) = acc.transpose();
    }
    return m;
}

inline ValidationOutcome compute_validation(const Workspace& ws, std::span<const FailureRecord> records, const GraphDataset& g)
{
    const auto& c = ws.config();
    std::vector<std::string> ids;
    for (const auto& r : records) ids.push_back(r.key());

    std::vector<NamedBlock> blocks;
    const auto& sc = c.embeddings.at("sub_com");
    std::optional<EmbeddingTable> tokens;
    TokenEmbedder te;
    if (sc.backend == "sgns") {
        const auto p = ws.artifact("emb/tokens.emb");
        if (!fs::exists(p)) {
            throw MissingInputError("emb/tokens.emb not found; run 'fgf embed' first");
        }
        tokens = read_embeddings(p.string());
        te = TokenEmbedder::from_table(*tokens);
    } else {
        te = hash_embedder(sc.dim, hash_seed(c));
    }
    blocks.push_back({"subsystem", token_mean_rows(records, te, true)});
    blocks.push_back({"component", token_mean_rows(records, te, false)});
    for (const auto& f : {"mode", "reason", "effect", "decision"}) {
        blocks.push_back({f, gather_block(load_field(ws, f), ids, f)});
    }
    const std::vector<std::pair<std::string, std::string>> pairs{{"subsystem", "component"}, {"mode", "reason"}, {"effect", "decision"}};

    ValidationOutcome out;
    out.similarity = cosine_block_stats(blocks, pairs);
    Matrix x(static_cast<Eigen::Index>(g.nodes.size()), static_cast<Eigen::Index>(g.d_total));
    std::vector<std::size_t> labels;
    std::map<std::string, std::size_t> li;
    for (const auto& l : g.labels) li.emplace(l, li.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(g.nodes[i].features.data(), static_cast<Eigen::Index>(g.d_total));
        labels.push_back(li.at(g.nodes[i].label));
    }
    const auto k = std::min(c.clusters, g.nodes.size());
    out.clusters = kmeans(x, k, derive_seed(c.seed.value_or(0), 13));
    out.cluster_silhouette = silhouette(x, out.clusters.assignments, c.threads);
    out.label_silhouette = silhouette_detail(x, labels, c.threads);
    out.labels = g.labels;
    return out;
}

inline bool validate(Workspace& ws, bool csv = false, bool force = false)
{
    const auto& c = ws.config();
    std::vector<StageInput> inputs{ws.user_file(c.records, "records"), ws.upstream("graph/nodes.csv", "fgf build-graph"),
                                   ws.upstream("graph/meta.json", "fgf build-graph")};
    for (const auto& f : {"mode", "reason", "effect", "decision"}) {
        inputs.push_back(ws.upstream(std::string("emb/") + f + ".emb", "fgf embed"));
    }
    const std::string stage = csv ? "validate-csv" : "validate";
    return ws.run(stage, inputs, [&] {
        const auto records = load_records(ws);
        const auto g = load_export(ws.artifact("graph"));
        const auto v = compute_validation(ws, records, g);
        auto j = ws.stamp();
        json sim = json::array();
        for (const auto& b : v.similarity.blocks) {
            sim.push_back({{"a", b.a}, {"b", b.b}, {"mean_cosine", b.mean}, {"pairs", b.pairs}});
        }
        j["similarity"] = {{"blocks", std::move(sim)},
                           {"diag_mean", v.similarity.diag_mean},
                           {"offdiag_mean", v.similarity.offdiag_mean},
                           {"excluded_zero_vectors", v.similarity.excluded},
                           {"reference", reference::similarity()}};
        json assign = json::object();
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            assign[g.nodes[i].id] = v.clusters.assignments[i];
        }
        json per_label = json::object();
        for (const auto& [l, s] : v.label_silhouette.per_label) {
            per_label[v.labels[l]] = s;
        }
        j["clusters"] = {{"k", v.clusters.centers.rows()},
                         {"iterations", v.clusters.iterations},
                         {"converged", v.clusters.converged},
                         {"inertia", v.clusters.inertia.empty() ? 0.0 : v.clusters.inertia.back()},
                         {"silhouette", v.cluster_silhouette},
                         {"assignments", std::move(assign)}};
        j["label_silhouette"] = {{"silhouette", v.label_silhouette.mean}, {"per_label", std::move(per_label)}};
        j["reference_silhouette"] = reference::silhouette;
        ws.write_json("validation.json", j);
        std::vector<std::string> outputs{"validation.json"};
        if (csv) {
            // centroid distance between every pair of labels
            std::map<std::string, std::pair<Vector, double>> cent;
            for (const auto& n : g.nodes) {
                auto& [sum, cnt] = cent[n.label];
                if (cnt == 0) sum = Vector::Zero(static_cast<Eigen::Index>(g.d_total));
                sum += Eigen::Map<const Vector>(n.features.data(), static_cast<Eigen::Index>(g.d_total));
                cnt += 1;
            }
            std::string out = "label_a,label_b,centroid_distance\n";
            for (const auto& [a, ca] : cent) {
                for (const auto& [b, cb] : cent) {
                    const double d = (ca.first / ca.second - cb.first / cb.second).norm();
                    out += a + ',' + b + ',' + text::format_double(d) + '\n';
                }
            }
            ws.write("validation_distances.csv", out);
            outputs.push_back("validation_distances.csv");
        }
        return outputs;
    }, force);
}

/// Collects stage artifacts into one summary. Missing stages are listed, not fatal.
inline json collect_report(const Workspace& ws)
{
    auto j = ws.stamp();
    json stages = json::object();
    for (const auto& s : {"fetch", "optimize", "evaluate", "embed", "sweep", "fuse", "build-graph", "validate"}) {
        const auto p = ws.artifact(std::string("manifests/") + s + ".json");
        stages[s] = fs::exists(p) ? json(nlohmann::json::parse(text::read_file(p.string()))) : json(nullptr);
    }
    j["stages"] = std::move(stages);
    auto load = [&](const std::string& rel) -> json {
        const auto p = ws.artifact(rel);
        return fs::exists(p) ? json(nlohmann::json::parse(text::read_file(p.string()))) : json(nullptr);
    };
    const auto fetch = load("fetch.json");
    const auto metrics = load("metrics.json");
    const auto fusion = load("fused/fusion.json");
    const auto meta = load("graph/meta.json");
    const auto valid = load("validation.json");
    json rows = json::array();
    auto row = [&](const std::string& name, const json& ours, const json& ref) { rows.push_back({{"metric", name}, {"ours", ours}, {"reference", ref}}); };
    if (!fetch.is_null()) {
        row("duplication rate", fetch["duplication_rate"], reference::duplication_rate);
    }
    if (!metrics.is_null()) {
        for (const auto& a : {"hncsa", "csa", "nsga2"}) {
            if (metrics["summary"].contains(a)) {
                const auto& s = metrics["summary"][a];
                row(std::string("hypervolume (representatives) ") + a, s["mean_hypervolume_representative"], s["reference_hypervolume"]);
                row(std::string("hypervolume (exact) ") + a, s["mean_hypervolume_exact"], nullptr);
                row(std::string("F1 ") + a, s["mean_F1"], reference::retrieval()[a]["F1"]);
            }
        }
    }
    if (!fusion.is_null()) {
        row("kpca k", fusion["k"], reference::kpca_k);
        row("fused width", fusion["d_total"], reference::features);
        row("fused width from formula at k=121", fusion["reference_d_total_from_formula"], reference::features);
        j["fusion_note"] = fusion["note"];
    }
    if (!meta.is_null()) {
        row("nodes", meta["nodes"], reference::nodes);
        row("edges", meta["edges"], reference::edges);
        row("classes", meta["classes"], reference::classes);
    }
    if (!valid.is_null()) {
        row("silhouette (system labels)", valid["label_silhouette"]["silhouette"], reference::silhouette);
        row("silhouette (k-means)", valid["clusters"]["silhouette"], reference::silhouette);
        for (const auto& b : valid["similarity"]["blocks"]) {
            const auto key = b["a"].get<std::string>() + "|" + b["b"].get<std::string>();
            if (reference::similarity().contains(key)) {
                row("mean cosine " + key, b["mean_cosine"], reference::similarity()[key]);
            }
        }
    }
    j["comparison"] = std::move(rows);
    return j;
}

inline std::string format_report(const json& r)
{
    std::string out = "stage          status\n";
    for (const auto& [s, m] : r["stages"].items()) {
        out += s + std::string(15 - std::min<std::size_t>(14, s.size()), ' ') + (m.is_null() ? "not run" : "done") + "\n";
    }
    out += "\nmetric                                         ours          reference\n";
    auto fmt = [](const json& v) -> std::string {
        if (v.is_null()) return "-";
        if (v.is_number_float()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", v.get<double>());
            return buf;
        }
        return v.dump();
    };
    for (const auto& row : r["comparison"]) {
        auto name = row["metric"].get<std::string>();
        name.resize(std::max<std::size_t>(name.size(), 46), ' ');
        auto ours = fmt(row["ours"]);
        ours.resize(std::max<std::size_t>(ours.size(), 13), ' ');
        out += name + ' ' + ours + ' ' + fmt(row["reference"]) + "\n";
    }
    if (r.contains("fusion_note")) {
        out += "\nnote: " + r["fusion_note"].get<std::string>() + "\n";
    }
    return out;
}

inline bool report(Workspace& ws, std::ostream* out = nullptr)
{
    const auto r = collect_report(ws);
    ws.write_json("report.json", r);
    if (out != nullptr) {
        *out << format_report(r);
    }
    return true;
}

} // namespace fgf::pipeline
