#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

// Eigen must be seen before httplib: <resolv.h> defines a _res macro
#include "fgf/pipeline.hpp"
#include "fgf/arxiv_http.hpp"

namespace pl = fgf::pipeline;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
    std::string records;
    bool force = false;
};

pl::PipelineConfig effective(const Globals& g)
{
    if (g.config.empty()) {
        throw fgf::ConfigError("--config is required");
    }
    auto c = pl::load_config(g.config);
    if (g.seed) c.seed = g.seed;
    if (g.threads) c.threads = *g.threads == 0 ? fgf::default_threads() : *g.threads;
    if (!g.out.empty()) c.out = std::filesystem::absolute(g.out);
    if (!g.records.empty()) c.records = std::filesystem::absolute(g.records).string();
    pl::check_paths(c);
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Keyword-combination search and failure-mode graph dataset builder"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "Pipeline config file (JSON)");
    app.add_option("--seed", g.seed, "Master seed; overrides the config");
    app.add_option("--threads", g.threads, "Worker threads; 0 = all cores (default)");
    app.add_option("--out", g.out, "Output directory; overrides the config");
    app.add_option("--records", g.records, "Failure record file (.csv or .jsonl); overrides the config");
    app.add_flag("--force", g.force, "Run the stage even when its manifest is current");

    auto* fetch = app.add_subcommand("fetch", "Snapshot the literature corpus (offline file or live arXiv)");
    std::string labels;
    fetch->add_option("--labels", labels, "Relevance label file (id<TAB>0|1)");

    auto* optimize = app.add_subcommand("optimize", "Run keyword-combination optimizers");
    std::vector<std::string> algos;
    optimize->add_option("--algo", algos, "Algorithms to run: hncsa, csa, nsga2 (repeatable)");

    app.add_subcommand("evaluate", "Hypervolume and retrieval metrics for every optimizer run");

    auto* embed = app.add_subcommand("embed", "Build per-field embedding tables");
    bool sweep = false, no_softmax = false;
    std::string fields;
    embed->add_flag("--sweep", sweep, "Run the word-vector dimension sweep instead");
    embed->add_flag("--no-softmax", no_softmax, "Skip the softmax over sub/com n-gram vectors");
    embed->add_option("--fields", fields, "Comma-separated subset of sub_com,mode,reason,decision,effect");

    auto* fuse = app.add_subcommand("fuse", "KPCA reduction, inter-feature weights and fused features");
    std::string class_weights, attention;
    fuse->add_option("--class-weights", class_weights, "Class weight mode: fusion or frequency");
    fuse->add_option("--attention", attention, "Attention normalization: global or row");

    auto* build = app.add_subcommand("build-graph", "Assemble and export the graph dataset");
    bool undirected = false;
    build->add_flag("--undirected", undirected, "Symmetrize edges");

    auto* validate = app.add_subcommand("validate", "Similarity blocks, clustering and silhouette");
    bool csv = false;
    validate->add_flag("--csv", csv, "Also write label centroid distances as CSV");

    app.add_subcommand("report", "Collate stage outputs with reference values");

    // the top-level help lists every subcommand flag too
    std::string footer = "Subcommand options:\n";
    for (const auto* sub : app.get_subcommands({})) {
        for (const auto* opt : sub->get_options()) {
            if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
            std::string line = "  " + sub->get_name() + " " + opt->get_name();
            line.resize(std::max<std::size_t>(line.size() + 1, 34), ' ');
            footer += line + opt->get_description() + "\n";
        }
    }
    app.footer(footer + "\nEnvironment:\n  FGF_CACHE_DIR  directory for cached arXiv responses (default <out>/cache)\n\n"
               "Exit codes: 0 ok, 2 config error, 3 data error, 4 runtime error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(fgf::ExitCode::config);
    }

    try {
        auto cfg = effective(g);
        if (!labels.empty()) cfg.labels_path = std::filesystem::absolute(labels).string();
        if (!algos.empty()) {
            cfg.algorithms.clear();
            for (const auto& a : algos) cfg.algorithms.push_back(fgf::parse_algorithm(a));
        }
        if (no_softmax) cfg.subcom_softmax = false;
        if (!class_weights.empty()) cfg.class_weights = fgf::parse_class_weight_mode(class_weights);
        if (!attention.empty()) cfg.attention = fgf::parse_attention_norm(attention);
        if (undirected) cfg.undirected = true;
        pl::check_paths(cfg);

        pl::Workspace ws(cfg, &std::cerr);
        if (*fetch) {
            pl::fetch(ws, fgf::arxiv::http_transport(), g.force);
        } else if (*optimize) {
            pl::optimize(ws, g.force);
        } else if (app.got_subcommand("evaluate")) {
            pl::evaluate(ws, g.force);
        } else if (*embed) {
            if (sweep) {
                pl::sweep(ws, g.force);
            } else {
                std::vector<std::string> only;
                if (!fields.empty()) only = fgf::text::split(fields, ',');
                pl::embed(ws, only, g.force);
            }
        } else if (*fuse) {
            pl::fuse(ws, g.force);
        } else if (*build) {
            pl::build_graph(ws, g.force);
        } else if (*validate) {
            pl::validate(ws, csv, g.force);
        } else {
            pl::report(ws, &std::cout);
        }
    } catch (const fgf::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(fgf::ExitCode::runtime);
    }
    return 0;
}
