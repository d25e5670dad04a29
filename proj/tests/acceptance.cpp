// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when a
// criterion fails, unless it is listed with --allow-fail.

#include "fgf/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>

#include "oracles.hpp"
#include "support.hpp"

using namespace fgf;
namespace fs = std::filesystem;
namespace pl = fgf::pipeline;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Problem load_problem(const std::string& tax, const std::string& corpus)
{
    return Problem::from_corpus(load_offline(support::source(corpus).string()), KeywordTaxonomy::load(support::source(tax).string()));
}

bool front_subset(const RunHistory& h, const ExhaustiveFront& truth)
{
    for (const auto& m : h.final_front) {
        if (!truth.contains(m.combo)) return false;
    }
    return !h.final_front.empty();
}

Outcome optimizer_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto problem = load_problem("data/synthetic/k6_taxonomy.txt", "data/synthetic/k6_corpus.jsonl");
    const auto truth = enumerate_front(problem, RunConfig{}.min_keywords);
    int hn = 0, cs = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        RunConfig c;
        c.seed = seed;
        c.algo = Algorithm::hncsa;
        hn += front_subset(run_optimizer(c, problem), truth);
        c.algo = Algorithm::csa;
        cs += front_subset(run_optimizer(c, problem), truth);
    }
    const double secs = seconds_since(t0);
    return {hn >= 18 && cs >= 16 && secs < 30.0,
            fmt("K=%zu; HN-CSA subset of true front in %d/20 seeds, CSA in %d/20; %.1f s", problem.dim(), hn, cs, secs)};
}

Outcome hypervolume_ordering()
{
    const auto problem = load_problem("data/taxonomy.txt", "data/synthetic/corpus200.jsonl");
    int ordered = 0, wins = 0, losses = 0;
    std::map<Algorithm, double> mean;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::vector<RunHistory> runs;
        for (auto a : {Algorithm::hncsa, Algorithm::csa, Algorithm::nsga2}) {
            RunConfig c;
            c.seed = seed;
            c.algo = a;
            runs.push_back(run_optimizer(c, problem));
        }
        const auto m = pl::score_runs(runs, {});
        const double h = m[0].hv_exact, c = m[1].hv_exact, n = m[2].hv_exact;
        ordered += h >= c && c >= n;
        wins += h > n;
        losses += h < n;
        mean[Algorithm::hncsa] += h / 20;
        mean[Algorithm::csa] += c / 20;
        mean[Algorithm::nsga2] += n / 20;
    }
    // one-sided sign test on HN-CSA > NSGA-II, ties dropped
    const int n = wins + losses;
    double p = 0;
    for (int k = wins; k <= n; ++k) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
    if (n == 0) p = 1;
    const bool pass = ordered >= 12 && mean[Algorithm::hncsa] > mean[Algorithm::nsga2] && p < 0.05;
    return {pass, fmt("ordering held in %d/20 seeds; mean exact HV hncsa %.3f csa %.3f nsga2 %.3f; sign test %d-%d p=%.3g; "
                      "reference 0.153/0.147/0.145",
                      ordered, mean[Algorithm::hncsa], mean[Algorithm::csa], mean[Algorithm::nsga2], wins, losses, p)};
}

Outcome metric_arithmetic()
{
    const double f1 = f1_score(0.64, 0.59);
    const std::vector<FrontPoint> one{{0.4, 0.4, ""}};
    const double hv = hypervolume_exact2d(one);
    const double hp = hypervolume_representative(one);
    return {std::abs(f1 - 0.6139) <= 0.0005 && hv == 0.36 && hp == 0.36, fmt("F1(0.64,0.59)=%.4f; HV{(0.4,0.4)}=%.17g", f1, hv)};
}

Outcome kpca_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2024);
    double worst = 0;
    int k_ok = 0;
    for (int inst = 0; inst < 50; ++inst) {
        const auto x = oracle::random_rows(rng, 20, 8);
        const auto m = kpca_fit(to_matrix(x), Kernel::linear, 0.95);
        const Matrix s = kpca_project(m, to_matrix(x));
        const auto ref = oracle::pca(x);
        for (std::size_t c = 0; c < m.k; ++c) {
            double plus = 0, minus = 0;
            for (std::size_t i = 0; i < 20; ++i) {
                const double v = s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
                plus = std::max(plus, std::abs(v - ref.scores[i][c]));
                minus = std::max(minus, std::abs(v + ref.scores[i][c]));
            }
            worst = std::max(worst, std::min(plus, minus));
        }
        // cumulative ratios recomputed from the oracle spectrum
        double total = 0;
        for (double l : ref.eigenvalues) total += l;
        double acc = 0;
        std::size_t k = 0;
        while (acc / total < 0.95) acc += ref.eigenvalues[k++];
        double prev = 0;
        for (std::size_t i = 0; i + 1 < k; ++i) prev += ref.eigenvalues[i];
        k_ok += m.k == k && prev / total < 0.95 && m.explained[m.k - 1] >= 0.95;
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-8 && k_ok == 50 && secs < 5.0, fmt("max deviation %.2e; k rule held on %d/50; %.2f s", worst, k_ok, secs)};
}

Outcome weight_formulas()
{
    const double w1 = weight_hierarchy(1, 2);
    Rng rng(7);
    int single_max = 0;
    const std::vector<std::string> lex{"inspect", "replace", "restart", "weld"};
    const auto emb = hash_embedder(16, 5);
    const int fixtures = 20;
    for (int f = 0; f < fixtures; ++f) {
        const std::vector<std::string> texts{"Inspect the seal", "Replace and restart", "Weld it", "log only", "Inspect, weld"};
        const auto dec = oracle::random_rows(rng, 5, 16);
        auto eff = oracle::random_rows(rng, 5, 16);
        for (auto& r : eff)
            for (std::size_t t = 0; t < 16; ++t) r[t] = 0.3 * r[t] + emb("inspect")[t];
        const auto w3 = weight_verbs(texts, to_matrix(dec), to_matrix(eff), lex, emb);
        single_max += std::count(w3.begin(), w3.end(), 1.0) == 1;
    }
    const auto q = oracle::random_rows(rng, 5, 6), k = oracle::random_rows(rng, 5, 6);
    const auto w2 = weight_attention(to_matrix(q), to_matrix(k));
    const auto ref = oracle::attention(q, k);
    double dev = 0;
    for (std::size_t i = 0; i < 5; ++i) dev = std::max(dev, std::abs(w2[i] - ref[i]));
    return {std::abs(w1 - 0.73106) <= 1e-5 && single_max == fixtures && dev <= 1e-12,
            fmt("w1(1,2)=%.6f; single max-normalized w3 on %d/%d fixtures; w2 deviation %.1e", w1, single_max, fixtures, dev)};
}

Outcome loss_reduction()
{
    Rng rng(8);
    double worst = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 5 + rng.index(20), c = 2 + rng.index(6);
        const auto p = oracle::random_probs(rng, n, c);
        std::vector<std::size_t> y(n);
        double plain = 0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.index(c);
            plain -= std::log(p[i][y[i]]) / static_cast<double>(n);
        }
        worst = std::max(worst, std::abs(weighted_ce_loss(to_matrix(p), y, std::vector<double>(c, 1.0)) - plain));
    }
    const double zero = weighted_ce_loss(to_matrix(oracle::Rows{{0, 1, 0}, {1, 0, 0}}), std::vector<std::size_t>{1, 0},
                                         std::vector<double>{0.5, 1, 2});
    return {worst <= 1e-12 && zero == 0.0, fmt("max deviation %.1e over 100 instances; one-hot loss %g", worst, zero)};
}

std::map<std::string, std::vector<std::string>> published_rows()
{
    std::map<std::string, std::vector<std::string>> out;
    std::istringstream in(text::read_file(support::source("paper.md").string()));
    for (std::string line; std::getline(in, line);) {
        if (line.size() > 9 && line[8] == '\t' && std::all_of(line.begin(), line.begin() + 8, ::isdigit)) {
            out[line.substr(0, 8)] = text::split(line, '\t');
        }
    }
    return out;
}

Outcome dataset_shape()
{
    std::string detail;
    bool pass = true;
    if (const char* dir = std::getenv("FGF_RELEASED_DATASET")) {
        const fs::path d(dir);
        const auto recs = ingest_records((d / "records.csv").string(), RecordFormat::csv).records;
        const auto edges = ingest_edges((d / "edges.csv").string());
        std::set<std::string> labels;
        for (const auto& r : recs) labels.insert(r.label());
        pass = recs.size() == 1262 && edges.size() == 6150 && labels.size() == 12;
        detail = fmt("released: %zu nodes, %zu edges, %zu classes; ", recs.size(), edges.size(), labels.size());
    } else {
        detail = "released dataset not available (set FGF_RELEASED_DATASET), count check skipped; ";
    }
    const auto recs = ingest_records(support::source("data/demo/records.csv").string(), RecordFormat::csv).records;
    std::size_t round = 0;
    for (const auto& r : recs) round += format_id(parse_id(r.key())) == r.key();
    const auto published = published_rows();
    int exemplars = 0;
    for (const std::string id : {"11010101", "21010601"}) {
        const auto it = std::find_if(recs.begin(), recs.end(), [&](const auto& r) { return r.key() == id; });
        if (it == recs.end() || !published.count(id)) continue;
        const auto& row = published.at(id);
        exemplars += row.size() == 8 && it->system == row[1] && it->subsystem == row[2] && it->component == row[3]
                     && it->failure_mode == row[4] && it->failure_reason == row[5] && it->failure_effect == row[6]
                     && it->emergency_measure == row[7];
    }
    pass = pass && round == recs.size() && exemplars == 2;
    return {pass, detail + fmt("id codec round-tripped %zu/%zu demo ids; exemplars matched %d/2", round, recs.size(), exemplars)};
}

/// Runs the offline demo pipeline through the command line tool into `dir`.
bool run_demo(const fs::path& dir, double& secs)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = support::source("configs/demo.json").string();
    for (const char* stage : {"fetch", "optimize", "evaluate", "embed", "fuse", "build-graph", "validate", "report"}) {
        const auto args = std::string(stage) + " --config " + cfg + " --out " + dir.string();
        if (support::run_cli(args, (dir.parent_path() / (dir.filename().string() + ".log")).string()) != 0) {
            std::cerr << "demo stage '" << stage << "' failed\n";
            return false;
        }
    }
    secs = seconds_since(t0);
    return true;
}

struct Demo {
    fs::path a;
    fs::path b;
    bool ok = false;
    double secs = 0;
};

const Demo& demo()
{
    static const Demo d = [] {
        Demo x;
        const auto root = support::scratch("acceptance");
        x.a = root / "a";
        x.b = root / "b";
        double other = 0;
        x.ok = run_demo(x.a, x.secs) && run_demo(x.b, other);
        return x;
    }();
    return d;
}

Outcome fusion_layout()
{
    const std::size_t w = fused_width(121);
    bool note = false;
    if (demo().ok) {
        const auto rep = nlohmann::json::parse(text::read_file((demo().a / "report.json").string())).dump();
        const auto fusion = text::read_file((demo().a / "fused/fusion.json").string());
        note = rep.find("1210") != std::string::npos && rep.find("1110") != std::string::npos
               && fusion.find("1210") != std::string::npos;
    }
    return {w == 1110 && note, fmt("d_total(k=121)=%zu; discrepancy note %s in report", w, note ? "present" : "missing")};
}

Outcome validation_metrics()
{
    int good = 0, recovered = 0;
    double scale_dev = 0, lowest = 1;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(500 + seed);
        std::vector<std::size_t> labels;
        const Matrix x = to_matrix(oracle::blobs(rng, 50, 4, 2, 10.0, labels));
        const auto km = kmeans(x, 4, seed);
        const double s = silhouette(x, km.assignments);
        good += s > 0.8;
        lowest = std::min(lowest, s);
        std::set<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < labels.size(); ++i) pairs.insert({labels[i], km.assignments[i]});
        recovered += pairs.size() == 4;
        scale_dev = std::max(scale_dev, std::abs(s - silhouette(5.0 * x, km.assignments)));
    }
    double col = 1;
    if (demo().ok) {
        const auto f = pl::read_features_csv(demo().a / "fused/features.csv");
        col = f.rows.colwise().mean().cwiseAbs().maxCoeff();
    }
    return {good == 20 && scale_dev <= 1e-9 && col < 1e-6,
            fmt("blob silhouette > 0.8 in %d/20 seeds (lowest %.4f; k-means recovered the blobs in %d/20); x5 scaling deviation "
                "%.1e; max |column mean| of fused matrix %.1e",
                good, lowest, recovered, scale_dev, col)};
}

Outcome determinism()
{
    if (!demo().ok) return {false, "demo pipeline failed"};
    std::size_t files = 0, differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(demo().a)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), demo().a);
        ++files;
        const auto other = demo().b / rel;
        differ += !fs::exists(other) || text::read_file(e.path().string()) != text::read_file(other.string());
    }
    return {differ == 0 && demo().secs < 300.0,
            fmt("%zu artifacts, %zu differ between two runs; demo pipeline took %.1f s", files, differ, demo().secs)};
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> allowed;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--allow-fail" && i + 1 < argc) {
            for (const auto& t : text::split(argv[++i], ',')) allowed.insert(std::stoi(t));
        }
    }
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
        {"optimizer small-instance oracle", optimizer_oracle},
        {"hypervolume ordering over 20 seeds", hypervolume_ordering},
        {"metric arithmetic", metric_arithmetic},
        {"KPCA oracle equivalence", kpca_oracle},
        {"weight formulas", weight_formulas},
        {"loss reduction", loss_reduction},
        {"dataset shape and id codec", dataset_shape},
        {"fusion layout", fusion_layout},
        {"validation metrics", validation_metrics},
        {"determinism and demo runtime", determinism},
    };
    int hard_failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const int n = static_cast<int>(i + 1);
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << criteria[i].first << ": " << o.detail
                  << (!o.pass && allowed.count(n) ? " (known deviation)" : "") << std::endl;
        hard_failures += !o.pass && !allowed.count(n);
    }
    return hard_failures == 0 ? 0 : 1;
}
