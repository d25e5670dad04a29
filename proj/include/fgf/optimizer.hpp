#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "frontier.hpp"
#include "keywords.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "text.hpp"

namespace fgf {

enum class Algorithm { csa, hncsa, nsga2 };

inline std::string to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::csa: return "csa";
    case Algorithm::hncsa: return "hncsa";
    case Algorithm::nsga2: return "nsga2";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view s)
{
    const auto v = text::casefold(s);
    if (v == "csa") return Algorithm::csa;
    if (v == "hncsa" || v == "hn-csa") return Algorithm::hncsa;
    if (v == "nsga2" || v == "nsga-ii") return Algorithm::nsga2;
    throw ConfigError("unknown algorithm '" + std::string(s) + "' (expected csa, hncsa or nsga2)");
}

struct RunConfig {
    Algorithm algo = Algorithm::hncsa;
    std::size_t n_nests = 25;
    std::size_t iterations = 100;
    double pa = 0.25;
    double alpha = 0.01;
    double beta = 1.5;
    std::uint64_t seed = 0;
    double hncsa_gamma = 1.0;
    double hncsa_eps = 1.0;
    /// Smallest keyword combination a nest may encode.
    std::size_t min_keywords = 2;
    double crossover_rate = 0.9;
    unsigned threads = 1;

    void validate() const
    {
        if (!(pa > 0.0 && pa < 1.0)) throw ConfigError("pa must lie in (0,1)");
        if (!(beta > 1.0 && beta <= 2.0)) throw ConfigError("beta must lie in (1,2]");
        if (iterations < 1) throw ConfigError("iterations must be >= 1");
        if (n_nests < 2) throw ConfigError("n_nests must be >= 2");
        if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
        if (hncsa_gamma < 0.0) throw ConfigError("hncsa_gamma must be >= 0");
        if (min_keywords < 1) throw ConfigError("min_keywords must be >= 1");
        if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ConfigError("crossover_rate must lie in [0,1]");
    }
};

inline nlohmann::ordered_json to_json(const RunConfig& c)
{
    nlohmann::ordered_json j;
    j["algo"] = to_string(c.algo);
    j["n_nests"] = c.n_nests;
    j["iterations"] = c.iterations;
    j["pa"] = c.pa;
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
    j["seed"] = c.seed;
    j["hncsa_gamma"] = c.hncsa_gamma;
    j["hncsa_eps"] = c.hncsa_eps;
    j["min_keywords"] = c.min_keywords;
    j["crossover_rate"] = c.crossover_rate;
    return j;
}

// ---------------------------------------------------------------------------
// Levy flights

/// Mantegna scale for the numerator variate of a Levy-stable step of index beta.
inline double mantegna_sigma(double beta)
{
    const double num = std::tgamma(1.0 + beta) * std::sin(std::numbers::pi * beta / 2.0);
    const double den = std::tgamma((1.0 + beta) / 2.0) * beta * std::pow(2.0, (beta - 1.0) / 2.0);
    return std::pow(num / den, 1.0 / beta);
}

/// `dim` i.i.d. Mantegna steps u / |v|^(1/beta), scaled by alpha.
inline std::vector<double> levy_step(double beta, double alpha, Rng& rng, std::size_t dim)
{
    if (!(beta > 1.0 && beta <= 2.0)) {
        throw DomainError("Levy index beta must lie in (1,2]");
    }
    const double sigma = mantegna_sigma(beta);
    std::vector<double> step(dim);
    for (auto& s : step) {
        const double u = rng.normal() * sigma;
        double v = rng.normal();
        while (v == 0.0) {
            v = rng.normal();
        }
        s = alpha * u / std::pow(std::abs(v), 1.0 / beta);
    }
    return step;
}

// ---------------------------------------------------------------------------
// fitness

/// Sorted pool indices of the keywords a nest includes.
using Combo = std::vector<std::size_t>;

struct Objectives {
    double f1 = 0.0; // balance, minimized
    double f2 = 0.0; // relevance, maximized

    Point2 minimized() const noexcept { return {f1, -f2}; }
    friend bool operator==(const Objectives&, const Objectives&) = default;
};

inline bool dominates(const Objectives& a, const Objectives& b) noexcept { return dominates(a.minimized(), b.minimized()); }

/// Population standard deviation of the weighted keyword frequencies
/// w_i * sum_j c_ij over the combination.
inline double fitness_balance(std::span<const std::size_t> combo, const MatchProfile& profile, std::span<const double> weights)
{
    if (combo.empty()) {
        throw DomainError("empty keyword combination");
    }
    std::vector<double> x;
    x.reserve(combo.size());
    for (auto i : combo) {
        double total = 0.0;
        for (double c : profile.row(i)) {
            total += c;
        }
        x.push_back(weights[i] * total);
    }
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= n;
    double ss = 0.0;
    for (double v : x) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / n);
}

/// Mean over documents of the weight-averaged match count of the combination.
inline double fitness_relevance(std::span<const std::size_t> combo, const MatchProfile& profile, std::span<const double> weights)
{
    if (combo.empty()) {
        throw DomainError("empty keyword combination");
    }
    if (profile.n_docs == 0) {
        throw DomainError("cannot evaluate relevance on an empty corpus");
    }
    double wsum = 0.0;
    for (auto i : combo) {
        wsum += weights[i];
    }
    if (wsum <= 0.0) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < profile.n_docs; ++j) {
        double s = 0.0;
        for (auto i : combo) {
            s += profile.at(i, j) * weights[i];
        }
        total += s / wsum;
    }
    return total / static_cast<double>(profile.n_docs);
}

/// Immutable evaluation context shared by every nest of a run.
struct Problem {
    std::vector<std::string> pool;
    MatchProfile profile;
    std::vector<double> weights;

    std::size_t dim() const noexcept { return pool.size(); }

    Objectives evaluate(std::span<const std::size_t> combo) const
    {
        return {fitness_balance(combo, profile, weights), fitness_relevance(combo, profile, weights)};
    }

    /// Keyword weights from corpus frequencies of the snapshot.
    static Problem from_profile(std::vector<std::string> pool, MatchProfile profile)
    {
        Problem p;
        p.pool = std::move(pool);
        p.weights = normalize_frequencies(profile.keyword_totals());
        p.profile = std::move(profile);
        return p;
    }

    static Problem from_corpus(std::span<const Document> docs, const KeywordTaxonomy& taxonomy)
    {
        if (docs.empty()) {
            throw DomainError("cannot optimize over an empty corpus");
        }
        return from_profile(taxonomy.pool(), match_counts(docs, taxonomy.pool()));
    }
};

/// Documents a combination retrieves: those mentioning at least
/// min(2, |combo|) distinct keywords of the combination.
inline std::vector<std::size_t> retrieved_documents(const MatchProfile& profile, std::span<const std::size_t> combo)
{
    const std::size_t need = std::min<std::size_t>(2, combo.size());
    std::vector<std::size_t> out;
    if (need == 0) {
        return out;
    }
    for (std::size_t j = 0; j < profile.n_docs; ++j) {
        std::size_t hit = 0;
        for (auto i : combo) {
            hit += profile.at(i, j) > 0.0 ? 1 : 0;
        }
        if (hit >= need) {
            out.push_back(j);
        }
    }
    return out;
}

/// Thresholds the relaxation at 0.5; tops up with the largest coordinates
/// (lowest index first on ties) until `min_keywords` are included.
inline Combo decode(std::span<const double> x, std::size_t min_keywords)
{
    Combo combo;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] >= 0.5) {
            combo.push_back(k);
        }
    }
    const auto need = std::min(min_keywords, x.size());
    if (combo.size() < need) {
        std::vector<std::size_t> rest;
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (x[k] < 0.5) {
                rest.push_back(k);
            }
        }
        std::stable_sort(rest.begin(), rest.end(), [&](auto a, auto b) { return x[a] > x[b]; });
        for (std::size_t r = 0; combo.size() < need; ++r) {
            combo.push_back(rest[r]);
        }
        std::sort(combo.begin(), combo.end());
    }
    return combo;
}

inline std::string combo_string(const Combo& combo, std::span<const std::string> pool)
{
    std::string s;
    for (auto i : combo) {
        if (!s.empty()) {
            s += '+';
        }
        s += pool[i];
    }
    return s;
}

/// All combinations with at least `min_keywords` members and their
/// non-dominated subset, by exhaustive enumeration (small pools only).
struct ExhaustiveFront {
    std::vector<Combo> combos;
    std::vector<Objectives> objectives;
    std::vector<bool> on_front;

    bool contains(const Combo& c) const
    {
        for (std::size_t i = 0; i < combos.size(); ++i) {
            if (combos[i] == c) {
                return on_front[i];
            }
        }
        return false;
    }
};

inline ExhaustiveFront enumerate_front(const Problem& problem, std::size_t min_keywords)
{
    const auto k = problem.dim();
    if (k > 20) {
        throw DomainError("exhaustive enumeration limited to 20 keywords");
    }
    ExhaustiveFront out;
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        Combo c;
        for (std::size_t i = 0; i < k; ++i) {
            if (mask & (1u << i)) {
                c.push_back(i);
            }
        }
        if (c.size() < min_keywords) {
            continue;
        }
        out.objectives.push_back(problem.evaluate(c));
        out.combos.push_back(std::move(c));
    }
    out.on_front.assign(out.combos.size(), true);
    for (std::size_t i = 0; i < out.combos.size(); ++i) {
        for (std::size_t j = 0; j < out.combos.size(); ++j) {
            if (dominates(out.objectives[j], out.objectives[i])) {
                out.on_front[i] = false;
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// run bookkeeping

struct Nest {
    std::size_t id = 0;
    std::vector<double> x;
    Combo combo;
    Objectives obj;
};

struct FrontMember {
    Combo combo;
    Objectives obj;
};

struct IterationRecord {
    std::size_t iteration = 0;
    Objectives best;
    Combo best_combo;
    std::string digest;
    std::vector<double> usage_weights;
};

struct HiddenEntry {
    std::size_t iteration = 0;
    std::size_t nest_id = 0;
};

struct RunHistory {
    RunConfig config;
    std::vector<std::string> pool;
    std::vector<double> weights;
    std::vector<IterationRecord> iterations;
    std::vector<HiddenEntry> hidden_log;
    std::vector<FrontMember> final_front;
    std::vector<Nest> final_population;
    std::size_t evaluations = 0;

    /// Scalarized best of the final population.
    const IterationRecord& last() const { return iterations.back(); }
};

/// Orders nests best-first by rank(f2) - rank(f1), where each rank counts the
/// members with a strictly smaller value. Ties go to lower f1, then to the
/// lexicographically smaller combination.
inline std::vector<std::size_t> scalarized_order(std::span<const Nest> nests)
{
    const auto n = nests.size();
    std::vector<long> score(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        long r2 = 0, r1 = 0;
        for (std::size_t j = 0; j < n; ++j) {
            r2 += nests[j].obj.f2 < nests[i].obj.f2;
            r1 += nests[j].obj.f1 < nests[i].obj.f1;
        }
        score[i] = r2 - r1;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (score[a] != score[b]) return score[a] > score[b];
        if (nests[a].obj.f1 != nests[b].obj.f1) return nests[a].obj.f1 < nests[b].obj.f1;
        return nests[a].combo < nests[b].combo;
    });
    return order;
}

inline std::string population_digest(std::span<const Nest> nests)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& n : nests) {
        for (double v : n.x) {
            h = text::fnv1a64(text::format_double(v), h);
            h = text::fnv1a64(",", h);
        }
        h = text::fnv1a64(";", h);
    }
    return text::hex64(h);
}

/// Keyword usage counts of the population, normalized with the same rule as
/// the frequency weights.
inline std::vector<double> usage_weights(std::span<const Nest> nests, std::size_t dim)
{
    std::vector<double> usage(dim, 0.0);
    for (const auto& n : nests) {
        for (auto k : n.combo) {
            usage[k] += 1.0;
        }
    }
    return normalize_frequencies(usage);
}

/// Unique non-dominated combinations of a population, sorted by f1.
inline std::vector<FrontMember> population_front(std::span<const Nest> nests)
{
    std::vector<FrontMember> out;
    for (std::size_t i = 0; i < nests.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < nests.size() && !dominated; ++j) {
            dominated = dominates(nests[j].obj, nests[i].obj);
        }
        if (dominated) {
            continue;
        }
        const bool dup = std::any_of(out.begin(), out.end(), [&](const auto& m) { return m.combo == nests[i].combo; });
        if (!dup) {
            out.push_back({nests[i].combo, nests[i].obj});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.obj.f1 != b.obj.f1) return a.obj.f1 < b.obj.f1;
        return a.combo < b.combo;
    });
    return out;
}

/// Non-dominated set of every combination evaluated so far.
class ParetoArchive {
public:
    void insert(const Combo& combo, const Objectives& obj)
    {
        for (const auto& m : members_) {
            if (m.combo == combo || dominates(m.obj, obj)) {
                return;
            }
        }
        std::erase_if(members_, [&](const FrontMember& m) { return dominates(obj, m.obj); });
        members_.push_back({combo, obj});
    }

    std::vector<FrontMember> sorted() const
    {
        auto out = members_;
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            if (a.obj.f1 != b.obj.f1) return a.obj.f1 < b.obj.f1;
            return a.combo < b.combo;
        });
        return out;
    }

    std::size_t size() const noexcept { return members_.size(); }

private:
    std::vector<FrontMember> members_;
};

namespace detail {

class Engine {
public:
    Engine(const RunConfig& config, const Problem& problem) : cfg_(config), problem_(problem), rng_(derive_seed(config.seed, 1))
    {
        cfg_.validate();
        if (problem_.dim() == 0) {
            throw ConfigError("keyword pool is empty");
        }
        history_.config = cfg_;
        history_.pool = problem_.pool;
        history_.weights = problem_.weights;
    }

    RunHistory run()
    {
        init_population();
        for (std::size_t t = 1; t <= cfg_.iterations; ++t) {
            switch (cfg_.algo) {
            case Algorithm::csa: csa_iteration(); break;
            case Algorithm::hncsa: hncsa_iteration(t); break;
            case Algorithm::nsga2: nsga2_generation(); break;
            }
            record(t);
        }
        history_.final_front = archive_.sorted();
        history_.final_population = nests_;
        return std::move(history_);
    }

private:
    std::size_t dim() const { return problem_.dim(); }

    void set_x(Nest& n, std::vector<double> x) const
    {
        for (auto& v : x) {
            v = std::clamp(v, 0.0, 1.0);
        }
        n.x = std::move(x);
        n.combo = decode(n.x, cfg_.min_keywords);
    }

    std::vector<double> random_x()
    {
        std::vector<double> x(dim());
        for (auto& v : x) {
            v = rng_.uniform();
        }
        return x;
    }

    void evaluate(std::span<Nest> batch)
    {
        parallel_for(batch.size(), cfg_.threads, [&](std::size_t i) { batch[i].obj = problem_.evaluate(batch[i].combo); });
        history_.evaluations += batch.size();
        for (const auto& n : batch) {
            archive_.insert(n.combo, n.obj);
        }
    }

    void init_population()
    {
        nests_.resize(cfg_.n_nests);
        for (std::size_t i = 0; i < nests_.size(); ++i) {
            nests_[i].id = i;
            auto x = random_x();
            if (cfg_.algo == Algorithm::nsga2) {
                for (auto& v : x) {
                    v = v >= 0.5 ? 1.0 : 0.0;
                }
            }
            set_x(nests_[i], std::move(x));
            if (cfg_.algo == Algorithm::nsga2) {
                snap_bits(nests_[i]);
            }
        }
        evaluate(nests_);
    }

    void record(std::size_t t)
    {
        const auto order = scalarized_order(nests_);
        IterationRecord r;
        r.iteration = t;
        r.best = nests_[order.front()].obj;
        r.best_combo = nests_[order.front()].combo;
        r.digest = population_digest(nests_);
        r.usage_weights = usage_weights(nests_, dim());
        history_.iterations.push_back(std::move(r));
    }

    /// Greedy replacement: a dominating candidate always wins; a mutually
    /// non-dominated one wins on a fair coin unless the incumbent is protected.
    void replace(Nest& incumbent, Nest&& candidate, bool protect)
    {
        if (dominates(candidate.obj, incumbent.obj)) {
            incumbent.x = std::move(candidate.x);
            incumbent.combo = std::move(candidate.combo);
            incumbent.obj = candidate.obj;
            return;
        }
        if (dominates(incumbent.obj, candidate.obj) || protect) {
            return;
        }
        if (rng_.coin()) {
            incumbent.x = std::move(candidate.x);
            incumbent.combo = std::move(candidate.combo);
            incumbent.obj = candidate.obj;
        }
    }

    void csa_iteration()
    {
        const auto best = scalarized_order(nests_).front();
        std::vector<Nest> cand(nests_.size());
        for (std::size_t i = 0; i < nests_.size(); ++i) {
            auto step = levy_step(cfg_.beta, cfg_.alpha, rng_, dim());
            auto x = nests_[i].x;
            for (std::size_t k = 0; k < x.size(); ++k) {
                x[k] += step[k];
            }
            cand[i].id = nests_[i].id;
            set_x(cand[i], std::move(x));
        }
        evaluate(cand);
        for (std::size_t i = 0; i < nests_.size(); ++i) {
            replace(nests_[i], std::move(cand[i]), i == best);
        }
        abandon(quality_order(scalarized_order(nests_).front()));
    }

    void hncsa_iteration(std::size_t t)
    {
        const auto order = scalarized_order(nests_);
        const auto hidden = order.front();
        history_.hidden_log.push_back({t, nests_[hidden].id});
        const auto& best_x = nests_[hidden].x;

        // Remaining nests, best-first; the better half exploits, the rest explore.
        const std::vector<std::size_t> pool(order.begin() + 1, order.end());
        const auto n_exploit = (pool.size() + 1) / 2;
        std::vector<Nest> cand(pool.size());
        for (std::size_t p = 0; p < pool.size(); ++p) {
            const auto& nest = nests_[pool[p]];
            auto x = nest.x;
            if (p < n_exploit) {
                double d2 = 0.0;
                for (std::size_t k = 0; k < x.size(); ++k) {
                    d2 += (best_x[k] - x[k]) * (best_x[k] - x[k]);
                }
                const double pull = std::exp(-cfg_.hncsa_gamma * std::sqrt(d2));
                for (std::size_t k = 0; k < x.size(); ++k) {
                    x[k] += pull * (best_x[k] - x[k]);
                }
            } else {
                const auto step = levy_step(cfg_.beta, cfg_.hncsa_eps * cfg_.alpha, rng_, dim());
                for (std::size_t k = 0; k < x.size(); ++k) {
                    x[k] += step[k];
                }
            }
            cand[p].id = nest.id;
            set_x(cand[p], std::move(x));
        }
        evaluate(cand);
        for (std::size_t p = 0; p < pool.size(); ++p) {
            replace(nests_[pool[p]], std::move(cand[p]), false);
        }

        // Abandonment acts on the update pool only; the hidden nest rejoins as is.
        abandon(quality_order(hidden));
    }

    /// Every nest except `exclude`, best-first by Pareto rank within the
    /// population, then by scalarized order.
    std::vector<std::size_t> quality_order(std::size_t exclude) const
    {
        std::vector<Point2> pts;
        for (const auto& n : nests_) {
            pts.push_back(n.obj.minimized());
        }
        const auto rank = pareto_ranks(pts);
        const auto scalar = scalarized_order(nests_);
        std::vector<std::size_t> order;
        for (auto i : scalar) {
            if (i != exclude) {
                order.push_back(i);
            }
        }
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rank[a] < rank[b]; });
        return order;
    }

    /// Re-seeds the worst fraction pa of the population, drawn from the tail
    /// of `pool_order` (best-first). Nests outside `pool_order` are never touched.
    void abandon(std::span<const std::size_t> pool_order)
    {
        const auto count = static_cast<std::size_t>(std::floor(cfg_.pa * static_cast<double>(cfg_.n_nests)));
        const auto n = std::min(count, pool_order.size());
        std::vector<Nest> fresh;
        std::vector<std::size_t> slots;
        for (std::size_t k = 0; k < n; ++k) {
            const auto slot = pool_order[pool_order.size() - 1 - k];
            Nest nest;
            nest.id = nests_[slot].id;
            set_x(nest, random_x());
            fresh.push_back(std::move(nest));
            slots.push_back(slot);
        }
        evaluate(fresh);
        for (std::size_t k = 0; k < slots.size(); ++k) {
            nests_[slots[k]] = std::move(fresh[k]);
        }
    }

    // -- NSGA-II on the bitmask representation ------------------------------

    void snap_bits(Nest& n) const
    {
        // Keep x consistent with the decoded combination after any top-up.
        std::fill(n.x.begin(), n.x.end(), 0.0);
        for (auto k : n.combo) {
            n.x[k] = 1.0;
        }
    }

    void repair(Nest& n)
    {
        std::size_t on = n.combo.size();
        const auto need = std::min(cfg_.min_keywords, dim());
        while (on < need) {
            const auto k = rng_.index(dim());
            if (n.x[k] < 0.5) {
                n.x[k] = 1.0;
                ++on;
            }
        }
        n.combo = decode(n.x, cfg_.min_keywords);
    }

    std::size_t tournament(std::span<const std::size_t> rank, std::span<const double> crowd)
    {
        const auto a = rng_.index(nests_.size());
        const auto b = rng_.index(nests_.size());
        if (rank[a] != rank[b]) return rank[a] < rank[b] ? a : b;
        if (crowd[a] != crowd[b]) return crowd[a] > crowd[b] ? a : b;
        return std::min(a, b);
    }

    void rank_and_crowd(std::span<const Nest> pop, std::vector<std::size_t>& rank, std::vector<double>& crowd,
                        std::vector<std::vector<std::size_t>>& fronts) const
    {
        std::vector<Point2> pts;
        for (const auto& n : pop) {
            pts.push_back(n.obj.minimized());
        }
        fronts = non_dominated_sort(pts);
        rank.assign(pop.size(), 0);
        crowd.assign(pop.size(), 0.0);
        for (std::size_t f = 0; f < fronts.size(); ++f) {
            const auto cd = crowding_distance(pts, fronts[f]);
            for (std::size_t m = 0; m < fronts[f].size(); ++m) {
                rank[fronts[f][m]] = f;
                crowd[fronts[f][m]] = cd[m];
            }
        }
    }

    void nsga2_generation()
    {
        std::vector<std::size_t> rank;
        std::vector<double> crowd;
        std::vector<std::vector<std::size_t>> fronts;
        rank_and_crowd(nests_, rank, crowd, fronts);

        const double pm = 1.0 / static_cast<double>(dim());
        std::vector<Nest> offspring;
        while (offspring.size() < nests_.size()) {
            const auto& p1 = nests_[tournament(rank, crowd)];
            const auto& p2 = nests_[tournament(rank, crowd)];
            std::vector<double> c1 = p1.x, c2 = p2.x;
            if (rng_.uniform() < cfg_.crossover_rate) {
                for (std::size_t k = 0; k < dim(); ++k) {
                    if (rng_.coin()) {
                        std::swap(c1[k], c2[k]);
                    }
                }
            }
            for (auto* c : {&c1, &c2}) {
                for (auto& v : *c) {
                    if (rng_.uniform() < pm) {
                        v = 1.0 - v;
                    }
                }
                if (offspring.size() == nests_.size()) {
                    break;
                }
                Nest child;
                child.id = nests_.size() + offspring.size();
                child.x = *c;
                child.combo = decode(child.x, 0);
                repair(child);
                snap_bits(child);
                offspring.push_back(std::move(child));
            }
        }
        evaluate(offspring);

        std::vector<Nest> merged = nests_;
        for (auto& c : offspring) {
            merged.push_back(std::move(c));
        }
        rank_and_crowd(merged, rank, crowd, fronts);
        std::vector<Nest> next;
        for (const auto& front : fronts) {
            if (next.size() + front.size() <= nests_.size()) {
                for (auto i : front) {
                    next.push_back(merged[i]);
                }
                continue;
            }
            std::vector<std::size_t> sorted(front.begin(), front.end());
            std::stable_sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return crowd[a] > crowd[b]; });
            for (std::size_t m = 0; next.size() < nests_.size(); ++m) {
                next.push_back(merged[sorted[m]]);
            }
            break;
        }
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i].id = i;
        }
        nests_ = std::move(next);
    }

    RunConfig cfg_;
    ParetoArchive archive_;
    const Problem& problem_;
    Rng rng_;
    std::vector<Nest> nests_;
    RunHistory history_;
};

} // namespace detail

inline RunHistory run_optimizer(const RunConfig& config, const Problem& problem)
{
    return detail::Engine(config, problem).run();
}

inline RunHistory run_csa(RunConfig config, const Problem& problem)
{
    config.algo = Algorithm::csa;
    return run_optimizer(config, problem);
}

inline RunHistory run_hncsa(RunConfig config, const Problem& problem)
{
    config.algo = Algorithm::hncsa;
    return run_optimizer(config, problem);
}

inline RunHistory run_nsga2(RunConfig config, const Problem& problem)
{
    config.algo = Algorithm::nsga2;
    return run_optimizer(config, problem);
}

// ---------------------------------------------------------------------------
// serialization

inline nlohmann::ordered_json to_json(const Objectives& o) { return {{"f1", o.f1}, {"f2", o.f2}}; }

inline nlohmann::ordered_json to_json(const RunHistory& h)
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["config"] = to_json(h.config);
    j["seed"] = h.config.seed;
    j["pool"] = h.pool;
    j["weights"] = h.weights;
    j["evaluations"] = h.evaluations;
    ordered_json iters = ordered_json::array();
    for (const auto& r : h.iterations) {
        iters.push_back({{"iteration", r.iteration},
                         {"best", to_json(r.best)},
                         {"best_combo", r.best_combo},
                         {"best_keywords", combo_string(r.best_combo, h.pool)},
                         {"digest", r.digest},
                         {"usage_weights", r.usage_weights}});
    }
    j["iterations"] = std::move(iters);
    ordered_json hidden = ordered_json::array();
    for (const auto& e : h.hidden_log) {
        hidden.push_back({{"iteration", e.iteration}, {"nest", e.nest_id}});
    }
    j["hidden_log"] = std::move(hidden);
    ordered_json front = ordered_json::array();
    for (const auto& m : h.final_front) {
        front.push_back({{"combo", m.combo}, {"keywords", combo_string(m.combo, h.pool)}, {"f1", m.obj.f1}, {"f2", m.obj.f2}});
    }
    j["final_front"] = std::move(front);
    ordered_json pop = ordered_json::array();
    for (const auto& n : h.final_population) {
        pop.push_back({{"id", n.id}, {"combo", n.combo}, {"f1", n.obj.f1}, {"f2", n.obj.f2}});
    }
    j["final_population"] = std::move(pop);
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j)
{
    RunConfig c;
    c.algo = parse_algorithm(j.at("algo").get<std::string>());
    c.n_nests = j.at("n_nests").get<std::size_t>();
    c.iterations = j.at("iterations").get<std::size_t>();
    c.pa = j.at("pa").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.hncsa_gamma = j.at("hncsa_gamma").get<double>();
    c.hncsa_eps = j.at("hncsa_eps").get<double>();
    c.min_keywords = j.value("min_keywords", std::size_t{2});
    c.crossover_rate = j.value("crossover_rate", 0.9);
    return c;
}

/// Reads back the parts of a serialized history that downstream stages use.
inline RunHistory history_from_json(const nlohmann::json& j)
{
    RunHistory h;
    h.config = run_config_from_json(j.at("config"));
    h.pool = j.at("pool").get<std::vector<std::string>>();
    h.weights = j.at("weights").get<std::vector<double>>();
    h.evaluations = j.value("evaluations", std::size_t{0});
    for (const auto& r : j.at("iterations")) {
        IterationRecord rec;
        rec.iteration = r.at("iteration").get<std::size_t>();
        rec.best = {r.at("best").at("f1").get<double>(), r.at("best").at("f2").get<double>()};
        rec.best_combo = r.at("best_combo").get<Combo>();
        rec.digest = r.at("digest").get<std::string>();
        rec.usage_weights = r.at("usage_weights").get<std::vector<double>>();
        h.iterations.push_back(std::move(rec));
    }
    for (const auto& e : j.at("hidden_log")) {
        h.hidden_log.push_back({e.at("iteration").get<std::size_t>(), e.at("nest").get<std::size_t>()});
    }
    for (const auto& m : j.at("final_front")) {
        h.final_front.push_back({m.at("combo").get<Combo>(), {m.at("f1").get<double>(), m.at("f2").get<double>()}});
    }
    for (const auto& n : j.at("final_population")) {
        Nest nest;
        nest.id = n.at("id").get<std::size_t>();
        nest.combo = n.at("combo").get<Combo>();
        nest.obj = {n.at("f1").get<double>(), n.at("f2").get<double>()};
        h.final_population.push_back(std::move(nest));
    }
    return h;
}

} // namespace fgf
