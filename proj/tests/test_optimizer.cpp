#include <gtest/gtest.h>

#include "fgf/optimizer.hpp"
#include "support.hpp"

using namespace fgf;

namespace {

MatchProfile profile(std::vector<std::vector<double>> rows)
{
    MatchProfile p;
    p.n_keywords = rows.size();
    p.n_docs = rows.empty() ? 0 : rows[0].size();
    for (const auto& r : rows) p.counts.insert(p.counts.end(), r.begin(), r.end());
    return p;
}

Problem k6_problem()
{
    const auto tax = KeywordTaxonomy::load(support::source("data/synthetic/k6_taxonomy.txt").string());
    const auto docs = load_offline(support::source("data/synthetic/k6_corpus.jsonl").string());
    return Problem::from_corpus(docs, tax);
}

RunConfig config(Algorithm a, std::uint64_t seed, std::size_t iterations = 100)
{
    RunConfig c;
    c.algo = a;
    c.seed = seed;
    c.iterations = iterations;
    return c;
}

} // namespace

TEST(Levy, MantegnaSigmaForBetaOneAndHalf) { EXPECT_NEAR(mantegna_sigma(1.5), 0.6965745, 1e-6); }

TEST(Levy, ZeroAlphaGivesZeroStep)
{
    Rng rng(1);
    for (double s : levy_step(1.5, 0.0, rng, 8)) EXPECT_EQ(s, 0.0);
}

TEST(Levy, DeterministicForSeed)
{
    Rng a(7), b(7);
    EXPECT_EQ(levy_step(1.5, 0.01, a, 50), levy_step(1.5, 0.01, b, 50));
    Rng c(1);
    EXPECT_THROW(levy_step(2.5, 0.01, c, 3), DomainError);
}

TEST(Levy, TailExponentNearBeta)
{
    Rng rng(12);
    const auto s = levy_step(1.5, 1.0, rng, 100000);
    std::vector<double> mag;
    for (double x : s) mag.push_back(std::abs(x));
    std::sort(mag.rbegin(), mag.rend());
    // least-squares slope of log(rank) against log(|step|) over the top 1%
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int k = 1000;
    for (int r = 0; r < k; ++r) {
        const double x = std::log(mag[r]), y = std::log(r + 1.0);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    EXPECT_NEAR(-slope, 1.5, 0.15);
}

TEST(Fitness, BalanceExamples)
{
    const auto p = profile({{2}, {2}, {2}, {0}, {4}});
    const std::vector<double> w(5, 1.0);
    EXPECT_EQ(fitness_balance(std::vector<std::size_t>{0, 1, 2}, p, w), 0.0);
    EXPECT_NEAR(fitness_balance(std::vector<std::size_t>{3, 1, 4}, p, w), std::sqrt(8.0 / 3.0), 1e-12);
    EXPECT_EQ(fitness_balance(std::vector<std::size_t>{4}, p, w), 0.0);
    EXPECT_THROW(fitness_balance(std::vector<std::size_t>{}, p, w), DomainError);
}

TEST(Fitness, RelevanceExamples)
{
    EXPECT_EQ(fitness_relevance(std::vector<std::size_t>{0}, profile({{3}}), std::vector<double>{1.0}), 3.0);
    EXPECT_EQ(fitness_relevance(std::vector<std::size_t>{0}, profile({{1, 3}}), std::vector<double>{1.0}), 2.0);
}

TEST(Fitness, RelevanceMatchesDoubleLoopOracle)
{
    Rng rng(3);
    std::vector<std::vector<double>> rows(8, std::vector<double>(10));
    for (auto& r : rows)
        for (auto& c : r) c = static_cast<double>(rng.index(5));
    const auto p = profile(rows);
    std::vector<double> w(8);
    for (auto& x : w) x = rng.uniform();
    const std::vector<std::size_t> combo{0, 2, 3, 5, 7};
    double wsum = 0;
    for (auto i : combo) wsum += w[i];
    double total = 0;
    for (std::size_t j = 0; j < 10; ++j) {
        double s = 0;
        for (auto i : combo) s += w[i] * rows[i][j];
        total += s / wsum;
    }
    EXPECT_NEAR(fitness_relevance(combo, p, w), total / 10.0, 1e-12);
}

TEST(Decode, ThresholdAndTopUp)
{
    EXPECT_EQ(decode(std::vector<double>{0.6, 0.1, 0.5, 0.2}, 1), (Combo{0, 2}));
    EXPECT_EQ(decode(std::vector<double>{0.1, 0.4, 0.3, 0.4}, 2), (Combo{1, 3}));
    EXPECT_EQ(decode(std::vector<double>{0.9, 0.1, 0.3}, 2), (Combo{0, 2}));
}

TEST(Retrieval, NeedsTwoDistinctKeywords)
{
    const auto p = profile({{1, 0, 2, 1}, {0, 3, 1, 1}, {0, 0, 0, 1}});
    EXPECT_EQ(retrieved_documents(p, std::vector<std::size_t>{0, 1}), (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(retrieved_documents(p, std::vector<std::size_t>{0}), (std::vector<std::size_t>{0, 2, 3}));
    EXPECT_EQ(retrieved_documents(p, std::vector<std::size_t>{0, 1, 2}), (std::vector<std::size_t>{2, 3}));
}

TEST(Archive, KeepsOnlyNonDominatedAndMatchesBruteForce)
{
    Rng rng(4);
    ParetoArchive a;
    std::vector<std::pair<Combo, Objectives>> all;
    for (std::size_t i = 0; i < 300; ++i) {
        Combo c{i % 40, 40 + i % 7};
        Objectives o{std::floor(rng.uniform() * 20), std::floor(rng.uniform() * 20)};
        if (std::any_of(all.begin(), all.end(), [&](auto& e) { return e.first == c; })) continue;
        all.emplace_back(c, o);
        a.insert(c, o);
    }
    std::size_t expect = 0;
    for (const auto& [c, o] : all) {
        const bool dom = std::any_of(all.begin(), all.end(), [&](auto& e) { return dominates(e.second, o); });
        expect += !dom;
    }
    const auto front = a.sorted();
    EXPECT_EQ(front.size(), expect);
    for (const auto& m : front) {
        for (const auto& [c, o] : all) EXPECT_FALSE(dominates(o, m.obj));
    }
}

TEST(Engine, OneIterationTwoNests)
{
    const auto problem = k6_problem();
    for (auto algo : {Algorithm::csa, Algorithm::hncsa, Algorithm::nsga2}) {
        auto c = config(algo, 1, 1);
        c.n_nests = 2;
        const auto h = run_optimizer(c, problem);
        EXPECT_EQ(h.iterations.size(), 1u);
        EXPECT_EQ(h.final_population.size(), 2u);
        EXPECT_GE(h.evaluations, 2u);
    }
}

TEST(Engine, SameSeedIsBitIdentical)
{
    const auto problem = k6_problem();
    for (auto algo : {Algorithm::csa, Algorithm::hncsa, Algorithm::nsga2}) {
        const auto a = to_json(run_optimizer(config(algo, 42, 30), problem)).dump();
        const auto b = to_json(run_optimizer(config(algo, 42, 30), problem)).dump();
        EXPECT_EQ(a, b) << to_string(algo);
        EXPECT_NE(a, to_json(run_optimizer(config(algo, 43, 30), problem)).dump());
    }
}

TEST(Engine, ThreadCountDoesNotChangeResults)
{
    const auto problem = k6_problem();
    auto c = config(Algorithm::hncsa, 5, 20);
    c.threads = 1;
    const auto a = to_json(run_optimizer(c, problem)).dump();
    c.threads = 4;
    EXPECT_EQ(a, to_json(run_optimizer(c, problem)).dump());
}

TEST(Engine, HiddenLogHasOneEntryPerIteration)
{
    const auto h = run_optimizer(config(Algorithm::hncsa, 3, 25), k6_problem());
    ASSERT_EQ(h.hidden_log.size(), 25u);
    for (std::size_t t = 0; t < 25; ++t) EXPECT_EQ(h.hidden_log[t].iteration, t + 1);
}

TEST(Engine, FinalFrontLiesOnExhaustiveFront)
{
    const auto problem = k6_problem();
    const auto truth = enumerate_front(problem, 2);
    for (auto algo : {Algorithm::csa, Algorithm::hncsa, Algorithm::nsga2}) {
        const auto h = run_optimizer(config(algo, 1), problem);
        for (const auto& m : h.final_front) {
            for (std::size_t i = 0; i < truth.combos.size(); ++i) {
                EXPECT_FALSE(dominates(truth.objectives[i], m.obj)) << to_string(algo);
            }
        }
    }
}

TEST(Engine, DominantKeywordReachesTheFront)
{
    // keyword 0 appears heavily in every document
    std::vector<std::vector<double>> rows(6, std::vector<double>(20, 0.0));
    Rng rng(6);
    for (std::size_t j = 0; j < 20; ++j) {
        rows[0][j] = 30;
        for (std::size_t i = 1; i < 6; ++i) rows[i][j] = static_cast<double>(rng.index(2));
    }
    const auto problem = Problem::from_profile({"a", "b", "c", "d", "e", "f"}, profile(rows));
    const auto truth = enumerate_front(problem, 2);
    const auto h = run_optimizer(config(Algorithm::hncsa, 2), problem);
    ASSERT_FALSE(h.final_front.empty());
    const auto top = std::max_element(h.final_front.begin(), h.final_front.end(),
                                      [](const auto& a, const auto& b) { return a.obj.f2 < b.obj.f2; });
    EXPECT_TRUE(std::find(top->combo.begin(), top->combo.end(), 0u) != top->combo.end());
    EXPECT_TRUE(truth.contains(top->combo));
}

TEST(Engine, HistoryRoundTrip)
{
    const auto h = run_optimizer(config(Algorithm::hncsa, 9, 10), k6_problem());
    const auto back = history_from_json(nlohmann::json::parse(to_json(h).dump()));
    EXPECT_EQ(to_json(back).dump(), to_json(h).dump());
}

TEST(Engine, InvalidConfigRejected)
{
    auto c = config(Algorithm::csa, 1);
    c.pa = 1.0;
    EXPECT_THROW(run_optimizer(c, k6_problem()), ConfigError);
    c = config(Algorithm::csa, 1);
    c.n_nests = 1;
    EXPECT_THROW(run_optimizer(c, k6_problem()), ConfigError);
    EXPECT_THROW(parse_algorithm("pso"), ConfigError);
}
