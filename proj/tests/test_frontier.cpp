#include <gtest/gtest.h>

#include "fgf/frontier.hpp"
#include "fgf/random.hpp"

using namespace fgf;

namespace {

std::vector<FrontPoint> pts(std::initializer_list<std::pair<double, double>> xs)
{
    std::vector<FrontPoint> out;
    for (auto [a, b] : xs) out.push_back({a, b, ""});
    return out;
}

double monte_carlo_area(std::span<const FrontPoint> p, std::size_t samples, std::uint64_t seed)
{
    Rng rng(seed);
    std::size_t hit = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = rng.uniform(), y = rng.uniform();
        for (const auto& q : p) {
            if (q.g1 <= x && q.g2 <= y) {
                ++hit;
                break;
            }
        }
    }
    return static_cast<double>(hit) / static_cast<double>(samples);
}

} // namespace

TEST(Frontier, DominatedPointGetsRankOne)
{
    const std::vector<Point2> p{{0, 1}, {1, 0}, {1, 1}};
    EXPECT_EQ(pareto_ranks(p), (std::vector<std::size_t>{0, 0, 1}));
    const std::vector<Point2> q{{0, 3}, {1, 2}, {2, 1}, {3, 0}};
    EXPECT_EQ(pareto_ranks(q), (std::vector<std::size_t>{0, 0, 0, 0}));
}

TEST(Frontier, SortMatchesPeelingOracle)
{
    Rng rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Point2> p(40);
        for (auto& x : p) x = {std::floor(rng.uniform() * 8), std::floor(rng.uniform() * 8)};
        // peel non-dominated layers by brute force
        std::vector<std::size_t> rank(p.size(), 999);
        std::size_t assigned = 0;
        for (std::size_t layer = 0; assigned < p.size(); ++layer) {
            std::vector<std::size_t> now;
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (rank[i] != 999) continue;
                bool dom = false;
                for (std::size_t j = 0; j < p.size(); ++j) {
                    dom |= rank[j] == 999 && dominates(p[j], p[i]);
                }
                if (!dom) now.push_back(i);
            }
            for (auto i : now) rank[i] = layer;
            assigned += now.size();
        }
        EXPECT_EQ(pareto_ranks(p), rank);
    }
}

TEST(Frontier, CrowdingBoundaryIsInfinite)
{
    const std::vector<Point2> p{{0, 4}, {1, 2}, {2, 1}, {4, 0}};
    const std::vector<std::size_t> f{0, 1, 2, 3};
    const auto d = crowding_distance(p, f);
    EXPECT_TRUE(std::isinf(d[0]));
    EXPECT_TRUE(std::isinf(d[3]));
    EXPECT_NEAR(d[1], (2.0 - 0.0) / 4 + (4.0 - 1.0) / 4, 1e-12);
    EXPECT_NEAR(d[2], (4.0 - 1.0) / 4 + (2.0 - 0.0) / 4, 1e-12);
}

TEST(Frontier, NormalizationCorners)
{
    const std::vector<ObjectivePair> p{{0, 3, ""}, {2, 1, ""}, {1, 2, ""}};
    const auto n = normalize_objectives(p);
    EXPECT_EQ(n[0].g1, 0.0);
    EXPECT_EQ(n[0].g2, 0.0);
    EXPECT_EQ(n[1].g1, 1.0);
    EXPECT_EQ(n[1].g2, 1.0);
    const std::vector<ObjectivePair> flat{{5, 1, ""}, {5, 2, ""}};
    for (const auto& x : normalize_objectives(flat)) EXPECT_EQ(x.g1, 0.0);
}

TEST(Frontier, ParetoFrontBasics)
{
    const auto f = pareto_front(pts({{0, 1}, {1, 0}, {1, 1}}));
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(pareto_front(pts({{0.3, 0.3}})).size(), 1u);
}

TEST(Frontier, ParetoFrontMatchesPairwiseOracle)
{
    Rng rng(5);
    std::vector<FrontPoint> p;
    for (int i = 0; i < 200; ++i) p.push_back({rng.uniform(), rng.uniform(), std::to_string(i)});
    std::vector<std::string> expect;
    for (std::size_t i = 0; i < p.size(); ++i) {
        bool dom = false;
        for (std::size_t j = 0; j < p.size(); ++j) {
            dom |= p[j].g1 <= p[i].g1 && p[j].g2 <= p[i].g2 && (p[j].g1 < p[i].g1 || p[j].g2 < p[i].g2);
        }
        if (!dom) expect.push_back(p[i].origin);
    }
    std::vector<std::string> got;
    for (const auto& x : pareto_front(p)) got.push_back(x.origin);
    EXPECT_EQ(got, expect);
}

TEST(Frontier, ExpFitRecoversParameters)
{
    std::vector<double> xs, ys;
    for (int i = 0; i < 10; ++i) {
        xs.push_back(i / 9.0);
        ys.push_back(1.0 * std::exp(-xs.back() / 0.5) + 0.1);
    }
    const auto f = fit_exp_decay(xs, ys);
    EXPECT_NEAR(f.a1, 1.0, 1e-6);
    EXPECT_NEAR(f.t1, 0.5, 1e-6);
    EXPECT_NEAR(f.y0, 0.1, 1e-6);
    EXPECT_LT(f.rmse, 1e-8);
    const auto g = fit_exp_decay(xs, ys);
    EXPECT_EQ(f.a1, g.a1);
    EXPECT_EQ(f.t1, g.t1);
}

TEST(Frontier, ExpFitFlatData)
{
    const std::vector<double> xs{0, 0.25, 0.5, 0.75, 1}, ys{0.4, 0.4, 0.4, 0.4, 0.4};
    const auto f = fit_exp_decay(xs, ys);
    EXPECT_NEAR(f.y0 + f.a1 * std::exp(-0.5 / f.t1), 0.4, 1e-9);
    EXPECT_NEAR(f.a1, 0.0, 1e-9);
    EXPECT_THROW(fit_exp_decay(std::vector<double>{0, 1}, std::vector<double>{0, 1}), DomainError);
}

TEST(Frontier, RepresentativesOnCurveAreSelected)
{
    ExpFit fit;
    fit.a1 = 1;
    fit.t1 = 0.3;
    fit.y0 = 0;
    std::vector<FrontPoint> p;
    for (int i = 0; i < 5; ++i) p.push_back({0.1 + 0.2 * i, fit(0.1 + 0.2 * i), "on"});
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        const double x = rng.uniform();
        p.push_back({x, fit(x) + 0.01 + rng.uniform() * 0.2, "off"});
    }
    const auto r = select_representatives(p, fit, 5);
    for (const auto& x : r) EXPECT_EQ(x.origin, "on");
    EXPECT_TRUE(std::is_sorted(r.begin(), r.end(), [](auto& a, auto& b) { return a.g1 < b.g1; }));
}

TEST(Frontier, RepresentativeTieGoesToSmallerG1)
{
    ExpFit fit;
    fit.a1 = 0;
    fit.y0 = 0.5;
    const auto p = pts({{0.1, 0.5}, {0.2, 0.5}, {0.3, 0.5}, {0.4, 0.5}, {0.9, 0.6}, {0.5, 0.6}});
    const auto r = select_representatives(p, fit, 5);
    EXPECT_EQ(r.back().g1, 0.5);
}

TEST(Frontier, RepresentativesMatchFullSortOracle)
{
    Rng rng(8);
    ExpFit fit;
    fit.a1 = 0.8;
    fit.t1 = 0.4;
    fit.y0 = 0.1;
    std::vector<FrontPoint> p;
    for (int i = 0; i < 30; ++i) p.push_back({rng.uniform(), rng.uniform(), std::to_string(i)});
    auto sorted = p;
    std::sort(sorted.begin(), sorted.end(), [&](auto& a, auto& b) {
        const double da = std::abs(a.g2 - fit(a.g1)), db = std::abs(b.g2 - fit(b.g1));
        return da != db ? da < db : a.g1 < b.g1;
    });
    sorted.resize(5);
    std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.g1 < b.g1; });
    const auto r = select_representatives(p, fit, 5);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(r[i].origin, sorted[i].origin);
}

TEST(Frontier, SinglePointHypervolume)
{
    const auto p = pts({{0.4, 0.4}});
    EXPECT_DOUBLE_EQ(hypervolume_representative(p), 0.36);
    EXPECT_DOUBLE_EQ(hypervolume_exact2d(p), 0.36);
}

TEST(Frontier, DuplicatePointCountsTwiceInBoxSumOnceInExact)
{
    const auto p = pts({{0.5, 0.5}, {0.5, 0.5}});
    EXPECT_DOUBLE_EQ(hypervolume_representative(p), 0.5);
    EXPECT_DOUBLE_EQ(hypervolume_exact2d(p), 0.25);
}

TEST(Frontier, ExactHypervolumeMatchesMonteCarlo)
{
    const auto p = pts({{0.2, 0.8}, {0.8, 0.2}});
    EXPECT_NEAR(hypervolume_exact2d(p), 0.28, 1e-12);
    EXPECT_NEAR(monte_carlo_area(p, 1000000, 1), 0.28, 0.002);
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<FrontPoint> q;
        for (int i = 0; i < 12; ++i) q.push_back({rng.uniform(), rng.uniform(), ""});
        EXPECT_NEAR(hypervolume_exact2d(q), monte_carlo_area(q, 400000, trial + 10), 0.004);
    }
}

TEST(Frontier, PointsOutsideReferenceBoxRejected)
{
    EXPECT_THROW(hypervolume_exact2d(pts({{1.2, 0.1}})), DomainError);
    EXPECT_NO_THROW(hypervolume_exact2d(pts({{1.0, 1.0}})));
}

TEST(Frontier, RepresentativeVariantUsesFivePoints)
{
    std::vector<FrontPoint> p;
    for (int i = 0; i < 12; ++i) {
        const double x = i / 11.0;
        p.push_back({x, std::exp(-x / 0.3), ""});
    }
    const auto d = hypervolume_representative_detail(p);
    EXPECT_EQ(d.used.size(), 5u);
    ASSERT_TRUE(d.fit.has_value());
    EXPECT_NEAR(d.value, box_sum(d.used), 0.0);
}

TEST(Frontier, RetrievalArithmetic)
{
    EXPECT_NEAR(f1_score(0.64, 0.59), 0.6139, 0.0005);
    const std::vector<std::string> ids{"a", "b", "c"};
    const auto m = retrieval_metrics(ids, ids, 3);
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.f1, 1.0);
    EXPECT_DOUBLE_EQ(retrieval_metrics(5, 8, 10).precision, 0.5);
    EXPECT_THROW(retrieval_metrics(0, 0, 1), DomainError);
    EXPECT_THROW(retrieval_metrics(0, 1, 0), DomainError);
}
