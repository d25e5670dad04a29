#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace fgf {

/// Bi-objective point, both coordinates minimized.
using Point2 = std::array<double, 2>;

/// True when `a` is no worse than `b` in both coordinates and better in one.
constexpr bool dominates(const Point2& a, const Point2& b) noexcept
{
    return a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1]);
}

/// Fast non-dominated sorting. Returns fronts of indices, best front first.
inline std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Point2> pts)
{
    const auto n = pts.size();
    std::vector<std::vector<std::size_t>> dominated_by(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) {
                continue;
            }
            if (dominates(pts[p], pts[q])) {
                dominated_by[p].push_back(q);
            } else if (dominates(pts[q], pts[p])) {
                ++domination_count[p];
            }
        }
        if (domination_count[p] == 0) {
            current.push_back(p);
        }
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto p : current) {
            for (auto q : dominated_by[p]) {
                if (--domination_count[q] == 0) {
                    next.push_back(q);
                }
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

/// Rank (front index) of every point.
inline std::vector<std::size_t> pareto_ranks(std::span<const Point2> pts)
{
    std::vector<std::size_t> rank(pts.size(), 0);
    const auto fronts = non_dominated_sort(pts);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        for (auto i : fronts[f]) {
            rank[i] = f;
        }
    }
    return rank;
}

/// Crowding distance of the members of one front; boundary points get +inf.
inline std::vector<double> crowding_distance(std::span<const Point2> pts, std::span<const std::size_t> front)
{
    const auto n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < 2; ++m) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pts[front[a]][m] < pts[front[b]][m]; });
        const double lo = pts[front[order.front()]][m];
        const double hi = pts[front[order.back()]][m];
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        if (hi - lo <= 0.0) {
            continue;
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            dist[order[k]] += (pts[front[order[k + 1]]][m] - pts[front[order[k - 1]]][m]) / (hi - lo);
        }
    }
    return dist;
}

// ---------------------------------------------------------------------------
// normalized fronts

struct FrontPoint {
    double g1 = 0.0;
    double g2 = 0.0;
    std::string origin;

    Point2 point() const noexcept { return {g1, g2}; }
};

/// Raw objective pair: f1 minimized, f2 maximized.
struct ObjectivePair {
    double f1 = 0.0;
    double f2 = 0.0;
    std::string origin;
};

struct ObjectiveBounds {
    double f1_min = 0.0, f1_max = 0.0;
    double f2_min = 0.0, f2_max = 0.0;
};

inline ObjectiveBounds objective_bounds(std::span<const ObjectivePair> points)
{
    if (points.empty()) {
        throw DomainError("no points to normalize");
    }
    ObjectiveBounds b{points[0].f1, points[0].f1, points[0].f2, points[0].f2};
    for (const auto& p : points) {
        b.f1_min = std::min(b.f1_min, p.f1);
        b.f1_max = std::max(b.f1_max, p.f1);
        b.f2_min = std::min(b.f2_min, p.f2);
        b.f2_max = std::max(b.f2_max, p.f2);
    }
    return b;
}

/// Min-max scaling into [0,1]^2 with both coordinates minimized.
/// A constant coordinate maps to 0.
inline std::vector<FrontPoint> normalize_objectives(std::span<const ObjectivePair> points, const ObjectiveBounds& b)
{
    auto scale = [](double v, double lo, double hi) { return hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.0; };
    std::vector<FrontPoint> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        const double g2 = b.f2_max > b.f2_min ? 1.0 - scale(p.f2, b.f2_min, b.f2_max) : 0.0;
        out.push_back({scale(p.f1, b.f1_min, b.f1_max), g2, p.origin});
    }
    return out;
}

inline std::vector<FrontPoint> normalize_objectives(std::span<const ObjectivePair> points)
{
    return normalize_objectives(points, objective_bounds(points));
}

/// Points not dominated by any other point. Input order is preserved.
inline std::vector<FrontPoint> pareto_front(std::span<const FrontPoint> points)
{
    std::vector<FrontPoint> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
            dominated = j != i && dominates(points[j].point(), points[i].point());
        }
        if (!dominated) {
            out.push_back(points[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// exponential front fitting

/// y = a1 * exp(-x / t1) + y0
struct ExpFit {
    double a1 = 0.0;
    double t1 = 1.0;
    double y0 = 0.0;
    double rmse = 0.0;
    int iterations = 0;
    bool converged = false;

    double operator()(double x) const { return a1 * std::exp(-x / t1) + y0; }
};

inline double fit_rmse(const ExpFit& f, std::span<const double> xs, std::span<const double> ys)
{
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = f(xs[i]) - ys[i];
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

/// Levenberg-Marquardt least squares for the one-phase exponential decay.
/// The decay constant is optimized in log space so it stays positive.
inline ExpFit fit_exp_decay(std::span<const double> xs, std::span<const double> ys, int max_iter = 200, double step_tol = 1e-10)
{
    if (xs.size() != ys.size()) {
        throw DomainError("x and y sizes differ");
    }
    if (xs.size() < 3) {
        throw DomainError("exponential fit needs at least 3 points, got " + std::to_string(xs.size()));
    }
    const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
    const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
    const double xrange = *xmax - *xmin;

    ExpFit fit;
    fit.a1 = *ymax - *ymin;
    fit.y0 = *ymin;
    fit.t1 = xrange > 0.0 ? xrange / 2.0 : 1.0;
    fit.rmse = fit_rmse(fit, xs, ys);

    const auto n = static_cast<Eigen::Index>(xs.size());
    double lambda = 1e-3;
    auto sse = [&](const ExpFit& f) {
        const double r = fit_rmse(f, xs, ys);
        return r * r * static_cast<double>(n);
    };
    double cost = sse(fit);

    for (int it = 0; it < max_iter; ++it) {
        fit.iterations = it + 1;
        Eigen::MatrixXd jac(n, 3);
        Eigen::VectorXd res(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = xs[static_cast<std::size_t>(i)];
            const double e = std::exp(-x / fit.t1);
            res(i) = ys[static_cast<std::size_t>(i)] - (fit.a1 * e + fit.y0);
            jac(i, 0) = e;
            jac(i, 1) = fit.a1 * e * x / fit.t1; // d/d(log t1)
            jac(i, 2) = 1.0;
        }
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d jtr = jac.transpose() * res;
        if (jtr.lpNorm<Eigen::Infinity>() < 1e-15) {
            fit.converged = true;
            break;
        }

        bool accepted = false;
        Eigen::Vector3d delta = Eigen::Vector3d::Zero();
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::Matrix3d damped = jtj;
            for (int d = 0; d < 3; ++d) {
                damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
            }
            delta = damped.ldlt().solve(jtr);
            ExpFit trial = fit;
            trial.a1 += delta(0);
            trial.t1 = fit.t1 * std::exp(std::clamp(delta(1), -20.0, 20.0));
            trial.y0 += delta(2);
            const double trial_cost = sse(trial);
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                fit.a1 = trial.a1;
                fit.t1 = trial.t1;
                fit.y0 = trial.y0;
                cost = trial_cost;
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted || delta.norm() < step_tol) {
            fit.converged = true;
            break;
        }
    }
    fit.rmse = fit_rmse(fit, xs, ys);
    return fit;
}

inline ExpFit fit_exp_decay(std::span<const FrontPoint> front)
{
    std::vector<double> xs, ys;
    for (const auto& p : front) {
        xs.push_back(p.g1);
        ys.push_back(p.g2);
    }
    return fit_exp_decay(xs, ys);
}

/// The `k` points with the smallest vertical distance to the fitted curve,
/// ties broken by smaller g1, returned sorted by g1.
inline std::vector<FrontPoint> select_representatives(std::span<const FrontPoint> points, const ExpFit& fit, std::size_t k = 5)
{
    if (points.size() < k) {
        throw DomainError("need at least " + std::to_string(k) + " points to select representatives, got " + std::to_string(points.size()));
    }
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        dist[i] = std::abs(points[i].g2 - fit(points[i].g1));
    }
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (dist[a] != dist[b]) {
            return dist[a] < dist[b];
        }
        return points[a].g1 < points[b].g1;
    });
    std::vector<FrontPoint> out;
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(points[order[i]]);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.g1 < b.g1; });
    return out;
}

// ---------------------------------------------------------------------------
// hypervolume

namespace detail {

inline void check_in_box(std::span<const FrontPoint> points, const Point2& ref)
{
    for (const auto& p : points) {
        if (!(p.g1 <= ref[0] && p.g2 <= ref[1])) {
            throw DomainError("point (" + std::to_string(p.g1) + ", " + std::to_string(p.g2) + ") lies outside the reference box");
        }
    }
}

} // namespace detail

/// Sum of per-point dominated boxes. Overlaps are counted once per point,
/// so this is an upper bound on the exact dominated area.
inline double box_sum(std::span<const FrontPoint> points, const Point2& ref = {1.0, 1.0})
{
    detail::check_in_box(points, ref);
    double hv = 0.0;
    for (const auto& p : points) {
        hv += (ref[0] - p.g1) * (ref[1] - p.g2);
    }
    return hv;
}

struct RepresentativeHypervolume {
    double value = 0.0;
    std::vector<FrontPoint> used; // the representatives, or every point when there are at most five
    std::optional<ExpFit> fit;
};

/// Box-sum hypervolume over the five representatives closest to the fitted
/// exponential front, or over all points when there are five or fewer.
inline RepresentativeHypervolume hypervolume_representative_detail(std::span<const FrontPoint> points, const Point2& ref = {1.0, 1.0})
{
    detail::check_in_box(points, ref);
    RepresentativeHypervolume out;
    if (points.size() > 5) {
        out.fit = fit_exp_decay(points);
        out.used = select_representatives(points, *out.fit, 5);
    } else {
        out.used.assign(points.begin(), points.end());
    }
    out.value = box_sum(out.used, ref);
    return out;
}

inline double hypervolume_representative(std::span<const FrontPoint> points, const Point2& ref = {1.0, 1.0})
{
    return hypervolume_representative_detail(points, ref).value;
}

/// Exact area of the union of dominated boxes (sort and sweep).
inline double hypervolume_exact2d(std::span<const FrontPoint> points, const Point2& ref = {1.0, 1.0})
{
    detail::check_in_box(points, ref);
    std::vector<Point2> pts;
    pts.reserve(points.size());
    for (const auto& p : points) {
        pts.push_back(p.point());
    }
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    double ceiling = ref[1];
    for (const auto& p : pts) {
        if (p[1] < ceiling) {
            area += (ref[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    return area;
}

// ---------------------------------------------------------------------------
// retrieval metrics

struct RetrievalMetrics {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

inline double f1_score(double recall, double precision)
{
    return recall + precision > 0.0 ? 2.0 * recall * precision / (recall + precision) : 0.0;
}

/// `hits` relevant documents among `retrieved_total` retrieved, `relevant_total` relevant overall.
inline RetrievalMetrics retrieval_metrics(std::size_t hits, std::size_t relevant_total, std::size_t retrieved_total)
{
    if (relevant_total == 0) {
        throw DomainError("recall undefined: no relevant documents");
    }
    if (retrieved_total == 0) {
        throw DomainError("precision undefined: nothing retrieved");
    }
    RetrievalMetrics m;
    m.recall = static_cast<double>(hits) / static_cast<double>(relevant_total);
    m.precision = static_cast<double>(hits) / static_cast<double>(retrieved_total);
    m.f1 = f1_score(m.recall, m.precision);
    return m;
}

inline RetrievalMetrics retrieval_metrics(std::span<const std::string> retrieved, std::span<const std::string> relevant, std::size_t all_retrieved)
{
    const std::unordered_set<std::string> rel(relevant.begin(), relevant.end());
    std::unordered_set<std::string> seen;
    std::size_t hits = 0;
    for (const auto& id : retrieved) {
        if (seen.insert(id).second && rel.count(id) != 0) {
            ++hits;
        }
    }
    return retrieval_metrics(hits, rel.size(), all_retrieved);
}

} // namespace fgf
