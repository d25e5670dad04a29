#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "fusion.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace fgf {

// ---------------------------------------------------------------------------
// cosine block statistics

struct NamedBlock {
    std::string name;
    Matrix vectors; // one row per record
};

struct BlockStat {
    std::string a;
    std::string b;
    double mean = 0.0;
    std::size_t pairs = 0;
};

struct SimilarityReport {
    std::vector<BlockStat> blocks; // self blocks first, then the requested pairs
    double diag_mean = 0.0;        // mean over self blocks
    double offdiag_mean = 0.0;     // mean over cross blocks
    std::size_t excluded = 0;      // zero-norm vectors left out
};

namespace detail {

inline std::vector<Vector> unit_rows(const Matrix& m, std::size_t& excluded)
{
    std::vector<Vector> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double nn = m.row(i).norm();
        if (nn == 0.0) {
            ++excluded;
            continue;
        }
        out.push_back(m.row(i).transpose() / nn);
    }
    return out;
}

} // namespace detail

/// Mean pairwise cosine inside each block (distinct vectors only) and across
/// each requested pair of blocks (all vector pairs). Blocks in a pair must
/// share a dimension.
inline SimilarityReport cosine_block_stats(std::span<const NamedBlock> blocks,
                                           std::span<const std::pair<std::string, std::string>> pairs)
{
    SimilarityReport rep;
    std::map<std::string, std::vector<Vector>> unit;
    for (const auto& b : blocks) {
        unit[b.name] = detail::unit_rows(b.vectors, rep.excluded);
    }
    auto find = [&](const std::string& name) -> const std::vector<Vector>& {
        const auto it = unit.find(name);
        if (it == unit.end()) {
            throw ConfigError("no block named '" + name + "'");
        }
        return it->second;
    };
    double diag = 0.0;
    std::size_t n_diag = 0;
    for (const auto& b : blocks) {
        const auto& v = find(b.name);
        BlockStat s{b.name, b.name};
        double sum = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            for (std::size_t j = i + 1; j < v.size(); ++j) {
                sum += v[i].dot(v[j]);
                ++s.pairs;
            }
        }
        s.mean = s.pairs ? sum / static_cast<double>(s.pairs) : 1.0;
        if (s.pairs) {
            diag += s.mean;
            ++n_diag;
        }
        rep.blocks.push_back(s);
    }
    double off = 0.0;
    for (const auto& [a, b] : pairs) {
        const auto& va = find(a);
        const auto& vb = find(b);
        if (!va.empty() && !vb.empty() && va.front().size() != vb.front().size()) {
            throw DomainError("blocks '" + a + "' and '" + b + "' differ in dimension");
        }
        BlockStat s{a, b};
        double sum = 0.0;
        for (const auto& x : va) {
            for (const auto& y : vb) {
                sum += x.dot(y);
                ++s.pairs;
            }
        }
        s.mean = s.pairs ? sum / static_cast<double>(s.pairs) : 0.0;
        off += s.mean;
        rep.blocks.push_back(s);
    }
    rep.diag_mean = n_diag ? diag / static_cast<double>(n_diag) : 0.0;
    rep.offdiag_mean = pairs.empty() ? 0.0 : off / static_cast<double>(pairs.size());
    return rep;
}

// ---------------------------------------------------------------------------
// k-means

struct KMeansResult {
    std::vector<std::size_t> assignments;
    Matrix centers;
    std::vector<double> inertia; // after each Lloyd iteration
    std::size_t iterations = 0;
    bool converged = false;
};

namespace detail {

/// One k-means++ start followed by Lloyd iterations until the assignment
/// stops changing. An emptied cluster takes the point farthest from its center.
inline KMeansResult kmeans_once(const Matrix& x, std::size_t k, Rng& rng, std::size_t max_iter)
{
    const auto n = static_cast<std::size_t>(x.rows());
    KMeansResult r;
    r.centers.resize(static_cast<Eigen::Index>(k), x.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::size_t first = rng.index(n);
    r.centers.row(0) = x.row(static_cast<Eigen::Index>(first));
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) - r.centers.row(static_cast<Eigen::Index>(c - 1))).squaredNorm());
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (pick = 0; pick + 1 < n; ++pick) {
                u -= d2[pick];
                if (u < 0.0) {
                    break;
                }
            }
            // rounding can run off the end onto an existing center
            while (d2[pick] == 0.0) {
                pick = pick == 0 ? n - 1 : pick - 1;
            }
        } else {
            pick = rng.index(n);
        }
        r.centers.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(pick));
    }

    r.assignments.assign(n, k);
    for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = (x.row(static_cast<Eigen::Index>(i)) - r.centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            changed |= r.assignments[i] != best;
            r.assignments[i] = best;
            inertia += best_d;
        }
        r.inertia.push_back(inertia);
        if (!changed) {
            r.converged = true;
            break;
        }
        Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), x.cols());
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(static_cast<Eigen::Index>(r.assignments[i])) += x.row(static_cast<Eigen::Index>(i));
            ++count[r.assignments[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] > 0) {
                r.centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(count[c]);
                continue;
            }
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = (x.row(static_cast<Eigen::Index>(i)) - r.centers.row(static_cast<Eigen::Index>(r.assignments[i]))).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            r.centers.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(far));
        }
    }
    return r;
}

} // namespace detail

/// Best of `n_init` k-means++ starts by final inertia.
inline KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed, std::size_t n_init = 10, std::size_t max_iter = 300)
{
    const auto n = static_cast<std::size_t>(x.rows());
    if (k == 0 || n_init == 0) {
        throw ConfigError("k-means needs k >= 1 and n_init >= 1");
    }
    if (k > n) {
        throw DomainError("k-means: k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " rows");
    }
    Rng rng(derive_seed(seed, 5));
    KMeansResult best;
    for (std::size_t i = 0; i < n_init; ++i) {
        auto r = detail::kmeans_once(x, k, rng, max_iter);
        if (i == 0 || r.inertia.back() < best.inertia.back()) {
            best = std::move(r);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// silhouette

struct SilhouetteResult {
    double mean = 0.0;
    std::vector<double> per_sample;
    std::map<std::size_t, double> per_label;
};

/// Mean of (b - a) / max(a, b) with Euclidean distance; members of singleton
/// clusters score 0.
inline SilhouetteResult silhouette_detail(const Matrix& x, std::span<const std::size_t> labels, unsigned threads = 1)
{
    const auto n = static_cast<std::size_t>(x.rows());
    if (labels.size() != n) {
        throw DomainError("silhouette: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " rows");
    }
    std::map<std::size_t, std::size_t> sizes;
    for (auto l : labels) {
        ++sizes[l];
    }
    if (sizes.size() < 2) {
        throw DomainError("silhouette needs at least 2 distinct labels");
    }
    std::vector<std::size_t> dense(n);
    std::map<std::size_t, std::size_t> index;
    for (const auto& [l, c] : sizes) {
        index.emplace(l, index.size());
    }
    std::vector<double> count(index.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        dense[i] = index.at(labels[i]);
        count[dense[i]] += 1.0;
    }
    SilhouetteResult r;
    r.per_sample.assign(n, 0.0);
    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<double> sum(count.size(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                sum[dense[j]] += (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
            }
        }
        const auto own = dense[i];
        if (count[own] <= 1.0) {
            return;
        }
        const double a = sum[own] / (count[own] - 1.0);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < count.size(); ++c) {
            if (c != own && count[c] > 0.0) {
                b = std::min(b, sum[c] / count[c]);
            }
        }
        const double m = std::max(a, b);
        r.per_sample[i] = m > 0.0 ? (b - a) / m : 0.0;
    });
    std::map<std::size_t, double> acc;
    for (std::size_t i = 0; i < n; ++i) {
        r.mean += r.per_sample[i];
        acc[labels[i]] += r.per_sample[i];
    }
    r.mean /= static_cast<double>(n);
    for (const auto& [l, s] : acc) {
        r.per_label[l] = s / static_cast<double>(sizes.at(l));
    }
    return r;
}

inline double silhouette(const Matrix& x, std::span<const std::size_t> labels, unsigned threads = 1)
{
    return silhouette_detail(x, labels, threads).mean;
}

} // namespace fgf
