#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "embeddings.hpp"
#include "error.hpp"
#include "text.hpp"

namespace fgf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix to_matrix(std::span<const std::vector<double>> rows)
{
    if (rows.empty()) {
        return Matrix(0, 0);
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) {
            throw ConfigError("row " + std::to_string(i) + " has length " + std::to_string(rows[i].size()) + ", expected "
                              + std::to_string(rows.front().size()));
        }
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// kernel PCA

enum class Kernel { rbf, linear };

inline std::string to_string(Kernel k) { return k == Kernel::rbf ? "rbf" : "linear"; }

inline Kernel parse_kernel(std::string_view s)
{
    if (s == "rbf") return Kernel::rbf;
    if (s == "linear") return Kernel::linear;
    throw ConfigError("unknown kernel '" + std::string(s) + "' (expected rbf or linear)");
}

struct KpcaModel {
    Kernel kernel = Kernel::rbf;
    double gamma = 0.0; // rbf only
    Matrix train;       // n x d
    std::vector<std::string> train_keys;
    Vector kernel_col_mean; // column means of the uncentered training kernel
    double kernel_mean = 0.0;
    std::vector<double> eigenvalues; // all eigenvalues of the centered kernel, descending, floored at 0
    std::vector<double> explained;   // cumulative variance ratio, one per eigenvalue
    Matrix alphas;                   // n x k, scaled so training scores have variance lambda/n
    std::size_t k = 0;

    double variance_ratio() const { return k == 0 ? 0.0 : explained[k - 1]; }
    Eigen::Index input_dim() const { return train.cols(); }
};

namespace detail {

inline double kernel_value(Kernel kernel, double gamma, const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b)
{
    if (kernel == Kernel::linear) {
        return a.dot(b);
    }
    return std::exp(-gamma * (a - b).squaredNorm());
}

inline Matrix kernel_matrix(Kernel kernel, double gamma, const Matrix& a, const Matrix& b)
{
    Matrix k(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            k(i, j) = kernel_value(kernel, gamma, a.row(i).transpose(), b.row(j).transpose());
        }
    }
    return k;
}

} // namespace detail

/// Fits kernel PCA and keeps the smallest k whose cumulative explained
/// variance reaches `target_variance`. `gamma <= 0` selects 1 / input_dim.
inline KpcaModel kpca_fit(const Matrix& x, Kernel kernel = Kernel::rbf, double target_variance = 0.95, double gamma = 0.0,
                          std::vector<std::string> keys = {})
{
    const auto n = x.rows();
    if (n < 2) {
        throw DomainError("kpca needs at least 2 samples, got " + std::to_string(n));
    }
    if (x.cols() == 0) {
        throw DomainError("kpca input has zero columns");
    }
    if (!(target_variance > 0.0 && target_variance <= 1.0)) {
        throw ConfigError("target_variance must be in (0, 1]");
    }
    KpcaModel m;
    m.kernel = kernel;
    m.gamma = kernel == Kernel::rbf ? (gamma > 0.0 ? gamma : 1.0 / static_cast<double>(x.cols())) : 0.0;
    m.train = x;
    m.train_keys = std::move(keys);

    const Matrix K = detail::kernel_matrix(kernel, m.gamma, x, x);
    m.kernel_col_mean = K.colwise().mean().transpose();
    m.kernel_mean = m.kernel_col_mean.mean();
    Matrix Kc = K;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            Kc(i, j) = K(i, j) - m.kernel_col_mean(i) - m.kernel_col_mean(j) + m.kernel_mean;
        }
    }
    Kc = 0.5 * (Kc + Kc.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> es(Kc);
    if (es.info() != Eigen::Success) {
        throw DomainError("kpca eigendecomposition failed");
    }
    // Eigen returns ascending order
    const Vector& ev = es.eigenvalues();
    const Matrix& evec = es.eigenvectors();
    m.eigenvalues.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        m.eigenvalues[static_cast<std::size_t>(i)] = std::max(0.0, ev(n - 1 - i));
    }
    double total = 0.0;
    for (double l : m.eigenvalues) {
        total += l;
    }
    if (!(total > 1e-12 * std::max(1.0, std::abs(K.trace())))) {
        throw DomainError("zero-variance input: every centered kernel eigenvalue is 0");
    }
    m.explained.resize(m.eigenvalues.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < m.eigenvalues.size(); ++i) {
        acc += m.eigenvalues[i];
        m.explained[i] = acc / total;
    }
    m.explained.back() = 1.0;
    m.k = 0;
    while (m.explained[m.k] < target_variance) {
        ++m.k;
    }
    ++m.k;

    m.alphas.resize(n, static_cast<Eigen::Index>(m.k));
    for (std::size_t c = 0; c < m.k; ++c) {
        const auto src = n - 1 - static_cast<Eigen::Index>(c);
        if (m.eigenvalues[c] > 0.0) {
            m.alphas.col(static_cast<Eigen::Index>(c)) = evec.col(src) / std::sqrt(m.eigenvalues[c]);
        } else {
            m.alphas.col(static_cast<Eigen::Index>(c)).setZero();
        }
    }
    return m;
}

inline KpcaModel kpca_fit(std::span<const std::vector<double>> rows, Kernel kernel = Kernel::rbf, double target_variance = 0.95)
{
    return kpca_fit(to_matrix(rows), kernel, target_variance);
}

/// Projects rows onto the retained components via the centered kernel row.
inline Matrix kpca_project(const KpcaModel& m, const Matrix& x)
{
    if (x.cols() != m.input_dim()) {
        throw DomainError("kpca projection: input has " + std::to_string(x.cols()) + " columns, model expects "
                          + std::to_string(m.input_dim()));
    }
    Matrix kr = detail::kernel_matrix(m.kernel, m.gamma, x, m.train);
    for (Eigen::Index i = 0; i < kr.rows(); ++i) {
        const double row_mean = kr.row(i).mean();
        for (Eigen::Index j = 0; j < kr.cols(); ++j) {
            kr(i, j) = kr(i, j) - row_mean - m.kernel_col_mean(j) + m.kernel_mean;
        }
    }
    return kr * m.alphas;
}

inline nlohmann::ordered_json to_json(const KpcaModel& m)
{
    nlohmann::ordered_json j;
    j["kernel"] = to_string(m.kernel);
    j["gamma"] = m.gamma;
    j["k"] = m.k;
    j["variance_ratio"] = m.variance_ratio();
    j["eigenvalues"] = m.eigenvalues;
    j["explained"] = m.explained;
    j["train_keys"] = m.train_keys;
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.train.rows(); ++i) {
        rows.push_back(std::vector<double>(m.train.row(i).begin(), m.train.row(i).end()));
    }
    j["train"] = std::move(rows);
    auto alphas = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.alphas.cols(); ++c) {
        alphas.push_back(std::vector<double>(m.alphas.col(c).begin(), m.alphas.col(c).end()));
    }
    j["alphas"] = std::move(alphas);
    j["kernel_col_mean"] = std::vector<double>(m.kernel_col_mean.begin(), m.kernel_col_mean.end());
    j["kernel_mean"] = m.kernel_mean;
    return j;
}

inline KpcaModel kpca_from_json(const nlohmann::json& j)
{
    KpcaModel m;
    m.kernel = parse_kernel(j.at("kernel").get<std::string>());
    m.gamma = j.at("gamma").get<double>();
    m.k = j.at("k").get<std::size_t>();
    m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    m.explained = j.at("explained").get<std::vector<double>>();
    m.train_keys = j.at("train_keys").get<std::vector<std::string>>();
    m.train = to_matrix(j.at("train").get<std::vector<std::vector<double>>>());
    const auto alphas = j.at("alphas").get<std::vector<std::vector<double>>>();
    m.alphas.resize(m.train.rows(), static_cast<Eigen::Index>(alphas.size()));
    for (std::size_t c = 0; c < alphas.size(); ++c) {
        if (static_cast<Eigen::Index>(alphas[c].size()) != m.train.rows()) {
            throw ParseError("kpca model: eigenvector " + std::to_string(c) + " has the wrong length");
        }
        m.alphas.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Vector>(alphas[c].data(), m.train.rows());
    }
    const auto cm = j.at("kernel_col_mean").get<std::vector<double>>();
    m.kernel_col_mean = Eigen::Map<const Vector>(cm.data(), static_cast<Eigen::Index>(cm.size()));
    m.kernel_mean = j.at("kernel_mean").get<double>();
    if (m.k != alphas.size()) {
        throw ParseError("kpca model: k does not match the stored eigenvectors");
    }
    return m;
}

// ---------------------------------------------------------------------------
// inter-feature weights

/// Logistic link weight 1 / (1 + e^(d_sub - d_com)).
inline double weight_hierarchy(double d_sub, double d_com) { return 1.0 / (1.0 + std::exp(d_sub - d_com)); }

enum class AttentionNorm { global, row };

inline AttentionNorm parse_attention_norm(std::string_view s)
{
    if (s == "global") return AttentionNorm::global;
    if (s == "row") return AttentionNorm::row;
    throw ConfigError("unknown attention normalization '" + std::string(s) + "' (expected global or row)");
}

/// Scaled dot-product attention between mode (queries) and reason (keys)
/// vectors. Returns the attention matrix's row sums, divided by their max.
inline std::vector<double> weight_attention(const Matrix& mode, const Matrix& reason, AttentionNorm norm = AttentionNorm::global)
{
    if (mode.cols() == 0 || reason.cols() == 0) {
        throw DomainError("attention needs d_k > 0");
    }
    if (mode.rows() != reason.rows() || mode.cols() != reason.cols()) {
        throw DomainError("attention: mode and reason blocks differ in shape");
    }
    const auto n = mode.rows();
    if (n == 0) {
        return {};
    }
    Matrix s = (mode * reason.transpose()) / std::sqrt(static_cast<double>(mode.cols()));
    if (norm == AttentionNorm::global) {
        const double mx = s.maxCoeff();
        s = (s.array() - mx).exp();
        s /= s.sum();
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mx = s.row(i).maxCoeff();
            s.row(i) = (s.row(i).array() - mx).exp();
            s.row(i) /= s.row(i).sum();
        }
    }
    std::vector<double> w(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        w[static_cast<std::size_t>(i)] = s.row(i).sum();
    }
    const double mx = *std::max_element(w.begin(), w.end());
    for (auto& x : w) {
        x /= mx;
    }
    return w;
}

/// Verbs from `lexicon` that occur as whole words in `text_in`, in lexicon order.
inline std::vector<std::string> find_verbs(std::string_view text_in, std::span<const std::string> lexicon)
{
    const auto words = text::words(text_in);
    std::vector<std::string> out;
    for (const auto& v : lexicon) {
        const auto folded = text::casefold(v);
        if (std::find(words.begin(), words.end(), folded) != words.end()) {
            out.push_back(folded);
        }
    }
    return out;
}

/// Action-verb similarity weights.
///
/// V_i is the mean embedding of the lexicon verbs found in record i's decision
/// text, or the record's decision vector when none match. Each record scores
/// the sum of cosines between V_i and every effect vector; negative sums are
/// floored at 0 and the result divided by the largest score.
inline std::vector<double> weight_verbs(std::span<const std::string> decision_texts, const Matrix& decision_vecs,
                                        const Matrix& effect_vecs, std::span<const std::string> lexicon,
                                        const TokenEmbedder& verb_embedder)
{
    const auto n = static_cast<Eigen::Index>(decision_texts.size());
    if (lexicon.empty()) {
        throw ConfigError("verb lexicon is empty");
    }
    if (decision_vecs.rows() != n || effect_vecs.rows() != n) {
        throw DomainError("verb weights: decision texts, decision vectors and effect vectors differ in length");
    }
    if (verb_embedder.dim != static_cast<std::size_t>(effect_vecs.cols()) || decision_vecs.cols() != effect_vecs.cols()) {
        throw DomainError("verb weights: verb, decision and effect vectors must share a dimension");
    }
    const auto d = effect_vecs.cols();
    Matrix actions(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto verbs = find_verbs(decision_texts[static_cast<std::size_t>(i)], lexicon);
        if (verbs.empty()) {
            actions.row(i) = decision_vecs.row(i);
            continue;
        }
        Vector acc = Vector::Zero(d);
        for (const auto& v : verbs) {
            const auto e = verb_embedder(v);
            acc += Eigen::Map<const Vector>(e.data(), d);
        }
        actions.row(i) = acc.transpose() / static_cast<double>(verbs.size());
    }
    std::vector<double> score(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ni = actions.row(i).norm();
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double nj = effect_vecs.row(j).norm();
            if (ni == 0.0 || nj == 0.0) {
                continue;
            }
            s += actions.row(i).dot(effect_vecs.row(j)) / (ni * nj);
        }
        score[static_cast<std::size_t>(i)] = std::max(0.0, s);
    }
    if (score.empty()) {
        return score;
    }
    const double mx = *std::max_element(score.begin(), score.end());
    if (!(mx > 0.0)) {
        throw DomainError("verb weights: every record has a non-positive similarity sum");
    }
    for (auto& x : score) {
        x /= mx;
    }
    return score;
}

// ---------------------------------------------------------------------------
// fusion

struct FeatureBlocks {
    std::vector<std::string> ids;
    Matrix sub_com;
    Matrix mode;
    Matrix reason;
    Matrix decision;
    Matrix effect;
};

struct FusionWeights {
    double w1 = 1.0;
    std::vector<double> w2;
    std::vector<double> w3;
};

struct FusedFeatureMatrix {
    std::vector<std::string> ids;
    Matrix rows;
    std::vector<std::pair<std::string, std::size_t>> layout; // block name, width
    bool standardized = false;

    std::size_t d_total() const { return static_cast<std::size_t>(rows.cols()); }
};

/// Rows of `table` for `ids`, in that order. A missing id names the record and field.
inline Matrix gather_block(const EmbeddingTable& table, std::span<const std::string> ids, std::string_view field)
{
    Matrix m(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(table.dim()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!table.contains(ids[i])) {
            throw AssemblyError("record " + ids[i] + " has no '" + std::string(field) + "' vector");
        }
        const auto v = table.at(ids[i]);
        for (std::size_t d = 0; d < v.size(); ++d) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = v[d];
        }
    }
    return m;
}

/// Row layout [sub_com*w1 | mode*w2 | reason*w2 | decision*w3 | effect*w3].
inline FusedFeatureMatrix fuse(const FeatureBlocks& b, const FusionWeights& w)
{
    const auto n = static_cast<Eigen::Index>(b.ids.size());
    const std::pair<const char*, const Matrix*> blocks[] = {
        {"sub_com", &b.sub_com}, {"mode", &b.mode}, {"reason", &b.reason}, {"decision", &b.decision}, {"effect", &b.effect}};
    for (const auto& [name, m] : blocks) {
        if (m->rows() != n) {
            const auto missing = std::min(m->rows(), n);
            throw AssemblyError("field '" + std::string(name) + "' has " + std::to_string(m->rows()) + " rows for "
                                + std::to_string(n) + " records"
                                + (missing < n ? " (first record without a row: " + b.ids[static_cast<std::size_t>(missing)] + ")" : ""));
        }
    }
    if (b.mode.cols() != b.reason.cols()) {
        throw AssemblyError("mode and reason blocks must have the same width");
    }
    if (static_cast<Eigen::Index>(w.w2.size()) != n || static_cast<Eigen::Index>(w.w3.size()) != n) {
        throw AssemblyError("per-record weights do not match the record count");
    }
    FusedFeatureMatrix out;
    out.ids = b.ids;
    for (const auto& [name, m] : blocks) {
        out.layout.emplace_back(name, static_cast<std::size_t>(m->cols()));
    }
    const auto d_total = b.sub_com.cols() + 2 * b.mode.cols() + b.decision.cols() + b.effect.cols();
    out.rows.resize(n, d_total);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w2 = w.w2[static_cast<std::size_t>(i)];
        const double w3 = w.w3[static_cast<std::size_t>(i)];
        Eigen::Index c = 0;
        out.rows.row(i).segment(c, b.sub_com.cols()) = b.sub_com.row(i) * w.w1;
        c += b.sub_com.cols();
        out.rows.row(i).segment(c, b.mode.cols()) = b.mode.row(i) * w2;
        c += b.mode.cols();
        out.rows.row(i).segment(c, b.reason.cols()) = b.reason.row(i) * w2;
        c += b.reason.cols();
        out.rows.row(i).segment(c, b.decision.cols()) = b.decision.row(i) * w3;
        c += b.decision.cols();
        out.rows.row(i).segment(c, b.effect.cols()) = b.effect.row(i) * w3;
    }
    return out;
}

/// Fused width for a given retained component count: sub_com + 2k + decision + effect.
constexpr std::size_t fused_width(std::size_t k, std::size_t sub_com_dim = 100, std::size_t sentence_dim = 384)
{
    return sub_com_dim + 2 * k + 2 * sentence_dim;
}

/// Column-wise z-score with the population standard deviation. Columns whose
/// spread is negligible relative to their magnitude become 0.
inline Matrix standardize(const Matrix& x)
{
    if (x.rows() < 2) {
        throw DomainError("standardize needs at least 2 rows");
    }
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double mean = x.col(c).mean();
        const double var = (x.col(c).array() - mean).square().mean();
        const double sd = std::sqrt(var);
        const double scale = std::max(1.0, x.col(c).cwiseAbs().maxCoeff());
        if (sd <= 1e-12 * scale) {
            out.col(c).setZero();
        } else {
            out.col(c) = (x.col(c).array() - mean) / sd;
        }
    }
    return out;
}

inline FusedFeatureMatrix standardize(const FusedFeatureMatrix& m)
{
    FusedFeatureMatrix out = m;
    out.rows = standardize(m.rows);
    out.standardized = true;
    return out;
}

// ---------------------------------------------------------------------------
// weighted cross-entropy

/// -(1/N) sum_i w_{y_i} log p_{i, y_i}, with p clamped at 1e-12.
inline double weighted_ce_loss(const Matrix& probs, std::span<const std::size_t> labels, std::span<const double> class_weights)
{
    const auto n = probs.rows();
    const auto c = probs.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw DomainError("loss: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " rows");
    }
    if (static_cast<Eigen::Index>(class_weights.size()) != c) {
        throw DomainError("loss: " + std::to_string(class_weights.size()) + " class weights for " + std::to_string(c) + " classes");
    }
    if (n == 0) {
        throw DomainError("loss: no samples");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(probs.row(i).sum() - 1.0) > 1e-6) {
            throw DomainError("loss: probabilities in row " + std::to_string(i) + " do not sum to 1");
        }
        const auto y = labels[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(y) >= c) {
            throw DomainError("loss: label " + std::to_string(y) + " out of range in row " + std::to_string(i));
        }
        total += class_weights[y] * std::log(std::max(probs(i, static_cast<Eigen::Index>(y)), 1e-12));
    }
    return total == 0.0 ? 0.0 : -total / static_cast<double>(n);
}

enum class ClassWeightMode { fusion, frequency };

inline ClassWeightMode parse_class_weight_mode(std::string_view s)
{
    if (s == "fusion") return ClassWeightMode::fusion;
    if (s == "frequency") return ClassWeightMode::frequency;
    throw ConfigError("unknown class-weight mode '" + std::string(s) + "' (expected fusion or frequency)");
}

struct LossMix {
    double alpha = 1.0 / 3.0;
    double beta = 1.0 / 3.0;
    double gamma = 1.0 / 3.0;
};

/// Per-class weights alpha*w1 + beta*mean_c(w2) + gamma*mean_c(w3). A class
/// with no members uses the dataset-wide means.
inline std::vector<double> fusion_class_weights(std::span<const std::size_t> labels, std::size_t n_classes, double w1,
                                                std::span<const double> w2, std::span<const double> w3, LossMix mix = {})
{
    if (w2.size() != labels.size() || w3.size() != labels.size()) {
        throw DomainError("class weights: per-record weights do not match the label count");
    }
    std::vector<double> s2(n_classes, 0.0);
    std::vector<double> s3(n_classes, 0.0);
    std::vector<double> cnt(n_classes, 0.0);
    double all2 = 0.0;
    double all3 = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= n_classes) {
            throw DomainError("class weights: label " + std::to_string(labels[i]) + " out of range");
        }
        s2[labels[i]] += w2[i];
        s3[labels[i]] += w3[i];
        cnt[labels[i]] += 1.0;
        all2 += w2[i];
        all3 += w3[i];
    }
    const double n = std::max<double>(1.0, static_cast<double>(labels.size()));
    std::vector<double> out(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double m2 = cnt[c] > 0 ? s2[c] / cnt[c] : all2 / n;
        const double m3 = cnt[c] > 0 ? s3[c] / cnt[c] : all3 / n;
        out[c] = mix.alpha * w1 + mix.beta * m2 + mix.gamma * m3;
    }
    return out;
}

/// Inverse-frequency weights N / (C * n_c); empty classes get 0.
inline std::vector<double> frequency_class_weights(std::span<const std::size_t> labels, std::size_t n_classes)
{
    std::vector<double> cnt(n_classes, 0.0);
    for (auto y : labels) {
        if (y >= n_classes) {
            throw DomainError("class weights: label " + std::to_string(y) + " out of range");
        }
        cnt[y] += 1.0;
    }
    std::vector<double> out(n_classes, 0.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (cnt[c] > 0) {
            out[c] = static_cast<double>(labels.size()) / (static_cast<double>(n_classes) * cnt[c]);
        }
    }
    return out;
}

} // namespace fgf
