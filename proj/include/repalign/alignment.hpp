#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "repalign/errors.hpp"
#include "repalign/matrix.hpp"
#include "repalign/svd.hpp"

namespace repalign {

// Orthogonal matrix R minimizing ||X R - Y||_F (Schonemann). No scaling, no
// translation; callers center explicitly if they want it.
struct ProcrustesResult {
    Matrix rotation;
    // X^T Y was numerically rank-deficient: the minimizer is not unique and
    // the canonical-sign SVD branch was returned.
    bool rank_deficient;
};

inline ProcrustesResult procrustes(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw dim_error("procrustes: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    if (x.rows() < x.cols())
        throw dim_error("procrustes: need rows >= cols, got " + x.shape_str());
    const Matrix cross = matmul_at_b(x, y);
    const SvdResult dec = svd(cross);
    const bool deficient =
        dec.s.front() == 0.0 || dec.s.back() <= 1e-10 * dec.s.front();
    return ProcrustesResult{matmul_a_bt(dec.u, dec.v), deficient};
}

namespace detail {

inline void check_item_matched(const std::vector<Matrix>& subjects) {
    if (subjects.empty()) throw dim_error("metric: no subjects given");
    for (const Matrix& s : subjects)
        if (s.rows() != subjects.front().rows() || s.cols() != subjects.front().cols())
            throw dim_error("metric: subjects are not item-matched (" + s.shape_str() +
                            " vs " + subjects.front().shape_str() + ")");
}

inline double checked_row_norm(const Matrix& m, std::size_t subject, std::size_t item) {
    const double n = row_norm(m, item);
    if (n == 0.0)
        throw value_error("zero-norm row: subject " + std::to_string(subject) + ", item " +
                          std::to_string(item));
    return n;
}

}  // namespace detail

// Entry (a,b) = mean over items of cos(z_a_i, z_b_i).
inline Matrix mean_cosine_matrix(const std::vector<Matrix>& subjects) {
    detail::check_item_matched(subjects);
    const std::size_t n = subjects.size();
    const std::size_t items = subjects.front().rows();
    std::vector<std::vector<double>> norms(n, std::vector<double>(items));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t i = 0; i < items; ++i)
            norms[a][i] = detail::checked_row_norm(subjects[a], a, i);
    Matrix out(n, n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < items; ++i)
                acc += row_dot(subjects[a], i, subjects[b], i) / (norms[a][i] * norms[b][i]);
            const double v = acc / static_cast<double>(items);
            out(a, b) = v;
            out(b, a) = v;
        }
    }
    return out;
}

// Entry (a,b) = mean over items and features of (z_a - z_b)^2.
inline Matrix mse_matrix(const std::vector<Matrix>& subjects) {
    detail::check_item_matched(subjects);
    const std::size_t n = subjects.size();
    Matrix out(n, n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double acc = 0.0;
            const auto& da = subjects[a].data();
            const auto& db = subjects[b].data();
            for (std::size_t i = 0; i < da.size(); ++i) {
                const double d = da[i] - db[i];
                acc += d * d;
            }
            const double v = acc / static_cast<double>(da.size());
            out(a, b) = v;
            out(b, a) = v;
        }
    }
    return out;
}

namespace detail {

// k nearest rows to each row under cosine distance, self excluded, ties by
// ascending row index.
inline std::vector<std::vector<std::size_t>> knn_sets(const Matrix& m, std::size_t k,
                                                      std::size_t subject_tag) {
    const std::size_t n = m.rows();
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) norms[i] = checked_row_norm(m, subject_tag, i);
    std::vector<std::vector<std::size_t>> out(n);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
        cand.clear();
        cand.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double cosine = row_dot(m, i, m, j) / (norms[i] * norms[j]);
            cand.emplace_back(1.0 - cosine, j);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                          cand.end());
        out[i].reserve(k);
        for (std::size_t t = 0; t < k; ++t) out[i].push_back(cand[t].second);
        std::sort(out[i].begin(), out[i].end());
    }
    return out;
}

}  // namespace detail

// Mean over items of |N_A(i) /\ N_B(i)| / k with N the k-nearest sets above.
inline double knn_consistency(const Matrix& a, const Matrix& b, std::size_t k) {
    if (a.rows() != b.rows())
        throw dim_error("knn_consistency: row counts differ, " + a.shape_str() + " vs " +
                        b.shape_str());
    const std::size_t n = a.rows();
    if (k < 1 || k > n - 1)
        throw dim_error("knn_consistency: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(n - 1) + "]");
    const auto na = detail::knn_sets(a, k, 0);
    const auto nb = detail::knn_sets(b, k, 1);
    double acc = 0.0;
    std::vector<std::size_t> common;
    for (std::size_t i = 0; i < n; ++i) {
        common.clear();
        std::set_intersection(na[i].begin(), na[i].end(), nb[i].begin(), nb[i].end(),
                              std::back_inserter(common));
        acc += static_cast<double>(common.size()) / static_cast<double>(k);
    }
    return acc / static_cast<double>(n);
}

// |cos| between index-matched top-k principal directions of the centered
// matrices. Absolute value because principal directions carry no sign.
inline std::vector<double> eigvec_similarity(const Matrix& a, const Matrix& b, std::size_t k) {
    const Matrix da = principal_directions(a, k);
    const Matrix db = principal_directions(b, k);
    if (da.rows() != db.rows())
        throw dim_error("eigvec_similarity: feature dims differ");
    std::vector<double> out(k);
    for (std::size_t j = 0; j < k; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < da.rows(); ++i) dot += da(i, j) * db(i, j);
        out[j] = std::min(1.0, std::fabs(dot));
    }
    return out;
}

struct AlignmentReport {
    std::vector<std::string> subject_ids;
    Matrix cosine_matrix;
    Matrix mse;
    std::size_t knn_k;
    Matrix knn;
    std::size_t eig_k;
    // eigvec_sim[a][b] holds k absolute cosines for the pair (a, b).
    std::vector<std::vector<std::vector<double>>> eigvec_sim;
};

inline AlignmentReport compute_alignment_report(const std::vector<Matrix>& subjects,
                                                const std::vector<std::string>& ids,
                                                std::size_t knn_k, std::size_t eig_k) {
    detail::check_item_matched(subjects);
    if (ids.size() != subjects.size())
        throw dim_error("compute_alignment_report: id count mismatch");
    const std::size_t n = subjects.size();
    AlignmentReport rep{ids, mean_cosine_matrix(subjects), mse_matrix(subjects),
                        knn_k,  Matrix(n, n),              eig_k,
                        {}};
    for (std::size_t a = 0; a < n; ++a) rep.knn(a, a) = 1.0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double v = knn_consistency(subjects[a], subjects[b], knn_k);
            rep.knn(a, b) = v;
            rep.knn(b, a) = v;
        }
    rep.eigvec_sim.assign(n, std::vector<std::vector<double>>(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a; b < n; ++b) {
            auto v = a == b ? std::vector<double>(eig_k, 1.0)
                            : eigvec_similarity(subjects[a], subjects[b], eig_k);
            rep.eigvec_sim[a][b] = v;
            rep.eigvec_sim[b][a] = std::move(v);
        }
    return rep;
}

}  // namespace repalign
