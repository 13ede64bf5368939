#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "repalign/errors.hpp"
#include "repalign/matrix.hpp"

namespace repalign {

// Thin SVD: m = u * diag(s) * v^T with u (rows x k), s (k), v (cols x k),
// k = min(rows, cols). Singular values descend; u and v columns are
// orthonormal. Sign convention: the largest-magnitude entry of each u column
// is non-negative (ties resolved to the earliest index), with the paired v
// column flipped in tandem so the product is unchanged.
struct SvdResult {
    Matrix u;
    std::vector<double> s;
    Matrix v;

    SvdResult(Matrix u_, std::vector<double> s_, Matrix v_)
        : u(std::move(u_)), s(std::move(s_)), v(std::move(v_)) {}
};

namespace detail {

// One-sided Jacobi on a tall (rows >= cols) column-major working copy.
// Columns of `a` are rotated until pairwise orthogonal; `v` accumulates the
// rotations. Returns false if the sweep cap was hit before convergence.
inline bool jacobi_orthogonalize(std::vector<std::vector<double>>& a,
                                 std::vector<std::vector<double>>& v,
                                 std::size_t max_sweeps) {
    const std::size_t n = a.size();
    const double tol = 1e-14;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                const std::size_t m = a[i].size();
                for (std::size_t r = 0; r < m; ++r) {
                    alpha += a[i][r] * a[i][r];
                    beta += a[j][r] * a[j][r];
                    gamma += a[i][r] * a[j][r];
                }
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::fabs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t r = 0; r < m; ++r) {
                    const double ai = a[i][r], aj = a[j][r];
                    a[i][r] = c * ai - s * aj;
                    a[j][r] = s * ai + c * aj;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vi = v[i][r], vj = v[j][r];
                    v[i][r] = c * vi - s * vj;
                    v[j][r] = s * vi + c * vj;
                }
                rotated = true;
            }
        }
        if (!rotated) return true;
    }
    return false;
}

inline SvdResult svd_with_sweep_cap(const Matrix& input, std::size_t max_sweeps) {
    if (!input.all_finite()) throw value_error("svd: input contains NaN or Inf");
    const bool flipped = input.rows() < input.cols();
    const Matrix work = flipped ? transpose(input) : input;
    const std::size_t m = work.rows();
    const std::size_t n = work.cols();

    // Column-major working copies.
    std::vector<std::vector<double>> cols(n, std::vector<double>(m));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) cols[j][i] = work(i, j);
    std::vector<std::vector<double>> vcols(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) vcols[j][j] = 1.0;

    if (!jacobi_orthogonalize(cols, vcols, max_sweeps))
        throw convergence_error("svd: one-sided Jacobi failed to converge for " +
                                input.shape_str() + " matrix after " +
                                std::to_string(max_sweeps) + " sweeps");

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (double x : cols[j]) s += x * x;
        sigma[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    Matrix u(m, n);
    Matrix v(n, n);
    std::vector<double> s_sorted(n);
    std::vector<std::size_t> zero_cols;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        s_sorted[j] = sigma[src];
        if (sigma[src] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) u(i, j) = cols[src][i] / sigma[src];
        } else {
            zero_cols.push_back(j);
        }
        for (std::size_t i = 0; i < n; ++i) v(i, j) = vcols[src][i];
    }

    // Exactly-zero singular directions: complete u to an orthonormal set by
    // Gram-Schmidt against the canonical basis.
    if (!zero_cols.empty()) {
        std::vector<bool> filled(n, true);
        for (std::size_t j : zero_cols) filled[j] = false;
        std::size_t cand = 0;
        for (std::size_t j : zero_cols) {
            for (; cand < m; ++cand) {
                std::vector<double> w(m, 0.0);
                w[cand] = 1.0;
                for (int pass = 0; pass < 2; ++pass) {
                    for (std::size_t c = 0; c < n; ++c) {
                        if (!filled[c]) continue;
                        double dot = 0.0;
                        for (std::size_t i = 0; i < m; ++i) dot += w[i] * u(i, c);
                        for (std::size_t i = 0; i < m; ++i) w[i] -= dot * u(i, c);
                    }
                }
                double norm = 0.0;
                for (double x : w) norm += x * x;
                norm = std::sqrt(norm);
                if (norm > 0.5) {
                    for (std::size_t i = 0; i < m; ++i) u(i, j) = w[i] / norm;
                    filled[j] = true;
                    ++cand;
                    break;
                }
            }
        }
    }

    // Canonical signs.
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = std::fabs(u(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < m; ++i) u(i, j) = -u(i, j);
            for (std::size_t i = 0; i < n; ++i) v(i, j) = -v(i, j);
        }
    }

    if (flipped) return SvdResult(std::move(v), std::move(s_sorted), std::move(u));
    return SvdResult(std::move(u), std::move(s_sorted), std::move(v));
}

}  // namespace detail

inline SvdResult svd(const Matrix& m) { return detail::svd_with_sweep_cap(m, 64); }

// Flips each column so its largest-magnitude entry is non-negative
// (ties -> earliest index). Used where directions carry no paired factor.
inline void canonicalize_columns(Matrix& m) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const double a = std::fabs(m(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (m(arg, j) < 0.0)
            for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = -m(i, j);
    }
}

// Top-k right singular vectors of the column-centered matrix, as columns of
// a (cols x k) matrix. Unit-norm, descending variance, canonical signs.
inline Matrix principal_directions(const Matrix& m, std::size_t k) {
    if (m.rows() < 2) throw dim_error("principal_directions: need at least 2 rows");
    const std::size_t kmax = std::min(m.rows() - 1, m.cols());
    if (k == 0 || k > kmax)
        throw dim_error("principal_directions: k=" + std::to_string(k) +
                        " out of range for " + m.shape_str() + " (max " +
                        std::to_string(kmax) + ")");
    auto [centered, mean] = center_columns(m);
    (void)mean;
    const SvdResult dec = svd(centered);
    Matrix dirs(m.cols(), k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < m.cols(); ++i) dirs(i, j) = dec.v(i, j);
    canonicalize_columns(dirs);
    return dirs;
}

}  // namespace repalign
