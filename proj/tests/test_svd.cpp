#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "repalign/rng.hpp"
#include "repalign/svd.hpp"
#include "test_util.hpp"

using namespace repalign;
using test_util::max_abs_diff;
using test_util::orthonormality_defect;
using test_util::random_matrix;

namespace {

Matrix reconstruct(const SvdResult& r) {
    Matrix us = r.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= r.s[j];
    return matmul_a_bt(us, r.v);
}

void expect_valid_svd(const Matrix& m, const SvdResult& r, double recon_tol = 1e-8) {
    for (std::size_t j = 0; j + 1 < r.s.size(); ++j) EXPECT_GE(r.s[j], r.s[j + 1]);
    for (double s : r.s) EXPECT_GE(s, 0.0);
    EXPECT_LE(orthonormality_defect(r.u), 1e-10);
    EXPECT_LE(orthonormality_defect(r.v), 1e-10);
    EXPECT_LE(max_abs_diff(reconstruct(r), m), recon_tol * std::max(1.0, max_abs(m)));
}

// Independent closed-form eigendecomposition of a symmetric 2x2 matrix;
// returns the eigenvector of the larger eigenvalue.
std::array<double, 2> top_eigvec_2x2(double a, double b, double c) {
    const double tr = a + c;
    const double det = a * c - b * b;
    const double lam = tr / 2.0 + std::sqrt(tr * tr / 4.0 - det);
    double vx = b, vy = lam - a;
    if (vx == 0.0 && vy == 0.0) {
        vx = 1.0;
        vy = 0.0;
    }
    const double n = std::sqrt(vx * vx + vy * vy);
    return {vx / n, vy / n};
}

}  // namespace

TEST(Svd, Identity3x3) {
    Matrix m(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const SvdResult r = svd(m);
    for (double s : r.s) EXPECT_NEAR(s, 1.0, 1e-12);
    expect_valid_svd(m, r);
}

TEST(Svd, Diagonal32) {
    Matrix m(2, 2, {3, 0, 0, 2});
    const SvdResult r = svd(m);
    EXPECT_NEAR(r.s[0], 3.0, 1e-12);
    EXPECT_NEAR(r.s[1], 2.0, 1e-12);
    // u and v are signed permutations of the identity
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_NEAR(std::fabs(r.u(i, j)), i == j ? 1.0 : 0.0, 1e-12);
            EXPECT_NEAR(std::fabs(r.v(i, j)), i == j ? 1.0 : 0.0, 1e-12);
        }
    expect_valid_svd(m, r);
}

TEST(Svd, SymmetricPermutation) {
    Matrix m(2, 2, {0, 2, 2, 0});
    const SvdResult r = svd(m);
    EXPECT_NEAR(r.s[0], 2.0, 1e-12);
    EXPECT_NEAR(r.s[1], 2.0, 1e-12);
    expect_valid_svd(m, r);
}

TEST(Svd, WideMatrixHandled) {
    Matrix m(2, 5, {1, 2, 3, 4, 5, -1, 0.5, 2, -3, 1});
    const SvdResult r = svd(m);
    EXPECT_EQ(r.u.rows(), 2u);
    EXPECT_EQ(r.u.cols(), 2u);
    EXPECT_EQ(r.v.rows(), 5u);
    EXPECT_EQ(r.v.cols(), 2u);
    expect_valid_svd(m, r);
}

TEST(Svd, RankDeficientCompletion) {
    // rank 1, 4x3: zero singular directions must still give orthonormal u.
    Matrix m(4, 3);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            m(i, j) = (static_cast<double>(i) + 1.0) * (static_cast<double>(j) + 1.0);
    const SvdResult r = svd(m);
    EXPECT_GT(r.s[0], 0.0);
    EXPECT_NEAR(r.s[1], 0.0, 1e-10 * r.s[0]);
    EXPECT_NEAR(r.s[2], 0.0, 1e-10 * r.s[0]);
    expect_valid_svd(m, r);
}

TEST(Svd, ReconstructionOver200RandomMatrices) {
    Rng rng(20240101);
    for (int t = 0; t < 200; ++t) {
        const std::size_t rows = 1 + rng.uniform_index(12);
        const std::size_t cols = 1 + rng.uniform_index(12);
        const Matrix m = random_matrix(rows, cols, rng, rng.uniform(0.1, 10.0));
        expect_valid_svd(m, svd(m));
    }
}

TEST(Svd, OrthogonalMatrixHasUnitSingularValues) {
    // Build an orthogonal matrix from the svd of a random square matrix.
    Rng rng(5);
    const Matrix m = random_matrix(6, 6, rng);
    const Matrix q = svd(m).u;
    const SvdResult r = svd(q);
    for (double s : r.s) EXPECT_NEAR(s, 1.0, 1e-10);
}

TEST(Svd, DeterministicForFixedInput) {
    Rng rng(77);
    const Matrix m = random_matrix(9, 4, rng);
    const SvdResult a = svd(m);
    const SvdResult b = svd(m);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.v, b.v);
    EXPECT_EQ(a.s, b.s);
}

TEST(Svd, CanonicalSignConvention) {
    Rng rng(13);
    const Matrix m = random_matrix(8, 5, rng);
    const SvdResult r = svd(m);
    for (std::size_t j = 0; j < r.u.cols(); ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < r.u.rows(); ++i)
            if (std::fabs(r.u(i, j)) > best) {
                best = std::fabs(r.u(i, j));
                arg = i;
            }
        EXPECT_GE(r.u(arg, j), 0.0);
    }
}

TEST(Svd, SweepCapRaisesNamedError) {
    Matrix m(3, 2, {1, 2, 3, 4, 5, 6});
    try {
        detail::svd_with_sweep_cap(m, 0);
        FAIL() << "expected convergence_error";
    } catch (const convergence_error& e) {
        EXPECT_NE(std::string(e.what()).find("3x2"), std::string::npos);
    }
}

TEST(Svd, RejectsNonFinite) {
    Matrix m(2, 2, {1, 2, 3, 4});
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(svd(m), value_error);
}

TEST(PrincipalDirections, PointsOnXAxis) {
    Matrix m(4, 2, {1, 0, 2, 0, -1, 0, 3, 0});
    const Matrix d = principal_directions(m, 1);
    EXPECT_NEAR(std::fabs(d(0, 0)), 1.0, 1e-12);
    EXPECT_NEAR(d(1, 0), 0.0, 1e-12);
}

TEST(PrincipalDirections, IsotropicGaussianGivesOrthonormalPair) {
    Rng rng(99);
    const Matrix m = random_matrix(500, 2, rng);
    const Matrix d = principal_directions(m, 2);
    EXPECT_LE(orthonormality_defect(d), 1e-10);
}

TEST(PrincipalDirections, PlantedEllipseMajorAxisAt45Degrees) {
    // 10k points with a 10:1 axis ratio rotated to 45 degrees; the top
    // direction must match the closed-form 2x2 covariance eigenvector.
    Rng rng(42);
    Matrix m(10000, 2);
    const double c = std::sqrt(0.5);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double major = 10.0 * rng.normal();
        const double minor = 1.0 * rng.normal();
        m(i, 0) = c * major - c * minor;
        m(i, 1) = c * major + c * minor;
    }
    const Matrix d = principal_directions(m, 1);

    // Independent oracle: closed-form eigendecomposition of the 2x2 sample
    // covariance.
    auto [centered, mean] = center_columns(m);
    (void)mean;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < centered.rows(); ++i) {
        sxx += centered(i, 0) * centered(i, 0);
        sxy += centered(i, 0) * centered(i, 1);
        syy += centered(i, 1) * centered(i, 1);
    }
    const auto oracle = top_eigvec_2x2(sxx, sxy, syy);
    const double dot = std::fabs(d(0, 0) * oracle[0] + d(1, 0) * oracle[1]);
    EXPECT_NEAR(dot, 1.0, 1e-9);

    EXPECT_NEAR(std::fabs(d(0, 0)), std::sqrt(0.5), 1e-2);
    EXPECT_NEAR(std::fabs(d(1, 0)), std::sqrt(0.5), 1e-2);
}

TEST(PrincipalDirections, KTooLargeRejected) {
    Matrix m(3, 5);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    m(2, 2) = 1.0;
    EXPECT_THROW(principal_directions(m, 3), dim_error);  // min(rows-1, cols) = 2
    EXPECT_NO_THROW(principal_directions(m, 2));
}
