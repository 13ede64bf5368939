#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "repalign/matrix.hpp"
#include "repalign/ramx.hpp"
#include "repalign/rng.hpp"
#include "test_util.hpp"

using namespace repalign;
using test_util::max_abs_diff;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Matrix, RejectsEmptyShapes) {
    EXPECT_THROW(Matrix(0, 3), dim_error);
    EXPECT_THROW(Matrix(3, 0), dim_error);
    EXPECT_THROW(Matrix(2, 2, {1.0, 2.0, 3.0}), dim_error);
}

TEST(Matrix, MatmulAgainstHandComputed) {
    Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
    Matrix b(3, 2, {7, 8, 9, 10, 11, 12});
    Matrix c = matmul(a, b);
    EXPECT_DOUBLE_EQ(c(0, 0), 58.0);
    EXPECT_DOUBLE_EQ(c(0, 1), 64.0);
    EXPECT_DOUBLE_EQ(c(1, 0), 139.0);
    EXPECT_DOUBLE_EQ(c(1, 1), 154.0);
    EXPECT_THROW(matmul(a, a), dim_error);
}

TEST(Matrix, TransposedProductsMatchPlainMatmul) {
    Rng rng(7);
    Matrix a(5, 3);
    Matrix b(5, 4);
    Matrix c(4, 3);
    for (double& v : a.data()) v = rng.normal();
    for (double& v : b.data()) v = rng.normal();
    for (double& v : c.data()) v = rng.normal();
    EXPECT_LT(max_abs_diff(matmul_at_b(a, b), matmul(transpose(a), b)), 1e-14);
    EXPECT_LT(max_abs_diff(matmul_a_bt(a, c), matmul(a, transpose(c))), 1e-14);
}

TEST(CenterColumns, TwoRowExample) {
    Matrix m(2, 1, {1.0, 3.0});
    auto [c, mean] = center_columns(m);
    EXPECT_DOUBLE_EQ(c(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(c(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(mean[0], 2.0);
}

TEST(CenterColumns, AlreadyCenteredUnchanged) {
    Matrix m(2, 2, {1.0, -2.0, -1.0, 2.0});
    auto [c, mean] = center_columns(m);
    EXPECT_EQ(c, m);
    EXPECT_DOUBLE_EQ(mean[0], 0.0);
    EXPECT_DOUBLE_EQ(mean[1], 0.0);
}

TEST(CenterColumns, SingleRow) {
    Matrix m(1, 2, {5.0, 7.0});
    auto [c, mean] = center_columns(m);
    EXPECT_DOUBLE_EQ(c(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(c(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(mean[0], 5.0);
    EXPECT_DOUBLE_EQ(mean[1], 7.0);
}

TEST(CenterColumns, ColumnsSumToZero) {
    Rng rng(11);
    Matrix m(37, 5);
    for (double& v : m.data()) v = rng.uniform(-10.0, 10.0);
    auto [c, mean] = center_columns(m);
    (void)mean;
    for (std::size_t j = 0; j < c.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.rows(); ++i) s += c(i, j);
        EXPECT_LE(std::fabs(s), 1e-9 * static_cast<double>(c.rows()));
    }
}

TEST(Ramx, RoundTripBitExact) {
    Rng rng(3);
    Matrix m(7, 5);
    for (double& v : m.data()) v = rng.normal() * 1e3;
    m(0, 0) = 0.0;
    m(1, 1) = -0.0;
    m(2, 2) = 1e-308;
    const std::string path = temp_path("repalign_roundtrip.ramx");
    save_matrix(m, path);
    const Matrix back = load_matrix(path);
    ASSERT_EQ(back.rows(), m.rows());
    ASSERT_EQ(back.cols(), m.cols());
    for (std::size_t i = 0; i < m.data().size(); ++i) {
        // bit-exact, including signed zero
        EXPECT_EQ(std::bit_cast<std::uint64_t>(back.data()[i]),
                  std::bit_cast<std::uint64_t>(m.data()[i]));
    }
    std::filesystem::remove(path);
}

TEST(Ramx, InMemoryRoundTrip) {
    Matrix m(2, 2, {1.5, -2.5, 3.25, 0.125});
    EXPECT_EQ(matrix_from_ramx(matrix_to_ramx(m)), m);
}

TEST(Ramx, BadMagicRejected) {
    std::string bytes = matrix_to_ramx(Matrix(1, 1, {1.0}));
    bytes[0] = 'Q';
    EXPECT_THROW(matrix_from_ramx(bytes), bad_magic_error);
}

TEST(Ramx, VersionMismatchRejected) {
    std::string bytes = matrix_to_ramx(Matrix(1, 1, {1.0}));
    bytes[4] = 2;
    EXPECT_THROW(matrix_from_ramx(bytes), version_error);
}

TEST(Ramx, TruncatedPayloadRejected) {
    // Header claims 2x2 but only 3 values present.
    std::string bytes = matrix_to_ramx(Matrix(2, 2, {1, 2, 3, 4}));
    bytes.resize(bytes.size() - 8);
    EXPECT_THROW(matrix_from_ramx(bytes), truncated_error);
}

TEST(Ramx, NonFiniteRejected) {
    Matrix m(1, 2, {1.0, 2.0});
    std::string bytes = matrix_to_ramx(m);
    std::string inf_bytes = bytes;
    const double inf = std::numeric_limits<double>::infinity();
    const std::uint64_t raw = std::bit_cast<std::uint64_t>(inf);
    for (int i = 0; i < 8; ++i)
        inf_bytes[24 + i] = static_cast<char>((raw >> (8 * i)) & 0xFF);
    EXPECT_THROW(matrix_from_ramx(inf_bytes), non_finite_error);
}

TEST(Ramx, LoadErrorsShareBaseClass) {
    std::string bytes = matrix_to_ramx(Matrix(1, 1, {1.0}));
    bytes[0] = 'Q';
    EXPECT_THROW(matrix_from_ramx(bytes), load_error);
}

TEST(Csv, LoadsPlainAndHeadered) {
    const std::string path = temp_path("repalign_test.csv");
    {
        std::ofstream f(path);
        f << "x,y\n1.5,2\n-3,4.25\n";
    }
    Matrix m = load_matrix_csv(path);
    ASSERT_EQ(m.rows(), 2u);
    ASSERT_EQ(m.cols(), 2u);
    EXPECT_DOUBLE_EQ(m(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(m(1, 1), 4.25);
    {
        std::ofstream f(path);
        f << "1,2\n3,4\n";
    }
    Matrix plain = load_matrix_csv(path);
    EXPECT_DOUBLE_EQ(plain(1, 0), 3.0);
    std::filesystem::remove(path);
}

TEST(Csv, RejectsNonNumericBody) {
    const std::string path = temp_path("repalign_bad.csv");
    {
        std::ofstream f(path);
        f << "1,2\nfoo,4\n";
    }
    EXPECT_THROW(load_matrix_csv(path), load_error);
    std::filesystem::remove(path);
}
