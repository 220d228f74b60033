#include <doctest.h>

#include "jecl/matrix.hpp"
#include "jecl/rng.hpp"
#include "oracles.hpp"

using jecl::DenseMatrix;

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, jecl::Rng& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    DenseMatrix m(rows, cols);
    for (double& v : m.flat()) v = dist(rng);
    return m;
}

DenseMatrix matmul_loops(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < a.cols(); ++l) s += a(i, l) * b(l, j);
            c(i, j) = s;
        }
    return c;
}

}  // namespace

TEST_CASE("matmul matches a plain triple loop") {
    jecl::Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng() % 8, k = 1 + rng() % 8, n = 1 + rng() % 8;
        const DenseMatrix a = random_matrix(m, k, rng);
        const DenseMatrix b = random_matrix(k, n, rng);
        const DenseMatrix c = jecl::matmul(a, b);
        const DenseMatrix expected = matmul_loops(a, b);
        for (std::size_t i = 0; i < c.size(); ++i)
            CHECK(c.flat()[i] == doctest::Approx(expected.flat()[i]).epsilon(1e-12));
    }
}

TEST_CASE("transposed products agree with explicit transpose") {
    jecl::Rng rng(11);
    const DenseMatrix a = random_matrix(5, 3, rng);
    const DenseMatrix b = random_matrix(5, 4, rng);
    const DenseMatrix tn = jecl::matmul_tn(a, b);
    const DenseMatrix expected = jecl::matmul(jecl::transpose(a), b);
    for (std::size_t i = 0; i < tn.size(); ++i)
        CHECK(tn.flat()[i] == doctest::Approx(expected.flat()[i]));

    const DenseMatrix c = random_matrix(4, 3, rng);
    const DenseMatrix nt = jecl::matmul_nt(a, c);  // (5x3) * (4x3)^T
    const DenseMatrix expected2 = jecl::matmul(a, jecl::transpose(c));
    for (std::size_t i = 0; i < nt.size(); ++i)
        CHECK(nt.flat()[i] == doctest::Approx(expected2.flat()[i]));
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    DenseMatrix a(2, 3), b(4, 2);
    CHECK_THROWS_AS(jecl::matmul(a, b), std::invalid_argument);
}

TEST_CASE("identity is multiplicative identity") {
    jecl::Rng rng(3);
    const DenseMatrix a = random_matrix(4, 4, rng);
    const DenseMatrix c = jecl::matmul(a, DenseMatrix::identity(4));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(c.flat()[i] == doctest::Approx(a.flat()[i]));
}

TEST_CASE("select_rows gathers rows in order") {
    DenseMatrix a(3, 2);
    a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4; a(2, 0) = 5; a(2, 1) = 6;
    const std::vector<std::size_t> idx{2, 0};
    const DenseMatrix s = jecl::select_rows(a, idx);
    CHECK(s(0, 0) == 5);
    CHECK(s(1, 1) == 2);
    const std::vector<std::size_t> bad{3};
    CHECK_THROWS_AS(jecl::select_rows(a, bad), std::out_of_range);
}

TEST_CASE("column sums and means") {
    DenseMatrix a(2, 2);
    a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
    const auto sums = jecl::column_sums(a);
    CHECK(sums[0] == 4);
    CHECK(sums[1] == 6);
    const auto means = jecl::column_means(a);
    CHECK(means[0] == doctest::Approx(2.0));
}

TEST_CASE("all_finite flags NaN and Inf") {
    DenseMatrix a(1, 2, 1.0);
    CHECK(a.all_finite());
    a(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(a.all_finite());
}
