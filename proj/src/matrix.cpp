#include "jecl/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#ifdef JECL_USE_CBLAS
#include <cblas.h>
#endif

namespace jecl {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool DenseMatrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void DenseMatrix::fill(double value) {
    for (double& v : data_) v = value;
}

namespace {

void check_inner(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": inner dimensions disagree (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
}

#ifndef JECL_USE_CBLAS
void gemm_naive(bool trans_a, bool trans_b, const DenseMatrix& a, const DenseMatrix& b,
                DenseMatrix& c) {
    const std::size_t m = c.rows(), n = c.cols();
    const std::size_t kk = trans_a ? a.rows() : a.cols();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < kk; ++l) {
            const double av = trans_a ? a(l, i) : a(i, l);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c(i, j) += av * (trans_b ? b(j, l) : b(l, j));
        }
    }
}
#endif

DenseMatrix gemm(bool trans_a, bool trans_b, const DenseMatrix& a, const DenseMatrix& b) {
    const std::size_t m = trans_a ? a.cols() : a.rows();
    const std::size_t ka = trans_a ? a.rows() : a.cols();
    const std::size_t kb = trans_b ? b.cols() : b.rows();
    const std::size_t n = trans_b ? b.rows() : b.cols();
    check_inner(ka, kb, "matmul");
    DenseMatrix c(m, n);
    if (m == 0 || n == 0 || ka == 0) return c;
#ifdef JECL_USE_CBLAS
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(ka), 1.0, a.data(), static_cast<int>(a.cols()), b.data(),
                static_cast<int>(b.cols()), 0.0, c.data(), static_cast<int>(c.cols()));
#else
    gemm_naive(trans_a, trans_b, a, b, c);
#endif
    return c;
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) { return gemm(false, false, a, b); }
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) { return gemm(true, false, a, b); }
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) { return gemm(false, true, a, b); }

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

void add_scaled(DenseMatrix& a, const DenseMatrix& b, double scale) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("add_scaled: shape mismatch");
    double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0, n = a.size(); i < n; ++i) pa[i] += scale * pb[i];
}

DenseMatrix select_rows(const DenseMatrix& a, std::span<const std::size_t> indices) {
    DenseMatrix out(indices.size(), a.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= a.rows()) throw std::out_of_range("select_rows: index out of range");
        auto src = a.row(indices[i]);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = src[j];
    }
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("squared_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::vector<double> column_sums(const DenseMatrix& a) {
    std::vector<double> s(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s[j] += r[j];
    }
    return s;
}

std::vector<double> column_means(const DenseMatrix& a) {
    auto s = column_sums(a);
    if (a.rows() == 0) return s;
    for (double& v : s) v /= static_cast<double>(a.rows());
    return s;
}

}  // namespace jecl
