// Dense row-major matrix type and the handful of operations the engine needs.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jecl {

class DenseMatrix {
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> flat() { return {data_.data(), data_.size()}; }
    std::span<const double> flat() const { return {data_.data(), data_.size()}; }

    bool all_finite() const;
    void fill(double value);

    friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// c = a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// c = a^T * b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
// c = a * b^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

// a += scale * b, shapes must match
void add_scaled(DenseMatrix& a, const DenseMatrix& b, double scale = 1.0);

DenseMatrix select_rows(const DenseMatrix& a, std::span<const std::size_t> indices);

double squared_distance(std::span<const double> a, std::span<const double> b);

std::vector<double> column_sums(const DenseMatrix& a);
std::vector<double> column_means(const DenseMatrix& a);

}  // namespace jecl
