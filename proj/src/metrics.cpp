#include "jecl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jecl/hungarian.hpp"
#include "jecl/matrix.hpp"

namespace jecl {

namespace {

void check_inputs(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("metrics: empty label sequence");
    if (a.size() != b.size()) throw std::invalid_argument("metrics: label sequences differ in length");
}

std::size_t label_space(std::span<const std::size_t> labels) {
    std::size_t mx = 0;
    for (std::size_t v : labels) mx = std::max(mx, v);
    return mx + 1;
}

DenseMatrix contingency(std::span<const std::size_t> a, std::span<const std::size_t> b,
                        std::size_t ka, std::size_t kb) {
    DenseMatrix table(ka, kb);
    for (std::size_t i = 0; i < a.size(); ++i) table(a[i], b[i]) += 1.0;
    return table;
}

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double accuracy(std::span<const std::size_t> true_labels,
                std::span<const std::size_t> pred_labels) {
    check_inputs(true_labels, pred_labels);
    const std::size_t side = std::max(label_space(true_labels), label_space(pred_labels));
    DenseMatrix table = contingency(pred_labels, true_labels, side, side);
    double mx = 0.0;
    for (double v : table.flat()) mx = std::max(mx, v);
    DenseMatrix cost(side, side);
    for (std::size_t i = 0; i < side; ++i)
        for (std::size_t j = 0; j < side; ++j) cost(i, j) = mx - table(i, j);
    const Assignment assignment = hungarian(cost);
    double matched = 0.0;
    for (std::size_t i = 0; i < side; ++i) matched += table(i, assignment.perm[i]);
    return matched / static_cast<double>(true_labels.size());
}

double nmi(std::span<const std::size_t> true_labels, std::span<const std::size_t> pred_labels) {
    check_inputs(true_labels, pred_labels);
    const std::size_t ka = label_space(true_labels), kb = label_space(pred_labels);
    const double n = static_cast<double>(true_labels.size());
    DenseMatrix table = contingency(true_labels, pred_labels, ka, kb);
    const auto a = column_sums(transpose(table));  // row sums
    const auto b = column_sums(table);

    double h_true = 0.0, h_pred = 0.0, mutual = 0.0;
    for (double v : a)
        if (v > 0.0) h_true -= (v / n) * std::log(v / n);
    for (double v : b)
        if (v > 0.0) h_pred -= (v / n) * std::log(v / n);
    for (std::size_t i = 0; i < ka; ++i)
        for (std::size_t j = 0; j < kb; ++j) {
            const double nij = table(i, j);
            if (nij > 0.0) mutual += (nij / n) * std::log(n * nij / (a[i] * b[j]));
        }
    const double denom = std::sqrt(h_true * h_pred);
    if (denom == 0.0) return 0.0;
    return std::max(0.0, mutual / denom);
}

double ari(std::span<const std::size_t> true_labels, std::span<const std::size_t> pred_labels) {
    check_inputs(true_labels, pred_labels);
    const std::size_t ka = label_space(true_labels), kb = label_space(pred_labels);
    const double n = static_cast<double>(true_labels.size());
    DenseMatrix table = contingency(true_labels, pred_labels, ka, kb);
    const auto a = column_sums(transpose(table));
    const auto b = column_sums(table);

    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (double v : table.flat()) sum_ij += choose2(v);
    for (double v : a) sum_a += choose2(v);
    for (double v : b) sum_b += choose2(v);
    const double expected = sum_a * sum_b / choose2(n);
    const double maximum = 0.5 * (sum_a + sum_b);
    if (maximum == expected) return 1.0;  // both partitions degenerate
    return (sum_ij - expected) / (maximum - expected);
}

std::size_t empty_cluster_count(std::span<const std::size_t> hard_labels, std::size_t k) {
    std::vector<char> seen(k, 0);
    for (std::size_t v : hard_labels) {
        if (v >= k) throw std::invalid_argument("empty_cluster_count: label out of range");
        seen[v] = 1;
    }
    std::size_t empties = 0;
    for (char s : seen)
        if (!s) ++empties;
    return empties;
}

ClusterReport make_report(std::span<const std::size_t> pred_labels, std::size_t k,
                          std::span<const std::size_t> true_labels) {
    ClusterReport report;
    report.n_samples = pred_labels.size();
    report.hard_labels.assign(pred_labels.begin(), pred_labels.end());
    report.empty_clusters = empty_cluster_count(pred_labels, k);
    if (!true_labels.empty()) {
        report.acc = accuracy(true_labels, pred_labels);
        report.nmi = nmi(true_labels, pred_labels);
        report.ari = ari(true_labels, pred_labels);
        report.has_metrics = true;
    }
    return report;
}

}  // namespace jecl
