#include "jecl/hungarian.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace jecl {

namespace {

// Potential-method solver (O(n^3)); returns the minimal total cost and
// one optimal column-per-row assignment.
double solve_core(const DenseMatrix& a, std::vector<std::size_t>* perm_out = nullptr) {
    const std::size_t n = a.rows();
    if (n == 0) return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1, false);

    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        minv.assign(n + 1, inf);
        used.assign(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> perm(n, 0);
    double total = 0.0;
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] != 0) perm[p[j] - 1] = j - 1;
    for (std::size_t i = 0; i < n; ++i) total += a(i, perm[i]);
    if (perm_out) *perm_out = std::move(perm);
    return total;
}

}  // namespace

DenseMatrix confusion_matrix(std::span<const std::size_t> img_labels,
                             std::span<const std::size_t> txt_labels, std::size_t k) {
    if (img_labels.size() != txt_labels.size())
        throw std::invalid_argument("confusion_matrix: label sequences differ in length");
    DenseMatrix counts(k, k);
    for (std::size_t i = 0; i < img_labels.size(); ++i) {
        if (img_labels[i] >= k || txt_labels[i] >= k)
            throw std::invalid_argument("confusion_matrix: label out of range at row " +
                                        std::to_string(i));
        counts(img_labels[i], txt_labels[i]) += 1.0;
    }
    return counts;
}

Assignment hungarian(const DenseMatrix& cost) {
    if (cost.rows() != cost.cols()) throw std::invalid_argument("hungarian: matrix must be square");
    if (!cost.all_finite()) throw std::invalid_argument("hungarian: non-finite cost entry");
    const std::size_t k = cost.rows();
    if (k == 0) return {};

    const double optimum = solve_core(cost);
    const double tol = 1e-9 * std::max(1.0, std::abs(optimum));

    // Fix rows in order, choosing the smallest column that still admits an
    // optimal completion; yields the lexicographically smallest optimum.
    std::vector<std::size_t> perm(k, 0);
    std::vector<char> used(k, false);
    std::vector<std::size_t> free_cols;
    double fixed_cost = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        bool placed = false;
        for (std::size_t j = 0; j < k && !placed; ++j) {
            if (used[j]) continue;
            free_cols.clear();
            for (std::size_t c = 0; c < k; ++c)
                if (!used[c] && c != j) free_cols.push_back(c);
            DenseMatrix sub(k - i - 1, k - i - 1);
            for (std::size_t r = 0; r < sub.rows(); ++r)
                for (std::size_t c = 0; c < sub.cols(); ++c) sub(r, c) = cost(i + 1 + r, free_cols[c]);
            const double completion = solve_core(sub);
            if (fixed_cost + cost(i, j) + completion <= optimum + tol) {
                perm[i] = j;
                used[j] = true;
                fixed_cost += cost(i, j);
                placed = true;
            }
        }
        if (!placed) throw std::logic_error("hungarian: optimal completion not found");
    }

    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += cost(i, perm[i]);
    return {std::move(perm), total};
}

bool ClusterCorrespondence::is_identity() const {
    for (std::size_t n = 0; n < mapping.size(); ++n)
        if (mapping[n] != n) return false;
    return true;
}

std::vector<std::size_t> argmax_labels(const DenseMatrix& probs) {
    std::vector<std::size_t> labels(probs.rows(), 0);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        auto row = probs.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < row.size(); ++j)
            if (row[j] > row[best]) best = j;
        labels[i] = best;
    }
    return labels;
}

ClusterCorrespondence align_views(const DenseMatrix& q, const DenseMatrix& r) {
    if (q.cols() != r.cols()) throw std::invalid_argument("align_views: cluster counts differ");
    if (q.rows() != r.rows()) throw std::invalid_argument("align_views: sample counts differ");
    const std::size_t k = q.cols();
    const auto img = argmax_labels(q);
    const auto txt = argmax_labels(r);
    const DenseMatrix counts = confusion_matrix(img, txt, k);
    double mx = 0.0;
    for (double v : counts.flat()) mx = std::max(mx, v);
    DenseMatrix cost(k, k);
    for (std::size_t m = 0; m < k; ++m)
        for (std::size_t n = 0; n < k; ++n) cost(m, n) = mx - counts(m, n);
    const Assignment assignment = hungarian(cost);

    ClusterCorrespondence corr;
    corr.mapping.assign(k, 0);
    for (std::size_t m = 0; m < k; ++m) corr.mapping[assignment.perm[m]] = m;
    corr.cost = assignment.cost;
    return corr;
}

DenseMatrix apply_correspondence_to_rows(const DenseMatrix& text_centroids,
                                         const ClusterCorrespondence& corr) {
    if (corr.mapping.size() != text_centroids.rows())
        throw std::invalid_argument("apply_correspondence_to_rows: size mismatch");
    DenseMatrix out(text_centroids.rows(), text_centroids.cols());
    for (std::size_t n = 0; n < text_centroids.rows(); ++n) {
        auto src = text_centroids.row(n);
        auto dst = out.row(corr.mapping[n]);
        for (std::size_t c = 0; c < text_centroids.cols(); ++c) dst[c] = src[c];
    }
    return out;
}

}  // namespace jecl
