#include "jecl/kmeans.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "jecl/rng.hpp"

namespace jecl {

namespace {

std::vector<std::size_t> seed_plusplus(const DenseMatrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    std::vector<std::size_t> chosen;
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    chosen.push_back(first(rng));
    std::vector<double> dist_sq(n);
    for (std::size_t i = 0; i < n; ++i)
        dist_sq[i] = squared_distance(points.row(i), points.row(chosen[0]));
    while (chosen.size() < k) {
        double total = 0.0;
        for (double d : dist_sq) total += d;
        std::size_t next = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            double acc = 0.0;
            next = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist_sq[i];
                if (acc >= target) {
                    next = i;
                    break;
                }
            }
        } else {
            // All points coincide with a chosen centroid; any point works.
            std::uniform_int_distribution<std::size_t> any(0, n - 1);
            next = any(rng);
        }
        chosen.push_back(next);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = squared_distance(points.row(i), points.row(next));
            if (d < dist_sq[i]) dist_sq[i] = d;
        }
    }
    return chosen;
}

struct LloydOutcome {
    DenseMatrix centroids;
    std::vector<std::size_t> labels;
    double inertia = 0.0;
};

void assign_labels(const DenseMatrix& points, const DenseMatrix& centroids,
                   std::vector<std::size_t>& labels, std::vector<double>& dists) {
    const std::size_t n = points.rows(), k = centroids.rows();
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double d = squared_distance(points.row(i), centroids.row(j));
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        labels[i] = best_j;
        dists[i] = best;
    }
}

LloydOutcome lloyd(const DenseMatrix& points, DenseMatrix centroids, std::size_t max_iter) {
    const std::size_t n = points.rows(), k = centroids.rows(), dim = points.cols();
    std::vector<std::size_t> labels(n, 0), prev_labels;
    std::vector<double> dists(n, 0.0);
    std::vector<std::size_t> counts(k, 0);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        assign_labels(points, centroids, labels, dists);

        // Reseed empty clusters to the point farthest from its centroid.
        counts.assign(k, 0);
        for (std::size_t label : labels) ++counts[label];
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] != 0) continue;
            double worst = -1.0;
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[labels[i]] <= 1) continue;  // do not empty another cluster
                if (dists[i] > worst) {
                    worst = dists[i];
                    worst_i = i;
                }
            }
            if (worst < 0.0) continue;  // n < k handled by caller precondition
            --counts[labels[worst_i]];
            for (std::size_t c = 0; c < dim; ++c) centroids(j, c) = points(worst_i, c);
            labels[worst_i] = j;
            dists[worst_i] = 0.0;
            ++counts[j];
        }

        if (labels == prev_labels) break;
        prev_labels = labels;

        centroids.fill(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = centroids.row(labels[i]);
            auto p = points.row(i);
            for (std::size_t d = 0; d < dim; ++d) c[d] += p[d];
        }
        for (std::size_t j = 0; j < k; ++j) {
            auto c = centroids.row(j);
            for (std::size_t d = 0; d < dim; ++d) c[d] /= static_cast<double>(counts[j]);
        }
    }

    assign_labels(points, centroids, labels, dists);
    double inertia = 0.0;
    for (double d : dists) inertia += d;
    return {std::move(centroids), std::move(labels), inertia};
}

}  // namespace

KMeansResult kmeans(const DenseMatrix& points, const KMeansConfig& cfg) {
    const std::size_t n = points.rows();
    if (cfg.k == 0) throw std::invalid_argument("kmeans: k must be >= 1");
    if (cfg.k > n)
        throw std::invalid_argument("kmeans: k=" + std::to_string(cfg.k) + " exceeds n=" +
                                    std::to_string(n));
    if (cfg.restarts == 0) throw std::invalid_argument("kmeans: restarts must be >= 1");

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
        Rng rng(derive_seed(cfg.seed, restart));
        const auto seeds = seed_plusplus(points, cfg.k, rng);
        DenseMatrix init(cfg.k, points.cols());
        for (std::size_t j = 0; j < cfg.k; ++j) {
            auto src = points.row(seeds[j]);
            auto dst = init.row(j);
            for (std::size_t d = 0; d < points.cols(); ++d) dst[d] = src[d];
        }
        LloydOutcome outcome = lloyd(points, std::move(init), cfg.max_iter);
        if (outcome.inertia < best.inertia) {
            best.centroids = std::move(outcome.centroids);
            best.labels = std::move(outcome.labels);
            best.inertia = outcome.inertia;
        }
    }
    return best;
}

}  // namespace jecl
