// Clustering evaluation: accuracy under optimal matching, NMI, ARI.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jecl {

// Best-matching accuracy: Hungarian on the negated contingency table.
double accuracy(std::span<const std::size_t> true_labels, std::span<const std::size_t> pred_labels);

// Normalized mutual information, geometric-mean normalization, natural
// logs; 0/0 convention yields 0.
double nmi(std::span<const std::size_t> true_labels, std::span<const std::size_t> pred_labels);

// Adjusted Rand index; degenerate partitions (zero denominator) yield 1.
double ari(std::span<const std::size_t> true_labels, std::span<const std::size_t> pred_labels);

std::size_t empty_cluster_count(std::span<const std::size_t> hard_labels, std::size_t k);

struct ClusterReport {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    std::size_t empty_clusters = 0;
    std::size_t n_samples = 0;
    bool has_metrics = false;  // false when ground truth was unavailable
    std::vector<std::size_t> hard_labels;
};

ClusterReport make_report(std::span<const std::size_t> pred_labels, std::size_t k,
                          std::span<const std::size_t> true_labels = {});

}  // namespace jecl
