// Minimum-cost assignment and cross-view cluster alignment.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "jecl/matrix.hpp"

namespace jecl {

// Entry (m, n) counts samples with image cluster m and text cluster n.
DenseMatrix confusion_matrix(std::span<const std::size_t> img_labels,
                             std::span<const std::size_t> txt_labels, std::size_t k);

struct Assignment {
    std::vector<std::size_t> perm;  // row i assigned to column perm[i]
    double cost = 0.0;
};

// Minimum-cost perfect assignment on a square matrix. Among equally
// optimal permutations, returns the lexicographically smallest.
Assignment hungarian(const DenseMatrix& cost);

struct ClusterCorrespondence {
    // text cluster n corresponds to image cluster mapping[n]
    std::vector<std::size_t> mapping;
    double cost = 0.0;

    bool is_identity() const;
};

// Hard-argmax labels per view -> confusion matrix -> max-subtracted cost
// -> Hungarian. The returned mapping maximizes the confusion trace when
// applied to the text side (new_text_centroids[mapping[n]] = old[n]).
ClusterCorrespondence align_views(const DenseMatrix& q, const DenseMatrix& r);

// Row-wise argmax with ties broken toward the lowest index.
std::vector<std::size_t> argmax_labels(const DenseMatrix& probs);

DenseMatrix apply_correspondence_to_rows(const DenseMatrix& text_centroids,
                                         const ClusterCorrespondence& corr);

}  // namespace jecl
