#pragma once

#include <cstdint>
#include <vector>

#include "jecl/matrix.hpp"

namespace jecl {

struct KMeansConfig {
    std::size_t k = 1;
    std::size_t restarts = 20;
    std::size_t max_iter = 300;
    std::uint64_t seed = 0;
};

struct KMeansResult {
    DenseMatrix centroids;            // k x dim
    std::vector<std::size_t> labels;  // n
    double inertia = 0.0;
};

// Lloyd iterations with k-means++ seeding, best of `restarts` by inertia.
// Assignment ties break toward the lowest cluster index; an empty cluster
// is reseeded to the point farthest from its assigned centroid.
KMeansResult kmeans(const DenseMatrix& points, const KMeansConfig& cfg);

}  // namespace jecl
