// Alternating optimization: refresh the joint target, then descend the
// total loss with the target held fixed until assignments stabilize.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "jecl/dataset.hpp"
#include "jecl/matrix.hpp"
#include "jecl/metrics.hpp"
#include "jecl/net.hpp"
#include "jecl/objective.hpp"
#include "jecl/optimizer.hpp"

namespace jecl {

struct TrainConfig {
    std::size_t k = 0;  // 0 = take from the centroid sets
    LossConfig loss{};
    std::size_t batch_size = 256;
    // Batches between target refreshes; 0 resolves to one full epoch.
    std::size_t update_interval = 0;
    double label_change_tolerance = 1e-3;
    std::size_t max_epochs = 100;
    Optimizer::Config optimizer{};
    std::uint64_t seed = 0;

    void validate() const;
};

struct ProgressRecord {
    std::size_t epoch = 0;
    std::size_t refresh_index = 0;
    LossBreakdown loss{};
    // Loss at this refresh evaluated against the previous target; lets
    // callers observe descent within the interval that just ended.
    std::optional<LossBreakdown> loss_prev_target;
    double label_change = 1.0;
    std::size_t empty_clusters = 0;
    bool alignment_drift = false;
    std::optional<ClusterReport> metrics;
};

using ProgressSink = std::function<void(const ProgressRecord&)>;

struct TrainState {
    std::size_t epochs_run = 0;
    std::vector<std::size_t> hard_labels;
    std::vector<LossBreakdown> loss_trace;  // one entry per target refresh
    bool converged = false;
    std::size_t alignment_drift_events = 0;
};

struct ViewModel {
    Mlp encoder;
    DenseMatrix centroids;  // k x embedding dim
};

struct TrainResult {
    ViewModel image;
    ViewModel text;
    DenseMatrix target;  // joint target distribution at the final parameters
    TrainState state;
};

TrainResult train(const PairedDataset& dataset, ViewModel image, ViewModel text,
                  const TrainConfig& cfg, const ProgressSink& sink = {});

// argmax per row, ties toward the lowest index.
std::vector<std::size_t> final_assignment(const DenseMatrix& p);

struct SingleViewResult {
    ViewModel view;
    DenseMatrix target;
    TrainState state;
};

// One-view degeneration (the DEC baseline): the target is the sharpened
// assignment of the single view, no alignment or cross-view terms.
SingleViewResult train_single_view(const DenseMatrix& features, ViewModel view,
                                   const TrainConfig& cfg, const ProgressSink& sink = {},
                                   const std::vector<std::size_t>* true_labels = nullptr);

}  // namespace jecl
