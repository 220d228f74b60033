// Full pipelines (pretrain -> k-means -> align -> train) plus parameter
// sweeps with machine-readable reports.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jecl/dataset.hpp"
#include "jecl/metrics.hpp"
#include "jecl/sdae.hpp"
#include "jecl/trainer.hpp"

namespace jecl {

enum class ViewSelector { Image, Text };

struct PipelineConfig {
    // layer_dims semantics per view: empty -> input-500-500-2000-10;
    // leading 0 -> replaced by the data's feature dim.
    SdaeConfig sdae_image;
    SdaeConfig sdae_text;
    TrainConfig train;
    std::size_t kmeans_restarts = 20;
    std::size_t kmeans_max_iter = 300;
    // Master seed; per-stage sub-seeds are derived from it.
    std::uint64_t seed = 0;
};

SdaeConfig resolve_sdae(SdaeConfig cfg, std::size_t input_dim);

struct PipelineResult {
    ViewModel image;
    ViewModel text;
    DenseMatrix target;
    TrainState state;
    ClusterReport report;
    DenseMatrix embeddings_image;
    DenseMatrix embeddings_text;
};

// The two-view pipeline. Pretrained encoders, when given, skip the SDAE
// stage for that view.
PipelineResult run_jecl(const PairedDataset& dataset, const PipelineConfig& cfg,
                        const ProgressSink& sink = {}, const Mlp* pretrained_image = nullptr,
                        const Mlp* pretrained_text = nullptr);

// DEC baseline on one view (lambda pinned to that view, gamma = 0, no
// missing-view handling).
PipelineResult run_single_view(const PairedDataset& dataset, ViewSelector view,
                               const PipelineConfig& cfg, const ProgressSink& sink = {},
                               const Mlp* pretrained = nullptr);

enum class SweepAxis { Lambda, Beta, Gamma, MissingRate, SizeRatio };

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

struct DataFiles {
    std::filesystem::path images;
    std::filesystem::path texts;
    std::optional<std::filesystem::path> labels;
    std::optional<std::filesystem::path> mask;
};

struct ExperimentSpec {
    std::optional<SyntheticRecipe> synthetic;
    std::optional<DataFiles> files;
    PipelineConfig pipeline;
    SweepAxis axis = SweepAxis::Lambda;
    std::vector<double> values;
    std::size_t trials = 5;
    bool timings = false;

    void validate() const;
};

struct TrialResult {
    bool ok = false;
    std::string error;
    bool has_metrics = false;
    double acc = 0.0, nmi = 0.0, ari = 0.0;
    std::size_t empty_clusters = 0;
    std::size_t epochs = 0;
    bool converged = false;
    double wall_seconds = 0.0;
};

struct SweepPoint {
    double value = 0.0;
    std::vector<TrialResult> trials;
    // Means over successful trials.
    double mean_acc = 0.0, mean_nmi = 0.0, mean_ari = 0.0;
    double mean_empty = 0.0, mean_epochs = 0.0, mean_wall = 0.0;
    std::size_t ok_count = 0;
};

struct ExperimentReport {
    std::string config_json;  // resolved spec, serialized
    std::vector<SweepPoint> points;
};

// Trials reuse the same derived per-trial seeds at every sweep value, so
// sweep points are comparable pair-wise; a trial failure is recorded and
// the sweep continues.
ExperimentReport run_experiment(const ExperimentSpec& spec);

void write_experiment_report(const ExperimentReport& report, const std::filesystem::path& dir);

std::string experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec parse_experiment_spec(const std::filesystem::path& json_path);

std::string pipeline_config_to_json(const PipelineConfig& cfg);

}  // namespace jecl
