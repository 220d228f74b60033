// Paired two-view datasets: file ingestion and synthetic generation.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jecl/matrix.hpp"

namespace jecl {

struct PairedDataset {
    DenseMatrix image_features;              // N x D1
    DenseMatrix text_features;               // N x D2, all-zero rows where text is absent
    std::vector<std::uint8_t> text_present;  // length N, 1 = text present
    std::optional<std::vector<std::size_t>> labels;

    std::size_t size() const { return image_features.rows(); }
    std::size_t present_count() const;
    void validate() const;
};

// Text format: optional '#' comment lines, a "N D" header line, then N
// whitespace-separated rows. Binary format: magic bytes, a JSON metadata
// chunk, dimensions, then little-endian 64-bit floats. load sniffs the
// magic bytes.
DenseMatrix load_feature_matrix(const std::filesystem::path& path);
void save_feature_matrix_text(const std::filesystem::path& path, const DenseMatrix& m,
                              const std::vector<std::string>& header_comments = {});
void save_feature_matrix_binary(const std::filesystem::path& path, const DenseMatrix& m,
                                const std::string& meta = "{}");

std::vector<std::size_t> load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const std::vector<std::size_t>& labels,
                 const std::vector<std::string>& header_comments = {});

std::vector<std::uint8_t> load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const std::vector<std::uint8_t>& mask,
               const std::vector<std::string>& header_comments = {});

PairedDataset load_dataset(const std::filesystem::path& image_path,
                           const std::filesystem::path& text_path,
                           const std::optional<std::filesystem::path>& label_path = {},
                           const std::optional<std::filesystem::path>& mask_path = {});

struct SyntheticRecipe {
    std::size_t k = 2;
    std::size_t per_cluster_n = 100;
    std::vector<std::size_t> cluster_sizes;  // optional override, k entries
    std::size_t image_dim = 10;
    std::size_t text_dim = 10;
    double separation = 10.0;  // scale of cluster centers
    double view_noise = 1.0;   // within-cluster standard deviation
    double missing_rate = 0.0;
    // Pairs of classes whose image-view centers coincide (classes 2t and
    // 2t+1), modeling visually identical but textually distinct classes.
    std::size_t merged_image_center_pairs = 0;
    std::uint64_t seed = 0;

    void validate() const;
    std::vector<std::size_t> resolved_sizes() const;
};

PairedDataset generate_synthetic(const SyntheticRecipe& recipe);
PairedDataset generate_synthetic(std::size_t k, std::size_t per_cluster_n, std::size_t image_dim,
                                 std::size_t text_dim, double separation, double view_noise,
                                 double missing_rate, std::uint64_t seed);

// Per-class subsampling (global when labels are absent); used by the
// data-size sweeps.
PairedDataset subsample(const PairedDataset& dataset, double ratio, std::uint64_t seed);

}  // namespace jecl
