// Stacked denoising autoencoder pretraining for one view's encoder.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jecl/matrix.hpp"
#include "jecl/net.hpp"
#include "jecl/optimizer.hpp"
#include "jecl/rng.hpp"

namespace jecl {

struct SdaeConfig {
    // Input dim first, embedding dim last. Hidden layers use ReLU; the
    // embedding layer and the final reconstruction layer are linear.
    std::vector<std::size_t> layer_dims;
    double corruption_rate = 0.2;
    std::size_t layerwise_epochs = 50;
    std::size_t finetune_epochs = 100;
    std::size_t batch_size = 256;
    Optimizer::Config optimizer{};
    std::uint64_t seed = 0;

    void validate() const;
};

// Masking noise: each entry is independently zeroed with probability rate.
DenseMatrix corrupt(const DenseMatrix& input, double rate, Rng& rng);

struct PretrainResult {
    Mlp encoder;
    double initial_mse = 0.0;  // full autoencoder at random init
    double final_mse = 0.0;    // after fine-tuning
    std::vector<double> finetune_trace;  // epoch-averaged reconstruction MSE
};

// Greedy layerwise training followed by end-to-end fine-tuning; decoders
// are discarded. Never reads labels.
PretrainResult pretrain_view(const DenseMatrix& X, const SdaeConfig& cfg);

DenseMatrix embed(const Mlp& encoder, const DenseMatrix& X);

// Versioned binary encoder checkpoint. `meta` is an arbitrary JSON string
// stored alongside the weights (resolved configuration, seed).
void save_encoder(const std::filesystem::path& path, const Mlp& encoder, const std::string& meta);
Mlp load_encoder(const std::filesystem::path& path, std::string* meta = nullptr);

}  // namespace jecl
