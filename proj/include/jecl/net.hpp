// Fully-connected layer stack with hand-derived gradients.
#pragma once

#include <cstdint>
#include <vector>

#include "jecl/matrix.hpp"
#include "jecl/rng.hpp"

namespace jecl {

enum class Activation : std::uint8_t { ReLU, Identity };

struct LinearLayer {
    DenseMatrix weight;        // out x in
    std::vector<double> bias;  // out
    Activation activation = Activation::Identity;

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
    void validate() const;
};

// Symmetric uniform init scaled by 1/sqrt(fan_in), bias zero.
LinearLayer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng);

struct StackGradients {
    std::vector<DenseMatrix> weight;         // per layer, out x in
    std::vector<std::vector<double>> bias;   // per layer
    DenseMatrix input;                       // gradient w.r.t. the forward input
};

// A stack of linear layers. forward() caches intermediates so that
// backward() can produce parameter and input gradients for any upstream
// dL/d(output). apply() is the cache-free const evaluation.
class Mlp {
  public:
    Mlp() = default;
    explicit Mlp(std::vector<LinearLayer> layers);

    const DenseMatrix& forward(const DenseMatrix& input);
    StackGradients backward(const DenseMatrix& upstream) const;
    DenseMatrix apply(const DenseMatrix& input) const;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t layer_count() const { return layers_.size(); }

    std::vector<LinearLayer>& layers() { return layers_; }
    const std::vector<LinearLayer>& layers() const { return layers_; }

    void clear_cache();

  private:
    std::vector<LinearLayer> layers_;
    std::vector<DenseMatrix> inputs_;    // input to each layer during last forward
    std::vector<DenseMatrix> preacts_;   // pre-activation of each layer
    DenseMatrix output_;
    bool has_forward_ = false;
};

}  // namespace jecl
