#include "jecl/net.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace jecl {

void LinearLayer::validate() const {
    if (weight.rows() == 0 || weight.cols() == 0)
        throw std::invalid_argument("LinearLayer: empty weight");
    if (bias.size() != weight.rows())
        throw std::invalid_argument("LinearLayer: bias length " + std::to_string(bias.size()) +
                                    " does not match out dim " + std::to_string(weight.rows()));
}

LinearLayer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
    if (in == 0 || out == 0) throw std::invalid_argument("make_layer: zero dimension");
    LinearLayer layer;
    layer.weight = DenseMatrix(out, in);
    layer.bias.assign(out, 0.0);
    layer.activation = act;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : layer.weight.flat()) w = dist(rng);
    return layer;
}

Mlp::Mlp(std::vector<LinearLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        if (layers_[l].out_dim() != layers_[l + 1].in_dim())
            throw std::invalid_argument("Mlp: layer " + std::to_string(l) + " out dim " +
                                        std::to_string(layers_[l].out_dim()) +
                                        " does not feed layer " + std::to_string(l + 1));
    }
    for (const auto& layer : layers_) layer.validate();
}

std::size_t Mlp::input_dim() const {
    if (layers_.empty()) throw std::logic_error("Mlp: no layers");
    return layers_.front().in_dim();
}

std::size_t Mlp::output_dim() const {
    if (layers_.empty()) throw std::logic_error("Mlp: no layers");
    return layers_.back().out_dim();
}

namespace {

DenseMatrix layer_forward(const LinearLayer& layer, const DenseMatrix& input, DenseMatrix* preact) {
    if (input.cols() != layer.in_dim())
        throw std::invalid_argument("forward: input has " + std::to_string(input.cols()) +
                                    " cols, layer expects " + std::to_string(layer.in_dim()));
    DenseMatrix z = matmul_nt(input, layer.weight);  // N x out
    for (std::size_t i = 0; i < z.rows(); ++i) {
        auto r = z.row(i);
        for (std::size_t j = 0; j < z.cols(); ++j) r[j] += layer.bias[j];
    }
    if (preact) *preact = z;
    if (layer.activation == Activation::ReLU)
        for (double& v : z.flat()) v = v > 0.0 ? v : 0.0;
    return z;
}

}  // namespace

const DenseMatrix& Mlp::forward(const DenseMatrix& input) {
    if (layers_.empty()) throw std::logic_error("Mlp::forward: no layers");
    inputs_.assign(layers_.size(), {});
    preacts_.assign(layers_.size(), {});
    DenseMatrix h = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        inputs_[l] = h;
        h = layer_forward(layers_[l], h, &preacts_[l]);
    }
    output_ = std::move(h);
    has_forward_ = true;
    return output_;
}

DenseMatrix Mlp::apply(const DenseMatrix& input) const {
    if (layers_.empty()) throw std::logic_error("Mlp::apply: no layers");
    DenseMatrix h = input;
    for (const auto& layer : layers_) h = layer_forward(layer, h, nullptr);
    return h;
}

StackGradients Mlp::backward(const DenseMatrix& upstream) const {
    if (!has_forward_) throw std::logic_error("Mlp::backward called before forward");
    if (upstream.rows() != output_.rows() || upstream.cols() != output_.cols())
        throw std::invalid_argument("Mlp::backward: upstream shape does not match last output");

    StackGradients grads;
    grads.weight.resize(layers_.size());
    grads.bias.resize(layers_.size());

    DenseMatrix delta = upstream;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        if (layers_[l].activation == Activation::ReLU) {
            const DenseMatrix& z = preacts_[l];
            for (std::size_t i = 0; i < delta.size(); ++i)
                if (z.flat()[i] <= 0.0) delta.flat()[i] = 0.0;
        }
        grads.weight[l] = matmul_tn(delta, inputs_[l]);  // out x in
        grads.bias[l] = column_sums(delta);
        delta = matmul(delta, layers_[l].weight);  // N x in
    }
    grads.input = std::move(delta);
    return grads;
}

void Mlp::clear_cache() {
    inputs_.clear();
    preacts_.clear();
    output_ = {};
    has_forward_ = false;
}

}  // namespace jecl
